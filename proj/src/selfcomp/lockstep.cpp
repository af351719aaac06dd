#include "scfuzz/selfcomp/lockstep.hpp"

#include <bit>

#include "scfuzz/common/error.hpp"
#include "scfuzz/isa/arch.hpp"

namespace scfuzz::selfcomp {

DeviationVector::DeviationVector(std::size_t width) : width_(width), words_((width + 63) / 64) {}

bool DeviationVector::any() const {
  for (auto w : words_) {
    if (w != 0) return true;
  }
  return false;
}

std::size_t DeviationVector::count() const {
  std::size_t n = 0;
  for (auto w : words_) n += std::popcount(w);
  return n;
}

std::vector<std::uint8_t> DeviationVector::to_bytes() const {
  std::vector<std::uint8_t> out((width_ + 7) / 8);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(words_[i / 8] >> (8 * (i % 8)));
  }
  return out;
}

DeviationVector deviation(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
  if (a.size() != b.size()) {
    throw WidthMismatch("snapshot widths differ: " + std::to_string(a.size()) + " vs " +
                        std::to_string(b.size()));
  }
  DeviationVector dv(a.size());
  for (std::size_t r = 0; r < a.size(); ++r) {
    if (a[r] != b[r]) dv.set(r);
  }
  return dv;
}

DeviationVector deviation(const uarch::Core& a, const uarch::Core& b) {
  if (!(a.layout() == b.layout())) throw WidthMismatch("cores have different state layouts");
  return deviation(a.elements(), b.elements());
}

std::uint64_t attacker_obs(std::uint64_t cycles, std::uint64_t poll_interval) {
  if (poll_interval == 0) throw Error("poll interval must be at least 1");
  return cycles / poll_interval + (cycles % poll_interval != 0 ? 1 : 0);
}

std::string verdict_name(Verdict v) {
  switch (v) {
    case Verdict::Pass: return "Pass";
    case Verdict::Leak: return "Leak";
    case Verdict::Timeout: return "Timeout";
  }
  return "?";
}

LockstepOutcome lockstep_run(const uarch::CoreConfig& cfg, const isa::TestCase& tc,
                             const LockstepOptions& opts, const DeviationSink& sink) {
  const isa::Image img_a = isa::build_image(tc.program, tc.data_a, opts.layout);
  const isa::Image img_b = isa::build_image(tc.program, tc.data_b, opts.layout);
  auto a = uarch::make_core(cfg, img_a);
  auto b = uarch::make_core(cfg, img_b);
  if (!(a->layout() == b->layout())) throw WidthMismatch("cores have different state layouts");

  LockstepOutcome out;
  while (!(a->terminated() && b->terminated()) && out.global_cycles < opts.max_cycles) {
    a->step();
    b->step();
    ++out.global_cycles;
    if (sink) sink(deviation(a->elements(), b->elements()));
  }

  out.terminated_a = a->terminated();
  out.terminated_b = b->terminated();
  out.cycles_a = a->cycle();
  out.cycles_b = b->cycle();
  out.attacker_obs_a = attacker_obs(out.cycles_a, opts.poll_interval);
  out.attacker_obs_b = attacker_obs(out.cycles_b, opts.poll_interval);
  if (out.terminated_a && out.terminated_b) {
    out.verdict = out.attacker_obs_a == out.attacker_obs_b ? Verdict::Pass : Verdict::Leak;
  } else if (out.terminated_a != out.terminated_b) {
    out.verdict = Verdict::Leak;
  } else {
    out.verdict = Verdict::Timeout;
  }
  return out;
}

}  // namespace scfuzz::selfcomp
