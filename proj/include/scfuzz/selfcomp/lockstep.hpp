#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "scfuzz/isa/program.hpp"
#include "scfuzz/uarch/core.hpp"

namespace scfuzz::selfcomp {

// One bit per core state element; bit r is set iff element r differs
// between the two instances.
class DeviationVector {
 public:
  DeviationVector() = default;
  explicit DeviationVector(std::size_t width);

  std::size_t width() const { return width_; }
  bool test(std::size_t r) const { return (words_[r / 64] >> (r % 64)) & 1; }
  void set(std::size_t r) { words_[r / 64] |= std::uint64_t{1} << (r % 64); }
  bool any() const;
  std::size_t count() const;

  // Bit r is bit r%8 of byte r/8, zero padded to whole bytes.
  std::vector<std::uint8_t> to_bytes() const;
  const std::vector<std::uint64_t>& words() const { return words_; }

  bool operator==(const DeviationVector&) const = default;

 private:
  std::size_t width_ = 0;
  std::vector<std::uint64_t> words_;
};

// Throws WidthMismatch when the snapshots have different element counts.
DeviationVector deviation(const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b);
DeviationVector deviation(const uarch::Core& a, const uarch::Core& b);

// Poll ticks an attacker observes for a run of `cycles` cycles:
// ceil(cycles / poll_interval). Throws Error when poll_interval is 0.
std::uint64_t attacker_obs(std::uint64_t cycles, std::uint64_t poll_interval);

enum class Verdict { Pass, Leak, Timeout };
std::string verdict_name(Verdict v);

struct LockstepOutcome {
  Verdict verdict = Verdict::Pass;
  bool terminated_a = false;
  bool terminated_b = false;
  std::uint64_t cycles_a = 0;  // cycle count at termination (or at the budget)
  std::uint64_t cycles_b = 0;
  std::uint64_t attacker_obs_a = 0;
  std::uint64_t attacker_obs_b = 0;
  std::uint64_t global_cycles = 0;  // deviation vectors emitted
};

using DeviationSink = std::function<void(const DeviationVector&)>;

struct LockstepOptions {
  std::uint64_t max_cycles = uarch::kDefaultMaxCycles;
  std::uint64_t poll_interval = 1;
  isa::MemoryLayout layout;
};

// Runs fresh instances A (data_a) and B (data_b) on a shared clock. Each
// global cycle steps A then B (a terminated side stays frozen) and hands the
// deviation vector of the pair to `sink`.
LockstepOutcome lockstep_run(const uarch::CoreConfig& cfg, const isa::TestCase& tc,
                             const LockstepOptions& opts = {}, const DeviationSink& sink = {});

}  // namespace scfuzz::selfcomp
