#include <doctest.h>

#include "scfuzz/common/error.hpp"
#include "scfuzz/common/rng.hpp"
#include "scfuzz/selfcomp/lockstep.hpp"
#include "test_helpers.hpp"

using namespace scfuzz;
using namespace scfuzz::selfcomp;
using uarch::CoreConfig;

namespace {

isa::TestCase witness() { return isa::load_testcase(SCFUZZ_FIXTURE_DIR "/spectre_witness.tc"); }

}  // namespace

TEST_CASE("deviation vectors") {
  const std::vector<std::uint64_t> a = {1, 2, 3, 4, 5};
  auto b = a;
  CHECK_FALSE(deviation(a, a).any());
  CHECK(deviation(a, a).width() == 5);
  b[3] = 9;
  const auto dv = deviation(a, b);
  CHECK(dv.count() == 1);
  CHECK(dv.test(3));
  CHECK(deviation(b, a) == dv);
  CHECK(dv.to_bytes() == std::vector<std::uint8_t>{0x08});
  b.push_back(0);
  CHECK_THROWS_AS(deviation(a, b), WidthMismatch);

  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::uint64_t> x(150), y(150);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.below(3);
      y[i] = rng.below(3);
    }
    const auto d = deviation(x, y);
    CHECK(d == deviation(y, x));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(d.test(i) == (x[i] != y[i]));
    const auto bytes = d.to_bytes();
    CHECK(bytes.size() == 19);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(((bytes[i / 8] >> (i % 8)) & 1) == d.test(i));
  }
}

TEST_CASE("attacker observation") {
  CHECK(attacker_obs(100, 1) == 100);
  CHECK(attacker_obs(101, 10) == 11);
  CHECK(attacker_obs(100, 10) == 10);
  CHECK(attacker_obs(0, 5) == 0);
  CHECK_THROWS_AS(attacker_obs(5, 0), Error);
}

TEST_CASE("identical data gives an all-zero deviation trace") {
  auto tc = witness();
  tc.data_b = tc.data_a;
  for (auto cfg : {CoreConfig::inorder(), CoreConfig::spec()}) {
    std::size_t nonzero = 0, emitted = 0;
    const auto out = lockstep_run(cfg, tc, {}, [&](const DeviationVector& dv) {
      ++emitted;
      if (dv.any()) ++nonzero;
    });
    CHECK(out.verdict == Verdict::Pass);
    CHECK(nonzero == 0);
    CHECK(emitted == out.global_cycles);
    CHECK(out.cycles_a == out.cycles_b);
  }
}

TEST_CASE("spectre witness leaks on the spec core only") {
  const auto tc = witness();
  const auto spec = lockstep_run(CoreConfig::spec(), tc);
  CHECK(spec.verdict == Verdict::Leak);
  const auto cfg = CoreConfig::spec();
  CHECK(spec.cycles_b - spec.cycles_a >= cfg.cache.miss_latency - cfg.cache.hit_latency);
  CHECK(spec.global_cycles == std::max(spec.cycles_a, spec.cycles_b));
  CHECK(lockstep_run(CoreConfig::spec(), tc).verdict == Verdict::Leak);

  const auto io = lockstep_run(CoreConfig::inorder(), tc);
  CHECK(io.verdict == Verdict::Pass);

  // A poll interval wider than the gap hides it.
  LockstepOptions coarse;
  coarse.poll_interval = 1000;
  CHECK(lockstep_run(CoreConfig::spec(), tc, coarse).verdict == Verdict::Pass);
}

TEST_CASE("zero deviation implies equal observations; coarsening is monotone") {
  const auto tc = witness();
  for (std::uint64_t p : {1, 2, 5, 19, 20, 64, 1000}) {
    LockstepOptions o;
    o.poll_interval = p;
    bool any = false;
    const auto out = lockstep_run(CoreConfig::spec(), tc, o, [&](const DeviationVector& dv) { any |= dv.any(); });
    CHECK(any);
    if (out.verdict == Verdict::Leak) {
      CHECK(lockstep_run(CoreConfig::spec(), tc).verdict == Verdict::Leak);
    }
  }
}

TEST_CASE("one-sided and two-sided timeouts") {
  // B runs a long way around only when its word 0 is nonzero; with a
  // budget between the two run lengths only A terminates.
  const auto prog = testing::make_program({"beq x1, x0, L3", "auipc x5, %hi(D+0x800); ld x6, %lo(D+0x800)(x5)",
                                           "auipc x5, %hi(D+0x400); ld x6, %lo(D+0x400)(x5)"});
  isa::TestCase tc{prog, {}, testing::data_with({{0, 1}})};
  const auto full = lockstep_run(CoreConfig::inorder(), tc);
  REQUIRE(full.verdict == Verdict::Leak);
  REQUIRE(full.cycles_a < full.cycles_b);
  LockstepOptions o;
  o.max_cycles = full.cycles_a + 1;
  const auto one = lockstep_run(CoreConfig::inorder(), tc, o);
  CHECK(one.terminated_a);
  CHECK_FALSE(one.terminated_b);
  CHECK(one.verdict == Verdict::Leak);
  o.max_cycles = 10;
  const auto both = lockstep_run(CoreConfig::inorder(), tc, o);
  CHECK(both.verdict == Verdict::Timeout);
  CHECK(both.global_cycles == 10);
}
