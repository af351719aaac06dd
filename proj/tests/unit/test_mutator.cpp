#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "scfuzz/common/error.hpp"
#include "scfuzz/isa/arch.hpp"
#include "scfuzz/mutator/corpus.hpp"
#include "scfuzz/uarch/core.hpp"
#include "test_helpers.hpp"

using namespace scfuzz;
using namespace scfuzz::mutator;
using contracts::ContractVerdict;

namespace {

// Every load and store stays inside the data region and is aligned; the
// run terminates within one step per instruction.
void check_runs_cleanly(const isa::Program& p, const isa::DataSection& d) {
  const isa::MemoryLayout layout;
  const isa::Image img = isa::build_image(p, d, layout);
  std::size_t bad = 0;
  const auto run = isa::run_arch(img, img.code.size() + 1, [&](const isa::StepRecord& s, const isa::ArchState&) {
    const auto op = s.instr.op;
    if (!isa::is_load(op) && !isa::is_store(op)) return;
    const bool body = s.pc < layout.program_base + 4 * img.body_end;
    if (!body) return;
    const unsigned w = isa::access_width(op);
    if (s.mem_addr < layout.data_base || s.mem_addr + w > layout.data_base + isa::kDataBytes ||
        s.mem_addr % w != 0) {
      ++bad;
    }
  });
  CHECK(bad == 0);
  CHECK(run.final_state.terminated);
}

isa::Program program_of(std::size_t n) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) words.push_back("addi x" + std::to_string(1 + i % 31) + ", x0, " + std::to_string(i));
  return testing::make_program(words);
}

coverage::RunCoverage cov(std::initializer_list<std::uint32_t> idx) { return {std::vector<std::uint32_t>(idx)}; }

}  // namespace

TEST_CASE("generated programs are valid and well behaved") {
  GenConfig cfg;
  cfg.m_extension = true;
  Rng rng(1);
  GenStats stats;
  for (int i = 0; i < 300; ++i) {
    const auto p = generate_program(cfg, rng, stats);
    CHECK(isa::check_program(p).empty());
    CHECK(p.words.size() >= cfg.min_words);
    CHECK(p.words.size() <= cfg.max_words);
    const auto [a, b] = generate_data_pair(DataStrategy::FullyRandom, rng);
    check_runs_cleanly(p, a);
    check_runs_cleanly(p, b);
  }
}

TEST_CASE("generated programs agree with the golden model on both cores") {
  GenConfig cfg;
  cfg.m_extension = true;
  Rng rng(2);
  GenStats stats;
  for (int i = 0; i < 60; ++i) {
    const auto p = generate_program(cfg, rng, stats);
    const auto [a, b] = generate_data_pair(DataStrategy::FiftyFifty, rng);
    for (auto core : {uarch::CoreConfig::inorder(), uarch::CoreConfig::spec()}) {
      core.m_extension = true;
      const auto r = uarch::golden_check(core, p, a);
      CHECK_MESSAGE(r.ok, r.detail);
    }
  }
}

TEST_CASE("table lookups load their index source in the preceding word") {
  GenConfig cfg;
  Rng rng(5);
  GenStats stats;
  std::size_t lookups = 0, chained = 0;
  for (int i = 0; i < 300; ++i) {
    const auto p = generate_program(cfg, rng, stats);
    for (std::size_t k = 0; k < p.words.size(); ++k) {
      const auto& w = p.words[k].instrs;
      if (w.size() != 4 || w[0].instr.op != isa::Op::Andi) continue;
      const auto& access = w.back();
      REQUIRE((isa::is_load(access.instr.op) || isa::is_store(access.instr.op)));
      ++lookups;
      // The masked index keeps the access inside the data region.
      CHECK(access.sym.value + w[0].instr.imm + isa::access_width(access.instr.op) <= isa::kDataBytes);
      if (k > 0) {
        const auto& prev = p.words[k - 1].instrs.back().instr;
        if (prev.op == isa::Op::Ld && prev.rd == w[0].instr.rs1) ++chained;
      }
    }
  }
  CHECK(lookups > 100);
  // About half of them come with their own index load.
  CHECK(chained > lookups / 4);
}

TEST_CASE("data offsets are reused") {
  GenConfig cfg;
  Rng rng(6);
  GenStats stats;
  std::size_t accesses = 0, repeats = 0;
  for (int i = 0; i < 300; ++i) {
    const auto p = generate_program(cfg, rng, stats);
    std::set<std::uint32_t> seen;
    for (const auto& w : p.words) {
      for (const auto& pi : w.instrs) {
        if (pi.reloc != isa::Reloc::PcrelLo) continue;
        ++accesses;
        repeats += !seen.insert(pi.sym.value).second;
      }
    }
  }
  // Independent draws rarely repeat within one program.
  CHECK(static_cast<double>(repeats) / static_cast<double>(accesses) > 0.1);
}

TEST_CASE("register reuse frequency") {
  GenConfig cfg;
  Rng rng(3);
  GenStats stats;
  while (stats.register_draws < 20000) generate_program(cfg, rng, stats);
  const double f = static_cast<double>(stats.register_reuses) / static_cast<double>(stats.register_draws);
  CHECK(f == doctest::Approx(0.2).epsilon(0.1));
}

TEST_CASE("data pair strategies") {
  Rng rng(4);
  for (int t = 0; t < 20; ++t) {
    auto [a, b] = generate_data_pair(DataStrategy::FullyRandomSeqArch, rng);
    for (std::size_t i = 0; i < isa::kInitWords; ++i) CHECK(a.words[i] == b.words[i]);
    std::size_t equal_tail = 0;
    for (std::size_t i = isa::kInitWords; i < isa::kDataWords; ++i) equal_tail += a.words[i] == b.words[i];
    CHECK(equal_tail == 0);

    auto [c, d] = generate_data_pair(DataStrategy::FullyRandom, rng);
    std::size_t equal = 0;
    for (std::size_t i = 0; i < isa::kDataWords; ++i) equal += c.words[i] == d.words[i];
    CHECK(equal == 0);
  }
  // FiftyFifty: structured pairs are recognisable by equal first 31 words.
  std::size_t structured = 0, tail_equal = 0, tail_total = 0, pairs = 0;
  while (structured < 100) {
    auto [a, b] = generate_data_pair(DataStrategy::FiftyFifty, rng);
    ++pairs;
    if (!std::equal(a.words.begin(), a.words.begin() + isa::kInitWords, b.words.begin())) continue;
    ++structured;
    for (std::size_t i = isa::kInitWords; i < isa::kDataWords; ++i) {
      ++tail_total;
      tail_equal += a.words[i] == b.words[i];
    }
  }
  CHECK(static_cast<double>(tail_equal) / tail_total == doctest::Approx(0.5).epsilon(0.1));
  CHECK(static_cast<double>(structured) / pairs == doctest::Approx(0.5).epsilon(0.3));
  CHECK(data_strategy_from_name("fifty-fifty") == DataStrategy::FiftyFifty);
  CHECK_THROWS_AS(data_strategy_from_name("half"), Error);
}

TEST_CASE("mutate word decisions and invariants") {
  GenConfig cfg;
  Rng rng(5);
  GenStats stats;
  const auto base = generate_program(cfg, rng, stats);
  stats = {};
  while (stats.words_retained + stats.words_deleted + stats.words_inserted < 20000) {
    const auto p = mutate(base, cfg, rng, stats);
    CHECK(isa::check_program(p).empty());
    CHECK(p.seed_id == base.seed_id);
  }
  const double n = static_cast<double>(stats.words_retained + stats.words_deleted + stats.words_inserted);
  CHECK(std::abs(stats.words_retained / n - 0.5) < 0.02);
  CHECK(std::abs(stats.words_deleted / n - 0.25) < 0.02);
  CHECK(std::abs(stats.words_inserted / n - 0.25) < 0.02);

  const auto empty = mutate(isa::Program{}, cfg, rng, stats);
  CHECK(empty.words.size() <= 1);
  CHECK(isa::check_program(empty).empty());

  // Chains of mutation keep programs valid and terminating.
  auto p = base;
  for (int i = 0; i < 200; ++i) {
    p = mutate(p, cfg, rng, stats);
    REQUIRE(isa::check_program(p).empty());
    check_runs_cleanly(p, isa::DataSection{});
  }
}

TEST_CASE("mutate retargets references into deleted words") {
  GenConfig cfg;
  cfg.retain_prob = 0.0;
  cfg.delete_prob = 1.0;
  cfg.insert_prob = 0.0;
  Rng rng(6);
  GenStats stats;
  const auto p = testing::make_program({"beq x1, x2, L1", "addi x3, x0, 1"});
  CHECK(mutate(p, cfg, rng, stats).words.empty());
}

TEST_CASE("merge splices and keeps p1's data seed") {
  auto p1 = testing::make_program({"addi x1, x0, 1", "addi x1, x0, 2", "beq x1, x2, L4", "addi x1, x0, 4",
                                   "addi x1, x0, 5", "addi x1, x0, 6"},
                                  11);
  auto p2 = testing::make_program({"addi x2, x0, 1", "jal x3, L7", "addi x2, x0, 3", "addi x2, x0, 4",
                                   "addi x2, x0, 5", "addi x2, x0, 6", "addi x2, x0, 7", "addi x2, x0, 8"},
                                  22);
  // i == 0: p2 without its last five words, then p1's last five.
  const auto s0 = splice(p1, p2, 0);
  REQUIRE(s0.words.size() == 3 + 5);
  CHECK(s0.seed_id == 11);
  CHECK(s0.words[0] == p2.words[0]);
  CHECK(s0.words[2] == p2.words[2]);
  for (std::size_t k = 0; k < 5; ++k) CHECK(s0.words[3 + k].instrs.back().instr == p1.words[1 + k].instrs.back().instr);
  CHECK(isa::check_program(s0).empty());
  // The jal kept its distance of six words, clamped to the epilogue.
  CHECK(s0.words[1].instrs[0].sym.value == 7);
  // p1's beq (distance 2) moved from word 2 to word 4.
  CHECK(s0.words[4].instrs[0].sym.value == 6);

  const auto s2 = splice(p1, p2, 2);
  CHECK(s2.words.size() == 2 + 1 + 5);
  CHECK(isa::check_program(s2).empty());

  GenConfig cfg;
  Rng rng(7);
  GenStats stats;
  for (int i = 0; i < 200; ++i) {
    const auto a = generate_program(cfg, rng, stats);
    const auto b = generate_program(cfg, rng, stats);
    auto aa = a;
    aa.seed_id = 5;
    const auto m = merge(aa, b, cfg, rng, stats);
    CHECK(m.seed_id == 5);
    CHECK(isa::check_program(m).empty());
  }
  // Short inputs fall back to mutate(p1).
  const auto short_p = program_of(3);
  CHECK(isa::check_program(merge(short_p, p2, cfg, rng, stats)).empty());
}

TEST_CASE("data seed energy") {
  Rng rng(8);
  DataStore store;
  const auto id = store.create(generate_data_pair(DataStrategy::FullyRandom, rng));
  DataSeed& s = *store.touch(id);
  const auto original = s.a;
  int regen = 0;
  for (int i = 0; i < 11; ++i) {
    regen += update_data_seed_energy(s, ContractVerdict::ContractDistinguishable, DataStrategy::FullyRandom, rng);
  }
  CHECK(regen == 1);
  CHECK(s.regenerations == 1);
  CHECK(s.n_pass == 0);
  CHECK(s.n_fail == 0);
  CHECK_FALSE(s.a == original);

  DataSeed alt;
  for (int i = 0; i < 1000; ++i) {
    const auto v = i % 2 ? ContractVerdict::ContractIndistinguishable : ContractVerdict::ContractDistinguishable;
    CHECK_FALSE(update_data_seed_energy(alt, v, DataStrategy::FullyRandom, rng));
  }

  DataSeed mixed;
  for (int i = 0; i < 10; ++i) update_data_seed_energy(mixed, ContractVerdict::ContractDistinguishable, DataStrategy::FullyRandom, rng);
  CHECK_FALSE(update_data_seed_energy(mixed, ContractVerdict::ContractIndistinguishable, DataStrategy::FullyRandom, rng));
  CHECK_FALSE(update_data_seed_energy(mixed, ContractVerdict::ContractDistinguishable, DataStrategy::FullyRandom, rng));
  CHECK(update_data_seed_energy(mixed, ContractVerdict::ContractDistinguishable, DataStrategy::FullyRandom, rng));
}

TEST_CASE("data store is LRU") {
  Rng rng(9);
  DataStore store(3);
  const auto a = store.create(generate_data_pair(DataStrategy::FullyRandom, rng));
  const auto b = store.create(generate_data_pair(DataStrategy::FullyRandom, rng));
  const auto c = store.create(generate_data_pair(DataStrategy::FullyRandom, rng));
  CHECK(store.touch(a) != nullptr);
  const auto d = store.create(generate_data_pair(DataStrategy::FullyRandom, rng));
  CHECK(store.find(b) == nullptr);
  CHECK(store.ids() == std::vector<std::uint64_t>{d, a, c});
  CHECK(store.size() == 3);
  CHECK(store.touch(b) == nullptr);
}

TEST_CASE("weighted selection worked example") {
  Corpus corpus(Strategy::Weighted);
  corpus.add(program_of(1), cov({7}));      // covers {a}
  corpus.add(program_of(2), cov({7, 9}));   // covers {a, b}
  CHECK(corpus.multiplicity(7) == 2);
  CHECK(corpus.multiplicity(9) == 1);
  CHECK(corpus[0].score == 0.5);
  CHECK(corpus[1].score == 1.5);
  const auto p = corpus.selection_probabilities();
  CHECK(p[0] == 0.25);
  CHECK(p[1] == 0.75);

  Rng rng(10);
  std::size_t second = 0;
  for (int i = 0; i < 20000; ++i) second += corpus.select(rng);
  CHECK(second / 20000.0 == doctest::Approx(0.75).epsilon(0.03));

  Corpus same(Strategy::Weighted);
  for (int i = 0; i < 4; ++i) same.add(program_of(1), cov({1, 2}));
  for (double q : same.selection_probabilities()) CHECK(q == doctest::Approx(0.25));

  Corpus single(Strategy::Weighted);
  single.add(program_of(1), cov({3}));
  CHECK(single.selection_probabilities()[0] == 1.0);
  CHECK(single.select(rng) == 0);

  Corpus none(Strategy::NewCoverage);
  CHECK_THROWS_AS(none.select(rng), EmptyCorpus);
}

TEST_CASE("weighted scores account for the union") {
  Corpus corpus(Strategy::Weighted);
  Rng rng(11);
  std::set<std::uint32_t> uni;
  for (int i = 0; i < 50; ++i) {
    std::vector<std::uint32_t> idx;
    for (int k = 0; k < 5; ++k) idx.push_back(static_cast<std::uint32_t>(rng.below(40)));
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    uni.insert(idx.begin(), idx.end());
    corpus.add(program_of(1), {idx});
    double total = 0.0;
    for (const auto& e : corpus.entries()) total += e.score;
    CHECK(total == doctest::Approx(static_cast<double>(uni.size())));
    double psum = 0.0;
    for (double q : corpus.selection_probabilities()) {
      CHECK(q >= 0.0);
      psum += q;
    }
    CHECK(psum == doctest::Approx(1.0));
  }
  // An entry holding an element nobody else has scores at least 1.
  corpus.add(program_of(1), cov({1000}));
  CHECK(corpus.entries().back().score >= 1.0);
}

TEST_CASE("corpus admission and FIFO eviction") {
  Corpus nc(Strategy::NewCoverage);
  CHECK_FALSE(nc.admits(0));
  CHECK(nc.admits(3));
  Corpus pf(Strategy::PassFeedback);
  CHECK(pf.admits(0));
  CHECK(pf.capacity() == 1000);

  Corpus small(Strategy::PassFeedback100);
  CHECK(small.capacity() == 100);
  for (int i = 0; i < 100; ++i) CHECK_FALSE(small.add(program_of(1), {}).has_value());
  const auto evicted = small.add(program_of(2), {});
  REQUIRE(evicted.has_value());
  CHECK(evicted->insertion_index == 1);
  CHECK(small.size() == 100);
  CHECK(small[0].insertion_index == 2);
  CHECK(strategy_from_name("pass100") == Strategy::PassFeedback100);
  CHECK_THROWS_AS(strategy_from_name("random"), Error);
}

TEST_CASE("next_testcase schedule") {
  GenConfig cfg;
  MutatorState st(cfg, Strategy::PassFeedback100, 12);
  const auto first = st.next_testcase();
  CHECK(first.origin == Origin::Fresh);
  CHECK(first.tc.program.seed_id == first.data_seed);
  // Below a tenth of capacity everything is fresh.
  for (int i = 0; i < 9; ++i) st.corpus().add(st.next_testcase().tc.program, {});
  CHECK(st.counters().fresh == 10);
  CHECK(st.counters().mutated + st.counters().merged == 0);

  for (int i = 0; i < 95; ++i) st.corpus().add(st.next_testcase().tc.program, {});
  const auto before = st.counters();
  for (int i = 0; i < 10000; ++i) {
    const auto nc = st.next_testcase();
    CHECK(isa::check_program(nc.tc.program).empty());
    const DataSeed* seed = st.data_store().find(nc.data_seed);
    REQUIRE(seed != nullptr);
    CHECK(seed->a == nc.tc.data_a);
  }
  const auto after = st.counters();
  const double fresh = (after.fresh - before.fresh) / 10000.0;
  const double mut = (after.mutated - before.mutated) / 10000.0;
  const double mer = (after.merged - before.merged) / 10000.0;
  CHECK(std::abs(fresh - 0.1) < 0.02);
  CHECK(std::abs(mut - 0.45) < 0.02);
  CHECK(std::abs(mer - 0.45) < 0.02);
}

TEST_CASE("mutator state is deterministic") {
  GenConfig cfg;
  MutatorState a(cfg, Strategy::Weighted, 99), b(cfg, Strategy::Weighted, 99);
  for (int i = 0; i < 300; ++i) {
    const auto x = a.next_testcase();
    const auto y = b.next_testcase();
    REQUIRE(x.tc == y.tc);
    const auto verdict = i % 3 ? ContractVerdict::ContractIndistinguishable : ContractVerdict::ContractDistinguishable;
    a.update_energy(x.data_seed, verdict);
    b.update_energy(y.data_seed, verdict);
    if (i % 4 == 0) {
      a.corpus().add(x.tc.program, cov({static_cast<std::uint32_t>(i)}));
      b.corpus().add(y.tc.program, cov({static_cast<std::uint32_t>(i)}));
    }
  }
}

TEST_CASE("config validation") {
  GenConfig cfg;
  CHECK_NOTHROW(validate(cfg));
  cfg.mutate_prob = 0.5;
  CHECK_THROWS_AS(validate(cfg), Error);
  cfg = {};
  cfg.retain_prob = 1.2;
  cfg.delete_prob = -0.2;
  CHECK_THROWS_AS(validate(cfg), Error);
}
