#pragma once

#include <cstdint>
#include <list>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "scfuzz/common/rng.hpp"
#include "scfuzz/contracts/contract.hpp"
#include "scfuzz/coverage/scd.hpp"
#include "scfuzz/isa/program.hpp"
#include "scfuzz/mutator/generator.hpp"

namespace scfuzz::mutator {

struct DataSeed {
  std::uint64_t id = 0;
  isa::DataSection a;
  isa::DataSection b;
  std::int64_t n_pass = 0;
  std::int64_t n_fail = 0;
  std::uint64_t regenerations = 0;
};

// Data seeds by id with least-recently-used eviction.
class DataStore {
 public:
  explicit DataStore(std::size_t capacity = 256) : capacity_(capacity) {}

  // Inserts a fresh seed as most recent, evicting the least recent one at
  // capacity. Returns the new id.
  std::uint64_t create(std::pair<isa::DataSection, isa::DataSection> pair);
  // Marks the seed most recent; nullptr when unknown (never created or
  // evicted).
  DataSeed* touch(std::uint64_t id);
  const DataSeed* find(std::uint64_t id) const;

  std::size_t size() const { return order_.size(); }
  std::size_t capacity() const { return capacity_; }
  // Ids from most to least recent.
  std::vector<std::uint64_t> ids() const;

 private:
  std::size_t capacity_;
  std::uint64_t next_id_ = 1;
  std::list<DataSeed> order_;  // front = most recent
  std::unordered_map<std::uint64_t, std::list<DataSeed>::iterator> by_id_;
};

// Counts a contract verdict against the seed. Regenerates the pair and
// zeroes the counters when n_pass - n_fail falls below `floor`; returns
// true if it did.
bool update_data_seed_energy(DataSeed& seed, contracts::ContractVerdict verdict, DataStrategy strategy,
                             Rng& rng, std::int64_t floor = -10);

enum class Strategy { PassFeedback, PassFeedback100, NewCoverage, Weighted };
std::string strategy_name(Strategy s);
// Accepts "pass", "pass100", "newcov", "weighted". Throws Error.
Strategy strategy_from_name(const std::string& name);
std::size_t corpus_capacity(Strategy s);

struct CorpusEntry {
  isa::Program program;
  coverage::RunCoverage coverage;  // as admitted
  double score = 0.0;              // Weighted only
  std::uint64_t insertion_index = 0;
};

class Corpus {
 public:
  explicit Corpus(Strategy strategy);
  Corpus(Strategy strategy, std::size_t capacity);

  Strategy strategy() const { return strategy_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const CorpusEntry& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<CorpusEntry>& entries() const { return entries_; }

  // Whether the strategy admits a simulated, contract-indistinguishable
  // test case given how many new coverage bits it brought.
  bool admits(std::size_t new_bits) const;

  // Appends (insertion indices count from 1), evicting the oldest entry at
  // capacity, and refreshes the weighted scores. Returns the evicted entry.
  std::optional<CorpusEntry> add(isa::Program program, coverage::RunCoverage cov);

  // Number of members whose admitted coverage sets index c.
  std::uint32_t multiplicity(std::uint32_t c) const;

  // Selection probability of every entry under the strategy.
  std::vector<double> selection_probabilities() const;
  // Throws EmptyCorpus.
  std::size_t select(Rng& rng) const;

 private:
  void rescore();

  Strategy strategy_;
  std::size_t capacity_;
  std::uint64_t next_index_ = 1;
  std::vector<CorpusEntry> entries_;  // oldest first
  std::unordered_map<std::uint32_t, std::uint32_t> counts_;
  double total_score_ = 0.0;
};

enum class Origin { Fresh, Mutate, Merge };
std::string origin_name(Origin o);

struct NextCase {
  isa::TestCase tc;
  std::uint64_t data_seed = 0;
  Origin origin = Origin::Fresh;
};

struct MutatorCounters {
  std::uint64_t fresh = 0;
  std::uint64_t mutated = 0;
  std::uint64_t merged = 0;
  std::uint64_t regenerations = 0;
};

// Everything the campaign loop needs to produce test cases: configuration,
// rng, corpus and data store. Owned by a single thread.
class MutatorState {
 public:
  MutatorState(const GenConfig& cfg, Strategy strategy, std::uint64_t seed);

  NextCase next_testcase();
  // Returns true when the seed was regenerated.
  bool update_energy(std::uint64_t data_seed, contracts::ContractVerdict verdict);

  Corpus& corpus() { return corpus_; }
  const Corpus& corpus() const { return corpus_; }
  DataStore& data_store() { return store_; }
  const GenConfig& config() const { return cfg_; }
  const GenStats& gen_stats() const { return gen_stats_; }
  const MutatorCounters& counters() const { return counters_; }
  Rng& rng() { return rng_; }

 private:
  const DataSeed& seed_for(isa::Program& program);

  GenConfig cfg_;
  Rng rng_;
  Corpus corpus_;
  DataStore store_;
  GenStats gen_stats_;
  MutatorCounters counters_;
};

}  // namespace scfuzz::mutator
