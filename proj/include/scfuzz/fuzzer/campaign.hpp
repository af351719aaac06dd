#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "scfuzz/contracts/contract.hpp"
#include "scfuzz/coverage/scd.hpp"
#include "scfuzz/mutator/corpus.hpp"
#include "scfuzz/mutator/generator.hpp"
#include "scfuzz/selfcomp/lockstep.hpp"
#include "scfuzz/uarch/config.hpp"

namespace scfuzz::fuzzer {

struct CampaignConfig {
  std::uint64_t iterations = 1000;
  mutator::Strategy strategy = mutator::Strategy::Weighted;
  contracts::ContractId contract = contracts::ContractId::SeqArch;
  uarch::CoreConfig core = uarch::CoreConfig::spec();
  mutator::GenConfig gen;
  std::uint64_t poll_interval = 1;
  std::uint64_t max_cycles = uarch::kDefaultMaxCycles;
  std::uint64_t max_steps = contracts::kDefaultMaxSteps;
  unsigned workers = 1;
  // Contract-indistinguishable test cases collected before the simulation
  // phase runs.
  std::size_t batch_size = 32;
  // Nothing is written when empty.
  std::filesystem::path out_dir;
  std::uint64_t seed = 0;
  // Cumulative coverage snapshot period in iterations; 0 writes only the
  // final map.
  std::uint64_t snapshot_every = 1000;
  bool save_mismatches = true;
  bool save_corpus = true;
};

// Throws Error on the first invalid field.
void validate(const CampaignConfig& cfg);

enum class IterVerdict { ContractDistinguishable, Pass, Leak, Timeout };
std::string iter_verdict_name(IterVerdict v);  // "distinguishable", "pass", "leak", "timeout"
std::optional<IterVerdict> iter_verdict_from_name(const std::string& name);

struct IterationRecord {
  std::uint64_t iter = 0;
  IterVerdict verdict = IterVerdict::Pass;
  std::uint64_t new_bits = 0;
  std::uint64_t cum_popcount = 0;
  std::uint64_t corpus_size = 0;
  std::string artifact;  // relative to the output directory; empty if none

  bool operator==(const IterationRecord&) const = default;
};

// One campaign.jsonl line, without the trailing newline.
std::string format_record(const IterationRecord& r);
// Throws ParseError (line 0) on malformed input.
IterationRecord parse_record(const std::string& line);

struct CampaignReport {
  std::vector<IterationRecord> records;
  std::optional<std::uint64_t> first_leak;
  std::uint64_t final_popcount = 0;
  std::uint64_t coverage_increasing = 0;
  std::uint64_t leaks = 0;
  std::uint64_t timeouts = 0;
  std::uint64_t distinguishable = 0;
  mutator::MutatorCounters mutator_counters;
  mutator::GenStats gen_stats;
};

CampaignReport fuzz(const CampaignConfig& cfg);

struct Classification {
  IterVerdict verdict = IterVerdict::ContractDistinguishable;
  selfcomp::LockstepOutcome outcome;  // unset for distinguishable cases
  coverage::RunCoverage coverage;
};

// Contract check first; the cores only run on indistinguishable cases.
Classification classify(const isa::TestCase& tc, contracts::ContractId contract, const uarch::CoreConfig& core,
                        const selfcomp::LockstepOptions& opts = {},
                        std::uint64_t max_steps = contracts::kDefaultMaxSteps);

enum class ArtifactKind { Leak, Mismatch, Corpus };

struct ArtifactInfo {
  ArtifactKind kind = ArtifactKind::Leak;
  std::uint64_t iteration = 0;
  contracts::ContractId contract = contracts::ContractId::SeqArch;
  uarch::CoreConfig core;
  IterVerdict verdict = IterVerdict::Leak;
  std::optional<selfcomp::LockstepOutcome> outcome;
  const coverage::RunCoverage* coverage = nullptr;  // corpus entries
};

// Writes <dir>/<kind>/<kind>_<iteration>.tc and a .json sidecar. Returns the
// test-case path relative to `dir`.
std::string persist_artifact(const std::filesystem::path& dir, const ArtifactInfo& info, const isa::TestCase& tc);

// Coverage indices stored in a corpus sidecar.
coverage::RunCoverage load_corpus_coverage(const std::filesystem::path& sidecar);

// Greedy word-level reduction: drops words one at a time while the case
// stays contract-indistinguishable and still leaks, until no single word
// can go. Throws NotALeak when `tc` does not leak to begin with.
isa::TestCase minimize(const isa::TestCase& tc, contracts::ContractId contract, const uarch::CoreConfig& core,
                       const selfcomp::LockstepOptions& opts = {});

}  // namespace scfuzz::fuzzer
