#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <optional>
#include <vector>

#include "scfuzz/common/rng.hpp"
#include "scfuzz/isa/program.hpp"

namespace scfuzz::mutator {

enum class DataStrategy { FullyRandom, FullyRandomSeqArch, FiftyFifty };
std::string data_strategy_name(DataStrategy s);
// Accepts "fully-random", "fully-random-seq-arch", "fifty-fifty". Throws Error.
DataStrategy data_strategy_from_name(const std::string& name);

struct GenConfig {
  bool m_extension = false;
  std::size_t min_words = 5;
  std::size_t max_words = 24;
  double reuse_prob = 0.2;
  double fresh_prob = 0.1;
  double mutate_prob = 0.45;
  double merge_prob = 0.45;
  double retain_prob = 0.5;
  double delete_prob = 0.25;
  double insert_prob = 0.25;
  DataStrategy data_strategy = DataStrategy::FiftyFifty;
  std::size_t data_store_capacity = 256;
  // A data seed is regenerated once n_pass - n_fail drops below this.
  std::int64_t energy_floor = -10;
};

// Throws Error unless the probability triples sum to 1 and every value is
// in [0, 1], and the word bounds are sane.
void validate(const GenConfig& cfg);

// Counters for the stochastic decisions, used by calibration tests and the
// campaign summary.
struct GenStats {
  std::uint64_t register_draws = 0;
  std::uint64_t register_reuses = 0;
  std::uint64_t words_retained = 0;
  std::uint64_t words_deleted = 0;
  std::uint64_t words_inserted = 0;
};

// Builds instruction words. Register operands and immediates reuse an
// earlier value of the same program with probability cfg.reuse_prob.
class Generator {
 public:
  Generator(const GenConfig& cfg, Rng& rng, GenStats& stats);

  // Seeds the reuse history with the registers and immediates of `program`.
  void learn(const isa::Program& program);
  void reset();

  // One word for position `pos` of a body of `n_words` words; any label it
  // references lies in (pos, n_words]. A table lookup spans two words: the
  // call that draws it returns the index load and the next call returns the
  // dependent access.
  isa::InstructionWord word(std::size_t pos, std::size_t n_words);

 private:
  std::uint8_t reg();
  void touch(std::uint8_t r);
  std::uint8_t reg_other_than(std::uint8_t a);
  std::int64_t imm12();
  std::uint32_t data_offset(std::uint32_t limit, unsigned width);
  std::uint32_t label(std::size_t pos, std::size_t n_words);

  isa::InstructionWord alu_reg();
  isa::InstructionWord alu_imm();
  isa::InstructionWord upper();
  isa::InstructionWord memory(bool store);
  isa::InstructionWord indexed_access(isa::Op op, std::uint8_t src);
  isa::InstructionWord branch(std::size_t pos, std::size_t n_words);
  isa::InstructionWord jump(std::size_t pos, std::size_t n_words, bool indirect);
  isa::InstructionWord mul_div();

  const GenConfig& cfg_;
  Rng& rng_;
  GenStats& stats_;
  std::vector<std::uint8_t> used_regs_;  // distinct, least recent first
  std::vector<std::int64_t> used_imms_;
  std::vector<std::uint32_t> used_offsets_;
  std::optional<isa::InstructionWord> pending_;
};

isa::Program generate_program(const GenConfig& cfg, Rng& rng, GenStats& stats);

std::pair<isa::DataSection, isa::DataSection> generate_data_pair(DataStrategy strategy, Rng& rng);

// Per word: keep (retain_prob), drop (delete_prob) or keep and insert a
// fresh word after it (insert_prob). References into dropped words move to
// the next surviving later word, or the epilogue. An empty body gets one
// fresh word.
isa::Program mutate(const isa::Program& p, const GenConfig& cfg, Rng& rng, GenStats& stats);

// temp = p1[0, i) ++ p2[i, |p2| - 5) ++ last five words of p1, with i uniform
// in [0, min(|p1|, |p2|)), then mutated. Falls back to mutate(p1) when
// either input has fewer than five words. Keeps p1's data seed.
isa::Program merge(const isa::Program& p1, const isa::Program& p2, const GenConfig& cfg, Rng& rng,
                   GenStats& stats);

// The splice itself, before mutation. Each copied word keeps its label
// distances, clamped to the epilogue.
isa::Program splice(const isa::Program& p1, const isa::Program& p2, std::size_t i);

}  // namespace scfuzz::mutator
