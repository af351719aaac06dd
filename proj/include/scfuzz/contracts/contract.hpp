#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scfuzz/isa/arch.hpp"
#include "scfuzz/isa/program.hpp"

namespace scfuzz::contracts {

enum class ContractId : std::uint8_t { SeqCt, SeqCtB, SeqArch };

std::string_view contract_name(ContractId id);  // "seq-ct", "seq-ct-b", "seq-arch"
std::optional<ContractId> contract_from_name(std::string_view name);

// Declared in alphabetical order of their names so that iterating labels in
// enum order gives the canonical dump order.
enum class Label : std::uint8_t { LAddr, LValue, Pc, SAddr, Taken };
inline constexpr std::size_t kLabelCount = 5;

std::string_view label_name(Label label);

// At most one observation per label; absent labels keep value 0 so that
// defaulted equality is set equality.
class ObservationSet {
 public:
  void add(Label label, std::uint64_t value) {
    mask_ |= bit(label);
    values_[static_cast<std::size_t>(label)] = value;
  }
  bool has(Label label) const { return (mask_ & bit(label)) != 0; }
  std::uint64_t get(Label label) const { return values_[static_cast<std::size_t>(label)]; }
  bool empty() const { return mask_ == 0; }
  std::size_t size() const { return static_cast<std::size_t>(__builtin_popcount(mask_)); }

  // True when every observation of `other` is also in this set.
  bool contains(const ObservationSet& other) const;

  bool operator==(const ObservationSet&) const = default;

 private:
  static std::uint8_t bit(Label label) { return static_cast<std::uint8_t>(1u << static_cast<unsigned>(label)); }

  std::uint8_t mask_ = 0;
  std::array<std::uint64_t, kLabelCount> values_{};
};

using ContractTrace = std::vector<ObservationSet>;

// Observation rules for one architectural step.
ObservationSet observe(ContractId contract, const isa::StepRecord& step);
// Same rules stated over the pre/post states of the step.
ObservationSet observe(ContractId contract, const isa::ArchState& pre, const isa::Instruction& instr,
                       const isa::ArchState& post);

inline constexpr std::uint64_t kDefaultMaxSteps = 100'000;

// Throws StepLimitExceeded and the other run_arch errors.
ContractTrace contract_trace(ContractId contract, const isa::Program& program,
                             const isa::DataSection& data,
                             std::uint64_t max_steps = kDefaultMaxSteps,
                             const isa::MemoryLayout& layout = {});

enum class ContractVerdict : std::uint8_t { ContractIndistinguishable, ContractDistinguishable };

// Throws NonTermination if either side runs out of steps.
ContractVerdict distinguishable(ContractId contract, const isa::TestCase& tc,
                                std::uint64_t max_steps = kDefaultMaxSteps,
                                const isa::MemoryLayout& layout = {});

// `step <i>: {label=0x<hex>, ...}` per line, labels sorted.
std::string format_observation_set(const ObservationSet& set);
std::string format_trace(const ContractTrace& trace);

}  // namespace scfuzz::contracts
