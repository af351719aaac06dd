#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

namespace scfuzz::uarch {

enum class CoreKind : std::uint8_t { InOrder, Spec };

std::string_view core_kind_name(CoreKind kind);  // "inorder", "spec"
std::optional<CoreKind> core_kind_from_name(std::string_view name);

struct CacheConfig {
  std::uint32_t sets = 16;
  std::uint32_t ways = 1;
  std::uint32_t line_bytes = 64;
  std::uint32_t hit_latency = 1;
  std::uint32_t miss_latency = 20;

  bool operator==(const CacheConfig&) const = default;
};

struct PredictorConfig {
  std::uint32_t bimodal_entries = 64;
  std::uint32_t btb_entries = 16;

  bool operator==(const PredictorConfig&) const = default;
};

struct CoreConfig {
  CoreKind kind = CoreKind::InOrder;
  CacheConfig cache;
  PredictorConfig predictor;  // Spec only
  // Cycles without retirement between a redirecting control instruction and
  // the first correct-path instruction.
  std::uint32_t flush_penalty = 3;
  std::uint32_t spec_window = 16;  // Spec only: reorder buffer entries
  // Spec only: instructions fetched and issued per cycle, execute cycles of
  // a control instruction, and cycles one line fill occupies the shared
  // refill bus (0 leaves fills untimed: every miss costs miss_latency).
  std::uint32_t fetch_width = 1;
  std::uint32_t issue_width = 1;
  std::uint32_t branch_latency = 1;
  std::uint32_t refill_cycles = 0;
  // Spec only: a load may issue before an older store's address is known.
  // When that store's address turns out to overlap, the load and everything
  // younger are squashed and refetched.
  bool speculative_loads = false;
  std::uint32_t mul_div_latency = 6;
  bool mul_div_variable_latency = false;
  bool m_extension = false;

  static CoreConfig inorder();
  static CoreConfig spec();
  static CoreConfig defaults(CoreKind kind);

  bool operator==(const CoreConfig&) const = default;
};

// Throws scfuzz::Error describing the first invalid field.
void validate(const CoreConfig& cfg);

// Latency of a mul/div on operands a and b under `cfg`.
std::uint32_t mul_div_cycles(const CoreConfig& cfg, std::uint64_t a, std::uint64_t b);

}  // namespace scfuzz::uarch
