#include "scfuzz/uarch/config.hpp"

#include <bit>
#include <string>

#include "scfuzz/common/error.hpp"

namespace scfuzz::uarch {

std::string_view core_kind_name(CoreKind kind) {
  return kind == CoreKind::InOrder ? "inorder" : "spec";
}

std::optional<CoreKind> core_kind_from_name(std::string_view name) {
  if (name == "inorder") return CoreKind::InOrder;
  if (name == "spec") return CoreKind::Spec;
  return std::nullopt;
}

CoreConfig CoreConfig::inorder() {
  CoreConfig c;
  c.kind = CoreKind::InOrder;
  c.flush_penalty = 3;
  return c;
}

CoreConfig CoreConfig::spec() {
  CoreConfig c;
  c.kind = CoreKind::Spec;
  c.flush_penalty = 6;
  c.fetch_width = 2;
  c.issue_width = 2;
  c.branch_latency = 14;
  c.refill_cycles = 8;
  c.speculative_loads = true;
  return c;
}

CoreConfig CoreConfig::defaults(CoreKind kind) {
  return kind == CoreKind::InOrder ? inorder() : spec();
}

void validate(const CoreConfig& cfg) {
  auto fail = [](const std::string& why) { throw Error("invalid core config: " + why); };
  const auto& c = cfg.cache;
  if (c.sets == 0 || !std::has_single_bit(c.sets)) fail("cache sets must be a power of two");
  if (c.ways == 0 || c.ways > 16) fail("cache ways must be in [1, 16]");
  if (c.line_bytes < 8 || !std::has_single_bit(c.line_bytes)) {
    fail("cache line bytes must be a power of two >= 8");
  }
  if (static_cast<std::uint64_t>(c.sets) * c.line_bytes > (1ull << 32)) fail("cache too large");
  if (c.hit_latency < 1 || c.hit_latency > 200) fail("hit latency must be in [1, 200]");
  if (c.miss_latency <= c.hit_latency || c.miss_latency > 200) {
    fail("miss latency must exceed hit latency (max 200)");
  }
  if (cfg.flush_penalty < 1 || cfg.flush_penalty > 200) fail("flush penalty must be in [1, 200]");
  if (cfg.mul_div_latency < 1 || cfg.mul_div_latency > 200) fail("mul/div latency must be in [1, 200]");
  if (cfg.kind == CoreKind::Spec) {
    const auto& p = cfg.predictor;
    if (p.bimodal_entries == 0 || !std::has_single_bit(p.bimodal_entries)) {
      fail("bimodal entries must be a power of two");
    }
    if (p.btb_entries == 0 || !std::has_single_bit(p.btb_entries)) {
      fail("BTB entries must be a power of two");
    }
    if (cfg.spec_window < 2 || cfg.spec_window > 128) fail("spec window must be in [2, 128]");
    if (cfg.fetch_width < 1 || cfg.fetch_width > 8) fail("fetch width must be in [1, 8]");
    if (cfg.issue_width < 1 || cfg.issue_width > 8) fail("issue width must be in [1, 8]");
    if (cfg.branch_latency < 1 || cfg.branch_latency > 200) fail("branch latency must be in [1, 200]");
    if (cfg.refill_cycles > 200) fail("refill cycles must be at most 200");
  }
}

std::uint32_t mul_div_cycles(const CoreConfig& cfg, std::uint64_t a, std::uint64_t b) {
  if (!cfg.mul_div_variable_latency) return cfg.mul_div_latency;
  const std::uint64_t m = a > b ? a : b;
  return 2 + static_cast<std::uint32_t>(std::countl_zero(m)) / 16;
}

}  // namespace scfuzz::uarch
