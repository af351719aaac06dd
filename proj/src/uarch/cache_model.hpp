#pragma once

#include <cstdint>
#include <vector>

#include "scfuzz/isa/arch.hpp"
#include "scfuzz/uarch/config.hpp"
#include "scfuzz/uarch/core.hpp"

namespace scfuzz::uarch::detail {

// Tag store of a set-associative data cache kept in a core's element vector.
// Each line is one element holding (tag << 1) | valid; with more than one
// way, each line also has an LRU age element (0 = most recently used).
//
// With refill_cycles > 0 the model also times line fills: misses share one
// refill bus that each fill occupies for refill_cycles, so a miss waits for
// the fills queued before it, and an access to a line whose fill is still in
// flight waits for the rest of that fill. This adds a per-line fill countdown
// and a bus countdown; tick() advances them by one cycle. Timed caches are
// also write-back: each line has a dirty bit, and a miss that evicts a dirty
// line first writes it back over the bus.
//
// The refill buffer holds the 64-bit words of the most recently filled line,
// as read from memory, one element per word.
class CacheModel {
 public:
  void declare(StateLayout& layout, const CacheConfig& cfg, std::uint32_t refill_cycles = 0);

  // Looks up `addr`, installs its line on a miss and returns the access
  // latency.
  // `write` marks the line dirty; timed models write dirty victims back.
  std::uint32_t access(std::vector<std::uint64_t>& s, std::uint64_t addr, const isa::SparseMemory& mem,
                       bool write = false) const;

  void tick(std::vector<std::uint64_t>& s) const;

  bool contains(const std::vector<std::uint64_t>& s, std::uint64_t addr) const;

 private:
  CacheConfig cfg_;
  std::uint32_t refill_cycles_ = 0;
  std::size_t fill_base_ = 0;
  std::size_t dirty_base_ = 0;
  std::size_t bus_ = 0;
  std::size_t refill_base_ = 0;
  unsigned offset_bits_ = 0;
  unsigned set_bits_ = 0;
  std::size_t line_base_ = 0;
  std::size_t age_base_ = 0;
};

inline constexpr std::size_t kNone = static_cast<std::size_t>(-1);

}  // namespace scfuzz::uarch::detail
