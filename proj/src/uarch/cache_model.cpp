#include "cache_model.hpp"

#include <algorithm>
#include <bit>
#include <string>

namespace scfuzz::uarch::detail {

void CacheModel::declare(StateLayout& layout, const CacheConfig& cfg, std::uint32_t refill_cycles) {
  cfg_ = cfg;
  refill_cycles_ = refill_cycles;
  offset_bits_ = static_cast<unsigned>(std::countr_zero(cfg.line_bytes));
  set_bits_ = static_cast<unsigned>(std::countr_zero(cfg.sets));
  const auto tag_width = static_cast<std::uint8_t>(64 - offset_bits_ - set_bits_ + 1);
  line_base_ = layout.size();
  for (std::uint32_t s = 0; s < cfg.sets; ++s) {
    for (std::uint32_t w = 0; w < cfg.ways; ++w) {
      layout.add("dcache.set" + std::to_string(s) + ".way" + std::to_string(w), tag_width);
    }
  }
  age_base_ = layout.size();
  if (cfg.ways > 1) {
    const auto age_width = static_cast<std::uint8_t>(std::bit_width(cfg.ways - 1));
    for (std::uint32_t s = 0; s < cfg.sets; ++s) {
      for (std::uint32_t w = 0; w < cfg.ways; ++w) {
        layout.add("dcache.set" + std::to_string(s) + ".age" + std::to_string(w), age_width);
      }
    }
  }
  refill_base_ = layout.size();
  for (std::uint32_t w = 0; w < cfg.line_bytes / 8; ++w) {
    layout.add("dcache.refill.word" + std::to_string(w), 64);
  }
  if (refill_cycles_ > 0) {
    fill_base_ = layout.size();
    for (std::uint32_t s = 0; s < cfg.sets; ++s) {
      for (std::uint32_t w = 0; w < cfg.ways; ++w) {
        layout.add("dcache.set" + std::to_string(s) + ".way" + std::to_string(w) + ".fill", 16);
      }
    }
    dirty_base_ = layout.size();
    for (std::uint32_t s = 0; s < cfg.sets; ++s) {
      for (std::uint32_t w = 0; w < cfg.ways; ++w) {
        layout.add("dcache.set" + std::to_string(s) + ".way" + std::to_string(w) + ".dirty", 1);
      }
    }
    bus_ = layout.add("dcache.refill.busy", 16);
  }
}

void CacheModel::tick(std::vector<std::uint64_t>& s) const {
  if (refill_cycles_ == 0) return;
  for (std::size_t i = fill_base_; i < fill_base_ + std::size_t{cfg_.sets} * cfg_.ways; ++i) {
    if (s[i] > 0) --s[i];
  }
  if (s[bus_] > 0) --s[bus_];
}

bool CacheModel::contains(const std::vector<std::uint64_t>& s, std::uint64_t addr) const {
  const std::uint64_t line = addr >> offset_bits_;
  const std::uint64_t set = line & (cfg_.sets - 1);
  const std::uint64_t entry = ((line >> set_bits_) << 1) | 1;
  for (std::uint32_t w = 0; w < cfg_.ways; ++w) {
    if (s[line_base_ + set * cfg_.ways + w] == entry) return true;
  }
  return false;
}

std::uint32_t CacheModel::access(std::vector<std::uint64_t>& s, std::uint64_t addr, const isa::SparseMemory& mem,
                                 bool write) const {
  const std::uint64_t line = addr >> offset_bits_;
  const std::uint64_t set = line & (cfg_.sets - 1);
  const std::uint64_t entry = ((line >> set_bits_) << 1) | 1;
  const std::size_t base = line_base_ + set * cfg_.ways;

  std::uint32_t way = cfg_.ways;
  bool hit = false;
  bool victim_dirty = false;
  for (std::uint32_t w = 0; w < cfg_.ways; ++w) {
    if (s[base + w] == entry) {
      way = w;
      hit = true;
      break;
    }
  }
  if (!hit) {
    // Prefer an invalid way, else the least recently used one.
    for (std::uint32_t w = 0; w < cfg_.ways && way == cfg_.ways; ++w) {
      if ((s[base + w] & 1) == 0) way = w;
    }
    if (way == cfg_.ways) {
      way = 0;
      if (cfg_.ways > 1) {
        for (std::uint32_t w = 0; w < cfg_.ways; ++w) {
          if (s[age_base_ + set * cfg_.ways + w] == cfg_.ways - 1) way = w;
        }
      }
    }
    if (refill_cycles_ > 0) victim_dirty = s[dirty_base_ + set * cfg_.ways + way] != 0;
    s[base + way] = entry;
    const std::uint64_t line_addr = line << offset_bits_;
    for (std::uint32_t w = 0; w < cfg_.line_bytes / 8; ++w) s[refill_base_ + w] = mem.read(line_addr + 8 * w, 8);
  }
  if (cfg_.ways > 1) {
    const std::size_t ages = age_base_ + set * cfg_.ways;
    const std::uint64_t old = hit ? s[ages + way] : cfg_.ways - 1;
    for (std::uint32_t w = 0; w < cfg_.ways; ++w) {
      if (w != way && s[ages + w] < old) ++s[ages + w];
    }
    s[ages + way] = 0;
  }
  if (refill_cycles_ == 0) return hit ? cfg_.hit_latency : cfg_.miss_latency;
  std::uint64_t& fill = s[fill_base_ + set * cfg_.ways + way];
  std::uint64_t& dirty = s[dirty_base_ + set * cfg_.ways + way];
  if (hit) {
    dirty |= write;
    return static_cast<std::uint32_t>(std::max<std::uint64_t>(cfg_.hit_latency, fill));
  }
  // A dirty victim is written back over the bus before the refill.
  const std::uint64_t wait = s[bus_] + (victim_dirty ? refill_cycles_ : 0);
  dirty = write;
  fill = wait + cfg_.miss_latency;
  s[bus_] = wait + refill_cycles_;
  return static_cast<std::uint32_t>(fill);
}

}  // namespace scfuzz::uarch::detail
