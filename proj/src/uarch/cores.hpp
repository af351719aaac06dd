#pragma once

#include "cache_model.hpp"
#include "scfuzz/uarch/core.hpp"

namespace scfuzz::uarch::detail {

// Classic IF/ID/EX/MEM/WB pipeline. Branches are predicted not-taken and
// resolve when they leave EX; loads and stores occupy MEM for the cache
// latency; results forward from MEM and WB, with a one-cycle load-use stall.
class InOrderCore final : public Core {
 public:
  InOrderCore(const CoreConfig& cfg, const isa::Image& image);
  void step() override;

 private:
  // Element indices of one pipeline slot; kNone for fields a slot lacks.
  struct Slot {
    std::size_t valid = kNone, pc = kNone, raw = kNone, result = kNone, addr = kNone,
                data = kNone, remaining = kNone, flags = kNone;
  };
  enum Flag : std::uint64_t { kExecuted = 1, kStarted = 2, kRedirect = 4 };

  Slot declare_slot(StateLayout& layout, const std::string& name, bool full);
  void move(const Slot& from, const Slot& to);
  void clear(const Slot& s);
  bool occupied(const Slot& s) const { return state_[s.valid] != 0; }
  const isa::Instruction& instr(const Slot& s) const { return image_->at(state_[s.pc]); }

  Slot id_, ex_, mem_, wb_;  // id_ is the IF/ID latch
  std::size_t fetch_pc_ = 0, fetch_stall_ = 0;
  CacheModel cache_;
};

// Reorder-buffer core: fetches along the predicted path (untagged BTB plus
// bimodal counters), issues one ready instruction per cycle out of order, retires
// in order. Mispredictions squash younger entries; cache fills made by
// squashed loads stay.
class SpecCore final : public Core {
 public:
  SpecCore(const CoreConfig& cfg, const isa::Image& image);
  void step() override;

 private:
  enum EntryState : std::uint64_t { kWaiting = 1, kExecuting = 2, kDone = 3 };
  struct Entry {
    std::size_t valid, pc, raw, state, remaining, result, addr, data, pred;
  };

  std::size_t slot(std::size_t age) const;  // ROB index of the age-th oldest entry
  void clear(const Entry& e);
  std::uint64_t predict(std::uint64_t pc, const isa::Instruction& in) const;
  // Returns false when the operand is not yet available.
  bool operand(std::size_t age, unsigned reg, std::uint64_t& value) const;
  bool try_issue(std::size_t age);
  // Returns true when younger entries were squashed.
  bool resolve(std::size_t age);
  void squash_conflicting_load(std::size_t store_age);

  std::vector<Entry> rob_;
  std::size_t fetch_pc_ = 0, fetch_stall_ = 0, head_ = 0, count_ = 0, depth_ = 0, muldiv_busy_ = 0,
              store_busy_ = 0;
  std::size_t bimodal_base_ = 0, btb_valid_base_ = 0, btb_target_base_ = 0;
  CacheModel cache_;
};

}  // namespace scfuzz::uarch::detail
