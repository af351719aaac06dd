#include "cores.hpp"

namespace scfuzz::uarch::detail {

SpecCore::SpecCore(const CoreConfig& cfg, const isa::Image& image) : Core(cfg, image) {
  auto layout = std::make_shared<StateLayout>();
  cycle_index_ = layout->add("cycle", 64);
  terminated_index_ = layout->add("terminated", 1);
  fetch_pc_ = layout->add("fetch.pc", 64);
  fetch_stall_ = layout->add("fetch.stall", 8);
  head_ = layout->add("rob.head", 8);
  count_ = layout->add("rob.count", 8);
  depth_ = layout->add("spec.depth", 8);
  muldiv_busy_ = layout->add("muldiv.busy", 8);
  store_busy_ = layout->add("store.busy", 16);
  for (std::uint32_t i = 0; i < cfg.spec_window; ++i) {
    const std::string n = "rob" + std::to_string(i) + ".";
    Entry e;
    e.valid = layout->add(n + "valid", 1);
    e.pc = layout->add(n + "pc", 64);
    e.raw = layout->add(n + "raw", 32);
    e.state = layout->add(n + "state", 2);
    e.remaining = layout->add(n + "remaining", 16);
    e.result = layout->add(n + "result", 64);
    e.addr = layout->add(n + "addr", 64);
    e.data = layout->add(n + "data", 64);
    e.pred = layout->add(n + "pred", 64);
    rob_.push_back(e);
  }
  bimodal_base_ = layout->size();
  for (std::uint32_t i = 0; i < cfg.predictor.bimodal_entries; ++i) {
    layout->add("bimodal" + std::to_string(i), 2);
  }
  btb_valid_base_ = layout->size();
  for (std::uint32_t i = 0; i < cfg.predictor.btb_entries; ++i) {
    layout->add("btb" + std::to_string(i) + ".valid", 1);
  }
  btb_target_base_ = layout->size();
  for (std::uint32_t i = 0; i < cfg.predictor.btb_entries; ++i) {
    layout->add("btb" + std::to_string(i) + ".target", 64);
  }
  cache_.declare(*layout, cfg.cache, cfg.refill_cycles);
  finish_layout(std::move(layout));

  state_[fetch_pc_] = image.entry;
  // Counters reset to weakly not-taken.
  for (std::uint32_t i = 0; i < cfg.predictor.bimodal_entries; ++i) state_[bimodal_base_ + i] = 1;
}

std::size_t SpecCore::slot(std::size_t age) const {
  return (state_[head_] + age) % cfg_.spec_window;
}

void SpecCore::clear(const Entry& e) {
  for (auto f : {e.valid, e.pc, e.raw, e.state, e.remaining, e.result, e.addr, e.data, e.pred}) {
    state_[f] = 0;
  }
}

std::uint64_t SpecCore::predict(std::uint64_t pc, const isa::Instruction& in) const {
  if (!isa::is_control(in.op)) return pc + 4;
  // Untagged: control instructions whose indices collide share an entry.
  const std::size_t b = (pc >> 2) & (cfg_.predictor.btb_entries - 1);
  if (state_[btb_valid_base_ + b] == 0) return pc + 4;
  if (isa::is_branch(in.op)) {
    const std::size_t c = (pc >> 2) & (cfg_.predictor.bimodal_entries - 1);
    if (state_[bimodal_base_ + c] < 2) return pc + 4;
  }
  return state_[btb_target_base_ + b];
}

bool SpecCore::operand(std::size_t age, unsigned reg, std::uint64_t& value) const {
  if (reg == 0) {
    value = 0;
    return true;
  }
  for (std::size_t k = age; k-- > 0;) {
    const Entry& e = rob_[slot(k)];
    const isa::Instruction& in = image_->at(state_[e.pc]);
    if (isa::writes_rd(in.op) && in.rd == reg) {
      if (state_[e.state] != kDone) return false;
      value = state_[e.result];
      return true;
    }
  }
  value = arch_.regs[reg];
  return true;
}

bool SpecCore::try_issue(std::size_t age) {
  auto& s = state_;
  const Entry& e = rob_[slot(age)];
  const std::uint64_t pc = s[e.pc];
  const isa::Instruction& in = image_->at(pc);
  std::uint64_t a = 0, b = 0;
  if (isa::reads_rs1(in.op) && !operand(age, in.rs1, a)) return false;
  if (isa::reads_rs2(in.op) && !operand(age, in.rs2, b)) return false;
  if (isa::is_mul_div(in.op) && s[muldiv_busy_] > 0) return false;
  if (isa::is_load(in.op)) {
    // A load waits for older stores it overlaps (there is no store-to-load
    // forwarding). A store with an unknown address blocks it unless loads
    // speculate; the store then checks for the conflict when it issues.
    const std::uint64_t lo = a + static_cast<std::uint64_t>(in.imm);
    const std::uint64_t hi = lo + isa::access_width(in.op);
    for (std::size_t k = 0; k < age; ++k) {
      const Entry& older = rob_[slot(k)];
      const isa::Instruction& st = image_->at(s[older.pc]);
      if (!isa::is_store(st.op)) continue;
      if (s[older.state] == kWaiting) {
        if (cfg_.speculative_loads) continue;
        return false;
      }
      const std::uint64_t slo = s[older.addr];
      const std::uint64_t shi = slo + isa::access_width(st.op);
      if (lo < shi && slo < hi) return false;
    }
  }

  const auto imm = static_cast<std::uint64_t>(in.imm);
  std::uint64_t latency = isa::is_control(in.op) ? cfg_.branch_latency : 1;
  switch (isa::op_class(in.op)) {
    case isa::OpClass::Load: {
      const std::uint64_t addr = a + imm;
      s[e.addr] = addr;
      latency = cache_.access(s, addr, arch_.mem);
      s[e.result] = isa::extend_load(in.op, arch_.mem.read(addr, isa::access_width(in.op)));
      break;
    }
    case isa::OpClass::Store:
      s[e.addr] = a + imm;
      s[e.data] = b;
      if (cfg_.speculative_loads) squash_conflicting_load(age);
      break;
    case isa::OpClass::Branch: {
      const bool taken = isa::branch_taken(in.op, a, b);
      s[e.addr] = taken ? pc + imm : pc + 4;
      s[e.data] = taken;
      break;
    }
    case isa::OpClass::Jal:
      s[e.result] = pc + 4;
      s[e.addr] = pc + imm;
      break;
    case isa::OpClass::Jalr:
      s[e.result] = pc + 4;
      s[e.addr] = (a + imm) & ~std::uint64_t{1};
      break;
    case isa::OpClass::MulDiv:
      s[e.result] = isa::alu_result(in, a, b, pc);
      latency = mul_div_cycles(cfg_, a, b);
      s[muldiv_busy_] = latency;
      break;
    default:
      s[e.result] = isa::alu_result(in, a, b, pc);
      break;
  }
  s[e.state] = kExecuting;
  s[e.remaining] = latency;
  return true;
}

void SpecCore::squash_conflicting_load(std::size_t store_age) {
  auto& s = state_;
  const Entry& st = rob_[slot(store_age)];
  const std::uint64_t slo = s[st.addr];
  const std::uint64_t shi = slo + isa::access_width(image_->at(s[st.pc]).op);
  for (std::size_t k = store_age + 1; k < s[count_]; ++k) {
    const Entry& e = rob_[slot(k)];
    const isa::Instruction& in = image_->at(s[e.pc]);
    if (!isa::is_load(in.op) || s[e.state] == kWaiting) continue;
    const std::uint64_t lo = s[e.addr];
    if (lo < shi && slo < lo + isa::access_width(in.op)) {
      // The load read stale memory: refetch from it.
      const std::uint64_t pc = s[e.pc];
      for (std::size_t j = k; j < s[count_]; ++j) clear(rob_[slot(j)]);
      s[count_] = k;
      s[fetch_pc_] = pc;
      s[fetch_stall_] = cfg_.flush_penalty - 1;
      return;
    }
  }
}

bool SpecCore::resolve(std::size_t age) {
  auto& s = state_;
  const Entry& e = rob_[slot(age)];
  const std::uint64_t pc = s[e.pc];
  const isa::Instruction& in = image_->at(pc);
  const std::uint64_t actual = s[e.addr];
  const bool taken = !isa::is_branch(in.op) || s[e.data] != 0;

  if (isa::is_branch(in.op)) {
    std::uint64_t& ctr = s[bimodal_base_ + ((pc >> 2) & (cfg_.predictor.bimodal_entries - 1))];
    if (taken && ctr < 3) ++ctr;
    if (!taken && ctr > 0) --ctr;
  }
  if (taken) {
    const std::size_t b = (pc >> 2) & (cfg_.predictor.btb_entries - 1);
    s[btb_valid_base_ + b] = 1;
    s[btb_target_base_ + b] = actual;
  }
  if (actual == s[e.pred]) return false;

  for (std::size_t k = age + 1; k < s[count_]; ++k) clear(rob_[slot(k)]);
  s[count_] = age + 1;
  s[fetch_pc_] = actual;
  s[fetch_stall_] = cfg_.flush_penalty - 1;
  return true;
}

void SpecCore::step() {
  if (terminated()) return;
  auto& s = state_;

  cache_.tick(s);

  // Retire the head once it is done. A store first writes the cache and
  // retires when that access completes.
  if (s[count_] > 0) {
    const Entry& h = rob_[s[head_]];
    const std::uint64_t pc = s[h.pc];
    const isa::Instruction& in = image_->at(pc);
    bool ready = s[h.state] == kDone;
    if (ready && isa::is_store(in.op)) {
      if (s[store_busy_] == 0) s[store_busy_] = cache_.access(s, s[h.addr], arch_.mem, true);
      ready = --s[store_busy_] == 0;
    }
    if (ready) {
      commit(pc, s[h.result], s[h.addr], s[h.data], isa::is_control(in.op) ? s[h.addr] : pc + 4);
      clear(h);
      s[head_] = (s[head_] + 1) % cfg_.spec_window;
      --s[count_];
    }
  }

  if (s[muldiv_busy_] > 0) --s[muldiv_busy_];

  // Complete in age order; a mispredicted control instruction squashes
  // everything younger.
  for (std::size_t k = 0; k < s[count_]; ++k) {
    const Entry& e = rob_[slot(k)];
    if (s[e.state] != kExecuting) continue;
    if (--s[e.remaining] > 0) continue;
    s[e.state] = kDone;
    if (isa::is_control(image_->at(s[e.pc]).op) && resolve(k)) break;
  }

  // Issue the oldest ready instructions.
  std::uint32_t issued = 0;
  for (std::size_t k = 0; k < s[count_] && issued < cfg_.issue_width; ++k) {
    if (s[rob_[slot(k)].state] == kWaiting && try_issue(k)) ++issued;
  }

  // Fetch along the predicted path.
  if (s[fetch_stall_] > 0) {
    --s[fetch_stall_];
  } else {
    for (std::uint32_t f = 0; f < cfg_.fetch_width; ++f) {
      if (s[count_] == cfg_.spec_window || !image_->contains_pc(s[fetch_pc_])) break;
      const std::uint64_t pc = s[fetch_pc_];
      const Entry& e = rob_[slot(s[count_])];
      s[e.valid] = 1;
      s[e.pc] = pc;
      s[e.raw] = image_->raw_at(pc);
      s[e.state] = kWaiting;
      s[e.pred] = predict(pc, image_->at(pc));
      s[fetch_pc_] = s[e.pred];
      ++s[count_];
      // A predicted-taken transfer ends the fetch group.
      if (s[e.pred] != pc + 4) break;
    }
  }

  std::uint64_t depth = 0;
  for (std::size_t k = 0; k < s[count_]; ++k) {
    const Entry& e = rob_[slot(k)];
    if (s[e.state] != kDone && isa::is_control(image_->at(s[e.pc]).op)) ++depth;
  }
  s[depth_] = depth;

  ++s[cycle_index_];
}

}  // namespace scfuzz::uarch::detail
