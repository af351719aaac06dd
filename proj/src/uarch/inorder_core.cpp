#include "cores.hpp"

namespace scfuzz::uarch::detail {

namespace {

std::uint64_t next_pc_of(const isa::Instruction& in, std::uint64_t pc, std::uint64_t addr) {
  return isa::is_control(in.op) ? addr : pc + 4;
}

}  // namespace

InOrderCore::InOrderCore(const CoreConfig& cfg, const isa::Image& image) : Core(cfg, image) {
  auto layout = std::make_shared<StateLayout>();
  cycle_index_ = layout->add("cycle", 64);
  terminated_index_ = layout->add("terminated", 1);
  fetch_pc_ = layout->add("fetch.pc", 64);
  fetch_stall_ = layout->add("fetch.stall", 8);
  id_ = declare_slot(*layout, "id", false);
  ex_ = declare_slot(*layout, "ex", true);
  mem_ = declare_slot(*layout, "mem", true);
  wb_ = declare_slot(*layout, "wb", true);
  cache_.declare(*layout, cfg.cache);
  finish_layout(std::move(layout));
  state_[fetch_pc_] = image.entry;
}

InOrderCore::Slot InOrderCore::declare_slot(StateLayout& layout, const std::string& name, bool full) {
  Slot s;
  s.valid = layout.add(name + ".valid", 1);
  s.pc = layout.add(name + ".pc", 64);
  s.raw = layout.add(name + ".raw", 32);
  if (full) {
    s.result = layout.add(name + ".result", 64);
    s.addr = layout.add(name + ".addr", 64);
    s.data = layout.add(name + ".data", 64);
    s.remaining = layout.add(name + ".remaining", 8);
    s.flags = layout.add(name + ".flags", 3);
  }
  return s;
}

void InOrderCore::move(const Slot& from, const Slot& to) {
  const std::size_t Slot::*fields[] = {&Slot::valid,  &Slot::pc,   &Slot::raw,       &Slot::result,
                                       &Slot::addr,   &Slot::data, &Slot::remaining, &Slot::flags};
  for (auto f : fields) {
    if (to.*f == kNone) continue;
    state_[to.*f] = from.*f == kNone ? 0 : state_[from.*f];
  }
  clear(from);
}

void InOrderCore::clear(const Slot& s) {
  const std::size_t Slot::*fields[] = {&Slot::valid,  &Slot::pc,   &Slot::raw,       &Slot::result,
                                       &Slot::addr,   &Slot::data, &Slot::remaining, &Slot::flags};
  for (auto f : fields) {
    if (s.*f != kNone) state_[s.*f] = 0;
  }
}

void InOrderCore::step() {
  if (terminated()) return;
  auto& s = state_;

  // WB: retire.
  if (occupied(wb_)) {
    const std::uint64_t pc = s[wb_.pc];
    commit(pc, s[wb_.result], s[wb_.addr], s[wb_.data], next_pc_of(instr(wb_), pc, s[wb_.addr]));
    clear(wb_);
  }

  // MEM. Remember what occupied it at the start of the cycle: that is the
  // youngest instruction older than whatever sits in EX.
  bool fwd_valid = false, fwd_is_load = false;
  unsigned fwd_rd = 0;
  if (occupied(mem_)) {
    const isa::Instruction& in = instr(mem_);
    fwd_valid = isa::writes_rd(in.op) && in.rd != 0;
    fwd_is_load = isa::is_load(in.op);
    fwd_rd = in.rd;
    if (isa::is_load(in.op) || isa::is_store(in.op)) {
      if ((s[mem_.flags] & kStarted) == 0) {
        s[mem_.remaining] = cache_.access(s, s[mem_.addr], arch_.mem);
        s[mem_.flags] |= kStarted;
      }
      if (--s[mem_.remaining] == 0) {
        if (isa::is_load(in.op)) {
          const unsigned width = isa::access_width(in.op);
          s[mem_.result] = isa::extend_load(in.op, arch_.mem.read(s[mem_.addr], width));
        }
        s[mem_.flags] = 0;
        move(mem_, wb_);
      }
    } else {
      move(mem_, wb_);
    }
  }
  const std::uint64_t fwd_value = fwd_valid && occupied(wb_) ? s[wb_.result] : 0;

  // EX.
  if (occupied(ex_)) {
    const isa::Instruction& in = instr(ex_);
    if ((s[ex_.flags] & kExecuted) == 0) {
      auto needs = [&](unsigned r) { return r != 0 && fwd_valid && fwd_is_load && fwd_rd == r; };
      const bool hazard = (isa::reads_rs1(in.op) && needs(in.rs1)) || (isa::reads_rs2(in.op) && needs(in.rs2));
      if (!hazard) {
        auto value = [&](unsigned r) -> std::uint64_t {
          if (r == 0) return 0;
          if (fwd_valid && fwd_rd == r) return fwd_value;
          return arch_.regs[r];
        };
        const std::uint64_t pc = s[ex_.pc];
        const std::uint64_t a = isa::reads_rs1(in.op) ? value(in.rs1) : 0;
        const std::uint64_t b = isa::reads_rs2(in.op) ? value(in.rs2) : 0;
        const auto imm = static_cast<std::uint64_t>(in.imm);
        std::uint64_t latency = 1;
        switch (isa::op_class(in.op)) {
          case isa::OpClass::Load:
            s[ex_.addr] = a + imm;
            break;
          case isa::OpClass::Store:
            s[ex_.addr] = a + imm;
            s[ex_.data] = b;
            break;
          case isa::OpClass::Branch:
            if (isa::branch_taken(in.op, a, b)) {
              s[ex_.addr] = pc + imm;
              s[ex_.flags] |= kRedirect;
            } else {
              s[ex_.addr] = pc + 4;
            }
            break;
          case isa::OpClass::Jal:
            s[ex_.result] = pc + 4;
            s[ex_.addr] = pc + imm;
            s[ex_.flags] |= kRedirect;
            break;
          case isa::OpClass::Jalr:
            s[ex_.result] = pc + 4;
            s[ex_.addr] = (a + imm) & ~std::uint64_t{1};
            s[ex_.flags] |= kRedirect;
            break;
          case isa::OpClass::MulDiv:
            s[ex_.result] = isa::alu_result(in, a, b, pc);
            latency = mul_div_cycles(cfg_, a, b);
            break;
          default:
            s[ex_.result] = isa::alu_result(in, a, b, pc);
            break;
        }
        s[ex_.remaining] = latency;
        s[ex_.flags] |= kExecuted;
      }
    }
    if ((s[ex_.flags] & kExecuted) != 0) {
      if (s[ex_.remaining] > 1) {
        --s[ex_.remaining];
      } else if (!occupied(mem_)) {
        const bool redirect = (s[ex_.flags] & kRedirect) != 0;
        const std::uint64_t target = s[ex_.addr];
        s[ex_.flags] = 0;
        s[ex_.remaining] = 0;
        move(ex_, mem_);
        if (redirect) {
          clear(id_);
          s[fetch_pc_] = target;
          s[fetch_stall_] = cfg_.flush_penalty - 1;
        }
      }
    }
  }

  // ID -> EX.
  if (occupied(id_) && !occupied(ex_)) move(id_, ex_);

  // IF: the fetched instruction is decoded next cycle.
  if (s[fetch_stall_] > 0) {
    --s[fetch_stall_];
  } else if (!occupied(id_) && image_->contains_pc(s[fetch_pc_])) {
    s[id_.valid] = 1;
    s[id_.pc] = s[fetch_pc_];
    s[id_.raw] = image_->raw_at(s[fetch_pc_]);
    s[fetch_pc_] += 4;
  }

  ++s[cycle_index_];
}

}  // namespace scfuzz::uarch::detail
