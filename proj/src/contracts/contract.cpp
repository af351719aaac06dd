#include "scfuzz/contracts/contract.hpp"

#include <cstdio>

#include "scfuzz/common/error.hpp"

namespace scfuzz::contracts {

std::string_view contract_name(ContractId id) {
  switch (id) {
    case ContractId::SeqCt: return "seq-ct";
    case ContractId::SeqCtB: return "seq-ct-b";
    case ContractId::SeqArch: return "seq-arch";
  }
  return "?";
}

std::optional<ContractId> contract_from_name(std::string_view name) {
  for (auto id : {ContractId::SeqCt, ContractId::SeqCtB, ContractId::SeqArch}) {
    if (contract_name(id) == name) return id;
  }
  return std::nullopt;
}

std::string_view label_name(Label label) {
  switch (label) {
    case Label::LAddr: return "lAddr";
    case Label::LValue: return "lValue";
    case Label::Pc: return "pc";
    case Label::SAddr: return "sAddr";
    case Label::Taken: return "taken";
  }
  return "?";
}

bool ObservationSet::contains(const ObservationSet& other) const {
  if ((other.mask_ & ~mask_) != 0) return false;
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    if ((other.mask_ >> i) & 1u) {
      if (values_[i] != other.values_[i]) return false;
    }
  }
  return true;
}

ObservationSet observe(ContractId contract, const isa::StepRecord& step) {
  ObservationSet obs;
  obs.add(Label::Pc, step.pc);
  const isa::Op op = step.instr.op;
  if (isa::is_load(op)) {
    obs.add(Label::LAddr, step.rs1_value + static_cast<std::uint64_t>(step.instr.imm));
    if (contract == ContractId::SeqArch) obs.add(Label::LValue, step.rd_value);
  } else if (isa::is_store(op)) {
    obs.add(Label::SAddr, step.rs1_value + static_cast<std::uint64_t>(step.instr.imm));
  } else if (isa::is_branch(op) && contract == ContractId::SeqCtB) {
    obs.add(Label::Taken, isa::branch_taken(op, step.rs1_value, step.rs2_value) ? 1 : 0);
  }
  return obs;
}

ObservationSet observe(ContractId contract, const isa::ArchState& pre, const isa::Instruction& instr,
                       const isa::ArchState& post) {
  isa::StepRecord step;
  step.pc = pre.pc;
  step.instr = instr;
  step.rs1_value = pre.regs[instr.rs1];
  step.rs2_value = pre.regs[instr.rs2];
  step.rd_value = post.regs[instr.rd];
  step.next_pc = post.pc;
  return observe(contract, step);
}

ContractTrace contract_trace(ContractId contract, const isa::Program& program,
                             const isa::DataSection& data, std::uint64_t max_steps,
                             const isa::MemoryLayout& layout) {
  ContractTrace trace;
  isa::run_arch(isa::build_image(program, data, layout), max_steps,
                [&](const isa::StepRecord& step, const isa::ArchState&) {
                  trace.push_back(observe(contract, step));
                });
  return trace;
}

ContractVerdict distinguishable(ContractId contract, const isa::TestCase& tc,
                                std::uint64_t max_steps, const isa::MemoryLayout& layout) {
  ContractTrace a, b;
  try {
    a = contract_trace(contract, tc.program, tc.data_a, max_steps, layout);
    b = contract_trace(contract, tc.program, tc.data_b, max_steps, layout);
  } catch (const StepLimitExceeded& e) {
    throw NonTermination(e.what());
  }
  return a == b ? ContractVerdict::ContractIndistinguishable
                : ContractVerdict::ContractDistinguishable;
}

std::string format_observation_set(const ObservationSet& set) {
  std::string out = "{";
  bool first = true;
  for (std::size_t i = 0; i < kLabelCount; ++i) {
    const auto label = static_cast<Label>(i);
    if (!set.has(label)) continue;
    char buf[32];
    std::snprintf(buf, sizeof buf, "=0x%llx", static_cast<unsigned long long>(set.get(label)));
    if (!first) out += ", ";
    out += label_name(label);
    out += buf;
    first = false;
  }
  return out + "}";
}

std::string format_trace(const ContractTrace& trace) {
  std::string out;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out += "step " + std::to_string(i) + ": " + format_observation_set(trace[i]) + "\n";
  }
  return out;
}

}  // namespace scfuzz::contracts
