#include "scfuzz/isa/program.hpp"

#include "scfuzz/common/error.hpp"

namespace scfuzz::isa {

std::size_t Program::instruction_count() const {
  std::size_t n = 0;
  for (const auto& w : words) n += w.instrs.size();
  return n;
}

std::string check_program(const Program& program) {
  const std::size_t n = program.words.size();
  for (std::size_t k = 0; k < n; ++k) {
    const auto& instrs = program.words[k].instrs;
    const std::string where = "word L" + std::to_string(k) + ": ";
    if (instrs.empty() || instrs.size() > kMaxWordInstrs) {
      return where + "must hold 1 to 4 instructions";
    }
    bool seen_auipc = false;
    for (std::size_t j = 0; j < instrs.size(); ++j) {
      const auto& pi = instrs[j];
      const Op op = pi.instr.op;
      const bool last = j + 1 == instrs.size();
      if (is_control(op) && !last) return where + "control flow must be the main instruction";
      if ((is_branch(op) || op == Op::Jal) && pi.reloc != Reloc::Target) {
        return where + "branch and jal need a label target";
      }
      if (op == Op::Jalr && (pi.reloc != Reloc::PcrelLo || pi.sym.kind != Symbol::Kind::Label)) {
        return where + "jalr needs a %lo(label) offset";
      }
      switch (pi.reloc) {
        case Reloc::None:
          break;
        case Reloc::Target:
          if (!is_branch(op) && op != Op::Jal) return where + "label target on non-jump";
          if (pi.sym.kind != Symbol::Kind::Label) return where + "jump target must be a label";
          break;
        case Reloc::PcrelHi:
          if (op != Op::Auipc) return where + "%hi only applies to auipc";
          break;
        case Reloc::PcrelLo: {
          const auto fmt = info(op).format;
          if (fmt != Format::I && fmt != Format::S) return where + "%lo needs an I/S-type op";
          if (!seen_auipc) return where + "%lo without a preceding auipc";
          break;
        }
      }
      if (pi.reloc != Reloc::None) {
        if (pi.sym.kind == Symbol::Kind::Label) {
          if (pi.sym.value <= k || pi.sym.value > n) {
            return where + "label L" + std::to_string(pi.sym.value) + " is not strictly later";
          }
        } else if (pi.sym.value >= kDataBytes) {
          return where + "data offset outside the section";
        }
      }
      if (op == Op::Auipc) seen_auipc = true;
    }
  }
  return {};
}

void validate(const Program& program) {
  if (auto why = check_program(program); !why.empty()) throw MalformedProgram(why);
}

PcrelParts split_pcrel(std::int64_t offset) {
  const std::int64_t hi = (offset + 0x800) >> 12;
  return {hi << 12, offset - (hi << 12)};
}

Program erase_word(const Program& program, std::size_t index) {
  Program out;
  out.seed_id = program.seed_id;
  out.words.reserve(program.words.size() - 1);
  for (std::size_t k = 0; k < program.words.size(); ++k) {
    if (k == index) continue;
    InstructionWord w = program.words[k];
    for (auto& pi : w.instrs) {
      // Labels past the removed word shift down by one; a reference to the
      // removed word lands on its successor.
      if (pi.reloc != Reloc::None && pi.sym.kind == Symbol::Kind::Label && pi.sym.value > index) {
        pi.sym.value -= 1;
      }
    }
    out.words.push_back(std::move(w));
  }
  return out;
}

}  // namespace scfuzz::isa
