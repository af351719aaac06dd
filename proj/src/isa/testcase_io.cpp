#include "scfuzz/isa/testcase_io.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "scfuzz/common/error.hpp"

namespace scfuzz::isa {

namespace {

constexpr std::string_view kProgramHeader = "== PROGRAM ==";
constexpr std::string_view kDataAHeader = "== DATA_A ==";
constexpr std::string_view kDataBHeader = "== DATA_B ==";

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == sep) {
      out.push_back(trim(s.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

std::string symbol_text(const Symbol& sym) {
  if (sym.kind == Symbol::Kind::Label) return "L" + std::to_string(sym.value);
  char buf[32];
  std::snprintf(buf, sizeof buf, "D+0x%x", sym.value);
  return buf;
}

std::uint64_t parse_unsigned(std::string_view s, std::size_t line, int base = 10) {
  std::uint64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v, base);
  if (ec != std::errc{} || p != s.data() + s.size() || s.empty()) {
    throw ParseError("bad number '" + std::string(s) + "'", line);
  }
  return v;
}

std::int64_t parse_int(std::string_view s, std::size_t line) {
  bool neg = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    neg = s.front() == '-';
    s.remove_prefix(1);
  }
  std::uint64_t mag;
  if (s.size() > 2 && s[0] == '0' && (s[1] == 'x' || s[1] == 'X')) {
    mag = parse_unsigned(s.substr(2), line, 16);
  } else {
    mag = parse_unsigned(s, line);
  }
  return neg ? -static_cast<std::int64_t>(mag) : static_cast<std::int64_t>(mag);
}

std::uint8_t parse_reg(std::string_view s, std::size_t line) {
  if (s.size() < 2 || s[0] != 'x') throw ParseError("expected register, got '" + std::string(s) + "'", line);
  const auto v = parse_unsigned(s.substr(1), line);
  if (v > 31) throw ParseError("register out of range: " + std::string(s), line);
  return static_cast<std::uint8_t>(v);
}

Symbol parse_symbol(std::string_view s, std::size_t line) {
  if (s.size() >= 2 && s[0] == 'L') {
    return Symbol::label(static_cast<std::uint32_t>(parse_unsigned(s.substr(1), line)));
  }
  if (s.size() >= 5 && s.substr(0, 4) == "D+0x") {
    return Symbol::data(static_cast<std::uint32_t>(parse_unsigned(s.substr(4), line, 16)));
  }
  throw ParseError("bad symbol '" + std::string(s) + "'", line);
}

// Parses "%hi(SYM)" / "%lo(SYM)"; returns false if `s` is not of that form.
bool parse_reloc_operand(std::string_view s, std::string_view which, Symbol& sym, std::size_t line) {
  if (s.size() < which.size() + 2 || s.substr(0, which.size()) != which || s[which.size()] != '(' ||
      s.back() != ')') {
    return false;
  }
  sym = parse_symbol(s.substr(which.size() + 1, s.size() - which.size() - 2), line);
  return true;
}

// Memory operand "OFF(xN)" where OFF is an integer or %lo(SYM).
void parse_mem_operand(std::string_view s, ProgramInstr& pi, std::size_t line) {
  const auto open = s.rfind('(');
  if (open == std::string_view::npos || s.back() != ')') {
    throw ParseError("expected offset(register), got '" + std::string(s) + "'", line);
  }
  pi.instr.rs1 = parse_reg(s.substr(open + 1, s.size() - open - 2), line);
  const auto off = s.substr(0, open);
  if (parse_reloc_operand(off, "%lo", pi.sym, line)) {
    pi.reloc = Reloc::PcrelLo;
  } else {
    pi.instr.imm = parse_int(off, line);
  }
}

std::string hex16(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

std::string format_program_instr(const ProgramInstr& pi) {
  const Instruction& in = pi.instr;
  if (pi.reloc == Reloc::None) return format_instruction(in);
  const OpInfo& oi = info(in.op);
  const std::string m(oi.mnemonic);
  const std::string sym = symbol_text(pi.sym);
  switch (pi.reloc) {
    case Reloc::Target:
      if (in.op == Op::Jal) return m + " " + reg_name(in.rd) + ", " + sym;
      return m + " " + reg_name(in.rs1) + ", " + reg_name(in.rs2) + ", " + sym;
    case Reloc::PcrelHi:
      return m + " " + reg_name(in.rd) + ", %hi(" + sym + ")";
    case Reloc::PcrelLo: {
      const std::string lo = "%lo(" + sym + ")";
      switch (oi.cls) {
        case OpClass::Load:
        case OpClass::Jalr:
          return m + " " + reg_name(in.rd) + ", " + lo + "(" + reg_name(in.rs1) + ")";
        case OpClass::Store:
          return m + " " + reg_name(in.rs2) + ", " + lo + "(" + reg_name(in.rs1) + ")";
        default:
          return m + " " + reg_name(in.rd) + ", " + reg_name(in.rs1) + ", " + lo;
      }
    }
    case Reloc::None:
      break;
  }
  return format_instruction(in);
}

ProgramInstr parse_program_instr(std::string_view text, std::size_t line) {
  text = trim(text);
  const auto space = text.find_first_of(" \t");
  const std::string_view mnemonic = text.substr(0, space);
  const auto op = op_from_mnemonic(mnemonic);
  if (!op) throw ParseError("unknown mnemonic '" + std::string(mnemonic) + "'", line);
  const auto ops = space == std::string_view::npos ? std::vector<std::string_view>{}
                                                   : split(text.substr(space + 1), ',');
  const OpInfo& oi = info(*op);
  auto need = [&](std::size_t n) {
    if (ops.size() != n) {
      throw ParseError(std::string(mnemonic) + " takes " + std::to_string(n) + " operands", line);
    }
  };

  ProgramInstr pi;
  pi.instr.op = *op;
  Instruction& in = pi.instr;
  switch (oi.cls) {
    case OpClass::AluReg:
    case OpClass::MulDiv:
      need(3);
      in.rd = parse_reg(ops[0], line);
      in.rs1 = parse_reg(ops[1], line);
      in.rs2 = parse_reg(ops[2], line);
      break;
    case OpClass::AluImm:
      need(3);
      in.rd = parse_reg(ops[0], line);
      in.rs1 = parse_reg(ops[1], line);
      if (parse_reloc_operand(ops[2], "%lo", pi.sym, line)) {
        pi.reloc = Reloc::PcrelLo;
      } else {
        in.imm = parse_int(ops[2], line);
      }
      break;
    case OpClass::Load:
    case OpClass::Jalr:
      need(2);
      in.rd = parse_reg(ops[0], line);
      parse_mem_operand(ops[1], pi, line);
      break;
    case OpClass::Store:
      need(2);
      in.rs2 = parse_reg(ops[0], line);
      parse_mem_operand(ops[1], pi, line);
      break;
    case OpClass::Branch:
      need(3);
      in.rs1 = parse_reg(ops[0], line);
      in.rs2 = parse_reg(ops[1], line);
      if (!ops[2].empty() && ops[2][0] == 'L') {
        pi.reloc = Reloc::Target;
        pi.sym = parse_symbol(ops[2], line);
      } else {
        in.imm = parse_int(ops[2], line);
      }
      break;
    case OpClass::Jal:
      need(2);
      in.rd = parse_reg(ops[0], line);
      if (!ops[1].empty() && ops[1][0] == 'L') {
        pi.reloc = Reloc::Target;
        pi.sym = parse_symbol(ops[1], line);
      } else {
        in.imm = parse_int(ops[1], line);
      }
      break;
    case OpClass::Lui:
    case OpClass::Auipc:
      need(2);
      in.rd = parse_reg(ops[0], line);
      if (parse_reloc_operand(ops[1], "%hi", pi.sym, line)) {
        if (oi.cls != OpClass::Auipc) throw ParseError("%hi only applies to auipc", line);
        pi.reloc = Reloc::PcrelHi;
      } else {
        const auto imm20 = parse_int(ops[1], line);
        if (imm20 < 0 || imm20 > 0xfffff) throw ParseError("upper immediate out of range", line);
        in.imm = static_cast<std::int32_t>(static_cast<std::uint32_t>(imm20) << 12);
      }
      break;
  }
  if (pi.reloc == Reloc::None) {
    try {
      check_encodable(in);
    } catch (const EncodeError& e) {
      throw ParseError(e.what(), line);
    }
  }
  return pi;
}

std::string format_program(const Program& program) {
  std::string out;
  out += ".seed " + std::to_string(program.seed_id) + "\n";
  for (std::size_t k = 0; k < program.words.size(); ++k) {
    out += "L" + std::to_string(k) + ":";
    const auto& instrs = program.words[k].instrs;
    for (std::size_t j = 0; j < instrs.size(); ++j) {
      out += j == 0 ? " " : "; ";
      out += format_program_instr(instrs[j]);
    }
    out += "\n";
  }
  return out;
}

std::string write_testcase(const TestCase& tc) {
  std::string out;
  out.reserve(2 * kDataWords * 17 + 64 * tc.program.words.size() + 64);
  out += kProgramHeader;
  out += "\n";
  out += format_program(tc.program);
  for (const auto* section : {&tc.data_a, &tc.data_b}) {
    out += section == &tc.data_a ? kDataAHeader : kDataBHeader;
    out += "\n";
    for (std::uint64_t w : section->words) {
      out += hex16(w);
      out += "\n";
    }
  }
  return out;
}

TestCase parse_testcase(std::string_view text) {
  enum class Section { None, Program, DataA, DataB };
  Section section = Section::None;
  TestCase tc;
  std::size_t data_count[2] = {0, 0};
  bool seen[3] = {false, false, false};

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto end = nl == std::string_view::npos ? text.size() : nl;
    const std::string_view line = trim(text.substr(pos, end - pos));
    ++line_no;
    pos = end + 1;
    if (line.empty() || line[0] == '#') {
      if (nl == std::string_view::npos) break;
      continue;
    }

    if (line == kProgramHeader || line == kDataAHeader || line == kDataBHeader) {
      const int idx = line == kProgramHeader ? 0 : line == kDataAHeader ? 1 : 2;
      if (seen[idx]) throw ParseError("duplicate section " + std::string(line), line_no);
      if (idx > 0 && !seen[idx - 1]) throw ParseError("sections out of order", line_no);
      seen[idx] = true;
      section = static_cast<Section>(idx + 1);
    } else if (section == Section::Program) {
      if (line.substr(0, 6) == ".seed ") {
        tc.program.seed_id = parse_unsigned(trim(line.substr(6)), line_no);
      } else {
        const auto colon = line.find(':');
        if (line[0] != 'L' || colon == std::string_view::npos) {
          throw ParseError("expected 'L<k>: <instructions>'", line_no);
        }
        const auto k = parse_unsigned(line.substr(1, colon - 1), line_no);
        if (k != tc.program.words.size()) {
          throw ParseError("label L" + std::to_string(k) + " out of sequence", line_no);
        }
        InstructionWord word;
        for (auto part : split(line.substr(colon + 1), ';')) {
          word.instrs.push_back(parse_program_instr(part, line_no));
        }
        tc.program.words.push_back(std::move(word));
      }
    } else if (section == Section::DataA || section == Section::DataB) {
      const int side = section == Section::DataA ? 0 : 1;
      if (line.size() != 16) throw ParseError("data line must hold 16 hex digits", line_no);
      if (data_count[side] >= kDataWords) throw ParseError("too many data words", line_no);
      auto& words = side == 0 ? tc.data_a.words : tc.data_b.words;
      words[data_count[side]++] = parse_unsigned(line, line_no, 16);
    } else {
      throw ParseError("content before the program section", line_no);
    }
    if (nl == std::string_view::npos) break;
  }
  if (!seen[0] || !seen[1] || !seen[2]) throw ParseError("missing section", line_no);
  if (data_count[0] != kDataWords || data_count[1] != kDataWords) {
    throw ParseError("each data section needs exactly " + std::to_string(kDataWords) + " words",
                     line_no);
  }
  if (auto why = check_program(tc.program); !why.empty()) throw ParseError(why, line_no);
  return tc;
}

TestCase load_testcase(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_testcase(ss.str());
}

void save_testcase(const std::filesystem::path& path, const TestCase& tc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << write_testcase(tc);
  if (!out) throw Error("write failed: " + path.string());
}

}  // namespace scfuzz::isa
