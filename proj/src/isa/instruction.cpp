#include "scfuzz/isa/instruction.hpp"

#include <array>
#include <cstdio>

#include "scfuzz/common/error.hpp"

namespace scfuzz::isa {

namespace {

constexpr std::uint8_t kOpAlu = 0x33;
constexpr std::uint8_t kOpAlu32 = 0x3b;
constexpr std::uint8_t kOpImm = 0x13;
constexpr std::uint8_t kOpImm32 = 0x1b;
constexpr std::uint8_t kOpLoad = 0x03;
constexpr std::uint8_t kOpStore = 0x23;
constexpr std::uint8_t kOpBranch = 0x63;
constexpr std::uint8_t kOpJal = 0x6f;
constexpr std::uint8_t kOpJalr = 0x67;
constexpr std::uint8_t kOpLui = 0x37;
constexpr std::uint8_t kOpAuipc = 0x17;

using C = OpClass;
using F = Format;

// Indexed by Op.
constexpr std::array<OpInfo, kOpCount> kOps = {{
    {"add", C::AluReg, F::R, kOpAlu, 0, 0x00},
    {"sub", C::AluReg, F::R, kOpAlu, 0, 0x20},
    {"sll", C::AluReg, F::R, kOpAlu, 1, 0x00},
    {"slt", C::AluReg, F::R, kOpAlu, 2, 0x00},
    {"sltu", C::AluReg, F::R, kOpAlu, 3, 0x00},
    {"xor", C::AluReg, F::R, kOpAlu, 4, 0x00},
    {"srl", C::AluReg, F::R, kOpAlu, 5, 0x00},
    {"sra", C::AluReg, F::R, kOpAlu, 5, 0x20},
    {"or", C::AluReg, F::R, kOpAlu, 6, 0x00},
    {"and", C::AluReg, F::R, kOpAlu, 7, 0x00},
    {"addw", C::AluReg, F::R, kOpAlu32, 0, 0x00},
    {"subw", C::AluReg, F::R, kOpAlu32, 0, 0x20},
    {"sllw", C::AluReg, F::R, kOpAlu32, 1, 0x00},
    {"srlw", C::AluReg, F::R, kOpAlu32, 5, 0x00},
    {"sraw", C::AluReg, F::R, kOpAlu32, 5, 0x20},
    {"addi", C::AluImm, F::I, kOpImm, 0, 0},
    {"slti", C::AluImm, F::I, kOpImm, 2, 0},
    {"sltiu", C::AluImm, F::I, kOpImm, 3, 0},
    {"xori", C::AluImm, F::I, kOpImm, 4, 0},
    {"ori", C::AluImm, F::I, kOpImm, 6, 0},
    {"andi", C::AluImm, F::I, kOpImm, 7, 0},
    {"slli", C::AluImm, F::IShift64, kOpImm, 1, 0x00},
    {"srli", C::AluImm, F::IShift64, kOpImm, 5, 0x00},
    {"srai", C::AluImm, F::IShift64, kOpImm, 5, 0x10},
    {"addiw", C::AluImm, F::I, kOpImm32, 0, 0},
    {"slliw", C::AluImm, F::IShift32, kOpImm32, 1, 0x00},
    {"srliw", C::AluImm, F::IShift32, kOpImm32, 5, 0x00},
    {"sraiw", C::AluImm, F::IShift32, kOpImm32, 5, 0x20},
    {"lb", C::Load, F::I, kOpLoad, 0, 0},
    {"lh", C::Load, F::I, kOpLoad, 1, 0},
    {"lw", C::Load, F::I, kOpLoad, 2, 0},
    {"ld", C::Load, F::I, kOpLoad, 3, 0},
    {"lbu", C::Load, F::I, kOpLoad, 4, 0},
    {"lhu", C::Load, F::I, kOpLoad, 5, 0},
    {"lwu", C::Load, F::I, kOpLoad, 6, 0},
    {"sb", C::Store, F::S, kOpStore, 0, 0},
    {"sh", C::Store, F::S, kOpStore, 1, 0},
    {"sw", C::Store, F::S, kOpStore, 2, 0},
    {"sd", C::Store, F::S, kOpStore, 3, 0},
    {"beq", C::Branch, F::B, kOpBranch, 0, 0},
    {"bne", C::Branch, F::B, kOpBranch, 1, 0},
    {"blt", C::Branch, F::B, kOpBranch, 4, 0},
    {"bge", C::Branch, F::B, kOpBranch, 5, 0},
    {"bltu", C::Branch, F::B, kOpBranch, 6, 0},
    {"bgeu", C::Branch, F::B, kOpBranch, 7, 0},
    {"jal", C::Jal, F::J, kOpJal, 0, 0},
    {"jalr", C::Jalr, F::I, kOpJalr, 0, 0},
    {"lui", C::Lui, F::U, kOpLui, 0, 0},
    {"auipc", C::Auipc, F::U, kOpAuipc, 0, 0},
    {"mul", C::MulDiv, F::R, kOpAlu, 0, 0x01},
    {"mulh", C::MulDiv, F::R, kOpAlu, 1, 0x01},
    {"mulhsu", C::MulDiv, F::R, kOpAlu, 2, 0x01},
    {"mulhu", C::MulDiv, F::R, kOpAlu, 3, 0x01},
    {"div", C::MulDiv, F::R, kOpAlu, 4, 0x01},
    {"divu", C::MulDiv, F::R, kOpAlu, 5, 0x01},
    {"rem", C::MulDiv, F::R, kOpAlu, 6, 0x01},
    {"remu", C::MulDiv, F::R, kOpAlu, 7, 0x01},
    {"mulw", C::MulDiv, F::R, kOpAlu32, 0, 0x01},
    {"divw", C::MulDiv, F::R, kOpAlu32, 4, 0x01},
    {"divuw", C::MulDiv, F::R, kOpAlu32, 5, 0x01},
    {"remw", C::MulDiv, F::R, kOpAlu32, 6, 0x01},
    {"remuw", C::MulDiv, F::R, kOpAlu32, 7, 0x01},
}};

constexpr std::array<Op, kOpCount> make_all_ops() {
  std::array<Op, kOpCount> ops{};
  for (std::size_t i = 0; i < kOpCount; ++i) ops[i] = static_cast<Op>(i);
  return ops;
}

constexpr std::array<Op, kOpCount> kAllOps = make_all_ops();

std::int64_t sign_extend(std::uint64_t value, unsigned bits) {
  const std::uint64_t m = std::uint64_t{1} << (bits - 1);
  value &= (bits == 64) ? ~std::uint64_t{0} : ((std::uint64_t{1} << bits) - 1);
  return static_cast<std::int64_t>((value ^ m) - m);
}

bool fits_signed(std::int64_t v, unsigned bits) {
  const std::int64_t lo = -(std::int64_t{1} << (bits - 1));
  const std::int64_t hi = (std::int64_t{1} << (bits - 1)) - 1;
  return v >= lo && v <= hi;
}

std::uint32_t bits(std::uint32_t v, unsigned hi, unsigned lo) {
  return (v >> lo) & ((1u << (hi - lo + 1)) - 1);
}

}  // namespace

const OpInfo& info(Op op) { return kOps[static_cast<std::size_t>(op)]; }

std::span<const Op> all_ops() { return kAllOps; }

std::optional<Op> op_from_mnemonic(std::string_view mnemonic) {
  for (Op op : kAllOps) {
    if (info(op).mnemonic == mnemonic) return op;
  }
  return std::nullopt;
}

unsigned access_width(Op op) {
  switch (op) {
    case Op::Lb: case Op::Lbu: case Op::Sb: return 1;
    case Op::Lh: case Op::Lhu: case Op::Sh: return 2;
    case Op::Lw: case Op::Lwu: case Op::Sw: return 4;
    case Op::Ld: case Op::Sd: return 8;
    default: return 0;
  }
}

bool reads_rs1(Op op) {
  switch (op_class(op)) {
    case C::Jal: case C::Lui: case C::Auipc: return false;
    default: return true;
  }
}

bool reads_rs2(Op op) {
  switch (op_class(op)) {
    case C::AluReg: case C::MulDiv: case C::Store: case C::Branch: return true;
    default: return false;
  }
}

bool writes_rd(Op op) {
  switch (op_class(op)) {
    case C::Store: case C::Branch: return false;
    default: return true;
  }
}

Instruction canonical(Instruction instr) {
  if (!writes_rd(instr.op)) instr.rd = 0;
  if (!reads_rs1(instr.op)) instr.rs1 = 0;
  if (!reads_rs2(instr.op)) instr.rs2 = 0;
  const auto fmt = info(instr.op).format;
  if (fmt == F::R) instr.imm = 0;
  return instr;
}

void check_encodable(const Instruction& instr) {
  auto fail = [&](const char* why) {
    throw EncodeError(format_instruction(instr) + ": " + why);
  };
  if (instr.rd > 31 || instr.rs1 > 31 || instr.rs2 > 31) fail("register index out of range");
  if (canonical(instr) != instr) fail("unused operand field is nonzero");
  const std::int64_t imm = instr.imm;
  switch (info(instr.op).format) {
    case F::R:
      break;
    case F::I:
    case F::S:
      if (!fits_signed(imm, 12)) fail("12-bit immediate out of range");
      break;
    case F::IShift64:
      if (imm < 0 || imm > 63) fail("shift amount out of range");
      break;
    case F::IShift32:
      if (imm < 0 || imm > 31) fail("shift amount out of range");
      break;
    case F::B:
      if (imm % 2 != 0 || !fits_signed(imm, 13)) fail("branch offset out of range");
      break;
    case F::J:
      if (imm % 2 != 0 || !fits_signed(imm, 21)) fail("jump offset out of range");
      break;
    case F::U:
      if (imm % 4096 != 0 || !fits_signed(imm, 32)) fail("upper immediate out of range");
      break;
  }
}

std::uint32_t encode(const Instruction& instr) {
  check_encodable(instr);
  const OpInfo& oi = info(instr.op);
  const std::uint32_t rd = instr.rd, rs1 = instr.rs1, rs2 = instr.rs2;
  const auto imm = static_cast<std::uint32_t>(instr.imm);
  const std::uint32_t f3 = oi.funct3, f7 = oi.funct7, opc = oi.opcode;
  switch (oi.format) {
    case F::R:
      return (f7 << 25) | (rs2 << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | opc;
    case F::I:
      return ((imm & 0xfff) << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | opc;
    case F::IShift64:
      return (f7 << 26) | ((imm & 0x3f) << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | opc;
    case F::IShift32:
      return (f7 << 25) | ((imm & 0x1f) << 20) | (rs1 << 15) | (f3 << 12) | (rd << 7) | opc;
    case F::S:
      return (bits(imm, 11, 5) << 25) | (rs2 << 20) | (rs1 << 15) | (f3 << 12) |
             (bits(imm, 4, 0) << 7) | opc;
    case F::B:
      return (bits(imm, 12, 12) << 31) | (bits(imm, 10, 5) << 25) | (rs2 << 20) |
             (rs1 << 15) | (f3 << 12) | (bits(imm, 4, 1) << 8) | (bits(imm, 11, 11) << 7) |
             opc;
    case F::U:
      return (imm & 0xfffff000u) | (rd << 7) | opc;
    case F::J:
      return (bits(imm, 20, 20) << 31) | (bits(imm, 10, 1) << 21) | (bits(imm, 11, 11) << 20) |
             (bits(imm, 19, 12) << 12) | (rd << 7) | opc;
  }
  return 0;
}

Instruction decode(std::uint32_t word, bool m_extension) {
  const std::uint8_t opc = word & 0x7f;
  const std::uint8_t f3 = bits(word, 14, 12);
  const std::uint8_t f7 = bits(word, 31, 25);
  const auto rd = static_cast<std::uint8_t>(bits(word, 11, 7));
  const auto rs1 = static_cast<std::uint8_t>(bits(word, 19, 15));
  const auto rs2 = static_cast<std::uint8_t>(bits(word, 24, 20));

  for (Op op : kAllOps) {
    const OpInfo& oi = info(op);
    if (oi.opcode != opc) continue;
    if (oi.format != F::U && oi.format != F::J && oi.funct3 != f3) continue;

    Instruction in{op, rd, rs1, rs2, 0};
    switch (oi.format) {
      case F::R:
        if (oi.funct7 != f7) continue;
        break;
      case F::I:
        in.imm = sign_extend(bits(word, 31, 20), 12);
        break;
      case F::IShift64:
        if (bits(word, 31, 26) != oi.funct7) continue;
        in.imm = bits(word, 25, 20);
        break;
      case F::IShift32:
        if (f7 != oi.funct7) continue;
        in.imm = bits(word, 24, 20);
        break;
      case F::S:
        in.imm = sign_extend((bits(word, 31, 25) << 5) | bits(word, 11, 7), 12);
        break;
      case F::B:
        in.imm = sign_extend((bits(word, 31, 31) << 12) | (bits(word, 7, 7) << 11) |
                                 (bits(word, 30, 25) << 5) | (bits(word, 11, 8) << 1),
                             13);
        break;
      case F::U:
        in.imm = sign_extend(word & 0xfffff000u, 32);
        break;
      case F::J:
        in.imm = sign_extend((bits(word, 31, 31) << 20) | (bits(word, 19, 12) << 12) |
                                 (bits(word, 20, 20) << 11) | (bits(word, 30, 21) << 1),
                             21);
        break;
    }
    if (oi.cls == C::MulDiv && !m_extension) break;
    in = canonical(in);
    // Reject encodings with garbage in fields the op ignores.
    if (encode(in) != word) break;
    return in;
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "unsupported instruction 0x%08x", word);
  throw UnsupportedInstruction(buf);
}

std::string reg_name(unsigned reg) { return "x" + std::to_string(reg); }

std::string format_instruction(const Instruction& in) {
  const OpInfo& oi = info(in.op);
  std::string s(oi.mnemonic);
  s += ' ';
  const auto rd = reg_name(in.rd), rs1 = reg_name(in.rs1), rs2 = reg_name(in.rs2);
  const auto imm = std::to_string(in.imm);
  switch (oi.cls) {
    case C::AluReg:
    case C::MulDiv:
      return s + rd + ", " + rs1 + ", " + rs2;
    case C::AluImm:
      return s + rd + ", " + rs1 + ", " + imm;
    case C::Load:
    case C::Jalr:
      return s + rd + ", " + imm + "(" + rs1 + ")";
    case C::Store:
      return s + rs2 + ", " + imm + "(" + rs1 + ")";
    case C::Branch:
      return s + rs1 + ", " + rs2 + ", " + imm;
    case C::Jal:
      return s + rd + ", " + imm;
    case C::Lui:
    case C::Auipc: {
      char buf[16];
      std::snprintf(buf, sizeof buf, "0x%x",
                    static_cast<unsigned>((static_cast<std::uint64_t>(in.imm) >> 12) & 0xfffff));
      return s + rd + ", " + buf;
    }
  }
  return s;
}

}  // namespace scfuzz::isa
