#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace scfuzz::isa {

// Supported RV64I subset plus the M group. Order is stable and used by the
// op table in instruction.cpp.
enum class Op : std::uint8_t {
  // register-register ALU
  Add, Sub, Sll, Slt, Sltu, Xor, Srl, Sra, Or, And,
  Addw, Subw, Sllw, Srlw, Sraw,
  // register-immediate ALU
  Addi, Slti, Sltiu, Xori, Ori, Andi, Slli, Srli, Srai,
  Addiw, Slliw, Srliw, Sraiw,
  // memory
  Lb, Lh, Lw, Ld, Lbu, Lhu, Lwu,
  Sb, Sh, Sw, Sd,
  // control flow
  Beq, Bne, Blt, Bge, Bltu, Bgeu,
  Jal, Jalr,
  // upper immediates
  Lui, Auipc,
  // M extension
  Mul, Mulh, Mulhsu, Mulhu, Div, Divu, Rem, Remu,
  Mulw, Divw, Divuw, Remw, Remuw,
};

inline constexpr std::size_t kOpCount = static_cast<std::size_t>(Op::Remuw) + 1;

enum class OpClass : std::uint8_t {
  AluReg,
  AluImm,
  Load,
  Store,
  Branch,
  Jal,
  Jalr,
  Lui,
  Auipc,
  MulDiv,
};

enum class Format : std::uint8_t { R, I, IShift64, IShift32, S, B, U, J };

struct OpInfo {
  std::string_view mnemonic;
  OpClass cls;
  Format format;
  std::uint8_t opcode;
  std::uint8_t funct3;
  std::uint8_t funct7;  // for shifts: the upper funct6/funct7 bits
};

const OpInfo& info(Op op);
std::span<const Op> all_ops();
std::optional<Op> op_from_mnemonic(std::string_view mnemonic);

inline OpClass op_class(Op op) { return info(op).cls; }
inline bool is_load(Op op) { return op_class(op) == OpClass::Load; }
inline bool is_store(Op op) { return op_class(op) == OpClass::Store; }
inline bool is_branch(Op op) { return op_class(op) == OpClass::Branch; }
inline bool is_mul_div(Op op) { return op_class(op) == OpClass::MulDiv; }
inline bool is_control(Op op) {
  const auto c = op_class(op);
  return c == OpClass::Branch || c == OpClass::Jal || c == OpClass::Jalr;
}

// Access width in bytes for loads and stores; 0 otherwise.
unsigned access_width(Op op);

// Which register operands an op reads and writes.
bool reads_rs1(Op op);
bool reads_rs2(Op op);
bool writes_rd(Op op);

// One decoded instruction. Fields an op does not use are zero, which makes
// equality meaningful across encode/decode.
//
// imm holds the sign-extended immediate: the byte offset for branches and
// jal, the shift amount for shifts, and the full (imm20 << 12) value,
// sign-extended from 32 bits, for lui/auipc.
struct Instruction {
  Op op = Op::Addi;
  std::uint8_t rd = 0;
  std::uint8_t rs1 = 0;
  std::uint8_t rs2 = 0;
  std::int64_t imm = 0;

  bool operator==(const Instruction&) const = default;
};

// Clears fields the op does not use.
Instruction canonical(Instruction instr);

// Throws EncodeError when an operand does not fit its field.
void check_encodable(const Instruction& instr);

std::uint32_t encode(const Instruction& instr);

// Throws UnsupportedInstruction for anything outside the configured subset,
// including the M group when m_extension is false.
Instruction decode(std::uint32_t word, bool m_extension = true);

// Plain assembly with numeric immediates, e.g. "addi x1, x0, 5",
// "ld x1, 8(x2)", "beq x1, x2, 12", "lui x5, 0x12345".
std::string format_instruction(const Instruction& instr);

std::string reg_name(unsigned reg);

}  // namespace scfuzz::isa
