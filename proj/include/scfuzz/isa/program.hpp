#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "scfuzz/isa/instruction.hpp"

namespace scfuzz::isa {

// Fixed addresses of the test template. Defaults follow the riscv-tests
// conventions the generated programs are modeled on.
struct MemoryLayout {
  std::uint64_t program_base = 0x8000'0000;
  std::uint64_t tohost = 0x8000'1000;
  std::uint64_t data_base = 0x8000'4000;

  bool operator==(const MemoryLayout&) const = default;
};

inline constexpr std::size_t kDataBytes = 3072;
inline constexpr std::size_t kDataWords = kDataBytes / 8;
// The template loads data words 0..30 into x1..x31.
inline constexpr std::size_t kInitWords = 31;
inline constexpr std::size_t kMaxWordInstrs = 4;

struct DataSection {
  std::array<std::uint64_t, kDataWords> words{};

  std::uint8_t byte(std::size_t i) const {
    return static_cast<std::uint8_t>(words[i / 8] >> (8 * (i % 8)));
  }
  bool operator==(const DataSection&) const = default;
};

// Symbolic operand of a program instruction: a word label (L<k>) or a byte
// offset into the data section (D+<off>). Label k == words.size() names the
// epilogue that terminates the run.
struct Symbol {
  enum class Kind : std::uint8_t { Label, Data };
  Kind kind = Kind::Label;
  std::uint32_t value = 0;

  static Symbol label(std::uint32_t k) { return {Kind::Label, k}; }
  static Symbol data(std::uint32_t offset) { return {Kind::Data, offset}; }
  bool operator==(const Symbol&) const = default;
};

// How an instruction's immediate is derived from its symbol when the image
// is laid out.
enum class Reloc : std::uint8_t {
  None,
  Target,   // branch / jal: pc-relative byte offset to the symbol
  PcrelHi,  // auipc: upper 20 bits of (symbol - pc)
  PcrelLo,  // I/S-type: low 12 bits of (symbol - pc of the preceding auipc)
};

struct ProgramInstr {
  Instruction instr;
  Reloc reloc = Reloc::None;
  Symbol sym;

  bool operator==(const ProgramInstr&) const = default;
};

// 1..4 instructions; the last one is the word's main instruction, the rest
// set up its operands.
struct InstructionWord {
  std::vector<ProgramInstr> instrs;

  bool operator==(const InstructionWord&) const = default;
};

struct Program {
  std::vector<InstructionWord> words;
  std::uint64_t seed_id = 0;

  std::size_t instruction_count() const;
  bool operator==(const Program&) const = default;
};

struct TestCase {
  Program program;
  DataSection data_a;
  DataSection data_b;

  bool operator==(const TestCase&) const = default;
};

// Throws MalformedProgram unless every structural invariant holds:
// 1..4 instructions per word, control flow only as the last instruction,
// every label strictly later than its word, PcrelLo preceded by an auipc in
// the same word, data offsets inside the section.
void validate(const Program& program);

// Returns the forward-only violation or an empty string.
std::string check_program(const Program& program);

// Splits a pc-relative offset into auipc/addi halves.
struct PcrelParts {
  std::int64_t hi;  // value to place in auipc's imm (multiple of 4096)
  std::int64_t lo;  // 12-bit signed remainder
};
PcrelParts split_pcrel(std::int64_t offset);

// Removes word `index` and retargets every reference to it (and to the
// labels after it) so the program stays forward-only.
Program erase_word(const Program& program, std::size_t index);

}  // namespace scfuzz::isa
