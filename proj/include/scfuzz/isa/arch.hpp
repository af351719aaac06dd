#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "scfuzz/isa/instruction.hpp"
#include "scfuzz/isa/program.hpp"

namespace scfuzz::isa {

// Byte-addressed memory backed by lazily allocated 4 KiB pages. Unwritten
// bytes read as zero. Keeps an order-independent digest of its contents up
// to date on every write so architectural states can be compared cheaply.
class SparseMemory {
 public:
  static constexpr std::uint64_t kPageBytes = 4096;

  SparseMemory() = default;
  SparseMemory(const SparseMemory& other);
  SparseMemory& operator=(const SparseMemory& other);
  SparseMemory(SparseMemory&&) noexcept = default;
  SparseMemory& operator=(SparseMemory&&) noexcept = default;

  std::uint8_t read8(std::uint64_t addr) const;
  void write8(std::uint64_t addr, std::uint8_t value);

  // Little-endian, no alignment requirement.
  std::uint64_t read(std::uint64_t addr, unsigned width) const;
  void write(std::uint64_t addr, unsigned width, std::uint64_t value);

  std::uint64_t digest() const { return digest_; }
  bool operator==(const SparseMemory& other) const;

 private:
  using Page = std::array<std::uint8_t, kPageBytes>;
  struct Entry {
    std::uint64_t base;
    std::unique_ptr<Page> page;
  };

  const Page* find(std::uint64_t base) const;
  Page& page_for(std::uint64_t base);

  std::vector<Entry> pages_;
  std::uint64_t digest_ = 0;
};

// Architectural state: pc, registers, memory and the tohost flag.
struct ArchState {
  std::uint64_t pc = 0;
  std::array<std::uint64_t, 32> regs{};
  SparseMemory mem;
  bool terminated = false;

  // Hash of pc, registers, memory and the termination flag.
  std::uint64_t digest() const;
  bool operator==(const ArchState&) const = default;
};

// A laid-out test program: template prologue, body, epilogue, and the
// initial memory holding code and data.
struct Image {
  MemoryLayout layout;
  std::uint64_t entry = 0;
  std::vector<std::uint32_t> code;
  std::vector<Instruction> decoded;
  // Program word index of each instruction; -1 for prologue/epilogue.
  std::vector<std::int32_t> word_of;
  std::size_t body_begin = 0;  // instruction index of L0
  std::size_t body_end = 0;    // instruction index of the epilogue
  ArchState initial;

  std::uint64_t code_end() const { return layout.program_base + 4 * code.size(); }
  bool contains_pc(std::uint64_t pc) const {
    return pc >= layout.program_base && pc < code_end() && (pc & 3) == 0;
  }
  const Instruction& at(std::uint64_t pc) const {
    return decoded[(pc - layout.program_base) / 4];
  }
  std::uint32_t raw_at(std::uint64_t pc) const { return code[(pc - layout.program_base) / 4]; }
};

inline constexpr std::size_t kPrologueInstrs = 2 + kInitWords;
inline constexpr std::size_t kEpilogueInstrs = 4;

// Throws ImageOverlap when code, tohost and data collide, and
// MalformedProgram for an invalid program.
Image build_image(const Program& program, const DataSection& data,
                  const MemoryLayout& layout = {});

// Everything the contract rules need to know about one executed step.
struct StepRecord {
  std::uint64_t pc = 0;
  Instruction instr;
  std::uint64_t rs1_value = 0;
  std::uint64_t rs2_value = 0;
  std::uint64_t rd_value = 0;  // value of rd after the step
  std::uint64_t mem_addr = 0;  // effective address of loads and stores
  std::uint64_t next_pc = 0;
};

// Pure ALU semantics shared by the interpreter and the cores. Covers the
// register/immediate ALU groups, lui/auipc and the M group; `pc` is used by
// auipc only.
std::uint64_t alu_result(const Instruction& in, std::uint64_t a, std::uint64_t b,
                         std::uint64_t pc);

bool branch_taken(Op op, std::uint64_t a, std::uint64_t b);

// Sign- or zero-extends a loaded value.
std::uint64_t extend_load(Op op, std::uint64_t raw);

// Executes one instruction in place. Throws FetchOutOfRange and
// MisalignedAccess.
StepRecord arch_step(ArchState& state, const Image& image);

// Value-returning form of the step relation.
ArchState successor(const ArchState& state, const Image& image);

struct ArchRun {
  ArchState final_state;
  std::uint64_t steps = 0;
};

using StepObserver = std::function<void(const StepRecord&, const ArchState&)>;

// Runs from the image entry until termination. Throws StepLimitExceeded when
// max_steps is reached first.
ArchRun run_arch(const Image& image, std::uint64_t max_steps, const StepObserver& observer = {});
ArchRun run_arch(const Program& program, const DataSection& data, std::uint64_t max_steps,
                 const MemoryLayout& layout = {});

}  // namespace scfuzz::isa
