#include "scfuzz/isa/arch.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>

#include "scfuzz/common/error.hpp"

namespace scfuzz::isa {

namespace {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Contribution of one nonzero byte to the memory digest.
std::uint64_t byte_term(std::uint64_t addr, std::uint8_t value) {
  return mix64((addr << 8) | value);
}

std::string hex(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

SparseMemory::SparseMemory(const SparseMemory& other) : digest_(other.digest_) {
  pages_.reserve(other.pages_.size());
  for (const auto& e : other.pages_) {
    pages_.push_back({e.base, std::make_unique<Page>(*e.page)});
  }
}

SparseMemory& SparseMemory::operator=(const SparseMemory& other) {
  if (this != &other) {
    SparseMemory copy(other);
    *this = std::move(copy);
  }
  return *this;
}

const SparseMemory::Page* SparseMemory::find(std::uint64_t base) const {
  for (const auto& e : pages_) {
    if (e.base == base) return e.page.get();
  }
  return nullptr;
}

SparseMemory::Page& SparseMemory::page_for(std::uint64_t base) {
  for (auto& e : pages_) {
    if (e.base == base) return *e.page;
  }
  auto page = std::make_unique<Page>();
  page->fill(0);
  pages_.push_back({base, std::move(page)});
  return *pages_.back().page;
}

std::uint8_t SparseMemory::read8(std::uint64_t addr) const {
  const Page* p = find(addr & ~(kPageBytes - 1));
  return p ? (*p)[addr & (kPageBytes - 1)] : 0;
}

void SparseMemory::write8(std::uint64_t addr, std::uint8_t value) {
  Page& p = page_for(addr & ~(kPageBytes - 1));
  std::uint8_t& slot = p[addr & (kPageBytes - 1)];
  if (slot == value) return;
  if (slot != 0) digest_ ^= byte_term(addr, slot);
  if (value != 0) digest_ ^= byte_term(addr, value);
  slot = value;
}

std::uint64_t SparseMemory::read(std::uint64_t addr, unsigned width) const {
  std::uint64_t v = 0;
  for (unsigned i = 0; i < width; ++i) {
    v |= static_cast<std::uint64_t>(read8(addr + i)) << (8 * i);
  }
  return v;
}

void SparseMemory::write(std::uint64_t addr, unsigned width, std::uint64_t value) {
  for (unsigned i = 0; i < width; ++i) {
    write8(addr + i, static_cast<std::uint8_t>(value >> (8 * i)));
  }
}

bool SparseMemory::operator==(const SparseMemory& other) const {
  if (digest_ != other.digest_) return false;
  auto covered = [](const SparseMemory& a, const SparseMemory& b) {
    for (const auto& e : a.pages_) {
      const Page* q = b.find(e.base);
      if (q) {
        if (*q != *e.page) return false;
      } else if (std::any_of(e.page->begin(), e.page->end(), [](auto x) { return x != 0; })) {
        return false;
      }
    }
    return true;
  };
  return covered(*this, other) && covered(other, *this);
}

std::uint64_t ArchState::digest() const {
  std::uint64_t h = mix64(pc ^ (terminated ? 0x5555ULL : 0));
  for (std::size_t i = 0; i < regs.size(); ++i) h = mix64(h ^ regs[i] ^ (i << 56));
  return mix64(h ^ mem.digest());
}

Image build_image(const Program& program, const DataSection& data, const MemoryLayout& layout) {
  validate(program);

  Image img;
  img.layout = layout;
  img.entry = layout.program_base;

  // Address of every word label, including the epilogue label L<n>.
  const std::size_t n = program.words.size();
  std::vector<std::uint64_t> label_addr(n + 1);
  std::uint64_t pc = layout.program_base + 4 * kPrologueInstrs;
  for (std::size_t k = 0; k < n; ++k) {
    label_addr[k] = pc;
    pc += 4 * program.words[k].instrs.size();
  }
  label_addr[n] = pc;
  const std::uint64_t code_end = pc + 4 * kEpilogueInstrs;

  auto overlaps = [](std::uint64_t a0, std::uint64_t a1, std::uint64_t b0, std::uint64_t b1) {
    return a0 < b1 && b0 < a1;
  };
  const std::uint64_t data_end = layout.data_base + kDataBytes;
  if (overlaps(layout.program_base, code_end, layout.tohost, layout.tohost + 8)) {
    throw ImageOverlap("program image [" + hex(layout.program_base) + ", " + hex(code_end) +
                       ") overlaps tohost " + hex(layout.tohost));
  }
  if (overlaps(layout.program_base, code_end, layout.data_base, data_end)) {
    throw ImageOverlap("program image overlaps the data section");
  }
  if (overlaps(layout.tohost, layout.tohost + 8, layout.data_base, data_end)) {
    throw ImageOverlap("tohost lies inside the data section");
  }

  auto emit = [&](Instruction in, std::int32_t word) {
    img.code.push_back(encode(in));
    img.decoded.push_back(in);
    img.word_of.push_back(word);
  };
  auto here = [&] { return layout.program_base + 4 * img.code.size(); };

  // Prologue: x31 <- data_base, then x1..x31 <- data words 0..30.
  {
    const auto parts = split_pcrel(static_cast<std::int64_t>(layout.data_base - here()));
    emit({Op::Auipc, 31, 0, 0, parts.hi}, -1);
    emit({Op::Addi, 31, 31, 0, parts.lo}, -1);
    for (std::uint8_t r = 1; r <= kInitWords; ++r) {
      emit({Op::Ld, r, 31, 0, 8 * (r - 1)}, -1);
    }
  }

  img.body_begin = img.code.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::uint64_t auipc_pc = 0;
    for (const auto& pi : program.words[k].instrs) {
      Instruction in = pi.instr;
      const std::uint64_t at = here();
      const std::uint64_t target = pi.sym.kind == Symbol::Kind::Label
                                       ? label_addr[pi.sym.value]
                                       : layout.data_base + pi.sym.value;
      switch (pi.reloc) {
        case Reloc::None:
          break;
        case Reloc::Target:
          in.imm = static_cast<std::int64_t>(target - at);
          break;
        case Reloc::PcrelHi:
          in.imm = split_pcrel(static_cast<std::int64_t>(target - at)).hi;
          break;
        case Reloc::PcrelLo:
          in.imm = split_pcrel(static_cast<std::int64_t>(target - auipc_pc)).lo;
          break;
      }
      if (in.op == Op::Auipc) auipc_pc = at;
      emit(in, static_cast<std::int32_t>(k));
    }
  }
  img.body_end = img.code.size();

  // Epilogue: store 1 to tohost.
  {
    const auto parts = split_pcrel(static_cast<std::int64_t>(layout.tohost - here()));
    emit({Op::Auipc, 1, 0, 0, parts.hi}, -1);
    emit({Op::Addi, 1, 1, 0, parts.lo}, -1);
    emit({Op::Addi, 2, 0, 0, 1}, -1);
    emit({Op::Sd, 0, 1, 2, 0}, -1);
  }

  ArchState& s = img.initial;
  s.pc = img.entry;
  for (std::size_t i = 0; i < img.code.size(); ++i) {
    s.mem.write(layout.program_base + 4 * i, 4, img.code[i]);
  }
  for (std::size_t i = 0; i < kDataWords; ++i) {
    s.mem.write(layout.data_base + 8 * i, 8, data.words[i]);
  }
  return img;
}

std::uint64_t alu_result(const Instruction& in, std::uint64_t a, std::uint64_t b,
                         std::uint64_t pc) {
  using i64 = std::int64_t;
  using u64 = std::uint64_t;
  using i32 = std::int32_t;
  using u32 = std::uint32_t;
  const u64 imm = static_cast<u64>(in.imm);
  auto sext32 = [](u64 v) { return static_cast<u64>(static_cast<i64>(static_cast<i32>(v))); };
  switch (in.op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Sll: return a << (b & 63);
    case Op::Slt: return static_cast<i64>(a) < static_cast<i64>(b);
    case Op::Sltu: return a < b;
    case Op::Xor: return a ^ b;
    case Op::Srl: return a >> (b & 63);
    case Op::Sra: return static_cast<u64>(static_cast<i64>(a) >> (b & 63));
    case Op::Or: return a | b;
    case Op::And: return a & b;
    case Op::Addw: return sext32(a + b);
    case Op::Subw: return sext32(a - b);
    case Op::Sllw: return sext32(static_cast<u32>(a) << (b & 31));
    case Op::Srlw: return sext32(static_cast<u32>(a) >> (b & 31));
    case Op::Sraw: return sext32(static_cast<u32>(static_cast<i32>(a) >> (b & 31)));
    case Op::Addi: return a + imm;
    case Op::Slti: return static_cast<i64>(a) < in.imm;
    case Op::Sltiu: return a < imm;
    case Op::Xori: return a ^ imm;
    case Op::Ori: return a | imm;
    case Op::Andi: return a & imm;
    case Op::Slli: return a << (imm & 63);
    case Op::Srli: return a >> (imm & 63);
    case Op::Srai: return static_cast<u64>(static_cast<i64>(a) >> (imm & 63));
    case Op::Addiw: return sext32(a + imm);
    case Op::Slliw: return sext32(static_cast<u32>(a) << (imm & 31));
    case Op::Srliw: return sext32(static_cast<u32>(a) >> (imm & 31));
    case Op::Sraiw: return sext32(static_cast<u32>(static_cast<i32>(a) >> (imm & 31)));
    case Op::Lui: return imm;
    case Op::Auipc: return pc + imm;
    case Op::Mul: return a * b;
    case Op::Mulh:
      return static_cast<u64>((static_cast<__int128>(static_cast<i64>(a)) *
                               static_cast<__int128>(static_cast<i64>(b))) >> 64);
    case Op::Mulhsu:
      return static_cast<u64>((static_cast<__int128>(static_cast<i64>(a)) *
                               static_cast<__int128>(static_cast<unsigned __int128>(b))) >> 64);
    case Op::Mulhu:
      return static_cast<u64>((static_cast<unsigned __int128>(a) * b) >> 64);
    case Op::Div: {
      const i64 x = static_cast<i64>(a), y = static_cast<i64>(b);
      if (y == 0) return ~u64{0};
      if (x == INT64_MIN && y == -1) return a;
      return static_cast<u64>(x / y);
    }
    case Op::Divu: return b == 0 ? ~u64{0} : a / b;
    case Op::Rem: {
      const i64 x = static_cast<i64>(a), y = static_cast<i64>(b);
      if (y == 0) return a;
      if (x == INT64_MIN && y == -1) return 0;
      return static_cast<u64>(x % y);
    }
    case Op::Remu: return b == 0 ? a : a % b;
    case Op::Mulw: return sext32(a * b);
    case Op::Divw: {
      const i32 x = static_cast<i32>(a), y = static_cast<i32>(b);
      if (y == 0) return ~u64{0};
      if (x == INT32_MIN && y == -1) return sext32(static_cast<u32>(x));
      return sext32(static_cast<u32>(x / y));
    }
    case Op::Divuw: {
      const u32 x = static_cast<u32>(a), y = static_cast<u32>(b);
      return y == 0 ? ~u64{0} : sext32(x / y);
    }
    case Op::Remw: {
      const i32 x = static_cast<i32>(a), y = static_cast<i32>(b);
      if (y == 0) return sext32(static_cast<u32>(x));
      if (x == INT32_MIN && y == -1) return 0;
      return sext32(static_cast<u32>(x % y));
    }
    case Op::Remuw: {
      const u32 x = static_cast<u32>(a), y = static_cast<u32>(b);
      return y == 0 ? sext32(x) : sext32(x % y);
    }
    default:
      return 0;
  }
}

bool branch_taken(Op op, std::uint64_t a, std::uint64_t b) {
  switch (op) {
    case Op::Beq: return a == b;
    case Op::Bne: return a != b;
    case Op::Blt: return static_cast<std::int64_t>(a) < static_cast<std::int64_t>(b);
    case Op::Bge: return static_cast<std::int64_t>(a) >= static_cast<std::int64_t>(b);
    case Op::Bltu: return a < b;
    case Op::Bgeu: return a >= b;
    default: return false;
  }
}

std::uint64_t extend_load(Op op, std::uint64_t raw) {
  switch (op) {
    case Op::Lb: return static_cast<std::uint64_t>(static_cast<std::int64_t>(static_cast<std::int8_t>(raw)));
    case Op::Lh: return static_cast<std::uint64_t>(static_cast<std::int64_t>(static_cast<std::int16_t>(raw)));
    case Op::Lw: return static_cast<std::uint64_t>(static_cast<std::int64_t>(static_cast<std::int32_t>(raw)));
    case Op::Lbu: return raw & 0xff;
    case Op::Lhu: return raw & 0xffff;
    case Op::Lwu: return raw & 0xffffffff;
    default: return raw;
  }
}

StepRecord arch_step(ArchState& s, const Image& image) {
  if (!image.contains_pc(s.pc)) throw FetchOutOfRange("pc " + hex(s.pc) + " outside the program image");

  const Instruction& in = image.at(s.pc);
  StepRecord rec;
  rec.pc = s.pc;
  rec.instr = in;
  rec.rs1_value = s.regs[in.rs1];
  rec.rs2_value = s.regs[in.rs2];
  rec.next_pc = s.pc + 4;

  std::uint64_t rd_value = 0;
  const auto cls = op_class(in.op);
  switch (cls) {
    case OpClass::Load:
    case OpClass::Store: {
      const unsigned width = access_width(in.op);
      const std::uint64_t addr = rec.rs1_value + static_cast<std::uint64_t>(in.imm);
      if (addr % width != 0) {
        throw MisalignedAccess(format_instruction(in) + " at " + hex(s.pc) + ": address " + hex(addr));
      }
      rec.mem_addr = addr;
      if (cls == OpClass::Load) {
        rd_value = extend_load(in.op, s.mem.read(addr, width));
      } else {
        s.mem.write(addr, width, rec.rs2_value);
        const std::uint64_t stored =
            width == 8 ? rec.rs2_value : rec.rs2_value & ((std::uint64_t{1} << (8 * width)) - 1);
        if (addr == image.layout.tohost && stored == 1) s.terminated = true;
      }
      break;
    }
    case OpClass::Branch:
      if (branch_taken(in.op, rec.rs1_value, rec.rs2_value)) {
        rec.next_pc = s.pc + static_cast<std::uint64_t>(in.imm);
      }
      break;
    case OpClass::Jal:
      rd_value = s.pc + 4;
      rec.next_pc = s.pc + static_cast<std::uint64_t>(in.imm);
      break;
    case OpClass::Jalr:
      rd_value = s.pc + 4;
      rec.next_pc = (rec.rs1_value + static_cast<std::uint64_t>(in.imm)) & ~std::uint64_t{1};
      break;
    default:
      rd_value = alu_result(in, rec.rs1_value, rec.rs2_value, s.pc);
      break;
  }
  if (writes_rd(in.op) && in.rd != 0) s.regs[in.rd] = rd_value;
  s.regs[0] = 0;
  s.pc = rec.next_pc;
  rec.rd_value = s.regs[in.rd];
  return rec;
}

ArchState successor(const ArchState& state, const Image& image) {
  ArchState next = state;
  arch_step(next, image);
  return next;
}

ArchRun run_arch(const Image& image, std::uint64_t max_steps, const StepObserver& observer) {
  ArchRun run{image.initial, 0};
  while (!run.final_state.terminated) {
    if (run.steps >= max_steps) {
      throw StepLimitExceeded("no termination within " + std::to_string(max_steps) + " steps");
    }
    const StepRecord rec = arch_step(run.final_state, image);
    ++run.steps;
    if (observer) observer(rec, run.final_state);
  }
  return run;
}

ArchRun run_arch(const Program& program, const DataSection& data, std::uint64_t max_steps,
                 const MemoryLayout& layout) {
  return run_arch(build_image(program, data, layout), max_steps);
}

}  // namespace scfuzz::isa
