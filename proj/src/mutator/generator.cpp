#include "scfuzz/mutator/generator.hpp"

#include <algorithm>
#include <cmath>

#include "scfuzz/common/error.hpp"
#include "scfuzz/isa/instruction.hpp"

namespace scfuzz::mutator {

using isa::InstructionWord;
using isa::Op;
using isa::ProgramInstr;
using isa::Reloc;
using isa::Symbol;

std::string data_strategy_name(DataStrategy s) {
  switch (s) {
    case DataStrategy::FullyRandom: return "fully-random";
    case DataStrategy::FullyRandomSeqArch: return "fully-random-seq-arch";
    case DataStrategy::FiftyFifty: return "fifty-fifty";
  }
  return "?";
}

DataStrategy data_strategy_from_name(const std::string& name) {
  for (auto s : {DataStrategy::FullyRandom, DataStrategy::FullyRandomSeqArch, DataStrategy::FiftyFifty}) {
    if (data_strategy_name(s) == name) return s;
  }
  throw Error("unknown data strategy '" + name + "'");
}

void validate(const GenConfig& cfg) {
  auto check_triple = [](double a, double b, double c, const char* what) {
    for (double x : {a, b, c}) {
      if (!(x >= 0.0 && x <= 1.0)) throw Error(std::string(what) + " probabilities must lie in [0, 1]");
    }
    if (std::abs(a + b + c - 1.0) > 1e-9) throw Error(std::string(what) + " probabilities must sum to 1");
  };
  check_triple(cfg.fresh_prob, cfg.mutate_prob, cfg.merge_prob, "fresh/mutate/merge");
  check_triple(cfg.retain_prob, cfg.delete_prob, cfg.insert_prob, "retain/delete/insert");
  if (!(cfg.reuse_prob >= 0.0 && cfg.reuse_prob <= 1.0)) throw Error("reuse probability must lie in [0, 1]");
  if (cfg.min_words > cfg.max_words) throw Error("min_words exceeds max_words");
  if (cfg.data_store_capacity == 0) throw Error("data store capacity must be positive");
}

namespace {

ProgramInstr plain(Op op, std::uint8_t rd, std::uint8_t rs1, std::uint8_t rs2, std::int64_t imm) {
  ProgramInstr pi;
  pi.instr = isa::canonical({op, rd, rs1, rs2, imm});
  return pi;
}

ProgramInstr reloc(Op op, std::uint8_t rd, std::uint8_t rs1, std::uint8_t rs2, Reloc r, Symbol sym) {
  ProgramInstr pi = plain(op, rd, rs1, rs2, 0);
  pi.reloc = r;
  pi.sym = sym;
  return pi;
}

template <std::size_t N>
Op pick(Rng& rng, const Op (&ops)[N]) {
  return ops[rng.below(N)];
}

constexpr Op kAluReg[] = {Op::Add, Op::Sub, Op::Sll, Op::Slt, Op::Sltu, Op::Xor, Op::Srl, Op::Sra,
                          Op::Or, Op::And, Op::Addw, Op::Subw, Op::Sllw, Op::Srlw, Op::Sraw};
constexpr Op kAluImm[] = {Op::Addi, Op::Slti, Op::Sltiu, Op::Xori, Op::Ori, Op::Andi, Op::Slli,
                          Op::Srli, Op::Srai, Op::Addiw, Op::Slliw, Op::Srliw, Op::Sraiw};
constexpr Op kLoads[] = {Op::Lb, Op::Lh, Op::Lw, Op::Ld, Op::Lbu, Op::Lhu, Op::Lwu};
constexpr Op kStores[] = {Op::Sb, Op::Sh, Op::Sw, Op::Sd};
constexpr Op kBranches[] = {Op::Beq, Op::Bne, Op::Blt, Op::Bge, Op::Bltu, Op::Bgeu};
constexpr Op kMulDiv[] = {Op::Mul, Op::Mulh, Op::Mulhsu, Op::Mulhu, Op::Div, Op::Divu, Op::Rem,
                          Op::Remu, Op::Mulw, Op::Divw, Op::Divuw, Op::Remw, Op::Remuw};

// Relative weights of the main-instruction kinds.
enum Kind { kAluR, kAluI, kUpper, kLoad, kStore, kBranch, kJal, kJalr, kMulDivKind, kKinds };
constexpr unsigned kWeights[kKinds] = {3, 3, 1, 4, 2, 4, 1, 1, 2};

// Bytes a data-dependent access may reach past its base offset.
constexpr std::uint32_t kIndexSpan = 512;
// Reuse draws from this many most recently used registers.
constexpr std::size_t kReuseWindow = 4;

}  // namespace

Generator::Generator(const GenConfig& cfg, Rng& rng, GenStats& stats) : cfg_(cfg), rng_(rng), stats_(stats) {}

void Generator::reset() {
  used_regs_.clear();
  used_imms_.clear();
  used_offsets_.clear();
  pending_.reset();
}

void Generator::learn(const isa::Program& program) {
  for (const auto& w : program.words) {
    for (const auto& pi : w.instrs) {
      for (auto r : {pi.instr.rs1, pi.instr.rs2, pi.instr.rd}) {
        if (r != 0) touch(r);
      }
      if (isa::op_class(pi.instr.op) == isa::OpClass::AluImm && pi.reloc == Reloc::None &&
          isa::info(pi.instr.op).format == isa::Format::I) {
        used_imms_.push_back(pi.instr.imm);
      }
      if (pi.reloc == Reloc::PcrelLo && pi.sym.kind == isa::Symbol::Kind::Data) used_offsets_.push_back(pi.sym.value);
    }
  }
}

std::uint8_t Generator::reg() {
  ++stats_.register_draws;
  std::uint8_t r;
  if (rng_.chance(cfg_.reuse_prob) && !used_regs_.empty()) {
    ++stats_.register_reuses;
    // Recent registers, so that reuse builds short dependency chains.
    const std::size_t window = std::min<std::size_t>(used_regs_.size(), kReuseWindow);
    r = used_regs_[used_regs_.size() - 1 - rng_.below(window)];
  } else {
    r = static_cast<std::uint8_t>(1 + rng_.below(31));
  }
  touch(r);
  return r;
}

void Generator::touch(std::uint8_t r) {
  auto it = std::find(used_regs_.begin(), used_regs_.end(), r);
  if (it != used_regs_.end()) used_regs_.erase(it);
  used_regs_.push_back(r);
}

std::uint8_t Generator::reg_other_than(std::uint8_t a) {
  std::uint8_t r = reg();
  while (r == a) r = reg();
  return r;
}

std::int64_t Generator::imm12() {
  if (rng_.chance(cfg_.reuse_prob) && !used_imms_.empty()) return used_imms_[rng_.below(used_imms_.size())];
  const auto v = static_cast<std::int64_t>(rng_.below(4096)) - 2048;
  used_imms_.push_back(v);
  return v;
}

std::uint32_t Generator::data_offset(std::uint32_t limit, unsigned width) {
  // Data offsets are immediates too; a reused one is clamped and aligned to
  // the access at hand.
  if (rng_.chance(cfg_.reuse_prob) && !used_offsets_.empty()) {
    const std::uint32_t o = used_offsets_[rng_.below(used_offsets_.size())];
    return std::min(o, limit - width) & ~(width - 1);
  }
  const auto o = static_cast<std::uint32_t>(rng_.below(limit / width) * width);
  used_offsets_.push_back(o);
  return o;
}

std::uint32_t Generator::label(std::size_t pos, std::size_t n_words) {
  // Mostly short hops so that a good part of the body executes.
  const std::size_t reach = std::min<std::size_t>(n_words - pos, 6);
  return static_cast<std::uint32_t>(pos + 1 + rng_.below(reach));
}

InstructionWord Generator::alu_reg() {
  const Op op = pick(rng_, kAluReg);
  const auto rd = reg();
  const auto rs1 = reg();
  const auto rs2 = reg();
  return {{plain(op, rd, rs1, rs2, 0)}};
}

InstructionWord Generator::alu_imm() {
  const Op op = pick(rng_, kAluImm);
  const auto rd = reg();
  const auto rs1 = reg();
  std::int64_t imm;
  switch (isa::info(op).format) {
    case isa::Format::IShift64: imm = static_cast<std::int64_t>(rng_.below(64)); break;
    case isa::Format::IShift32: imm = static_cast<std::int64_t>(rng_.below(32)); break;
    default: imm = imm12(); break;
  }
  return {{plain(op, rd, rs1, 0, imm)}};
}

InstructionWord Generator::upper() {
  const Op op = rng_.chance(0.5) ? Op::Lui : Op::Auipc;
  const auto rd = reg();
  const auto imm20 = static_cast<std::uint32_t>(rng_.below(1u << 20));
  return {{plain(op, rd, 0, 0, static_cast<std::int32_t>(imm20 << 12))}};
}

InstructionWord Generator::memory(bool store) {
  const Op op = store ? pick(rng_, kStores) : pick(rng_, kLoads);
  const unsigned width = isa::access_width(op);
  InstructionWord w;
  if (rng_.chance(0.5)) {
    // Fixed address: auipc base; access %lo.
    const auto off = data_offset(isa::kDataBytes, width);
    const auto base = reg();
    w.instrs.push_back(reloc(Op::Auipc, base, 0, 0, Reloc::PcrelHi, Symbol::data(off)));
    const auto val = reg();
    w.instrs.push_back(store ? reloc(op, 0, base, val, Reloc::PcrelLo, Symbol::data(off))
                             : reloc(op, val, base, 0, Reloc::PcrelLo, Symbol::data(off)));
    return w;
  }
  const auto src = reg();
  if (rng_.chance(0.5)) {
    // Table lookup: load the index source from the data region first.
    const auto src_off = data_offset(isa::kDataBytes, 8);
    const auto src_base = reg_other_than(src);
    w.instrs.push_back(reloc(Op::Auipc, src_base, 0, 0, Reloc::PcrelHi, Symbol::data(src_off)));
    w.instrs.push_back(reloc(Op::Ld, src, src_base, 0, Reloc::PcrelLo, Symbol::data(src_off)));
    pending_ = indexed_access(op, src);
    return w;
  }
  return indexed_access(op, src);
}

// Data-dependent address: `src` masked to an aligned index is added to the
// base, keeping the access inside the data region.
InstructionWord Generator::indexed_access(Op op, std::uint8_t src) {
  const bool store = isa::is_store(op);
  const unsigned width = isa::access_width(op);
  const auto off = data_offset(isa::kDataBytes - kIndexSpan, width);
  const auto mask = static_cast<std::int64_t>((kIndexSpan - 1) & ~(width - 1));
  const auto index = reg();
  const auto base = reg_other_than(index);
  InstructionWord w;
  w.instrs.push_back(plain(Op::Andi, index, src, 0, mask));
  w.instrs.push_back(reloc(Op::Auipc, base, 0, 0, Reloc::PcrelHi, Symbol::data(off)));
  w.instrs.push_back(plain(Op::Add, base, base, index, 0));
  const auto val = reg();
  w.instrs.push_back(store ? reloc(op, 0, base, val, Reloc::PcrelLo, Symbol::data(off))
                           : reloc(op, val, base, 0, Reloc::PcrelLo, Symbol::data(off)));
  return w;
}

InstructionWord Generator::branch(std::size_t pos, std::size_t n_words) {
  const Op op = pick(rng_, kBranches);
  InstructionWord w;
  std::uint8_t a, b;
  const double u = rng_.unit();
  if (u < 1.0 / 3) {
    // Compare against a value loaded from the data region.
    const auto off = data_offset(isa::kDataBytes, 8);
    const auto base = reg();
    a = reg();
    w.instrs.push_back(reloc(Op::Auipc, base, 0, 0, Reloc::PcrelHi, Symbol::data(off)));
    w.instrs.push_back(reloc(Op::Ld, a, base, 0, Reloc::PcrelLo, Symbol::data(off)));
    b = reg();
  } else if (u < 2.0 / 3) {
    // Compare a few low bits so both outcomes are likely.
    const auto src = reg();
    a = reg();
    w.instrs.push_back(plain(Op::Andi, a, src, 0, static_cast<std::int64_t>(1 + rng_.below(15))));
    b = rng_.chance(0.5) ? 0 : reg();
  } else {
    a = reg();
    b = reg();
  }
  w.instrs.push_back(reloc(op, 0, a, b, Reloc::Target, Symbol::label(label(pos, n_words))));
  return w;
}

InstructionWord Generator::jump(std::size_t pos, std::size_t n_words, bool indirect) {
  const auto target = Symbol::label(label(pos, n_words));
  const auto rd = reg();
  if (!indirect) return {{reloc(Op::Jal, rd, 0, 0, Reloc::Target, target)}};
  const auto base = reg();
  return {{reloc(Op::Auipc, base, 0, 0, Reloc::PcrelHi, target),
           reloc(Op::Jalr, rd, base, 0, Reloc::PcrelLo, target)}};
}

InstructionWord Generator::mul_div() {
  const Op op = pick(rng_, kMulDiv);
  const auto rd = reg();
  const auto rs1 = reg();
  const auto rs2 = reg();
  return {{plain(op, rd, rs1, rs2, 0)}};
}

InstructionWord Generator::word(std::size_t pos, std::size_t n_words) {
  if (pending_) {
    InstructionWord w = std::move(*pending_);
    pending_.reset();
    return w;
  }
  unsigned total = 0;
  for (unsigned k = 0; k < kKinds; ++k) {
    if (k == kMulDivKind && !cfg_.m_extension) continue;
    total += kWeights[k];
  }
  auto draw = static_cast<unsigned>(rng_.below(total));
  unsigned kind = 0;
  for (; kind < kKinds; ++kind) {
    if (kind == kMulDivKind && !cfg_.m_extension) continue;
    if (draw < kWeights[kind]) break;
    draw -= kWeights[kind];
  }
  switch (kind) {
    case kAluR: return alu_reg();
    case kAluI: return alu_imm();
    case kUpper: return upper();
    case kLoad: return memory(false);
    case kStore: return memory(true);
    case kBranch: return branch(pos, n_words);
    case kJal: return jump(pos, n_words, false);
    case kJalr: return jump(pos, n_words, true);
    default: return mul_div();
  }
}

isa::Program generate_program(const GenConfig& cfg, Rng& rng, GenStats& stats) {
  Generator gen(cfg, rng, stats);
  const std::size_t n = cfg.min_words + rng.below(cfg.max_words - cfg.min_words + 1);
  isa::Program p;
  p.words.reserve(n);
  for (std::size_t k = 0; k < n; ++k) p.words.push_back(gen.word(k, n));
  return p;
}

std::pair<isa::DataSection, isa::DataSection> generate_data_pair(DataStrategy strategy, Rng& rng) {
  isa::DataSection a, b;
  bool structured = false;
  switch (strategy) {
    case DataStrategy::FullyRandom: break;
    case DataStrategy::FullyRandomSeqArch: structured = true; break;
    case DataStrategy::FiftyFifty: structured = rng.chance(0.5); break;
  }
  for (std::size_t i = 0; i < isa::kDataWords; ++i) {
    a.words[i] = rng.next_u64();
    if (!structured) {
      b.words[i] = rng.next_u64();
    } else if (i < isa::kInitWords) {
      b.words[i] = a.words[i];
    } else if (strategy == DataStrategy::FiftyFifty) {
      b.words[i] = rng.chance(0.5) ? a.words[i] : rng.next_u64();
    } else {
      b.words[i] = rng.next_u64();
    }
  }
  return {a, b};
}

namespace {

// Rewrites every label of `w` (which now sits at `pos`) through `remap`.
template <class F>
void relabel(InstructionWord& w, F remap) {
  for (auto& pi : w.instrs) {
    if (pi.reloc != Reloc::None && pi.sym.kind == Symbol::Kind::Label) pi.sym.value = remap(pi.sym.value);
  }
}

}  // namespace

isa::Program mutate(const isa::Program& p, const GenConfig& cfg, Rng& rng, GenStats& stats) {
  Generator gen(cfg, rng, stats);
  gen.learn(p);
  const std::size_t n = p.words.size();

  // Layout first: -1 marks a fresh word, otherwise the old index.
  std::vector<std::int64_t> layout;
  std::vector<std::int64_t> new_pos(n, -1);
  for (std::size_t j = 0; j < n; ++j) {
    const double u = rng.unit();
    if (u < cfg.retain_prob) {
      ++stats.words_retained;
      new_pos[j] = static_cast<std::int64_t>(layout.size());
      layout.push_back(static_cast<std::int64_t>(j));
    } else if (u < cfg.retain_prob + cfg.delete_prob) {
      ++stats.words_deleted;
    } else {
      ++stats.words_inserted;
      new_pos[j] = static_cast<std::int64_t>(layout.size());
      layout.push_back(static_cast<std::int64_t>(j));
      layout.push_back(-1);
    }
  }
  if (n == 0) layout.push_back(-1);

  const std::size_t m = layout.size();
  // First surviving old word at or after each old index; the epilogue
  // otherwise.
  std::vector<std::uint32_t> landing(n + 1, static_cast<std::uint32_t>(m));
  for (std::size_t j = n; j-- > 0;) {
    landing[j] = new_pos[j] >= 0 ? static_cast<std::uint32_t>(new_pos[j]) : landing[j + 1];
  }

  isa::Program out;
  out.seed_id = p.seed_id;
  out.words.reserve(m);
  for (std::size_t pos = 0; pos < m; ++pos) {
    if (layout[pos] < 0) {
      out.words.push_back(gen.word(pos, m));
    } else {
      InstructionWord w = p.words[static_cast<std::size_t>(layout[pos])];
      relabel(w, [&](std::uint32_t t) { return landing[t]; });
      out.words.push_back(std::move(w));
    }
  }
  return out;
}

isa::Program splice(const isa::Program& p1, const isa::Program& p2, std::size_t i) {
  std::vector<std::pair<const InstructionWord*, std::size_t>> parts;  // word, original index
  for (std::size_t k = 0; k < i; ++k) parts.emplace_back(&p1.words[k], k);
  for (std::size_t k = i; k + 5 < p2.words.size(); ++k) parts.emplace_back(&p2.words[k], k);
  for (std::size_t k = p1.words.size() - 5; k < p1.words.size(); ++k) parts.emplace_back(&p1.words[k], k);

  const std::size_t m = parts.size();
  isa::Program out;
  out.seed_id = p1.seed_id;
  out.words.reserve(m);
  for (std::size_t pos = 0; pos < m; ++pos) {
    InstructionWord w = *parts[pos].first;
    const std::size_t from = parts[pos].second;
    relabel(w, [&](std::uint32_t t) {
      return static_cast<std::uint32_t>(std::min<std::size_t>(pos + (t - from), m));
    });
    out.words.push_back(std::move(w));
  }
  return out;
}

isa::Program merge(const isa::Program& p1, const isa::Program& p2, const GenConfig& cfg, Rng& rng,
                   GenStats& stats) {
  if (p1.words.size() < 5 || p2.words.size() < 5) return mutate(p1, cfg, rng, stats);
  const std::size_t i = rng.below(std::min(p1.words.size(), p2.words.size()));
  return mutate(splice(p1, p2, i), cfg, rng, stats);
}

}  // namespace scfuzz::mutator
