#include "scfuzz/uarch/core.hpp"

#include <cstdio>

#include "cores.hpp"
#include "scfuzz/common/error.hpp"

namespace scfuzz::uarch {

std::size_t StateLayout::add(std::string name, std::uint8_t width) {
  elements_.push_back({std::move(name), width});
  total_bits_ += width;
  return elements_.size() - 1;
}

bool StateLayout::operator==(const StateLayout& other) const {
  if (elements_.size() != other.elements_.size()) return false;
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    if (elements_[i].name != other.elements_[i].name || elements_[i].width != other.elements_[i].width) {
      return false;
    }
  }
  return true;
}

Core::Core(const CoreConfig& cfg, const isa::Image& image)
    : cfg_(cfg), image_(&image), arch_(image.initial) {
  validate(cfg);
  if (!cfg.m_extension) {
    for (const auto& in : image.decoded) {
      if (isa::is_mul_div(in.op)) {
        throw UnsupportedInstruction(isa::format_instruction(in) +
                                     ": M extension disabled in the core config");
      }
    }
  }
}

void Core::finish_layout(std::shared_ptr<StateLayout> layout) {
  state_.assign(layout->size(), 0);
  layout_ = std::move(layout);
}

void Core::commit(std::uint64_t pc, std::uint64_t result, std::uint64_t addr, std::uint64_t data,
                  std::uint64_t next_pc) {
  const isa::Instruction& in = image_->at(pc);
  RetireEvent ev;
  if (hook_) {
    ev.cycle = cycle();
    ev.pc = pc;
    ev.raw = image_->raw_at(pc);
    ev.pre_digest = arch_.digest();
  }
  if (isa::is_load(in.op) || isa::is_store(in.op)) {
    const unsigned width = isa::access_width(in.op);
    if (addr % width != 0) {
      throw MisalignedAccess(isa::format_instruction(in) + ": misaligned address retired");
    }
    if (isa::is_store(in.op)) {
      arch_.mem.write(addr, width, data);
      const std::uint64_t stored = width == 8 ? data : data & ((std::uint64_t{1} << (8 * width)) - 1);
      if (addr == image_->layout.tohost && stored == 1) {
        arch_.terminated = true;
        state_[terminated_index_] = 1;
      }
    }
  }
  if (isa::writes_rd(in.op) && in.rd != 0) arch_.regs[in.rd] = result;
  arch_.pc = next_pc;
  if (hook_) {
    ev.post_digest = arch_.digest();
    hook_(ev, arch_);
  }
}

std::unique_ptr<Core> make_core(const CoreConfig& cfg, const isa::Image& image) {
  if (cfg.kind == CoreKind::InOrder) return std::make_unique<detail::InOrderCore>(cfg, image);
  return std::make_unique<detail::SpecCore>(cfg, image);
}

std::shared_ptr<const StateLayout> layout_for(const CoreConfig& cfg) {
  static const isa::Image empty = isa::build_image(isa::Program{}, isa::DataSection{});
  return make_core(cfg, empty)->layout_ptr();
}

std::vector<std::uint8_t> snapshot_bits(const Core& core) {
  const auto& layout = core.layout();
  std::vector<std::uint8_t> out((layout.total_bits() + 7) / 8, 0);
  std::size_t pos = 0;
  const auto& values = core.elements();
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const unsigned w = layout[i].width;
    for (unsigned b = 0; b < w; ++b, ++pos) {
      if ((values[i] >> b) & 1) out[pos / 8] |= static_cast<std::uint8_t>(1u << (pos % 8));
    }
  }
  return out;
}

CoreRun run_core(const CoreConfig& cfg, const isa::Program& program, const isa::DataSection& data,
                 std::uint64_t max_cycles, const isa::MemoryLayout& layout) {
  const isa::Image image = isa::build_image(program, data, layout);
  auto core = make_core(cfg, image);
  CoreRun run;
  core->set_retire_hook([&](const RetireEvent& ev, const isa::ArchState&) { run.retire_log.push_back(ev); });
  while (!core->terminated() && core->cycle() < max_cycles) core->step();
  run.terminated = core->terminated();
  run.cycles = core->cycle();
  return run;
}

GoldenReport golden_check(const CoreConfig& cfg, const isa::Program& program, const isa::DataSection& data,
                          std::uint64_t max_cycles, const isa::MemoryLayout& layout) {
  const isa::Image image = isa::build_image(program, data, layout);
  std::vector<isa::ArchState> expected;
  isa::run_arch(image, max_cycles,
                [&](const isa::StepRecord&, const isa::ArchState& st) { expected.push_back(st); });

  GoldenReport report;
  auto core = make_core(cfg, image);
  core->set_retire_hook([&](const RetireEvent& ev, const isa::ArchState& st) {
    const std::uint64_t i = report.steps++;
    if (!report.detail.empty()) return;
    char buf[96];
    if (i >= expected.size()) {
      std::snprintf(buf, sizeof buf, "extra retirement %llu at pc %llx", static_cast<unsigned long long>(i),
                    static_cast<unsigned long long>(ev.pc));
      report.detail = buf;
    } else if (!(st == expected[i])) {
      std::snprintf(buf, sizeof buf, "state differs after retirement %llu (pc %llx)",
                    static_cast<unsigned long long>(i), static_cast<unsigned long long>(ev.pc));
      report.detail = buf;
    }
  });
  while (!core->terminated() && core->cycle() < max_cycles) core->step();
  if (report.detail.empty() && !core->terminated()) report.detail = "core did not terminate";
  if (report.detail.empty() && report.steps != expected.size()) {
    report.detail = "retired " + std::to_string(report.steps) + " instructions, interpreter stepped " +
                    std::to_string(expected.size());
  }
  report.ok = report.detail.empty();
  return report;
}

std::string format_retire_log(const std::vector<RetireEvent>& log) {
  std::string out;
  char buf[128];
  for (const auto& ev : log) {
    std::snprintf(buf, sizeof buf, "%8llu  %08llx  %08x  %016llx -> %016llx  ",
                  static_cast<unsigned long long>(ev.cycle), static_cast<unsigned long long>(ev.pc),
                  ev.raw, static_cast<unsigned long long>(ev.pre_digest),
                  static_cast<unsigned long long>(ev.post_digest));
    out += buf;
    out += isa::format_instruction(isa::decode(ev.raw));
    out += "\n";
  }
  return out;
}

}  // namespace scfuzz::uarch
