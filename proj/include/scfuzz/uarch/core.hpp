#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "scfuzz/isa/arch.hpp"
#include "scfuzz/uarch/config.hpp"

namespace scfuzz::uarch {

struct ElementInfo {
  std::string name;
  std::uint8_t width;  // bits
};

// Names and widths of a core's state elements, in snapshot order. A pure
// function of the CoreConfig.
class StateLayout {
 public:
  std::size_t add(std::string name, std::uint8_t width);
  std::size_t size() const { return elements_.size(); }
  const ElementInfo& operator[](std::size_t i) const { return elements_[i]; }
  std::size_t total_bits() const { return total_bits_; }
  bool operator==(const StateLayout& other) const;

 private:
  std::vector<ElementInfo> elements_;
  std::size_t total_bits_ = 0;
};

struct RetireEvent {
  std::uint64_t cycle = 0;
  std::uint64_t pc = 0;
  std::uint32_t raw = 0;
  std::uint64_t pre_digest = 0;
  std::uint64_t post_digest = 0;
};

using RetireHook = std::function<void(const RetireEvent&, const isa::ArchState&)>;

// One core instance. State elements live in a flat vector whose layout is
// fixed by the config; architectural registers and memory live in the
// ArchState the core retires into and are not elements.
class Core {
 public:
  virtual ~Core() = default;

  // Advances one clock cycle. No-op once terminated.
  virtual void step() = 0;

  bool terminated() const { return state_[terminated_index_] != 0; }
  std::uint64_t cycle() const { return state_[cycle_index_]; }

  const StateLayout& layout() const { return *layout_; }
  std::shared_ptr<const StateLayout> layout_ptr() const { return layout_; }
  const std::vector<std::uint64_t>& elements() const { return state_; }
  const isa::ArchState& arch() const { return arch_; }
  const CoreConfig& config() const { return cfg_; }

  // Invoked after every retirement with the updated architectural state.
  void set_retire_hook(RetireHook hook) { hook_ = std::move(hook); }

 protected:
  Core(const CoreConfig& cfg, const isa::Image& image);

  void finish_layout(std::shared_ptr<StateLayout> layout);
  // Applies a completed instruction to the architectural state.
  void commit(std::uint64_t pc, std::uint64_t result, std::uint64_t addr, std::uint64_t data,
              std::uint64_t next_pc);

  CoreConfig cfg_;
  const isa::Image* image_;
  isa::ArchState arch_;
  std::shared_ptr<const StateLayout> layout_;
  std::vector<std::uint64_t> state_;
  std::size_t cycle_index_ = 0;
  std::size_t terminated_index_ = 0;
  RetireHook hook_;
};

// `image` must outlive the core. Throws UnsupportedInstruction when the image
// holds M-group instructions and cfg.m_extension is off.
std::unique_ptr<Core> make_core(const CoreConfig& cfg, const isa::Image& image);

// Layout without building a core.
std::shared_ptr<const StateLayout> layout_for(const CoreConfig& cfg);

// Packs every element's low `width` bits, in layout order, into a byte
// vector (bit i of the stream is bit i%8 of byte i/8).
std::vector<std::uint8_t> snapshot_bits(const Core& core);

struct CoreRun {
  bool terminated = false;
  std::uint64_t cycles = 0;
  std::vector<RetireEvent> retire_log;
};

inline constexpr std::uint64_t kDefaultMaxCycles = 100'000;

CoreRun run_core(const CoreConfig& cfg, const isa::Program& program, const isa::DataSection& data,
                 std::uint64_t max_cycles = kDefaultMaxCycles, const isa::MemoryLayout& layout = {});

// Differential check against the ISA interpreter: the architectural state
// after every retirement must equal the interpreter's state after the same
// step, and both must terminate after the same number of steps. `detail`
// describes the first divergence.
struct GoldenReport {
  bool ok = false;
  std::uint64_t steps = 0;
  std::string detail;
};

GoldenReport golden_check(const CoreConfig& cfg, const isa::Program& program, const isa::DataSection& data,
                          std::uint64_t max_cycles = kDefaultMaxCycles, const isa::MemoryLayout& layout = {});

std::string format_retire_log(const std::vector<RetireEvent>& log);

}  // namespace scfuzz::uarch
