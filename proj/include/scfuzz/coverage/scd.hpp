#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <unordered_map>
#include <vector>

#include "scfuzz/selfcomp/lockstep.hpp"

namespace scfuzz::coverage {

inline constexpr std::uint32_t kIndexBits = 24;
inline constexpr std::uint32_t kMapBits = 1u << kIndexBits;
inline constexpr std::uint32_t kIndexMask = kMapBits - 1;

// First three SHAKE128 output bytes of `bytes`, read little-endian.
std::uint32_t shake24(std::span<const std::uint8_t> bytes);
std::uint32_t hash_dv(const selfcomp::DeviationVector& dv);

// Dense 2^24-bit map.
class CoverageMap {
 public:
  static constexpr std::size_t kWords = kMapBits / 64;
  static constexpr std::size_t kBytes = kMapBits / 8;

  CoverageMap();

  bool test(std::uint32_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }
  void set(std::uint32_t i) { words_[i >> 6] |= std::uint64_t{1} << (i & 63); }
  bool any() const;
  std::size_t popcount() const;
  // Set indices in increasing order.
  std::vector<std::uint32_t> indices() const;

  const std::vector<std::uint64_t>& words() const { return words_; }
  std::vector<std::uint64_t>& words() { return words_; }

  bool operator==(const CoverageMap&) const = default;

 private:
  std::vector<std::uint64_t> words_;
};

CoverageMap new_coverage(const CoverageMap& cum, const CoverageMap& cov);
CoverageMap merge(const CoverageMap& cum, const CoverageMap& cov);
std::size_t popcount(const CoverageMap& map);

struct RollingHashState {
  std::uint32_t prev_hash = 0;
};

// State before the first cycle of a run: both instances leave reset
// identical, so the previous deviation vector is the all-zero one.
RollingHashState initial_state(std::size_t width);

// Applies one deviation vector; returns the index it set.
std::uint32_t scd_index(RollingHashState& state, std::uint32_t h);
std::uint32_t scd_update(CoverageMap& map, RollingHashState& state,
                         const selfcomp::DeviationVector& dv);

// The coverage of one run kept sparse: the sorted set of indices it set.
// A run of T cycles sets at most T indices, so this is far smaller than a
// dense map.
struct RunCoverage {
  std::vector<std::uint32_t> indices;

  std::size_t popcount() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
  CoverageMap dense() const;
  bool operator==(const RunCoverage&) const = default;
};

// Folds scd_update over a deviation stream. Consecutive cycles usually
// repeat deviation vectors, so hashes are memoized per run.
class ScdAccumulator {
 public:
  void operator()(const selfcomp::DeviationVector& dv);
  RunCoverage finish();

 private:
  struct WordsHash {
    std::size_t operator()(const std::vector<std::uint64_t>& w) const;
  };
  std::uint32_t hash_cached(const selfcomp::DeviationVector& dv);

  RollingHashState state_;
  bool started_ = false;
  std::vector<std::uint32_t> hits_;
  std::unordered_map<std::vector<std::uint64_t>, std::uint32_t, WordsHash> cache_;
};

CoverageMap coverage_of_run(const std::vector<selfcomp::DeviationVector>& stream);

// Indices of `cov` not yet in `cum`.
std::vector<std::uint32_t> new_indices(const CoverageMap& cum, const RunCoverage& cov);
void merge_into(CoverageMap& cum, const RunCoverage& cov);

// Raw bit-packed little-endian files of exactly 2 MiB.
void save_scdcov(const CoverageMap& map, const std::filesystem::path& path);
CoverageMap load_scdcov(const std::filesystem::path& path);

}  // namespace scfuzz::coverage
