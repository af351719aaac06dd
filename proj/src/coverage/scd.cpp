#include "scfuzz/coverage/scd.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <bit>
#include <fstream>
#include <memory>

#include "scfuzz/common/error.hpp"

namespace scfuzz::coverage {

namespace {

struct CtxDeleter {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};

}  // namespace

std::uint32_t shake24(std::span<const std::uint8_t> bytes) {
  thread_local std::unique_ptr<EVP_MD_CTX, CtxDeleter> ctx(EVP_MD_CTX_new());
  unsigned char out[3];
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_shake128(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinalXOF(ctx.get(), out, sizeof out) != 1) {
    throw Error("SHAKE128 failed");
  }
  return std::uint32_t{out[0]} | std::uint32_t{out[1]} << 8 | std::uint32_t{out[2]} << 16;
}

std::uint32_t hash_dv(const selfcomp::DeviationVector& dv) {
  const auto bytes = dv.to_bytes();
  return shake24(bytes);
}

CoverageMap::CoverageMap() : words_(kWords) {}

bool CoverageMap::any() const {
  return std::any_of(words_.begin(), words_.end(), [](std::uint64_t w) { return w != 0; });
}

std::size_t CoverageMap::popcount() const {
  std::size_t n = 0;
  for (auto w : words_) n += std::popcount(w);
  return n;
}

std::vector<std::uint32_t> CoverageMap::indices() const {
  std::vector<std::uint32_t> out;
  for (std::size_t i = 0; i < kWords; ++i) {
    for (std::uint64_t w = words_[i]; w != 0; w &= w - 1) {
      out.push_back(static_cast<std::uint32_t>(i * 64 + std::countr_zero(w)));
    }
  }
  return out;
}

CoverageMap new_coverage(const CoverageMap& cum, const CoverageMap& cov) {
  CoverageMap out;
  for (std::size_t i = 0; i < CoverageMap::kWords; ++i) out.words()[i] = ~cum.words()[i] & cov.words()[i];
  return out;
}

CoverageMap merge(const CoverageMap& cum, const CoverageMap& cov) {
  CoverageMap out;
  for (std::size_t i = 0; i < CoverageMap::kWords; ++i) out.words()[i] = cum.words()[i] | cov.words()[i];
  return out;
}

std::size_t popcount(const CoverageMap& map) { return map.popcount(); }

std::uint32_t scd_index(RollingHashState& state, std::uint32_t h) {
  const std::uint32_t index = (h ^ (state.prev_hash >> 1)) & kIndexMask;
  state.prev_hash = h;
  return index;
}

RollingHashState initial_state(std::size_t width) {
  return {hash_dv(selfcomp::DeviationVector(width))};
}

std::uint32_t scd_update(CoverageMap& map, RollingHashState& state,
                         const selfcomp::DeviationVector& dv) {
  const std::uint32_t index = scd_index(state, hash_dv(dv));
  map.set(index);
  return index;
}

CoverageMap RunCoverage::dense() const {
  CoverageMap m;
  for (auto i : indices) m.set(i);
  return m;
}

std::size_t ScdAccumulator::WordsHash::operator()(const std::vector<std::uint64_t>& w) const {
  std::uint64_t h = 0x9e3779b97f4a7c15ULL ^ w.size();
  for (auto x : w) {
    h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  }
  return static_cast<std::size_t>(h);
}

std::uint32_t ScdAccumulator::hash_cached(const selfcomp::DeviationVector& dv) {
  // Width is part of the serialized input; vectors of one run share it.
  auto it = cache_.find(dv.words());
  if (it != cache_.end()) return it->second;
  const std::uint32_t h = hash_dv(dv);
  cache_.emplace(dv.words(), h);
  return h;
}

void ScdAccumulator::operator()(const selfcomp::DeviationVector& dv) {
  if (!started_) {
    state_.prev_hash = hash_cached(selfcomp::DeviationVector(dv.width()));
    started_ = true;
  }
  hits_.push_back(scd_index(state_, hash_cached(dv)));
}

RunCoverage ScdAccumulator::finish() {
  RunCoverage out;
  out.indices = std::move(hits_);
  std::sort(out.indices.begin(), out.indices.end());
  out.indices.erase(std::unique(out.indices.begin(), out.indices.end()), out.indices.end());
  hits_.clear();
  cache_.clear();
  state_ = {};
  started_ = false;
  return out;
}

CoverageMap coverage_of_run(const std::vector<selfcomp::DeviationVector>& stream) {
  CoverageMap map;
  if (stream.empty()) return map;
  RollingHashState state = initial_state(stream.front().width());
  for (const auto& dv : stream) scd_update(map, state, dv);
  return map;
}

std::vector<std::uint32_t> new_indices(const CoverageMap& cum, const RunCoverage& cov) {
  std::vector<std::uint32_t> out;
  for (auto i : cov.indices) {
    if (!cum.test(i)) out.push_back(i);
  }
  return out;
}

void merge_into(CoverageMap& cum, const RunCoverage& cov) {
  for (auto i : cov.indices) cum.set(i);
}

void save_scdcov(const CoverageMap& map, const std::filesystem::path& path) {
  std::vector<char> bytes(CoverageMap::kBytes);
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    bytes[i] = static_cast<char>(map.words()[i / 8] >> (8 * (i % 8)));
  }
  std::ofstream out(path, std::ios::binary);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("cannot write " + path.string());
}

CoverageMap load_scdcov(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<char> bytes(CoverageMap::kBytes);
  in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size()) || in.peek() != EOF) {
    throw Error(path.string() + " is not a 2 MiB coverage map");
  }
  CoverageMap map;
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    map.words()[i / 8] |= std::uint64_t{static_cast<std::uint8_t>(bytes[i])} << (8 * (i % 8));
  }
  return map;
}

}  // namespace scfuzz::coverage
