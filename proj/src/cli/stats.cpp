#include "scfuzz/cli/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "scfuzz/common/error.hpp"

namespace scfuzz::cli {

namespace {

void check(const RunSample& s) {
  if (s.values.empty()) throw Error("sample '" + s.label + "' is empty");
  for (double v : s.values) {
    if (!std::isfinite(v)) throw Error("sample '" + s.label + "' has a non-finite value");
  }
}

// Doubled midranks of the pooled values, in pooled order.
std::vector<std::int64_t> doubled_ranks(const std::vector<double>& pooled, std::vector<std::int64_t>& tie_sizes) {
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return pooled[x] < pooled[y]; });
  std::vector<std::int64_t> r2(pooled.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && pooled[order[j]] == pooled[order[i]]) ++j;
    // Positions i..j-1 (0-based) share rank ((i+1) + j) / 2.
    for (std::size_t k = i; k < j; ++k) r2[order[k]] = static_cast<std::int64_t>(i + 1 + j);
    tie_sizes.push_back(static_cast<std::int64_t>(j - i));
    i = j;
  }
  return r2;
}

}  // namespace

MannWhitney mann_whitney_u(const RunSample& a, const RunSample& b) {
  check(a);
  check(b);
  const std::size_t na = a.values.size(), nb = b.values.size(), n = na + nb;
  std::vector<double> pooled = a.values;
  pooled.insert(pooled.end(), b.values.begin(), b.values.end());
  if (std::all_of(pooled.begin(), pooled.end(), [&](double v) { return v == pooled[0]; })) {
    throw DegenerateSample("all values are identical");
  }

  std::vector<std::int64_t> ties;
  const auto r2 = doubled_ranks(pooled, ties);
  const std::int64_t sum2 = std::accumulate(r2.begin(), r2.begin() + static_cast<std::ptrdiff_t>(na), std::int64_t{0});
  // 2U = 2R - na(na+1)
  const auto base2 = static_cast<std::int64_t>(na * (na + 1));
  MannWhitney out;
  out.u = static_cast<double>(sum2 - base2) / 2.0;
  const double mu = static_cast<double>(na * nb) / 2.0;

  if (na <= kExactLimit && nb <= kExactLimit) {
    // ways[k][s]: subsets of size k of the pooled ranks with doubled sum s.
    const auto max_sum = static_cast<std::size_t>(std::accumulate(r2.begin(), r2.end(), std::int64_t{0}));
    std::vector<std::vector<double>> ways(na + 1, std::vector<double>(max_sum + 1, 0.0));
    ways[0][0] = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto r = static_cast<std::size_t>(r2[i]);
      for (std::size_t k = std::min(i + 1, na); k >= 1; --k) {
        for (std::size_t s = max_sum; s >= r; --s) ways[k][s] += ways[k - 1][s - r];
      }
    }
    // Dividing by C(n, na) after summing keeps the counts exact.
    double total = 0.0, extreme = 0.0;
    const double dev_obs = std::abs(out.u - mu);
    for (std::size_t s = 0; s <= max_sum; ++s) {
      const double w = ways[na][s];
      if (w == 0.0) continue;
      total += w;
      const double u = static_cast<double>(static_cast<std::int64_t>(s) - base2) / 2.0;
      if (std::abs(u - mu) >= dev_obs - 1e-9) extreme += w;
    }
    out.p = std::min(1.0, extreme / total);
    out.exact = true;
    return out;
  }

  double tie_term = 0.0;
  for (auto t : ties) tie_term += static_cast<double>(t * t * t - t);
  const double nn = static_cast<double>(n);
  const double var = static_cast<double>(na * nb) / 12.0 * ((nn + 1.0) - tie_term / (nn * (nn - 1.0)));
  const double z = std::max(0.0, std::abs(out.u - mu) - 0.5) / std::sqrt(var);
  out.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  return values.size() % 2 ? values[m] : (values[m - 1] + values[m]) / 2.0;
}

double mean(const std::vector<double>& values) {
  if (values.empty()) throw Error("mean of an empty sample");
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace scfuzz::cli
