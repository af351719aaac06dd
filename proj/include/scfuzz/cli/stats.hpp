#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace scfuzz::cli {

struct RunSample {
  std::string label;
  std::vector<double> values;
};

struct MannWhitney {
  double u = 0.0;  // U of the first sample
  double p = 1.0;  // two-sided
  bool exact = false;
};

// Sizes up to this use the exact null distribution of the midrank sum.
inline constexpr std::size_t kExactLimit = 12;

// U from rank sums with midranks for ties. Two-sided p from the exact
// permutation distribution when both samples have at most kExactLimit
// values, otherwise from the normal approximation with tie correction and
// continuity correction. Throws Error on an empty or non-finite sample and
// DegenerateSample when every value of both samples is the same.
MannWhitney mann_whitney_u(const RunSample& a, const RunSample& b);

double median(std::vector<double> values);
double mean(const std::vector<double>& values);

}  // namespace scfuzz::cli
