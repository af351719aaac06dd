#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "scfuzz/cli/stats.hpp"

namespace scfuzz::cli {

// Exit statuses.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitLeak = 2;

// Entry point of the scfuzz tool. Output goes to `out`, diagnostics to
// `err`. Verbosity comes from the SCFUZZ_VERBOSE environment variable
// (0 quiet, 1 summary, 2 progress).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Metric of one campaign log: "cum_popcount" (final cumulative popcount) or
// "first_leak" (first Leak iteration; runs without a leak count as their
// iteration total and set `censored`). A directory means its campaign.jsonl.
// Throws ParseError with the 1-based line number on malformed lines.
double campaign_metric(const std::filesystem::path& log, const std::string& metric, bool* censored = nullptr);

}  // namespace scfuzz::cli
