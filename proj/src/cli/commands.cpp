#include "scfuzz/cli/commands.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "scfuzz/common/error.hpp"
#include "scfuzz/contracts/contract.hpp"
#include "scfuzz/fuzzer/campaign.hpp"
#include "scfuzz/fuzzer/config_io.hpp"
#include "scfuzz/isa/testcase_io.hpp"

namespace scfuzz::cli {

namespace fs = std::filesystem;

namespace {

int verbosity() {
  const char* v = std::getenv("SCFUZZ_VERBOSE");
  return v == nullptr ? 1 : std::atoi(v);
}

contracts::ContractId parse_contract(const std::string& name) {
  const auto id = contracts::contract_from_name(name);
  if (!id) throw Error("unknown contract '" + name + "'");
  return *id;
}

uarch::CoreConfig parse_core(const std::string& name) {
  const auto kind = uarch::core_kind_from_name(name);
  if (!kind) throw Error("unknown core '" + name + "'");
  return uarch::CoreConfig::defaults(*kind);
}

std::string verdict_label(fuzzer::IterVerdict v) {
  switch (v) {
    case fuzzer::IterVerdict::ContractDistinguishable: return "ContractDistinguishable";
    case fuzzer::IterVerdict::Pass: return "Pass";
    case fuzzer::IterVerdict::Leak: return "Leak";
    case fuzzer::IterVerdict::Timeout: return "Timeout";
  }
  return "?";
}

std::string fmt_double(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

}  // namespace

double campaign_metric(const fs::path& log, const std::string& metric, bool* censored) {
  const fs::path file = fs::is_directory(log) ? log / "campaign.jsonl" : log;
  std::ifstream in(file);
  if (!in) throw Error("cannot open " + file.string());
  if (metric != "cum_popcount" && metric != "first_leak") throw Error("unknown metric '" + metric + "'");
  std::string line;
  std::size_t n = 0;
  std::optional<fuzzer::IterationRecord> last;
  std::optional<std::uint64_t> first_leak;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    fuzzer::IterationRecord r;
    try {
      r = fuzzer::parse_record(line);
    } catch (const ParseError& e) {
      throw ParseError(file.string() + ": " + e.what(), n);
    }
    if (r.verdict == fuzzer::IterVerdict::Leak && !first_leak) first_leak = r.iter;
    last = r;
  }
  if (!last) throw Error(file.string() + ": no campaign records");
  if (censored) *censored = false;
  if (metric == "cum_popcount") return static_cast<double>(last->cum_popcount);
  if (first_leak) return static_cast<double>(*first_leak);
  if (censored) *censored = true;
  return static_cast<double>(last->iter + 1);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Coverage-guided leakage-contract fuzzer for toy RISC-V cores"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // fuzz
  auto* fuzz = app.add_subcommand("fuzz", "run a fuzzing campaign");
  std::string core_name = "spec", contract_name = "seq-arch", strategy_name = "weighted", data_strategy, config_file;
  std::uint64_t iters = 1000, seed = 0, poll = 1;
  unsigned workers = 1;
  std::string out_dir;
  bool m_ext = false;
  fuzz->add_option("--core", core_name, "inorder | spec");
  fuzz->add_option("--contract", contract_name, "seq-ct | seq-ct-b | seq-arch");
  fuzz->add_option("--strategy", strategy_name, "pass | pass100 | newcov | weighted");
  fuzz->add_option("--iters", iters, "iterations");
  fuzz->add_option("--seed", seed, "rng seed");
  fuzz->add_option("--out", out_dir, "output directory");
  fuzz->add_option("--data-strategy", data_strategy, "fully-random | fully-random-seq-arch | fifty-fifty");
  fuzz->add_option("--poll-interval", poll, "attacker poll interval in cycles");
  fuzz->add_option("--workers", workers, "simulation threads");
  fuzz->add_flag("--m-ext", m_ext, "generate and execute M-extension instructions");
  fuzz->add_option("--config", config_file, "JSON campaign config; flags given explicitly override it");

  // replay
  auto* replay = app.add_subcommand("replay", "classify a stored test case");
  std::string tc_file;
  std::string r_core = "spec", r_contract = "seq-arch";
  std::uint64_t r_poll = 1;
  replay->add_option("testcase", tc_file, "test-case file")->required();
  replay->add_option("--core", r_core, "inorder | spec");
  replay->add_option("--contract", r_contract, "seq-ct | seq-ct-b | seq-arch");
  replay->add_option("--poll-interval", r_poll, "attacker poll interval in cycles");

  // trace
  auto* trace = app.add_subcommand("trace", "print the contract trace of one side");
  std::string t_contract = "seq-arch", side = "a";
  trace->add_option("testcase", tc_file, "test-case file")->required();
  trace->add_option("--contract", t_contract, "seq-ct | seq-ct-b | seq-arch");
  trace->add_option("--side", side, "a | b")->check(CLI::IsMember({"a", "b"}));

  // minimize
  auto* minimize = app.add_subcommand("minimize", "drop instruction words while the leak persists");
  std::string m_out;
  minimize->add_option("testcase", tc_file, "test-case file")->required();
  minimize->add_option("--core", r_core, "inorder | spec");
  minimize->add_option("--contract", r_contract, "seq-ct | seq-ct-b | seq-arch");
  minimize->add_option("--out", m_out, "output file (default: stdout)");

  // stats
  auto* stats = app.add_subcommand("stats", "compare campaign outcomes");
  auto* compare = stats->add_subcommand("compare", "Mann-Whitney U test between two groups of runs");
  stats->require_subcommand(1);
  std::vector<std::string> group_a, group_b, positional;
  std::string metric = "cum_popcount";
  compare->add_option("--a", group_a, "campaign logs (or run directories) of group A");
  compare->add_option("--b", group_b, "campaign logs (or run directories) of group B");
  compare->add_option("logs", positional, "one log per group: A B");
  compare->add_option("--metric", metric, "cum_popcount | first_leak")
      ->check(CLI::IsMember({"cum_popcount", "first_leak"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }

  try {
    if (*fuzz) {
      fuzzer::CampaignConfig cfg;
      if (!config_file.empty()) cfg = fuzzer::campaign_from_json(fuzzer::read_json_file(config_file), cfg);
      // Without a config file every flag applies (with its default);
      // with one, only the flags given explicitly.
      auto use = [&](const char* flag) { return config_file.empty() || fuzz->count(flag) > 0; };
      auto given = [&](const char* flag) { return fuzz->count(flag) > 0; };
      if (use("--core")) cfg.core = parse_core(core_name);
      if (use("--contract")) cfg.contract = parse_contract(contract_name);
      if (use("--strategy")) cfg.strategy = mutator::strategy_from_name(strategy_name);
      if (use("--iters")) cfg.iterations = iters;
      if (use("--seed")) cfg.seed = seed;
      if (given("--out")) cfg.out_dir = out_dir;
      if (given("--data-strategy")) cfg.gen.data_strategy = mutator::data_strategy_from_name(data_strategy);
      if (given("--poll-interval")) cfg.poll_interval = poll;
      if (given("--workers")) cfg.workers = workers;
      if (m_ext) {
        cfg.gen.m_extension = true;
        cfg.core.m_extension = true;
      }
      if (cfg.out_dir.empty()) throw Error("--out is required");
      const auto report = fuzzer::fuzz(cfg);
      if (verbosity() >= 1) {
        out << "iterations: " << cfg.iterations << "\n"
            << "final popcount: " << report.final_popcount << "\n"
            << "coverage-increasing test cases: " << report.coverage_increasing << "\n"
            << "contract-distinguishable: " << report.distinguishable << "\n"
            << "timeouts: " << report.timeouts << "\n"
            << "leaks: " << report.leaks << "\n"
            << "first leak: " << (report.first_leak ? std::to_string(*report.first_leak) : "none") << "\n";
      }
      return report.leaks > 0 ? kExitLeak : kExitOk;
    }

    if (*replay) {
      const auto tc = isa::load_testcase(tc_file);
      const auto contract = parse_contract(r_contract);
      const auto core = parse_core(r_core);
      selfcomp::LockstepOptions opts;
      opts.poll_interval = r_poll;
      const auto c = fuzzer::classify(tc, contract, core, opts);
      out << "verdict: " << verdict_label(c.verdict) << "\n";
      out << "contract traces: "
          << (c.verdict == fuzzer::IterVerdict::ContractDistinguishable ? "differ" : "equal") << "\n";
      if (c.verdict != fuzzer::IterVerdict::ContractDistinguishable) {
        out << "cycles: A=" << c.outcome.cycles_a << " B=" << c.outcome.cycles_b << "\n";
        out << "coverage bits: " << c.coverage.popcount() << "\n";
      }
      return c.verdict == fuzzer::IterVerdict::Leak ? kExitLeak : kExitOk;
    }

    if (*trace) {
      const auto tc = isa::load_testcase(tc_file);
      const auto& data = side == "a" ? tc.data_a : tc.data_b;
      out << contracts::format_trace(contracts::contract_trace(parse_contract(t_contract), tc.program, data));
      return kExitOk;
    }

    if (*minimize) {
      const auto tc = isa::load_testcase(tc_file);
      const auto small = fuzzer::minimize(tc, parse_contract(r_contract), parse_core(r_core));
      if (m_out.empty()) {
        out << isa::write_testcase(small);
      } else {
        isa::save_testcase(m_out, small);
      }
      if (verbosity() >= 1) {
        err << "words: " << tc.program.words.size() << " -> " << small.program.words.size() << "\n";
      }
      return kExitOk;
    }

    if (*compare) {
      if (group_a.empty() && group_b.empty() && positional.size() == 2) {
        group_a = {positional[0]};
        group_b = {positional[1]};
      }
      if (group_a.empty() || group_b.empty()) throw Error("need two groups: --a LOGS --b LOGS, or two logs");
      auto load = [&](const std::vector<std::string>& files, const std::string& label) {
        RunSample s{label, {}};
        std::size_t censored_runs = 0;
        for (const auto& f : files) {
          bool censored = false;
          s.values.push_back(campaign_metric(f, metric, &censored));
          censored_runs += censored;
        }
        if (censored_runs > 0) {
          err << "note: " << censored_runs << " run(s) in group " << label
              << " found no leak; counted at their iteration total\n";
        }
        return s;
      };
      const RunSample a = load(group_a, "A"), b = load(group_b, "B");
      out << "metric: " << metric << "\n";
      for (const auto* s : {&a, &b}) {
        out << "group " << s->label << ": n=" << s->values.size() << " median=" << fmt_double(median(s->values))
            << " mean=" << fmt_double(mean(s->values)) << "\n";
      }
      if (a.values.size() < 2 || b.values.size() < 2) {
        out << "p-value: unavailable (n too small)\n";
        return kExitOk;
      }
      try {
        const auto mw = mann_whitney_u(a, b);
        out << "U: " << fmt_double(mw.u) << "\n"
            << "p-value (two-sided, " << (mw.exact ? "exact" : "normal approximation") << "): " << fmt_double(mw.p)
            << "\n";
      } catch (const DegenerateSample&) {
        out << "p-value: unavailable (all values identical)\n";
      }
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}

}  // namespace scfuzz::cli
