#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "scfuzz/cli/commands.hpp"
#include "scfuzz/common/error.hpp"
#include "scfuzz/common/rng.hpp"

using namespace scfuzz;
using namespace scfuzz::cli;
namespace fs = std::filesystem;

namespace {

struct Result {
  int status;
  std::string out, err;
};

Result scfuzz_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "scfuzz");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int status = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {status, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("scfuzz_test_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::string kWitness = SCFUZZ_FIXTURE_DIR "/spectre_witness.tc";

}  // namespace

// Reference values from tests/oracles/mannwhitney_oracle.py.
TEST_CASE("Mann-Whitney U against the reference") {
  struct Case {
    std::vector<double> a, b;
    double u, p;
    bool exact;
  };
  const std::vector<Case> cases = {
      {{1, 2, 3, 4, 5}, {6, 7, 8, 9, 10}, 0, 0.007936507936507936, true},
      {{1, 2, 3}, {1, 2, 3}, 4.5, 1.0, true},
      {{1, 2, 2, 3, 5}, {2, 4, 4, 6, 7}, 5, 0.14285714285714285, true},
      {{3.5, 8, 1, 9}, {2, 4, 5, 6, 7, 10, 11}, 11, 0.6484848484848484, true},
      {{3, 5, 5, 7, 8, 8, 8, 10, 12, 12, 13, 15, 17, 17, 20},
       {1, 2, 2, 4, 5, 6, 8, 9, 9, 10, 11, 11, 14, 16},
       138,
       0.15504863926334322,
       false},
      {{0, 2, 4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30, 32, 34, 36, 38},
       {39, 37, 35, 33, 31, 29, 27, 25, 23, 21, 19, 17, 15, 13, 11, 9, 7, 5, 3, 1},
       190,
       0.7971974192691748,
       false},
  };
  for (const auto& c : cases) {
    const auto r = mann_whitney_u({"a", c.a}, {"b", c.b});
    CHECK(r.u == doctest::Approx(c.u));
    CHECK(r.p == doctest::Approx(c.p).epsilon(1e-9));
    CHECK(r.exact == c.exact);
  }
}

TEST_CASE("Mann-Whitney U is symmetric") {
  Rng rng(21);
  for (int t = 0; t < 200; ++t) {
    RunSample a{"a", {}}, b{"b", {}};
    const auto na = 1 + rng.below(15), nb = 1 + rng.below(15);
    for (std::size_t i = 0; i < na; ++i) a.values.push_back(static_cast<double>(rng.below(10)));
    for (std::size_t i = 0; i < nb; ++i) b.values.push_back(static_cast<double>(rng.below(10)));
    MannWhitney ab, ba;
    try {
      ab = mann_whitney_u(a, b);
    } catch (const DegenerateSample&) {
      CHECK_THROWS_AS(mann_whitney_u(b, a), DegenerateSample);
      continue;
    }
    ba = mann_whitney_u(b, a);
    CHECK(ab.u + ba.u == doctest::Approx(static_cast<double>(na * nb)));
    CHECK(ab.p == doctest::Approx(ba.p));
    CHECK(ab.p <= 1.0);
    CHECK(ab.p > 0.0);
  }
}

TEST_CASE("Mann-Whitney U input errors") {
  CHECK_THROWS_AS(mann_whitney_u({"a", {}}, {"b", {1}}), Error);
  CHECK_THROWS_AS(mann_whitney_u({"a", {1, 1}}, {"b", {1, 1, 1}}), DegenerateSample);
  CHECK_THROWS_AS(mann_whitney_u({"a", {1, std::nan("")}}, {"b", {2}}), Error);
  CHECK(median({3, 1, 2}) == 2);
  CHECK(median({4, 1, 2, 3}) == 2.5);
  CHECK(mean({1, 2, 6}) == 3);
}

TEST_CASE("fuzz command") {
  const auto dir = scratch("fuzz");
  const auto r = scfuzz_cli({"fuzz", "--core", "spec", "--contract", "seq-arch", "--strategy", "weighted", "--iters", "120",
                      "--seed", "7", "--out", dir.string()});
  CHECK((r.status == kExitOk || r.status == kExitLeak));
  CHECK((r.status == kExitLeak) == (r.out.find("leaks: 0") == std::string::npos));
  CHECK(r.out.find("final popcount:") != std::string::npos);
  std::ifstream log(dir / "campaign.jsonl");
  std::size_t lines = 0;
  for (std::string l; std::getline(log, l);) ++lines;
  CHECK(lines == 120);

  const auto again = scratch("fuzz_again");
  scfuzz_cli({"fuzz", "--core", "spec", "--contract", "seq-arch", "--strategy", "weighted", "--iters", "120", "--seed", "7",
       "--out", again.string()});
  CHECK(slurp(dir / "campaign.jsonl") == slurp(again / "campaign.jsonl"));

  // A config file, with a flag overriding one of its fields.
  const auto cfg_dir = scratch("fuzz_cfg");
  fs::create_directories(cfg_dir);
  std::ofstream(cfg_dir / "c.json") << R"({"iterations": 30, "strategy": "pass", "core": {"kind": "inorder"}})";
  const auto rc = scfuzz_cli({"fuzz", "--config", (cfg_dir / "c.json").string(), "--iters", "12", "--out",
                       (cfg_dir / "run").string()});
  CHECK(rc.status == kExitOk);
  const auto used = slurp(cfg_dir / "run" / "config.json");
  CHECK(used.find("\"iterations\": 12") != std::string::npos);
  CHECK(used.find("\"strategy\": \"pass\"") != std::string::npos);
  CHECK(used.find("\"kind\": \"inorder\"") != std::string::npos);

  CHECK(scfuzz_cli({"fuzz", "--strategy", "bogus", "--out", dir.string()}).status == kExitError);
  CHECK(scfuzz_cli({"fuzz", "--core", "ooo", "--out", dir.string()}).status == kExitError);
  CHECK(scfuzz_cli({"fuzz", "--iters", "5"}).status == kExitError);  // no --out
  CHECK(scfuzz_cli({"fuzz", "--nope"}).status == kExitError);
  CHECK(scfuzz_cli({}).status == kExitError);
  for (const auto& d : {dir, again, cfg_dir}) fs::remove_all(d);
}

TEST_CASE("replay and trace") {
  auto r = scfuzz_cli({"replay", kWitness});
  CHECK(r.status == kExitLeak);
  CHECK(r.out.find("verdict: Leak") != std::string::npos);
  CHECK(r.out.find("contract traces: equal") != std::string::npos);
  r = scfuzz_cli({"replay", kWitness, "--core", "inorder"});
  CHECK(r.status == kExitOk);
  CHECK(r.out.find("verdict: Pass") != std::string::npos);
  // The secret word is loaded architecturally, so seq-ct still sees equal
  // traces; only its value differs.
  r = scfuzz_cli({"replay", kWitness, "--contract", "seq-ct"});
  CHECK(r.out.find("contract traces: equal") != std::string::npos);

  const auto a = scfuzz_cli({"trace", kWitness, "--side", "a"});
  const auto b = scfuzz_cli({"trace", kWitness, "--side", "b"});
  CHECK(a.status == kExitOk);
  CHECK(a.out == b.out);
  CHECK(a.out == scfuzz_cli({"trace", kWitness, "--side", "a"}).out);
  CHECK(scfuzz_cli({"trace", kWitness, "--side", "c"}).status == kExitError);
  CHECK(scfuzz_cli({"replay", "/nonexistent.tc"}).status == kExitError);

  const auto dir = scratch("minimize");
  fs::create_directories(dir);
  r = scfuzz_cli({"minimize", kWitness, "--out", (dir / "min.tc").string()});
  CHECK(r.status == kExitOk);
  CHECK(scfuzz_cli({"replay", (dir / "min.tc").string()}).status == kExitLeak);
  fs::remove_all(dir);
}

TEST_CASE("stats compare") {
  const auto dir = scratch("stats");
  fs::create_directories(dir);
  auto write_log = [&](const std::string& name, std::uint64_t pop, bool leak) {
    std::ofstream f(dir / name);
    for (int i = 0; i < 4; ++i) {
      const bool l = leak && i == 2;
      f << R"({"iter":)" << i << R"(,"verdict":")" << (l ? "leak" : "pass") << R"(","new_bits":0,"cum_popcount":)"
        << (i == 3 ? pop : 0) << R"(,"corpus_size":0,"artifact":""})" << "\n";
    }
  };
  std::vector<std::string> a_logs, b_logs;
  for (int i = 0; i < 5; ++i) {
    write_log("a" + std::to_string(i), 100 + i, true);
    write_log("b" + std::to_string(i), 10 + i, false);
    a_logs.push_back((dir / ("a" + std::to_string(i))).string());
    b_logs.push_back((dir / ("b" + std::to_string(i))).string());
  }
  std::vector<std::string> args = {"stats", "compare", "--a"};
  args.insert(args.end(), a_logs.begin(), a_logs.end());
  args.push_back("--b");
  args.insert(args.end(), b_logs.begin(), b_logs.end());
  auto r = scfuzz_cli(args);
  CHECK(r.status == kExitOk);
  CHECK(r.out.find("group A: n=5 median=102") != std::string::npos);
  CHECK(r.out.find("p-value (two-sided, exact): 0.00793651") != std::string::npos);

  args.push_back("--metric");
  args.push_back("first_leak");
  r = scfuzz_cli(args);
  CHECK(r.status == kExitOk);
  CHECK(r.out.find("group A: n=5 median=2") != std::string::npos);
  CHECK(r.err.find("5 run(s) in group B found no leak") != std::string::npos);

  r = scfuzz_cli({"stats", "compare", a_logs[0], b_logs[0]});
  CHECK(r.status == kExitOk);
  CHECK(r.out.find("unavailable (n too small)") != std::string::npos);

  std::ofstream(dir / "bad") << R"({"iter":0,"verdict":"pass","new_bits":0,"cum_popcount":0,"corpus_size":0,"artifact":""})"
                             << "\nnot json\n";
  r = scfuzz_cli({"stats", "compare", (dir / "bad").string(), b_logs[0]});
  CHECK(r.status == kExitError);
  CHECK(r.err.find("line 2") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("installed binary exit codes") {
  auto status = [](const std::string& args) {
    const int raw = std::system((std::string(SCFUZZ_CLI_PATH) + " " + args + " >/dev/null 2>&1").c_str());
    return WEXITSTATUS(raw);
  };
  CHECK(status("replay " + kWitness) == kExitLeak);
  CHECK(status("replay " + kWitness + " --core inorder") == kExitOk);
  CHECK(status("fuzz --strategy nope --out /tmp/x") == kExitError);
  CHECK(status("--help") == kExitOk);
}
