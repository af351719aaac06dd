#include "scfuzz/fuzzer/campaign.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <thread>

#include <json.hpp>

#include "scfuzz/common/error.hpp"
#include "scfuzz/fuzzer/config_io.hpp"
#include "scfuzz/isa/testcase_io.hpp"

namespace scfuzz::fuzzer {

using nlohmann::json;
namespace fs = std::filesystem;

void validate(const CampaignConfig& cfg) {
  if (cfg.iterations == 0) throw Error("iterations must be positive");
  if (cfg.poll_interval == 0) throw Error("poll interval must be positive");
  if (cfg.max_cycles == 0 || cfg.max_steps == 0) throw Error("cycle and step budgets must be positive");
  if (cfg.workers == 0 || cfg.workers > 256) throw Error("workers must be in [1, 256]");
  if (cfg.batch_size == 0) throw Error("batch size must be positive");
  uarch::validate(cfg.core);
  mutator::validate(cfg.gen);
  if (cfg.gen.m_extension && !cfg.core.m_extension) {
    throw Error("generator emits M instructions but the core lacks the M extension");
  }
}

std::string iter_verdict_name(IterVerdict v) {
  switch (v) {
    case IterVerdict::ContractDistinguishable: return "distinguishable";
    case IterVerdict::Pass: return "pass";
    case IterVerdict::Leak: return "leak";
    case IterVerdict::Timeout: return "timeout";
  }
  return "?";
}

std::optional<IterVerdict> iter_verdict_from_name(const std::string& name) {
  for (auto v : {IterVerdict::ContractDistinguishable, IterVerdict::Pass, IterVerdict::Leak, IterVerdict::Timeout}) {
    if (iter_verdict_name(v) == name) return v;
  }
  return std::nullopt;
}

std::string format_record(const IterationRecord& r) {
  json j = {{"iter", r.iter},
            {"verdict", iter_verdict_name(r.verdict)},
            {"new_bits", r.new_bits},
            {"cum_popcount", r.cum_popcount},
            {"corpus_size", r.corpus_size},
            {"artifact", r.artifact.empty() ? json(nullptr) : json(r.artifact)}};
  return j.dump();
}

IterationRecord parse_record(const std::string& line) {
  try {
    const json j = json::parse(line);
    IterationRecord r;
    r.iter = j.at("iter").get<std::uint64_t>();
    const auto v = iter_verdict_from_name(j.at("verdict").get<std::string>());
    if (!v) throw ParseError("unknown verdict", 0);
    r.verdict = *v;
    r.new_bits = j.at("new_bits").get<std::uint64_t>();
    r.cum_popcount = j.at("cum_popcount").get<std::uint64_t>();
    r.corpus_size = j.at("corpus_size").get<std::uint64_t>();
    if (!j.at("artifact").is_null()) r.artifact = j.at("artifact").get<std::string>();
    return r;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad campaign record: ") + e.what(), 0);
  }
}

namespace {

IterVerdict from_lockstep(selfcomp::Verdict v) {
  switch (v) {
    case selfcomp::Verdict::Pass: return IterVerdict::Pass;
    case selfcomp::Verdict::Leak: return IterVerdict::Leak;
    case selfcomp::Verdict::Timeout: return IterVerdict::Timeout;
  }
  return IterVerdict::Timeout;
}

Classification simulate(const isa::TestCase& tc, const uarch::CoreConfig& core, const selfcomp::LockstepOptions& opts) {
  Classification c;
  coverage::ScdAccumulator acc;
  c.outcome = selfcomp::lockstep_run(core, tc, opts, [&acc](const selfcomp::DeviationVector& dv) { acc(dv); });
  c.verdict = from_lockstep(c.outcome.verdict);
  c.coverage = acc.finish();
  return c;
}

// Runs job(k) for k in [0, n) on up to `workers` threads.
template <typename Job>
void run_parallel(std::size_t n, unsigned workers, const Job& job) {
  const std::size_t threads = std::min<std::size_t>(workers, n);
  if (threads <= 1) {
    for (std::size_t k = 0; k < n; ++k) job(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto body = [&] {
    for (std::size_t k; (k = next.fetch_add(1)) < n;) {
      if (failed.load()) return;
      try {
        job(k);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

std::string kind_name(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::Leak: return "leak";
    case ArtifactKind::Mismatch: return "mismatch";
    case ArtifactKind::Corpus: return "corpus";
  }
  return "?";
}

std::string kind_dir(ArtifactKind k) {
  switch (k) {
    case ArtifactKind::Leak: return "leaks";
    case ArtifactKind::Mismatch: return "mismatches";
    case ArtifactKind::Corpus: return "corpus";
  }
  return "?";
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

struct Pending {
  std::uint64_t iter = 0;
  mutator::NextCase next;
  bool simulate = false;
  std::string artifact;  // mismatch file, written in the first phase
  Classification result;
};

}  // namespace

Classification classify(const isa::TestCase& tc, contracts::ContractId contract, const uarch::CoreConfig& core,
                        const selfcomp::LockstepOptions& opts, std::uint64_t max_steps) {
  if (contracts::distinguishable(contract, tc, max_steps, opts.layout) ==
      contracts::ContractVerdict::ContractDistinguishable) {
    return {};
  }
  return simulate(tc, core, opts);
}

std::string persist_artifact(const fs::path& dir, const ArtifactInfo& info, const isa::TestCase& tc) {
  char stem[64];
  std::snprintf(stem, sizeof stem, "%s_%06llu", kind_name(info.kind).c_str(),
                static_cast<unsigned long long>(info.iteration));
  const fs::path rel = fs::path(kind_dir(info.kind)) / (std::string(stem) + ".tc");
  fs::create_directories(dir / kind_dir(info.kind));
  isa::save_testcase(dir / rel, tc);

  json side = {{"kind", kind_name(info.kind)},
               {"iteration", info.iteration},
               {"verdict", iter_verdict_name(info.verdict)},
               {"contract", std::string(contracts::contract_name(info.contract))},
               {"core", core_to_json(info.core)}};
  if (info.outcome) {
    const auto& o = *info.outcome;
    side["cycles_a"] = o.cycles_a;
    side["cycles_b"] = o.cycles_b;
    side["terminated_a"] = o.terminated_a;
    side["terminated_b"] = o.terminated_b;
    side["attacker_obs_a"] = o.attacker_obs_a;
    side["attacker_obs_b"] = o.attacker_obs_b;
  }
  if (info.coverage != nullptr) side["coverage"] = info.coverage->indices;
  write_text(dir / fs::path(kind_dir(info.kind)) / (std::string(stem) + ".json"), side.dump(2) + "\n");
  return rel.generic_string();
}

coverage::RunCoverage load_corpus_coverage(const fs::path& sidecar) {
  const json j = read_json_file(sidecar);
  if (!j.contains("coverage")) throw Error(sidecar.string() + ": no coverage field");
  coverage::RunCoverage cov;
  cov.indices = j.at("coverage").get<std::vector<std::uint32_t>>();
  return cov;
}

CampaignReport fuzz(const CampaignConfig& cfg) {
  validate(cfg);
  const bool writing = !cfg.out_dir.empty();
  std::ofstream log;
  if (writing) {
    fs::create_directories(cfg.out_dir);
    write_text(cfg.out_dir / "config.json", campaign_to_json(cfg).dump(2) + "\n");
    log.open(cfg.out_dir / "campaign.jsonl", std::ios::binary | std::ios::trunc);
    if (!log) throw Error("cannot write " + (cfg.out_dir / "campaign.jsonl").string());
  }

  selfcomp::LockstepOptions opts;
  opts.max_cycles = cfg.max_cycles;
  opts.poll_interval = cfg.poll_interval;

  mutator::MutatorState mut(cfg.gen, cfg.strategy, cfg.seed);
  coverage::CoverageMap cum;
  std::uint64_t cum_pop = 0;
  CampaignReport report;
  report.records.reserve(cfg.iterations);
  std::map<std::uint64_t, std::string> corpus_files;  // insertion index -> artifact

  auto info_for = [&](ArtifactKind kind, std::uint64_t iter, IterVerdict v) {
    ArtifactInfo info;
    info.kind = kind;
    info.iteration = iter;
    info.contract = cfg.contract;
    info.core = cfg.core;
    info.verdict = v;
    return info;
  };

  auto emit = [&](IterationRecord rec) {
    if (writing) {
      log << format_record(rec) << '\n';
      if (cfg.snapshot_every != 0 && (rec.iter + 1) % cfg.snapshot_every == 0) {
        fs::create_directories(cfg.out_dir / "snapshots");
        char name[64];
        std::snprintf(name, sizeof name, "cov_%06llu.scdcov", static_cast<unsigned long long>(rec.iter + 1));
        coverage::save_scdcov(cum, cfg.out_dir / "snapshots" / name);
      }
    }
    report.records.push_back(std::move(rec));
  };

  // Applies a window of iterations strictly in iteration order, after the
  // simulations of its indistinguishable members have run.
  auto apply = [&](std::vector<Pending>& window) {
    std::vector<std::size_t> sims;
    for (std::size_t k = 0; k < window.size(); ++k) {
      if (window[k].simulate) sims.push_back(k);
    }
    run_parallel(sims.size(), cfg.workers, [&](std::size_t k) {
      Pending& p = window[sims[k]];
      p.result = simulate(p.next.tc, cfg.core, opts);
    });

    for (Pending& p : window) {
      IterationRecord rec;
      rec.iter = p.iter;
      if (!p.simulate) {
        rec.verdict = IterVerdict::ContractDistinguishable;
        rec.artifact = p.artifact;
        ++report.distinguishable;
      } else {
        const Classification& c = p.result;
        rec.verdict = c.verdict;
        if (c.verdict == IterVerdict::Leak) {
          ++report.leaks;
          if (!report.first_leak) report.first_leak = p.iter;
          if (writing) {
            auto info = info_for(ArtifactKind::Leak, p.iter, c.verdict);
            info.outcome = c.outcome;
            rec.artifact = persist_artifact(cfg.out_dir, info, p.next.tc);
          }
        }
        if (c.verdict == IterVerdict::Timeout) {
          ++report.timeouts;
        } else {
          const std::size_t fresh = coverage::new_indices(cum, c.coverage).size();
          rec.new_bits = fresh;
          if (fresh > 0) {
            coverage::merge_into(cum, c.coverage);
            cum_pop += fresh;
            ++report.coverage_increasing;
          }
          if (mut.corpus().admits(fresh)) {
            mut.corpus().add(p.next.tc.program, c.coverage);
            const std::uint64_t index = mut.corpus().entries().back().insertion_index;
            if (writing && cfg.save_corpus) {
              auto info = info_for(ArtifactKind::Corpus, p.iter, c.verdict);
              info.outcome = c.outcome;
              info.coverage = &c.coverage;
              const std::string path = persist_artifact(cfg.out_dir, info, p.next.tc);
              corpus_files[index] = path;
              if (rec.artifact.empty()) rec.artifact = path;
            }
          }
        }
      }
      rec.cum_popcount = cum_pop;
      rec.corpus_size = mut.corpus().size();
      emit(std::move(rec));
    }
    window.clear();
  };

  std::vector<Pending> window;
  std::size_t queued = 0;
  for (std::uint64_t i = 0; i < cfg.iterations; ++i) {
    Pending p;
    p.iter = i;
    p.next = mut.next_testcase();
    const auto cv = contracts::distinguishable(cfg.contract, p.next.tc, cfg.max_steps);
    mut.update_energy(p.next.data_seed, cv);
    if (cv == contracts::ContractVerdict::ContractDistinguishable) {
      if (writing && cfg.save_mismatches) {
        p.artifact = persist_artifact(cfg.out_dir, info_for(ArtifactKind::Mismatch, i, IterVerdict::ContractDistinguishable),
                                      p.next.tc);
      }
    } else {
      p.simulate = true;
      ++queued;
    }
    window.push_back(std::move(p));
    if (queued == cfg.batch_size) {
      apply(window);
      queued = 0;
    }
  }
  apply(window);

  report.final_popcount = cum_pop;
  report.mutator_counters = mut.counters();
  report.gen_stats = mut.gen_stats();

  if (writing) {
    log.close();
    if (!log) throw Error("cannot write " + (cfg.out_dir / "campaign.jsonl").string());
    coverage::save_scdcov(cum, cfg.out_dir / "coverage.scdcov");
    if (cfg.save_corpus) {
      json manifest = json::array();
      for (const auto& e : mut.corpus().entries()) {
        const auto it = corpus_files.find(e.insertion_index);
        manifest.push_back({{"insertion_index", e.insertion_index},
                            {"file", it == corpus_files.end() ? json(nullptr) : json(it->second)},
                            {"popcount", e.coverage.popcount()}});
      }
      fs::create_directories(cfg.out_dir / "corpus");
      write_text(cfg.out_dir / "corpus" / "manifest.json", manifest.dump(2) + "\n");
    }
    json summary = {{"iterations", cfg.iterations},
                    {"first_leak", report.first_leak ? json(*report.first_leak) : json(nullptr)},
                    {"leaks", report.leaks},
                    {"timeouts", report.timeouts},
                    {"distinguishable", report.distinguishable},
                    {"final_popcount", report.final_popcount},
                    {"coverage_increasing", report.coverage_increasing},
                    {"corpus_size", mut.corpus().size()},
                    {"fresh", report.mutator_counters.fresh},
                    {"mutated", report.mutator_counters.mutated},
                    {"merged", report.mutator_counters.merged},
                    {"regenerations", report.mutator_counters.regenerations}};
    write_text(cfg.out_dir / "summary.json", summary.dump(2) + "\n");
  }
  return report;
}

isa::TestCase minimize(const isa::TestCase& tc, contracts::ContractId contract, const uarch::CoreConfig& core,
                       const selfcomp::LockstepOptions& opts) {
  auto leaks = [&](const isa::TestCase& t) {
    try {
      return classify(t, contract, core, opts).verdict == IterVerdict::Leak;
    } catch (const Error&) {
      return false;
    }
  };
  if (!leaks(tc)) throw NotALeak("test case does not leak under the given contract and core");
  isa::TestCase best = tc;
  for (bool changed = true; changed;) {
    changed = false;
    for (std::size_t i = 0; i < best.program.words.size();) {
      isa::TestCase candidate = best;
      candidate.program = isa::erase_word(best.program, i);
      if (leaks(candidate)) {
        best = std::move(candidate);
        changed = true;
      } else {
        ++i;
      }
    }
  }
  return best;
}

}  // namespace scfuzz::fuzzer
