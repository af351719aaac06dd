#include "scfuzz/fuzzer/config_io.hpp"

#include <fstream>
#include <functional>
#include <map>

#include "scfuzz/common/error.hpp"

namespace scfuzz::fuzzer {

using nlohmann::json;

namespace {

using Setter = std::function<void(const json&)>;

void apply(const json& j, const std::map<std::string, Setter>& setters, const char* what) {
  if (!j.is_object()) throw Error(std::string(what) + " config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto s = setters.find(it.key());
    if (s == setters.end()) throw Error("unknown " + std::string(what) + " config key '" + it.key() + "'");
    try {
      s->second(it.value());
    } catch (const json::exception& e) {
      throw Error("bad value for " + std::string(what) + " key '" + it.key() + "': " + e.what());
    }
  }
}

template <typename T>
Setter set(T& field) {
  return [&field](const json& v) { field = v.get<T>(); };
}

}  // namespace

json core_to_json(const uarch::CoreConfig& c) {
  return {
      {"kind", std::string(uarch::core_kind_name(c.kind))},
      {"cache",
       {{"sets", c.cache.sets},
        {"ways", c.cache.ways},
        {"line_bytes", c.cache.line_bytes},
        {"hit_latency", c.cache.hit_latency},
        {"miss_latency", c.cache.miss_latency}}},
      {"predictor", {{"bimodal_entries", c.predictor.bimodal_entries}, {"btb_entries", c.predictor.btb_entries}}},
      {"flush_penalty", c.flush_penalty},
      {"spec_window", c.spec_window},
      {"fetch_width", c.fetch_width},
      {"issue_width", c.issue_width},
      {"branch_latency", c.branch_latency},
      {"refill_cycles", c.refill_cycles},
      {"speculative_loads", c.speculative_loads},
      {"mul_div_latency", c.mul_div_latency},
      {"mul_div_variable_latency", c.mul_div_variable_latency},
      {"m_extension", c.m_extension},
  };
}

uarch::CoreConfig core_from_json(const json& j) {
  if (!j.is_object()) throw Error("core config must be a JSON object");
  uarch::CoreConfig c;
  if (j.contains("kind")) {
    const auto kind = j.at("kind").is_string() ? uarch::core_kind_from_name(j.at("kind").get<std::string>())
                                               : std::nullopt;
    if (!kind) throw Error("core kind must be \"inorder\" or \"spec\"");
    c = uarch::CoreConfig::defaults(*kind);
  }
  apply(j,
        {
            {"kind", [](const json&) {}},
            {"cache",
             [&c](const json& v) {
               apply(v,
                     {{"sets", set(c.cache.sets)},
                      {"ways", set(c.cache.ways)},
                      {"line_bytes", set(c.cache.line_bytes)},
                      {"hit_latency", set(c.cache.hit_latency)},
                      {"miss_latency", set(c.cache.miss_latency)}},
                     "cache");
             }},
            {"predictor",
             [&c](const json& v) {
               apply(v,
                     {{"bimodal_entries", set(c.predictor.bimodal_entries)},
                      {"btb_entries", set(c.predictor.btb_entries)}},
                     "predictor");
             }},
            {"flush_penalty", set(c.flush_penalty)},
            {"spec_window", set(c.spec_window)},
            {"fetch_width", set(c.fetch_width)},
            {"issue_width", set(c.issue_width)},
            {"branch_latency", set(c.branch_latency)},
            {"refill_cycles", set(c.refill_cycles)},
            {"speculative_loads", set(c.speculative_loads)},
            {"mul_div_latency", set(c.mul_div_latency)},
            {"mul_div_variable_latency", set(c.mul_div_variable_latency)},
            {"m_extension", set(c.m_extension)},
        },
        "core");
  uarch::validate(c);
  return c;
}

json gen_to_json(const mutator::GenConfig& g) {
  return {
      {"m_extension", g.m_extension},
      {"min_words", g.min_words},
      {"max_words", g.max_words},
      {"reuse_prob", g.reuse_prob},
      {"fresh_prob", g.fresh_prob},
      {"mutate_prob", g.mutate_prob},
      {"merge_prob", g.merge_prob},
      {"retain_prob", g.retain_prob},
      {"delete_prob", g.delete_prob},
      {"insert_prob", g.insert_prob},
      {"data_strategy", mutator::data_strategy_name(g.data_strategy)},
      {"data_store_capacity", g.data_store_capacity},
      {"energy_floor", g.energy_floor},
  };
}

mutator::GenConfig gen_from_json(const json& j, mutator::GenConfig g) {
  apply(j,
        {
            {"m_extension", set(g.m_extension)},
            {"min_words", set(g.min_words)},
            {"max_words", set(g.max_words)},
            {"reuse_prob", set(g.reuse_prob)},
            {"fresh_prob", set(g.fresh_prob)},
            {"mutate_prob", set(g.mutate_prob)},
            {"merge_prob", set(g.merge_prob)},
            {"retain_prob", set(g.retain_prob)},
            {"delete_prob", set(g.delete_prob)},
            {"insert_prob", set(g.insert_prob)},
            {"data_strategy",
             [&g](const json& v) { g.data_strategy = mutator::data_strategy_from_name(v.get<std::string>()); }},
            {"data_store_capacity", set(g.data_store_capacity)},
            {"energy_floor", set(g.energy_floor)},
        },
        "generator");
  mutator::validate(g);
  return g;
}

json campaign_to_json(const CampaignConfig& c) {
  return {
      {"iterations", c.iterations},
      {"strategy", mutator::strategy_name(c.strategy)},
      {"contract", std::string(contracts::contract_name(c.contract))},
      {"core", core_to_json(c.core)},
      {"gen", gen_to_json(c.gen)},
      {"poll_interval", c.poll_interval},
      {"max_cycles", c.max_cycles},
      {"max_steps", c.max_steps},
      {"workers", c.workers},
      {"batch_size", c.batch_size},
      {"out_dir", c.out_dir.string()},
      {"seed", c.seed},
      {"snapshot_every", c.snapshot_every},
      {"save_mismatches", c.save_mismatches},
      {"save_corpus", c.save_corpus},
  };
}

CampaignConfig campaign_from_json(const json& j, CampaignConfig c) {
  apply(j,
        {
            {"iterations", set(c.iterations)},
            {"strategy", [&c](const json& v) { c.strategy = mutator::strategy_from_name(v.get<std::string>()); }},
            {"contract",
             [&c](const json& v) {
               const auto id = contracts::contract_from_name(v.get<std::string>());
               if (!id) throw Error("unknown contract '" + v.get<std::string>() + "'");
               c.contract = *id;
             }},
            {"core", [&c](const json& v) { c.core = core_from_json(v); }},
            {"gen", [&c](const json& v) { c.gen = gen_from_json(v, c.gen); }},
            {"poll_interval", set(c.poll_interval)},
            {"max_cycles", set(c.max_cycles)},
            {"max_steps", set(c.max_steps)},
            {"workers", set(c.workers)},
            {"batch_size", set(c.batch_size)},
            {"out_dir", [&c](const json& v) { c.out_dir = v.get<std::string>(); }},
            {"seed", set(c.seed)},
            {"snapshot_every", set(c.snapshot_every)},
            {"save_mismatches", set(c.save_mismatches)},
            {"save_corpus", set(c.save_corpus)},
        },
        "campaign");
  return c;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

}  // namespace scfuzz::fuzzer
