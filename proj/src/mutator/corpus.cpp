#include "scfuzz/mutator/corpus.hpp"

#include "scfuzz/common/error.hpp"

namespace scfuzz::mutator {

std::uint64_t DataStore::create(std::pair<isa::DataSection, isa::DataSection> pair) {
  if (order_.size() >= capacity_) {
    by_id_.erase(order_.back().id);
    order_.pop_back();
  }
  DataSeed seed;
  seed.id = next_id_++;
  seed.a = pair.first;
  seed.b = pair.second;
  order_.push_front(std::move(seed));
  by_id_[order_.front().id] = order_.begin();
  return order_.front().id;
}

DataSeed* DataStore::touch(std::uint64_t id) {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) return nullptr;
  order_.splice(order_.begin(), order_, it->second);
  return &order_.front();
}

const DataSeed* DataStore::find(std::uint64_t id) const {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? nullptr : &*it->second;
}

std::vector<std::uint64_t> DataStore::ids() const {
  std::vector<std::uint64_t> out;
  for (const auto& s : order_) out.push_back(s.id);
  return out;
}

bool update_data_seed_energy(DataSeed& seed, contracts::ContractVerdict verdict, DataStrategy strategy,
                             Rng& rng, std::int64_t floor) {
  if (verdict == contracts::ContractVerdict::ContractIndistinguishable) {
    ++seed.n_pass;
  } else {
    ++seed.n_fail;
  }
  if (seed.n_pass - seed.n_fail >= floor) return false;
  auto [a, b] = generate_data_pair(strategy, rng);
  seed.a = a;
  seed.b = b;
  seed.n_pass = 0;
  seed.n_fail = 0;
  ++seed.regenerations;
  return true;
}

std::string strategy_name(Strategy s) {
  switch (s) {
    case Strategy::PassFeedback: return "pass";
    case Strategy::PassFeedback100: return "pass100";
    case Strategy::NewCoverage: return "newcov";
    case Strategy::Weighted: return "weighted";
  }
  return "?";
}

Strategy strategy_from_name(const std::string& name) {
  for (auto s : {Strategy::PassFeedback, Strategy::PassFeedback100, Strategy::NewCoverage, Strategy::Weighted}) {
    if (strategy_name(s) == name) return s;
  }
  throw Error("unknown strategy '" + name + "'");
}

std::size_t corpus_capacity(Strategy s) { return s == Strategy::PassFeedback100 ? 100 : 1000; }

Corpus::Corpus(Strategy strategy) : Corpus(strategy, corpus_capacity(strategy)) {}

Corpus::Corpus(Strategy strategy, std::size_t capacity) : strategy_(strategy), capacity_(capacity) {
  if (capacity_ == 0) throw Error("corpus capacity must be positive");
}

bool Corpus::admits(std::size_t new_bits) const {
  switch (strategy_) {
    case Strategy::PassFeedback:
    case Strategy::PassFeedback100:
      return true;
    case Strategy::NewCoverage:
    case Strategy::Weighted:
      return new_bits > 0;
  }
  return false;
}

std::optional<CorpusEntry> Corpus::add(isa::Program program, coverage::RunCoverage cov) {
  std::optional<CorpusEntry> evicted;
  if (entries_.size() >= capacity_) {
    evicted = std::move(entries_.front());
    entries_.erase(entries_.begin());
    for (auto c : evicted->coverage.indices) {
      if (--counts_[c] == 0) counts_.erase(c);
    }
  }
  for (auto c : cov.indices) ++counts_[c];
  entries_.push_back({std::move(program), std::move(cov), 0.0, next_index_++});
  rescore();
  return evicted;
}

std::uint32_t Corpus::multiplicity(std::uint32_t c) const {
  auto it = counts_.find(c);
  return it == counts_.end() ? 0 : it->second;
}

void Corpus::rescore() {
  if (strategy_ != Strategy::Weighted) return;
  total_score_ = 0.0;
  for (auto& e : entries_) {
    double s = 0.0;
    for (auto c : e.coverage.indices) s += 1.0 / counts_.at(c);
    e.score = s;
    total_score_ += s;
  }
}

std::vector<double> Corpus::selection_probabilities() const {
  std::vector<double> p(entries_.size(), entries_.empty() ? 0.0 : 1.0 / entries_.size());
  if (strategy_ == Strategy::Weighted && total_score_ > 0.0) {
    for (std::size_t i = 0; i < entries_.size(); ++i) p[i] = entries_[i].score / total_score_;
  }
  return p;
}

std::size_t Corpus::select(Rng& rng) const {
  if (entries_.empty()) throw EmptyCorpus("cannot select from an empty corpus");
  if (strategy_ != Strategy::Weighted || total_score_ <= 0.0) return rng.below(entries_.size());
  const double target = rng.unit() * total_score_;
  double acc = 0.0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    acc += entries_[i].score;
    if (target < acc) return i;
  }
  // Rounding left target at the very top; take the last scored entry.
  for (std::size_t i = entries_.size(); i-- > 0;) {
    if (entries_[i].score > 0.0) return i;
  }
  return entries_.size() - 1;
}

std::string origin_name(Origin o) {
  switch (o) {
    case Origin::Fresh: return "fresh";
    case Origin::Mutate: return "mutate";
    case Origin::Merge: return "merge";
  }
  return "?";
}

MutatorState::MutatorState(const GenConfig& cfg, Strategy strategy, std::uint64_t seed)
    : cfg_(cfg), rng_(seed), corpus_(strategy), store_(cfg.data_store_capacity) {
  validate(cfg_);
}

const DataSeed& MutatorState::seed_for(isa::Program& program) {
  if (DataSeed* s = store_.touch(program.seed_id)) return *s;
  // The program's seed was evicted (or never existed): pair it with a new one.
  program.seed_id = store_.create(generate_data_pair(cfg_.data_strategy, rng_));
  return *store_.find(program.seed_id);
}

NextCase MutatorState::next_testcase() {
  NextCase out;
  const bool warming = corpus_.size() < corpus_.capacity() / 10;
  const double u = warming ? 0.0 : rng_.unit();
  isa::Program program;
  if (warming || u < cfg_.fresh_prob) {
    out.origin = Origin::Fresh;
    ++counters_.fresh;
    program = generate_program(cfg_, rng_, gen_stats_);
    program.seed_id = store_.create(generate_data_pair(cfg_.data_strategy, rng_));
  } else if (u < cfg_.fresh_prob + cfg_.mutate_prob) {
    out.origin = Origin::Mutate;
    ++counters_.mutated;
    program = mutate(corpus_[corpus_.select(rng_)].program, cfg_, rng_, gen_stats_);
  } else {
    out.origin = Origin::Merge;
    ++counters_.merged;
    const std::size_t i1 = corpus_.select(rng_);
    const std::size_t i2 = corpus_.select(rng_);
    program = merge(corpus_[i1].program, corpus_[i2].program, cfg_, rng_, gen_stats_);
  }
  const DataSeed& seed = seed_for(program);
  out.data_seed = seed.id;
  out.tc = {std::move(program), seed.a, seed.b};
  return out;
}

bool MutatorState::update_energy(std::uint64_t data_seed, contracts::ContractVerdict verdict) {
  DataSeed* s = store_.touch(data_seed);
  if (s == nullptr) return false;
  const bool regen = update_data_seed_energy(*s, verdict, cfg_.data_strategy, rng_, cfg_.energy_floor);
  if (regen) ++counters_.regenerations;
  return regen;
}

}  // namespace scfuzz::mutator
