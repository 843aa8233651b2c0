#include "relembed/selection.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "relembed/error.hpp"

namespace relembed {

std::string_view to_string(StrategyId id) {
  switch (id) {
    case StrategyId::kRandom: return "random";
    case StrategyId::kLength: return "length";
    case StrategyId::kMI: return "mi";
    case StrategyId::kKVar: return "kvar";
    case StrategyId::kOneEpoch: return "1epoch";
    case StrategyId::kSampling: return "sampling";
    case StrategyId::kOnline: return "online";
  }
  return "?";
}

StrategyId parse_strategy(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "random") return StrategyId::kRandom;
  if (s == "length") return StrategyId::kLength;
  if (s == "mi") return StrategyId::kMI;
  if (s == "kvar") return StrategyId::kKVar;
  if (s == "1epoch" || s == "one-epoch" || s == "oneepoch") return StrategyId::kOneEpoch;
  if (s == "sampling") return StrategyId::kSampling;
  if (s == "online") return StrategyId::kOnline;
  throw SchemaError("unknown strategy '" + std::string(text) + "'");
}

std::size_t kept_count(double ratio, std::size_t n) {
  if (!(ratio > 0.0) || ratio > 1.0) throw SchemaError("selection ratio must lie in (0, 1]");
  auto keep = static_cast<std::size_t>(std::ceil(ratio * static_cast<double>(n) - 1e-9));
  return std::clamp<std::size_t>(keep, n == 0 ? 0 : 1, n);
}

namespace {

RelationId common_start(const std::vector<TargetedWalkScheme>& schemes) {
  if (schemes.empty()) throw SchemaError("no schemes");
  const RelationId start = schemes.front().scheme.start;
  for (const auto& tws : schemes) {
    if (tws.scheme.start != start) throw SchemaError("schemes start at different relations");
  }
  return start;
}

/// Gives every unassessed score one less than the lowest assessed score.
void apply_floor(std::vector<SchemeScore>& scores, const std::vector<bool>& assessed) {
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (assessed[i]) lowest = std::min(lowest, scores[i].score);
  }
  if (!std::isfinite(lowest)) lowest = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!assessed[i]) scores[i].score = lowest - 1.0;
  }
}

double unbiased_variance(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(xs.size() - 1);
}

}  // namespace

std::vector<SchemeScore> score_random(std::size_t n_schemes, std::uint64_t seed) {
  Rng rng = make_rng(seed, "score-random");
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<SchemeScore> out;
  for (std::size_t i = 0; i < n_schemes; ++i) out.push_back({i, unif(rng), StrategyId::kRandom, {}});
  return out;
}

std::vector<SchemeScore> score_length(const std::vector<TargetedWalkScheme>& schemes) {
  std::vector<SchemeScore> out;
  for (std::size_t i = 0; i < schemes.size(); ++i) {
    const auto len = schemes[i].scheme.length();
    out.push_back({i, len == 0 ? 2.0 : 1.0 / static_cast<double>(len), StrategyId::kLength,
                   len == 0 ? "length 0 ranked first" : ""});
  }
  return out;
}

std::vector<double> step_mutual_information(const Database& db, const WalkScheme& scheme, std::size_t walk_budget,
                                            Rng& rng, std::size_t retry_cap) {
  if (walk_budget == 0) throw SchemaError("mutual information needs walk_budget >= 1");
  const auto starts = db.facts_of(scheme.start);
  const std::size_t len = scheme.length();
  if (len == 0 || starts.empty()) return {};

  std::vector<Walk> walks;
  walks.reserve(walk_budget);
  for (std::size_t w = 0; w < walk_budget; ++w) {
    for (std::size_t attempt = 0; attempt < retry_cap; ++attempt) {
      auto walk = sample_walk(db, starts[uniform_index(rng, starts.size())], scheme, rng);
      if (walk) {
        walks.push_back(std::move(*walk));
        break;
      }
    }
  }
  if (walks.empty()) return {};

  const double n = static_cast<double>(walks.size());
  std::vector<double> info(len, 0.0);
  for (std::size_t i = 0; i < len; ++i) {
    std::map<std::pair<FactId, FactId>, std::size_t> joint;
    std::map<FactId, std::size_t> left, right;
    for (const auto& walk : walks) {
      ++joint[{walk[i], walk[i + 1]}];
      ++left[walk[i]];
      ++right[walk[i + 1]];
    }
    double mi = 0.0;
    for (const auto& [pair, c] : joint) {
      const double p = static_cast<double>(c) / n;
      const double pa = static_cast<double>(left[pair.first]) / n;
      const double pb = static_cast<double>(right[pair.second]) / n;
      mi += p * std::log(p / (pa * pb));
    }
    info[i] = std::max(0.0, mi);
  }
  return info;
}

std::vector<SchemeScore> score_mi(const Database& db, const std::vector<TargetedWalkScheme>& schemes,
                                  std::size_t walk_budget, std::uint64_t seed, std::size_t retry_cap) {
  common_start(schemes);
  std::vector<SchemeScore> out;
  std::vector<bool> assessed(schemes.size(), false);
  for (std::size_t i = 0; i < schemes.size(); ++i) {
    Rng rng = make_rng(seed, "score-mi", i);
    SchemeScore sc{i, 0.0, StrategyId::kMI, {}};
    if (schemes[i].scheme.length() == 0) {
      sc.diagnostic = "length 0: no hops to assess";
    } else {
      auto info = step_mutual_information(db, schemes[i].scheme, walk_budget, rng, retry_cap);
      if (info.empty()) {
        sc.diagnostic = "no complete walks";
      } else {
        sc.score = -*std::min_element(info.begin(), info.end());
        assessed[i] = true;
      }
    }
    out.push_back(std::move(sc));
  }
  apply_floor(out, assessed);
  return out;
}

std::size_t default_kvar_budget(const Database& db, RelationId start, const TrainConfig& cfg) {
  const double per_scheme = static_cast<double>(db.facts_of(start).size() * cfg.n_samples);
  return std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(0.1 * per_scheme)));
}

std::vector<SchemeScore> score_kvar(const Database& db, const std::vector<TargetedWalkScheme>& schemes,
                                    const KernelSet& kernels, std::size_t pair_budget, std::uint64_t seed,
                                    std::size_t retry_cap) {
  if (pair_budget < 2) throw SchemaError("kernel variance needs pair_budget >= 2");
  const RelationId start = common_start(schemes);
  const auto facts = db.facts_of(start);
  std::vector<SchemeScore> out;
  std::vector<bool> assessed(schemes.size(), false);
  for (std::size_t i = 0; i < schemes.size(); ++i) {
    const auto& tws = schemes[i];
    SchemeScore sc{i, 0.0, StrategyId::kKVar, {}};
    if (facts.size() < 2) {
      sc.diagnostic = "fewer than two start facts";
      out.push_back(std::move(sc));
      continue;
    }
    const auto& spec = kernels.for_target(db.schema(), tws);
    Rng rng = make_rng(seed, "score-kvar", i);
    std::map<std::pair<FactId, FactId>, std::pair<double, std::size_t>> by_pair;
    for (std::size_t q = 0; q < pair_budget; ++q) {
      const std::size_t a = uniform_index(rng, facts.size());
      std::size_t b = uniform_index(rng, facts.size() - 1);
      if (b >= a) ++b;
      auto g = sample_target_destination(db, facts[a], tws, rng, retry_cap);
      auto g2 = g ? sample_target_destination(db, facts[b], tws, rng, retry_cap) : std::nullopt;
      if (!g || !g2) continue;
      auto& acc = by_pair[{std::min(facts[a], facts[b]), std::max(facts[a], facts[b])}];
      acc.first += kernel_eval(spec, db.value(*g, tws.target), db.value(*g2, tws.target));
      ++acc.second;
    }
    if (by_pair.empty()) {
      sc.diagnostic = "all sampled quadruples dead-ended";
    } else {
      std::vector<double> means;
      for (const auto& [pair, acc] : by_pair) means.push_back(acc.first / static_cast<double>(acc.second));
      sc.score = unbiased_variance(means);
      if (means.size() < 2) sc.diagnostic = "single start-fact pair sampled";
      assessed[i] = true;
    }
    out.push_back(std::move(sc));
  }
  apply_floor(out, assessed);
  return out;
}

std::vector<SchemeScore> score_kvar_exact(const Database& db, const std::vector<TargetedWalkScheme>& schemes,
                                          const KernelSet& kernels) {
  const RelationId start = common_start(schemes);
  const auto facts = db.facts_of(start);
  std::vector<SchemeScore> out;
  std::vector<bool> assessed(schemes.size(), false);
  for (std::size_t i = 0; i < schemes.size(); ++i) {
    const auto& tws = schemes[i];
    const auto& spec = kernels.for_target(db.schema(), tws);
    std::vector<bool> defined(facts.size());
    for (std::size_t a = 0; a < facts.size(); ++a) defined[a] = !exact_target_distribution(db, facts[a], tws).empty();
    std::vector<double> kd;
    for (std::size_t a = 0; a < facts.size(); ++a) {
      for (std::size_t b = a + 1; b < facts.size(); ++b) {
        if (defined[a] && defined[b]) kd.push_back(kd_exact(db, facts[a], facts[b], tws, spec));
      }
    }
    SchemeScore sc{i, 0.0, StrategyId::kKVar, {}};
    if (kd.empty()) {
      sc.diagnostic = "no pair with defined expected kernel value";
    } else {
      sc.score = unbiased_variance(kd);
      assessed[i] = true;
    }
    out.push_back(std::move(sc));
  }
  apply_floor(out, assessed);
  return out;
}

namespace {

std::vector<SchemeScore> loss_scores(const std::vector<std::optional<double>>& losses, StrategyId strategy,
                                     const char* missing) {
  std::vector<SchemeScore> out;
  std::vector<bool> assessed(losses.size(), false);
  for (std::size_t i = 0; i < losses.size(); ++i) {
    SchemeScore sc{i, 0.0, strategy, {}};
    if (losses[i]) {
      sc.score = *losses[i];
      assessed[i] = true;
    } else {
      sc.diagnostic = missing;
    }
    out.push_back(std::move(sc));
  }
  apply_floor(out, assessed);
  return out;
}

}  // namespace

std::vector<SchemeScore> score_one_epoch(const Database& db, const std::vector<TargetedWalkScheme>& schemes,
                                         const TrainConfig& cfg, const KernelSet& kernels) {
  const RelationId start = common_start(schemes);
  Trainer trainer(db, kernels, cfg, init_model(db, start, schemes, cfg));
  const EpochStats stats = trainer.run_epoch();
  return loss_scores(stats.epoch_loss, StrategyId::kOneEpoch, "no usable samples in the epoch");
}

Database build_sample_database(const Database& db, const std::vector<TargetedWalkScheme>& schemes,
                               std::size_t facts_per_scheme, Rng& rng) {
  if (schemes.empty()) throw SchemaError("no schemes");
  if (facts_per_scheme == 0) throw SchemaError("facts_per_scheme must be positive");

  std::vector<WalkScheme> distinct;
  std::size_t depth = 0;
  for (const auto& tws : schemes) {
    if (std::find(distinct.begin(), distinct.end(), tws.scheme) == distinct.end()) distinct.push_back(tws.scheme);
    depth = std::max(depth, tws.scheme.length());
  }

  std::set<FactId> seeds;
  for (const auto& scheme : distinct) {
    auto candidates = facts_with_complete_walk(db, scheme);
    std::vector<FactId> chosen;
    std::sample(candidates.begin(), candidates.end(), std::back_inserter(chosen),
                std::min(facts_per_scheme, candidates.size()), rng);
    seeds.insert(chosen.begin(), chosen.end());
  }

  const auto& schema = db.schema();
  std::vector<bool> keep(db.size(), false);
  std::vector<FactId> frontier(seeds.begin(), seeds.end());
  for (FactId f : frontier) keep[f] = true;
  for (std::size_t hop = 0; hop < depth && !frontier.empty(); ++hop) {
    std::vector<FactId> next;
    auto visit = [&](FactId g) {
      if (g != kNoFact && !keep[g]) {
        keep[g] = true;
        next.push_back(g);
      }
    };
    for (FactId f : frontier) {
      const RelationId rel = db.fact(f).relation;
      for (FkId fk = 0; fk < schema.foreign_keys().size(); ++fk) {
        const auto& def = schema.foreign_key(fk);
        if (def.src == rel) visit(db.forward(fk, f));
        if (def.dst == rel) {
          for (FactId g : db.backward(fk, f)) visit(g);
        }
      }
    }
    frontier = std::move(next);
  }

  // Forward closure keeps every retained reference resolvable.
  std::deque<FactId> queue;
  for (FactId f = 0; f < db.size(); ++f) {
    if (keep[f]) queue.push_back(f);
  }
  while (!queue.empty()) {
    const FactId f = queue.front();
    queue.pop_front();
    const RelationId rel = db.fact(f).relation;
    for (FkId fk = 0; fk < schema.foreign_keys().size(); ++fk) {
      if (schema.foreign_key(fk).src != rel) continue;
      const FactId g = db.forward(fk, f);
      if (g != kNoFact && !keep[g]) {
        keep[g] = true;
        queue.push_back(g);
      }
    }
  }
  return db.subset(keep);
}

std::vector<SchemeScore> score_sampling(const Database& db, const std::vector<TargetedWalkScheme>& schemes,
                                        const TrainConfig& cfg, const KernelSet& kernels,
                                        const SamplingParams& params) {
  const RelationId start = common_start(schemes);
  if (params.epochs == 0) throw SchemaError("sampling needs epochs >= 1");
  Rng rng = make_rng(cfg.seed, "sampling-db");
  const Database sample = build_sample_database(db, schemes, params.facts_per_scheme, rng);
  if (sample.facts_of(start).size() < 2) {
    return loss_scores(std::vector<std::optional<double>>(schemes.size()), StrategyId::kSampling,
                       "sample database has fewer than two start facts");
  }
  TrainConfig light = cfg;
  light.epochs = params.epochs;
  Trainer trainer(sample, kernels, light, init_model(sample, start, schemes, light));
  EpochStats last;
  for (std::size_t e = 0; e < params.epochs; ++e) last = trainer.run_epoch();
  return loss_scores(last.cumulative_loss, StrategyId::kSampling, "no instances in the sample database");
}

SelectionResult select(const std::vector<SchemeScore>& scores, double ratio) {
  if (scores.empty()) throw SchemaError("select: empty scores");
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) throw NumericError("select: non-finite score");
  }
  SelectionResult out;
  out.ratio = ratio;
  out.scores = scores;
  const std::size_t keep = kept_count(ratio, scores.size());
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a].score != scores[b].score) return scores[a].score > scores[b].score;
    return scores[a].scheme < scores[b].scheme;
  });
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    out.ranking.push_back(scores[order[pos]].scheme);
    (pos < keep ? out.kept : out.removed).push_back(scores[order[pos]].scheme);
  }
  std::sort(out.kept.begin(), out.kept.end());
  std::sort(out.removed.begin(), out.removed.end());
  return out;
}

std::vector<SchemeScore> score_schemes(StrategyId strategy, const Database& db,
                                       const std::vector<TargetedWalkScheme>& schemes, const TrainConfig& cfg,
                                       const KernelSet& kernels, const ScoringParams& params) {
  switch (strategy) {
    case StrategyId::kRandom: return score_random(schemes.size(), cfg.seed);
    case StrategyId::kLength: return score_length(schemes);
    case StrategyId::kMI: return score_mi(db, schemes, params.mi_walk_budget, cfg.seed, cfg.retry_cap);
    case StrategyId::kKVar: {
      const std::size_t budget = params.kvar_pair_budget
                                     ? params.kvar_pair_budget
                                     : default_kvar_budget(db, common_start(schemes), cfg);
      return score_kvar(db, schemes, kernels, budget, cfg.seed, cfg.retry_cap);
    }
    case StrategyId::kOneEpoch: return score_one_epoch(db, schemes, cfg, kernels);
    case StrategyId::kSampling: return score_sampling(db, schemes, cfg, kernels, params.sampling);
    case StrategyId::kOnline: break;
  }
  throw SchemaError("online elimination is part of training and has no standalone score");
}

TrainResult online_elimination_train(const Database& db, RelationId start,
                                     const std::vector<TargetedWalkScheme>& schemes, const TrainConfig& cfg,
                                     const KernelSet& kernels, const OnlineConfig& online,
                                     const EpochCallback& on_epoch) {
  cfg.validate();
  if (!(online.ratio > 0.0) || online.ratio > 1.0) throw SchemaError("online ratio must lie in (0, 1]");
  if (online.per_epoch_removals == 0) throw SchemaError("per_epoch_removals must be >= 1");
  if (online.ratio * static_cast<double>(schemes.size()) < 1.0) {
    throw SchemaError("online ratio keeps fewer than one scheme");
  }
  const std::size_t target = kept_count(online.ratio, schemes.size());

  Trainer trainer(db, kernels, cfg, init_model(db, start, schemes, cfg));
  TrainResult result;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    EpochStats stats = trainer.run_epoch();
    auto active = trainer.model().active_indices();
    if (active.size() > target) {
      const std::size_t n_remove = std::min(online.per_epoch_removals, active.size() - target);
      const auto& loss = stats.epoch_loss;
      // Removal order: unassessed first, then by loss, later canonical index first on ties.
      std::stable_sort(active.begin(), active.end(), [&](std::size_t a, std::size_t b) {
        if (loss[a].has_value() != loss[b].has_value()) return !loss[a].has_value();
        if (loss[a] && *loss[a] != *loss[b]) {
          return online.remove_highest ? *loss[a] > *loss[b] : *loss[a] < *loss[b];
        }
        return a > b;
      });
      for (std::size_t i = 0; i < n_remove; ++i) trainer.model().set_active(active[i], false);
    }
    result.stats.push_back(std::move(stats));
    if (on_epoch) on_epoch(result.stats.back(), trainer.model());
  }
  result.model = std::move(trainer).release();
  return result;
}

}  // namespace relembed
