#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "relembed/kernels.hpp"
#include "relembed/trainer.hpp"

namespace relembed {

enum class StrategyId : std::uint8_t { kRandom, kLength, kMI, kKVar, kOneEpoch, kSampling, kOnline };

std::string_view to_string(StrategyId id);
/// Accepts random, length, mi, kvar, 1epoch (or one-epoch), sampling, online; case-insensitive.
StrategyId parse_strategy(std::string_view text);

/// Value of one targeted scheme under a strategy; higher means more valuable.
struct SchemeScore {
  std::size_t scheme = 0;  // index into the scored scheme list
  double score = 0.0;
  StrategyId strategy = StrategyId::kRandom;
  std::string diagnostic;  // non-empty when the scheme could not be assessed normally
};

struct SelectionResult {
  std::vector<std::size_t> kept;     // canonical (input) order
  std::vector<std::size_t> removed;  // canonical (input) order
  std::vector<std::size_t> ranking;  // all schemes, best first
  double ratio = 1.0;
  std::vector<SchemeScore> scores;
};

/// ⌈ratio · n⌉, robust to rounding of the product.
std::size_t kept_count(double ratio, std::size_t n);

std::vector<SchemeScore> score_random(std::size_t n_schemes, std::uint64_t seed);

/// 1/ℓ, and 2 for length-0 schemes so they rank above everything else.
std::vector<SchemeScore> score_length(const std::vector<TargetedWalkScheme>& schemes);

/// Plug-in mutual information (nats) of consecutive walk positions, one
/// entry per hop, estimated from `walk_budget` complete walks with uniform
/// start facts. Empty if no walk completed or the scheme has length 0.
std::vector<double> step_mutual_information(const Database& db, const WalkScheme& scheme, std::size_t walk_budget,
                                            Rng& rng, std::size_t retry_cap = 20);

/// Minus the smallest per-hop mutual information. Length-0 and walk-less
/// schemes score one below the lowest finite score.
std::vector<SchemeScore> score_mi(const Database& db, const std::vector<TargetedWalkScheme>& schemes,
                                  std::size_t walk_budget, std::uint64_t seed, std::size_t retry_cap = 20);

/// Unbiased variance, across sampled start-fact pairs, of the pair's mean
/// kernel value over `pair_budget` sampled (f, f', g, g') quadruples.
std::vector<SchemeScore> score_kvar(const Database& db, const std::vector<TargetedWalkScheme>& schemes,
                                    const KernelSet& kernels, std::size_t pair_budget, std::uint64_t seed,
                                    std::size_t retry_cap = 20);

/// Variance of the exact expected kernel value over all unordered start-fact
/// pairs. Only feasible on small databases.
std::vector<SchemeScore> score_kvar_exact(const Database& db, const std::vector<TargetedWalkScheme>& schemes,
                                          const KernelSet& kernels);

/// 10% of one epoch's samples per scheme (at least 2).
std::size_t default_kvar_budget(const Database& db, RelationId start, const TrainConfig& cfg);

/// Mean loss of every scheme during one epoch of a throwaway model.
std::vector<SchemeScore> score_one_epoch(const Database& db, const std::vector<TargetedWalkScheme>& schemes,
                                         const TrainConfig& cfg, const KernelSet& kernels);

/// Sub-database around up to `facts_per_scheme` random start facts per
/// scheme (facts with at least one complete walk). Facts within
/// max-scheme-length foreign-key hops (either direction) are included, then
/// everything they reference, transitively, so integrity holds.
Database build_sample_database(const Database& db, const std::vector<TargetedWalkScheme>& schemes,
                               std::size_t facts_per_scheme, Rng& rng);

struct SamplingParams {
  std::size_t facts_per_scheme = 20;
  std::size_t epochs = 10;
};

/// Cumulative mean loss after params.epochs epochs on a sample database.
std::vector<SchemeScore> score_sampling(const Database& db, const std::vector<TargetedWalkScheme>& schemes,
                                        const TrainConfig& cfg, const KernelSet& kernels,
                                        const SamplingParams& params);

/// Keeps the ⌈ratio·N⌉ best scores; ties go to the canonically earlier scheme.
SelectionResult select(const std::vector<SchemeScore>& scores, double ratio);

struct ScoringParams {
  std::size_t mi_walk_budget = 1000;
  std::size_t kvar_pair_budget = 0;  // 0: default_kvar_budget
  SamplingParams sampling;
};

/// Dispatches to the score_* function of a strategy (not kOnline).
std::vector<SchemeScore> score_schemes(StrategyId strategy, const Database& db,
                                       const std::vector<TargetedWalkScheme>& schemes, const TrainConfig& cfg,
                                       const KernelSet& kernels, const ScoringParams& params);

struct OnlineConfig {
  double ratio = 1.0;
  std::size_t per_epoch_removals = 1;
  bool remove_highest = false;  // inverted baseline, tests only
};

/// Single continuing training run that, after each epoch, deactivates the
/// per_epoch_removals active schemes with the lowest loss in that epoch
/// until ⌈ratio·N⌉ remain.
TrainResult online_elimination_train(const Database& db, RelationId start,
                                     const std::vector<TargetedWalkScheme>& schemes, const TrainConfig& cfg,
                                     const KernelSet& kernels, const OnlineConfig& online,
                                     const EpochCallback& on_epoch = {});

}  // namespace relembed
