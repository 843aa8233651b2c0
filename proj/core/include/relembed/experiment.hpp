#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "relembed/evaluation.hpp"
#include "relembed/extension.hpp"
#include "relembed/selection.hpp"
#include "relembed/trainer.hpp"

namespace relembed {

/// Run configuration. Relative paths are resolved against the directory of
/// the config file.
struct ExperimentConfig {
  std::filesystem::path dataset_dir;
  std::filesystem::path schema_path;  // default: <dataset_dir>/schema.json
  TaskSpec task;                      // empty relation: no prediction task
  std::string start;                  // start relation; defaults to the task relation
  std::size_t lmax = 2;
  TrainConfig trainer;
  nlohmann::json kernel_overrides = nlohmann::json::array();
  std::vector<StrategyId> strategies;
  std::vector<double> ratios{1.0};
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::size_t folds = 10;
  std::uint64_t split_seed = 0;
  ScoringParams scoring;
  std::size_t online_per_epoch = 1;
  ExtensionConfig extension;
  std::vector<double> dynamic_fractions;  // empty: no dynamic protocol
  std::size_t workers = 1;

  nlohmann::json raw;  // the parsed document, for manifests
};

ExperimentConfig parse_experiment_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

/// Name used for the all-schemes baseline in reports.
inline constexpr const char* kBaselineName = "full";

/// One (strategy, ratio, seed) training run.
struct CellResult {
  std::string strategy;
  double ratio = 1.0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::size_t kept = 0;
  double scoring_seconds = 0.0;
  double mean_epoch_seconds = 0.0;
  Curve curve;  // training time (s) vs cross-validated accuracy, one point per epoch
};

/// Seeds of one (strategy, ratio) combined.
struct EnsembleResult {
  std::string strategy;
  double ratio = 1.0;
  bool ok = false;
  std::string error;
  Curve curve;
  std::optional<double> final_accuracy;
  std::optional<double> t_star;
  double mean_scoring_seconds = 0.0;
  double mean_epoch_seconds = 0.0;
};

struct DynamicResult {
  std::string strategy;
  double ratio = 1.0;
  double fraction = 0.0;  // share of labelled start facts deleted, trained without and re-inserted
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::size_t inserted = 0;
  double accuracy = 0.0;  // classifier trained on remaining facts, tested on inserted ones
};

struct ExperimentReport {
  std::size_t n_schemes = 0;
  std::size_t n_labelled = 0;
  std::size_t n_classes = 0;
  std::optional<double> baseline_accuracy;
  std::optional<double> alpha_star;
  std::vector<CellResult> cells;
  std::vector<EnsembleResult> ensembles;
  std::map<std::string, BestTime> best;  // per strategy: t*(T) and r*(T)
  std::vector<DynamicResult> dynamic;
};

/// Runs the grid on `full`, which still contains the label column. Needs a task.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const Database& full);

/// Loads the dataset named by the config and runs it.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

nlohmann::json report_to_json(const ExperimentReport& report);

/// Writes report.json, curves/*.csv, ensembles/*.csv, tstar.csv and, when
/// present, dynamic.csv. Returns the written paths.
std::vector<std::filesystem::path> write_report(const std::filesystem::path& dir, const ExperimentReport& report);

/// Long-format CSV strategy,ratio,seed,time,accuracy from a report.json
/// document; ensemble rows carry seed "ensemble".
std::string plot_data_csv(const nlohmann::json& report);

}  // namespace relembed
