#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "relembed/database.hpp"
#include "relembed/model.hpp"

namespace relembed {

/// Downstream classifier over embedding rows. Implementations must be
/// deterministic for a fixed seed.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual void fit(const Eigen::MatrixXd& x, std::span<const int> labels, int n_classes, std::uint64_t seed) = 0;
  virtual std::vector<int> predict(const Eigen::MatrixXd& x) const = 0;
};

using ClassifierFactory = std::function<std::unique_ptr<Classifier>()>;

struct LogisticConfig {
  double l2 = 1e-3;
  std::size_t iterations = 500;
};

/// Multinomial logistic regression on standardised features, fit by
/// full-batch gradient descent from zero weights with step 1/L.
class LogisticRegression : public Classifier {
 public:
  explicit LogisticRegression(LogisticConfig cfg = {}) : cfg_(cfg) {}

  void fit(const Eigen::MatrixXd& x, std::span<const int> labels, int n_classes, std::uint64_t seed) override;
  std::vector<int> predict(const Eigen::MatrixXd& x) const override;

 private:
  LogisticConfig cfg_;
  Eigen::RowVectorXd mean_, scale_;
  Eigen::MatrixXd weights_;
  Eigen::RowVectorXd bias_;
};

ClassifierFactory default_classifier();

double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Fold assignment shared by every embedding evaluated on a task.
struct FoldSplit {
  std::vector<int> fold_of;
  std::size_t folds = 0;
  bool stratified = true;
};

/// Stratified split: each class is shuffled and dealt round-robin, the deal
/// continuing across classes so remainders spread over folds. Falls back to
/// an unstratified deal when some class has fewer members than folds.
/// Throws SchemaError when there are fewer samples than folds.
FoldSplit make_folds(std::span<const int> labels, std::size_t folds, std::uint64_t split_seed);

/// Mean held-out accuracy over the folds of `split`.
double cross_validate(const Eigen::MatrixXd& x, std::span<const int> labels, const FoldSplit& split,
                      const ClassifierFactory& make = default_classifier(), std::uint64_t seed = 0);

// -- Task handling

struct TaskSpec {
  std::string relation;
  std::string attribute;
};

/// A prediction task: the label column removed from the database, and the
/// labels of every start fact whose label was non-null.
struct TaskData {
  Database db;  // without the label attribute
  RelationId relation = 0;
  std::vector<FactId> facts;  // labelled facts (ids valid in db and in the source database)
  std::vector<int> labels;
  std::vector<std::string> classes;
};

TaskData prepare_task(const Database& full, const TaskSpec& task);

/// Throws IntegrityError if the label attribute is still present in `db`.
void assert_label_free(const Database& db, const TaskSpec& task);

/// Rows φ(f) for the given facts.
Eigen::MatrixXd embedding_matrix(const EmbeddingModel& model, std::span<const FactId> facts);

// -- Curves and thresholds

struct CurvePoint {
  double time = 0.0;      // seconds of training
  double accuracy = 0.0;  // in [0, 1]
};

using Curve = std::vector<CurvePoint>;

/// Mean of seed accuracies.
double ensemble_accuracy(std::span<const double> accuracies);

/// Ensemble accuracy at time t: mean over seeds of each seed's last point at
/// or before t. nullopt while some seed has no point yet. Throws when fewer
/// than `expected_seeds` curves are given.
std::optional<double> ensemble_at(const std::vector<Curve>& per_seed, double t, std::size_t expected_seeds);

/// ensemble_at evaluated at every time any seed recorded a point.
Curve ensemble_curve(const std::vector<Curve>& per_seed, std::size_t expected_seeds);

/// 0.95 times the baseline accuracy.
inline double alpha_star(double baseline_accuracy) { return 0.95 * baseline_accuracy; }

/// Earliest time with accuracy >= threshold.
std::optional<double> time_to_threshold(const Curve& curve, double threshold);

struct BestTime {
  std::optional<double> time;
  std::optional<double> ratio;
};

/// Minimum over ratios of the defined times, with the ratio attaining it
/// (smallest ratio on ties).
BestTime best_time_to_threshold(const std::map<double, std::optional<double>>& by_ratio);

}  // namespace relembed
