#include "relembed/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <set>

#include "relembed/error.hpp"
#include "relembed/random.hpp"

namespace relembed {

void LogisticRegression::fit(const Eigen::MatrixXd& x, std::span<const int> labels, int n_classes,
                             std::uint64_t /*seed*/) {
  const Eigen::Index n = x.rows();
  const Eigen::Index d = x.cols();
  if (n == 0 || static_cast<std::size_t>(n) != labels.size()) throw SchemaError("classifier: bad training data");
  std::set<int> present(labels.begin(), labels.end());
  if (present.size() < 2) throw SchemaError("classifier: need at least two classes");

  mean_ = x.colwise().mean();
  scale_ = ((x.rowwise() - mean_).array().square().colwise().sum() / static_cast<double>(n)).sqrt();
  for (Eigen::Index j = 0; j < d; ++j) scale_[j] = scale_[j] > 1e-12 ? 1.0 / scale_[j] : 0.0;
  const Eigen::MatrixXd z = (x.rowwise() - mean_).array().rowwise() * scale_.array();

  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, n_classes);
  for (Eigen::Index i = 0; i < n; ++i) onehot(i, labels[static_cast<std::size_t>(i)]) = 1.0;

  // Smoothness bound of the mean cross-entropy: 0.5 * (λmax(zᵀz/n) + 1) for weights and bias.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig((z.transpose() * z) / static_cast<double>(n),
                                                     Eigen::EigenvaluesOnly);
  const double lmax = d > 0 ? eig.eigenvalues().maxCoeff() : 0.0;
  const double step = 1.0 / (0.5 * (lmax + 1.0) + cfg_.l2);

  weights_ = Eigen::MatrixXd::Zero(d, n_classes);
  bias_ = Eigen::RowVectorXd::Zero(n_classes);
  for (std::size_t it = 0; it < cfg_.iterations; ++it) {
    Eigen::MatrixXd logits = (z * weights_).rowwise() + bias_;
    Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
    Eigen::MatrixXd p = (logits.colwise() - row_max).array().exp();
    p.array().colwise() /= p.rowwise().sum().array();
    const Eigen::MatrixXd err = (p - onehot) / static_cast<double>(n);
    weights_ -= step * (z.transpose() * err + cfg_.l2 * weights_);
    bias_ -= step * err.colwise().sum();
  }
}

std::vector<int> LogisticRegression::predict(const Eigen::MatrixXd& x) const {
  const Eigen::MatrixXd z = (x.rowwise() - mean_).array().rowwise() * scale_.array();
  const Eigen::MatrixXd logits = (z * weights_).rowwise() + bias_;
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    logits.row(i).maxCoeff(&best);
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

ClassifierFactory default_classifier() {
  return [] { return std::make_unique<LogisticRegression>(); };
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || truth.empty()) throw SchemaError("accuracy: size mismatch");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(truth.size());
}

FoldSplit make_folds(std::span<const int> labels, std::size_t folds, std::uint64_t split_seed) {
  if (folds < 2) throw SchemaError("cross validation needs at least two folds");
  if (labels.size() < folds) throw SchemaError("fewer samples than folds");
  Rng rng = make_rng(split_seed, "folds");
  FoldSplit split;
  split.folds = folds;
  split.fold_of.assign(labels.size(), 0);

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  split.stratified = std::all_of(by_class.begin(), by_class.end(), [&](const auto& kv) {
    return kv.second.size() >= folds;
  });
  if (!split.stratified) {
    std::cerr << "warning: a class has fewer members than folds; using an unstratified split\n";
    std::vector<std::size_t> all(labels.size());
    std::iota(all.begin(), all.end(), 0);
    by_class = {{0, std::move(all)}};
  }
  std::size_t deal = 0;
  for (auto& [cls, members] : by_class) {
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i : members) split.fold_of[i] = static_cast<int>(deal++ % folds);
  }
  return split;
}

double cross_validate(const Eigen::MatrixXd& x, std::span<const int> labels, const FoldSplit& split,
                      const ClassifierFactory& make, std::uint64_t seed) {
  if (static_cast<std::size_t>(x.rows()) != labels.size() || split.fold_of.size() != labels.size()) {
    throw SchemaError("cross_validate: size mismatch");
  }
  const int n_classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t fold = 0; fold < split.folds; ++fold) {
    std::vector<Eigen::Index> train_rows, test_rows;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      (split.fold_of[i] == static_cast<int>(fold) ? test_rows : train_rows).push_back(static_cast<Eigen::Index>(i));
    }
    if (test_rows.empty()) continue;
    Eigen::MatrixXd x_train = x(train_rows, Eigen::all);
    Eigen::MatrixXd x_test = x(test_rows, Eigen::all);
    std::vector<int> y_train, y_test;
    for (auto i : train_rows) y_train.push_back(labels[static_cast<std::size_t>(i)]);
    for (auto i : test_rows) y_test.push_back(labels[static_cast<std::size_t>(i)]);

    std::vector<int> predicted;
    if (std::set<int>(y_train.begin(), y_train.end()).size() < 2) {
      predicted.assign(y_test.size(), y_train.front());
    } else {
      auto clf = make();
      clf->fit(x_train, y_train, n_classes, derive_seed(seed, "cv-fold", fold));
      predicted = clf->predict(x_test);
    }
    total += accuracy(predicted, y_test);
    ++used;
  }
  return used ? total / static_cast<double>(used) : 0.0;
}

TaskData prepare_task(const Database& full, const TaskSpec& task) {
  TaskData out;
  out.relation = full.schema().relation_id(task.relation);
  const AttrId attr = full.schema().relation(out.relation).attribute(task.attribute);
  std::map<Value, int> class_index;
  for (FactId f : full.facts_of(out.relation)) {
    const Value& v = full.value(f, attr);
    if (!v.is_null()) class_index.emplace(v, 0);
  }
  int next = 0;
  for (auto& [v, idx] : class_index) {
    idx = next++;
    out.classes.push_back(v.to_string());
  }
  for (FactId f : full.facts_of(out.relation)) {
    const Value& v = full.value(f, attr);
    if (v.is_null()) continue;
    out.facts.push_back(f);
    out.labels.push_back(class_index.at(v));
  }
  out.db = full.without_attribute(out.relation, attr);
  assert_label_free(out.db, task);
  return out;
}

void assert_label_free(const Database& db, const TaskSpec& task) {
  const RelationId rel = db.schema().relation_id(task.relation);
  if (db.schema().relation(rel).find_attribute(task.attribute)) {
    throw IntegrityError("label leakage: '" + task.relation + "." + task.attribute +
                         "' is visible to the embedding phase");
  }
}

Eigen::MatrixXd embedding_matrix(const EmbeddingModel& model, std::span<const FactId> facts) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(facts.size()), static_cast<Eigen::Index>(model.dim()));
  for (std::size_t i = 0; i < facts.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = model.phi(facts[i]);
  return out;
}

double ensemble_accuracy(std::span<const double> accuracies) {
  if (accuracies.empty()) throw SchemaError("ensemble of zero models");
  return std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / static_cast<double>(accuracies.size());
}

std::optional<double> ensemble_at(const std::vector<Curve>& per_seed, double t, std::size_t expected_seeds) {
  if (per_seed.size() < expected_seeds) {
    throw SchemaError("ensemble needs " + std::to_string(expected_seeds) + " seeds, got " +
                      std::to_string(per_seed.size()));
  }
  std::vector<double> latest;
  for (const auto& curve : per_seed) {
    std::optional<double> acc;
    for (const auto& p : curve) {
      if (p.time <= t) acc = p.accuracy;
    }
    if (!acc) return std::nullopt;
    latest.push_back(*acc);
  }
  return ensemble_accuracy(latest);
}

Curve ensemble_curve(const std::vector<Curve>& per_seed, std::size_t expected_seeds) {
  std::set<double> times;
  for (const auto& curve : per_seed) {
    for (const auto& p : curve) times.insert(p.time);
  }
  Curve out;
  for (double t : times) {
    if (auto acc = ensemble_at(per_seed, t, expected_seeds)) out.push_back({t, *acc});
  }
  return out;
}

std::optional<double> time_to_threshold(const Curve& curve, double threshold) {
  for (const auto& p : curve) {
    if (p.accuracy >= threshold) return p.time;
  }
  return std::nullopt;
}

BestTime best_time_to_threshold(const std::map<double, std::optional<double>>& by_ratio) {
  BestTime best;
  for (const auto& [ratio, t] : by_ratio) {
    if (t && (!best.time || *t < *best.time)) {
      best.time = t;
      best.ratio = ratio;
    }
  }
  return best;
}

}  // namespace relembed
