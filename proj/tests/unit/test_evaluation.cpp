#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"
#include "relembed/error.hpp"
#include "relembed/evaluation.hpp"
#include "relembed/synthetic.hpp"

using namespace relembed;

namespace {

std::vector<int> balanced(std::size_t n) {
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<int>(i % 2);
  return y;
}

Eigen::MatrixXd gaussian(std::size_t n, int d, Rng& rng) {
  std::normal_distribution<double> g(0, 1);
  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = g(rng);
  return x;
}

}  // namespace

TEST_CASE("logistic regression separates separable data") {
  Rng rng(1);
  const std::size_t n = 200;
  auto x = gaussian(n, 3, rng);
  const auto y = balanced(n);
  for (std::size_t i = 0; i < n; ++i) x(i, 0) += y[i] ? 4.0 : -4.0;
  LogisticRegression clf;
  clf.fit(x, y, 2, 0);
  const auto pred = clf.predict(x);
  CHECK(accuracy(pred, y) == 1.0);

  LogisticRegression again;
  again.fit(x, y, 2, 0);
  CHECK(again.predict(x) == pred);
}

TEST_CASE("three classes") {
  Rng rng(2);
  const std::size_t n = 300;
  auto x = gaussian(n, 2, rng);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(i % 3);
    x(i, 0) += 5.0 * std::cos(2.0944 * y[i]);
    x(i, 1) += 5.0 * std::sin(2.0944 * y[i]);
  }
  LogisticRegression clf;
  clf.fit(x, y, 3, 0);
  CHECK(accuracy(clf.predict(x), y) > 0.97);
}

TEST_CASE("folds") {
  std::vector<int> y(103);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = i < 30 ? 0 : (i < 70 ? 1 : 2);
  const auto split = make_folds(y, 10, 7);
  CHECK(split.stratified);
  CHECK(split.folds == 10);
  for (int c = 0; c < 3; ++c) {
    std::vector<int> per_fold(10, 0);
    for (std::size_t i = 0; i < y.size(); ++i)
      if (y[i] == c) ++per_fold[split.fold_of[i]];
    const auto [lo, hi] = std::minmax_element(per_fold.begin(), per_fold.end());
    CHECK(*hi - *lo <= 1);
  }
  std::vector<int> sizes(10, 0);
  for (int f : split.fold_of) ++sizes[f];
  const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
  CHECK(*hi - *lo <= 1);

  CHECK(make_folds(y, 10, 7).fold_of == split.fold_of);
  CHECK(make_folds(y, 10, 8).fold_of != split.fold_of);

  std::vector<int> rare(50, 0);
  rare[3] = 1;
  CHECK_FALSE(make_folds(rare, 10, 0).stratified);
  CHECK_THROWS_AS(make_folds(std::vector<int>(5, 0), 10, 0), SchemaError);
}

TEST_CASE("cross-validation sanity") {
  const std::size_t n = 200;
  const auto y = balanced(n);
  const auto split = make_folds(y, 10, 0);

  Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, 2);
  for (std::size_t i = 0; i < n; ++i) onehot(i, y[i]) = 1.0;
  CHECK(cross_validate(onehot, y, split) == 1.0);

  const Eigen::MatrixXd constant = Eigen::MatrixXd::Ones(n, 4);
  CHECK(cross_validate(constant, y, split) == doctest::Approx(0.5));

  std::vector<int> skewed(n, 0);
  for (std::size_t i = 0; i < n; i += 4) skewed[i] = 1;
  CHECK(cross_validate(constant, skewed, make_folds(skewed, 10, 0)) == doctest::Approx(0.75));

  Rng rng(3);
  const auto noise = gaussian(n, 8, rng);
  const double acc = cross_validate(noise, y, split);
  CHECK(std::abs(acc - 0.5) <= 0.1);
  CHECK(cross_validate(noise, y, split) == acc);
}

TEST_CASE("property: permuted labels give about the majority frequency") {
  Rng rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 200 + 20 * trial;
    auto x = gaussian(n, 6, rng);
    auto y = balanced(n);
    for (std::size_t i = 0; i < n; ++i) x(i, 0) += y[i] ? 3.0 : -3.0;
    std::shuffle(y.begin(), y.end(), rng);
    CHECK(std::abs(cross_validate(x, y, make_folds(y, 10, trial)) - 0.5) <= 0.1);
  }
}

TEST_CASE("task preparation strips the label") {
  PlantedParams p;
  p.n_start = 40;
  const auto planted = make_planted_dataset(p);
  const auto task = prepare_task(planted.db, planted.task);
  CHECK_NOTHROW(assert_label_free(task.db, planted.task));
  CHECK_THROWS_AS(assert_label_free(planted.db, planted.task), IntegrityError);
  CHECK(task.facts.size() == 40);
  CHECK(task.classes.size() == 2);
  CHECK(task.db.size() == planted.db.size());
  const auto y = planted.db.schema().relation(0).attribute("y");
  for (std::size_t i = 0; i < task.facts.size(); ++i)
    CHECK(task.classes[task.labels[i]] == planted.db.value(task.facts[i], y).to_string());
  CHECK_THROWS_AS(prepare_task(planted.db, {"P", "nope"}), SchemaError);
}

TEST_CASE("ensembles") {
  const std::vector<double> acc{0.8, 0.8, 0.9, 0.9, 1.0};
  CHECK(ensemble_accuracy(acc) == doctest::Approx(0.88));

  const Curve same{{1, 0.7}, {2, 0.8}};
  const std::vector<Curve> five(5, same);
  CHECK(*ensemble_at(five, 2, 5) == doctest::Approx(0.8));
  CHECK_FALSE(ensemble_at(five, 0.5, 5));
  CHECK_THROWS(ensemble_at(std::vector<Curve>(4, same), 2, 5));

  std::vector<Curve> mixed{{{1, 0.6}, {3, 0.9}}, {{2, 0.8}}};
  CHECK_FALSE(ensemble_at(mixed, 1.5, 2));
  CHECK(*ensemble_at(mixed, 2, 2) == doctest::Approx(0.7));
  CHECK(*ensemble_at(mixed, 3, 2) == doctest::Approx(0.85));
  const auto curve = ensemble_curve(mixed, 2);
  REQUIRE(curve.size() == 2);
  CHECK(curve[0].time == 2);
  CHECK(curve[1].time == 3);
}

TEST_CASE("thresholds") {
  CHECK(alpha_star(0.9) == 0.95 * 0.9);
  const Curve c{{10, 0.7}, {20, 0.95}, {30, 0.96}};
  CHECK(*time_to_threshold(c, 0.9) == 20);
  CHECK_FALSE(time_to_threshold(c, 0.99));
  CHECK(*time_to_threshold(c, 0.7) == 10);

  const auto best = best_time_to_threshold({{0.5, std::nullopt}, {1.0, 40.0}});
  CHECK(*best.time == 40);
  CHECK(*best.ratio == 1.0);
  const auto tie = best_time_to_threshold({{0.3, 12.0}, {0.6, 12.0}, {1.0, 20.0}});
  CHECK(*tie.ratio == 0.3);
  CHECK_FALSE(best_time_to_threshold({{0.5, std::nullopt}}).time);
}
