#include <cmath>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "fixtures.hpp"
#include "relembed/error.hpp"
#include "relembed/kernels.hpp"

using namespace relembed;
using fixtures::cat;

namespace {

// R(A) <- S(B, C, V); V categorical, W numeric.
DatabaseSchema kv_schema() {
  RelationSchema r{"R", {{"A", DomainKind::kCategorical, false}}, {0}};
  RelationSchema s{"S", {{"B", DomainKind::kCategorical, false}, {"C", DomainKind::kCategorical, true},
                         {"V", DomainKind::kCategorical, true}, {"W", DomainKind::kNumeric, true}}, {0}};
  return DatabaseSchema({r, s}, {{"fk", 1, {1}, 0, {0}}});
}

NewFact s_fact(const std::string& b, const std::string& c, const std::string& v, double w) {
  return {1, {cat(b), cat(c), cat(v), Value::numeric(w)}};
}

const TargetedWalkScheme kV{{0, {{0, Direction::kBackward}}}, 2};
const TargetedWalkScheme kW{{0, {{0, Direction::kBackward}}}, 3};

}  // namespace

TEST_CASE("kernel_eval") {
  const KernelSpec c{0, 0, KernelKind::kCategoricalEquality, 1.0};
  CHECK(kernel_eval(c, cat("EU"), cat("EU")) == 1.0);
  CHECK(kernel_eval(c, cat("EU"), cat("NC")) == 0.0);
  const KernelSpec g{0, 0, KernelKind::kNumericGaussian, 1.0};
  CHECK(kernel_eval(g, Value::numeric(0), Value::numeric(0)) == 1.0);
  CHECK(kernel_eval(g, Value::numeric(0), Value::numeric(std::sqrt(2 * std::log(2.0)))) == doctest::Approx(0.5));
  const KernelSpec g3{0, 0, KernelKind::kNumericGaussian, 3.0};
  CHECK(kernel_eval(g3, Value::numeric(1), Value::numeric(1 + 3 * std::sqrt(2 * std::log(2.0)))) ==
        doctest::Approx(0.5));
  const KernelSpec t{0, 0, KernelKind::kTextEquality, 1.0};
  CHECK(kernel_eval(t, Value::text("a b"), Value::text("a b")) == 1.0);

  CHECK_THROWS_AS(kernel_eval(c, Value(), cat("EU")), SchemaError);
  CHECK_THROWS_AS(kernel_eval(c, Value::numeric(1), cat("EU")), SchemaError);
  CHECK_THROWS_AS(kernel_eval(g, cat("1"), Value::numeric(1)), SchemaError);
  CHECK_THROWS_AS(kernel_eval(t, cat("a"), Value::text("a")), SchemaError);
}

TEST_CASE("property: kernels are symmetric, bounded and reflexive") {
  Rng rng(17);
  std::uniform_real_distribution<double> x(-5, 5), sigma(0.1, 4);
  for (int i = 0; i < 2000; ++i) {
    const KernelSpec g{0, 0, KernelKind::kNumericGaussian, sigma(rng)};
    const auto a = Value::numeric(x(rng)), b = Value::numeric(x(rng));
    const double k = kernel_eval(g, a, b);
    CHECK(k == kernel_eval(g, b, a));
    CHECK(k >= 0.0);
    CHECK(k <= 1.0);
    CHECK(kernel_eval(g, a, a) == 1.0);
    const KernelSpec c{0, 0, KernelKind::kCategoricalEquality, 1.0};
    const auto u = cat(std::to_string(uniform_index(rng, 4))), v = cat(std::to_string(uniform_index(rng, 4)));
    CHECK(kernel_eval(c, u, v) == kernel_eval(c, v, u));
    CHECK(kernel_eval(c, u, u) == 1.0);
  }
}

TEST_CASE("default kernels and overrides") {
  const Database db(kv_schema(), {{0, {cat("1")}}, s_fact("a", "1", "u", 0), s_fact("b", "1", "v", 2)});
  auto set = KernelSet::defaults(db);
  CHECK(set.get(1, 2).kind == KernelKind::kCategoricalEquality);
  CHECK(set.get(1, 3).kind == KernelKind::kNumericGaussian);
  CHECK(set.get(1, 3).sigma == doctest::Approx(std::sqrt(2.0)));

  const Database one(kv_schema(), {{0, {cat("1")}}, s_fact("a", "1", "u", 5)});
  CHECK(KernelSet::defaults(one).get(1, 3).sigma == 1.0);

  set.apply_overrides(db.schema(), nlohmann::json::parse(
      R"([{"relation": "S", "attribute": "W", "kind": "gaussian", "sigma": 0.5}])"));
  CHECK(set.get(1, 3).sigma == 0.5);
  CHECK_THROWS_AS(set.apply_overrides(db.schema(), nlohmann::json::parse(
                      R"([{"relation": "S", "attribute": "V", "kind": "gaussian", "sigma": 1}])")),
                  SchemaError);
  CHECK_THROWS_AS(set.apply_overrides(db.schema(), nlohmann::json::parse(
                      R"([{"relation": "S", "attribute": "W", "kind": "gaussian", "sigma": 0}])")),
                  SchemaError);
}

TEST_CASE("kd_exact cases") {
  // R(1): u, v   R(2): u, v   R(3): u   R(4): w
  const Database db(kv_schema(), {{0, {cat("1")}}, {0, {cat("2")}}, {0, {cat("3")}}, {0, {cat("4")}},
                                  s_fact("a", "1", "u", 0), s_fact("b", "1", "v", 0), s_fact("c", "2", "u", 0),
                                  s_fact("d", "2", "v", 0), s_fact("e", "3", "u", 0), s_fact("f", "4", "w", 0)});
  const auto kernels = KernelSet::defaults(db);
  const auto& spec = kernels.for_target(db.schema(), kV);
  CHECK(kd_exact(db, 0, 1, kV, spec) == doctest::Approx(0.5));
  CHECK(kd_exact(db, 2, 2, kV, spec) == 1.0);
  CHECK(kd_exact(db, 2, 3, kV, spec) == 0.0);
  CHECK(kd_exact(db, 0, 2, kV, spec) == doctest::Approx(0.5));

  const auto& wspec = kernels.for_target(db.schema(), kW);
  CHECK(kd_exact(db, 0, 3, kW, wspec) == 1.0);

  SUBCASE("kd_mc") {
    Rng rng(8);
    const auto point = kd_mc(db, 2, 2, kV, spec, 50, rng);
    CHECK(point.value == 1.0);
    CHECK(point.std_error == 0.0);
    CHECK(point.n_pairs == 50);
    const auto half = kd_mc(db, 0, 1, kV, spec, 10000, rng);
    CHECK(std::abs(half.value - 0.5) <= 3 * half.std_error);
    CHECK(std::abs(half.value - 0.5) < 0.015);
    CHECK(kd_mc(db, 0, 3, kW, wspec, 10, rng).value == 1.0);
    CHECK_THROWS_AS(kd_mc(db, 0, 1, kV, spec, 0, rng), SchemaError);
  }
}

TEST_CASE("kd on an empty support throws") {
  const Database db(kv_schema(), {{0, {cat("1")}}, {0, {cat("2")}}, s_fact("a", "1", "u", 0)});
  const auto kernels = KernelSet::defaults(db);
  const auto& spec = kernels.for_target(db.schema(), kV);
  Rng rng(1);
  CHECK_THROWS_AS(kd_exact(db, 0, 1, kV, spec), NumericError);
  CHECK_THROWS_AS(kd_mc(db, 0, 1, kV, spec, 10, rng), NumericError);
}

TEST_CASE("property: kd_exact is symmetric and bounded, kd_mc agrees") {
  Rng rng(5);
  std::size_t trials = 0, within = 0;
  while (trials < 40) {
    const auto schema = fixtures::random_schema(rng, 4, 5);
    const auto db = fixtures::random_database(schema, rng, 40, 0.2);
    const auto kernels = KernelSet::defaults(db);
    const RelationId start = uniform_index(rng, schema.relations().size());
    const auto targeted = enumerate_targeted(schema, start, 2);
    const auto facts = db.facts_of(start);
    if (facts.empty()) continue;
    const auto& tws = targeted[uniform_index(rng, targeted.size())];
    const FactId f = facts[uniform_index(rng, facts.size())], f2 = facts[uniform_index(rng, facts.size())];
    if (exact_target_distribution(db, f, tws).empty() || exact_target_distribution(db, f2, tws).empty()) continue;
    const auto& spec = kernels.for_target(schema, tws);
    const double k = kd_exact(db, f, f2, tws, spec);
    CHECK(k >= 0.0);
    CHECK(k <= 1.0);
    CHECK(k == doctest::Approx(kd_exact(db, f2, f, tws, spec)).epsilon(1e-12));
    const auto est = kd_mc(db, f, f2, tws, spec, 10000, rng);
    within += std::abs(est.value - k) <= 3 * est.std_error + 1e-12;
    ++trials;
  }
  CHECK(within >= 38);
}
