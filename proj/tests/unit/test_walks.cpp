#include <cmath>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "fixtures.hpp"
#include "relembed/error.hpp"
#include "relembed/walks.hpp"

using namespace relembed;
using fixtures::cat;

namespace {

const WalkScheme kBack{0, {{0, Direction::kBackward}}};

double total_variation(const std::map<FactId, double>& p, const std::map<FactId, std::size_t>& counts, std::size_t n) {
  std::map<FactId, double> diff = p;
  for (const auto& [g, c] : counts) diff[g] -= static_cast<double>(c) / static_cast<double>(n);
  double tv = 0.0;
  for (const auto& [g, d] : diff) tv += std::abs(d);
  return 0.5 * tv;
}

}  // namespace

TEST_CASE("enumeration on the toy schema") {
  const auto schema = fixtures::toy_schema();
  const auto one = enumerate_walk_schemes(schema, 0, 1);
  REQUIRE(one.size() == 2);
  CHECK(one[0].steps.empty());
  CHECK(one[1] == kBack);
  CHECK(enumerate_walk_schemes(schema, 0, 0).size() == 1);

  const auto targeted = enumerate_targeted(schema, 0, 1);
  REQUIRE(targeted.size() == 3);
  CHECK(targeted[0].target == 0);
  CHECK(targeted[1].scheme == kBack);
  CHECK(targeted[1].target == 0);
  CHECK(targeted[2].target == 1);
  CHECK(enumerate_targeted(schema, 0, 0).size() == 1);
  CHECK_THROWS_AS(enumerate_walk_schemes(schema, 5, 1), SchemaError);
}

TEST_CASE("back-and-forth hops are enumerated") {
  const auto schemes = enumerate_walk_schemes(fixtures::toy_schema(), 0, 2);
  REQUIRE(schemes.size() == 3);
  CHECK(schemes[2].steps == std::vector<WalkStep>{{0, Direction::kBackward}, {0, Direction::kForward}});
}

TEST_CASE("scheme text and json round trip") {
  const auto schema = fixtures::toy_schema();
  CHECK(scheme_text(schema, kBack) == "R[A]—[C]S");
  CHECK(scheme_text(schema, WalkScheme{0, {}}) == "R");
  const TargetedWalkScheme tws{kBack, 1};
  CHECK(targeted_text(schema, tws) == "R[A]—[C]S.C");
  CHECK(targeted_from_json(schema, targeted_to_json(schema, tws)) == tws);
  auto j = targeted_to_json(schema, tws);
  j["target"] = "nope";
  CHECK_THROWS_AS(targeted_from_json(schema, j), SchemaError);
}

TEST_CASE("property: enumeration equals brute force and is monotone") {
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto schema = fixtures::random_schema(rng);
    const RelationId start = uniform_index(rng, schema.relations().size());
    for (std::size_t l = 0; l <= 3; ++l) {
      const auto got = enumerate_walk_schemes(schema, start, l);
      REQUIRE(got == fixtures::brute_force_schemes(schema, start, l));
      const auto next = enumerate_walk_schemes(schema, start, l + 1);
      REQUIRE(std::equal(got.begin(), got.end(), next.begin()));
    }
  }
}

TEST_CASE("sample_walk on the toy db") {
  const auto db = fixtures::toy_db();
  Rng rng(5);
  std::map<FactId, std::size_t> counts;
  const std::size_t n = 100000;
  for (std::size_t i = 0; i < n; ++i) {
    const auto w = sample_walk(db, 0, kBack, rng);
    REQUIRE(w);
    REQUIRE(w->size() == 2);
    CHECK((*w)[0] == 0);
    ++counts[w->back()];
  }
  CHECK(counts.size() == 2);
  CHECK(std::abs(static_cast<double>(counts[2]) / n - 0.5) < 0.01);

  CHECK_FALSE(sample_walk(db, 1, kBack, rng));
  CHECK(sample_destination(db, 1, kBack, rng) == kNoFact);
  const auto zero = sample_walk(db, 1, WalkScheme{0, {}}, rng);
  REQUIRE(zero);
  CHECK(*zero == Walk{1});
  CHECK_THROWS_AS(sample_walk(db, 2, kBack, rng), SchemaError);
}

TEST_CASE("exact destination distribution") {
  const auto db = fixtures::toy_db();
  const auto d = exact_dest_distribution(db, 0, kBack);
  CHECK(d == DestDistribution{{2, 0.5}, {3, 0.5}});
  CHECK(exact_dest_distribution(db, 1, kBack).empty());
  CHECK(facts_with_complete_walk(db, kBack) == std::vector<FactId>{0});
}

TEST_CASE("dead-end mass is renormalised away") {
  // R(1) <- S(x), S(y); only S(x) is referenced by T(t).
  RelationSchema r{"R", {{"A", DomainKind::kCategorical, false}}, {0}};
  RelationSchema s{"S", {{"B", DomainKind::kCategorical, false}, {"C", DomainKind::kCategorical, true}}, {0}};
  RelationSchema t{"T", {{"D", DomainKind::kCategorical, false}, {"E", DomainKind::kCategorical, true}}, {0}};
  const DatabaseSchema schema({r, s, t}, {{"s_r", 1, {1}, 0, {0}}, {"t_s", 2, {1}, 1, {0}}});
  const Database db(schema, {{0, {cat("1")}}, {1, {cat("x"), cat("1")}}, {1, {cat("y"), cat("1")}},
                             {2, {cat("t"), cat("x")}}});
  const WalkScheme two{0, {{0, Direction::kBackward}, {1, Direction::kBackward}}};
  CHECK(exact_dest_distribution(db, 0, two) == DestDistribution{{3, 1.0}});
  Rng rng(1);
  std::size_t dead = 0;
  for (int i = 0; i < 2000; ++i) dead += sample_destination(db, 0, two, rng) == kNoFact;
  CHECK(dead > 800);
  CHECK(dead < 1200);
}

TEST_CASE("null targets are ignored and renormalised") {
  RelationSchema r{"R", {{"A", DomainKind::kCategorical, false}}, {0}};
  RelationSchema s{"S", {{"B", DomainKind::kCategorical, false}, {"C", DomainKind::kCategorical, true},
                         {"V", DomainKind::kCategorical, true}}, {0}};
  const DatabaseSchema schema({r, s}, {{"fk", 1, {1}, 0, {0}}});
  // R(1) reaches S(x) with V = v and S(y) with V = Null; R(2) reaches only S(z) with V = Null.
  const Database db(schema, {{0, {cat("1")}}, {1, {cat("x"), cat("1"), cat("v")}}, {1, {cat("y"), cat("1"), Value()}},
                             {0, {cat("2")}}, {1, {cat("z"), cat("2"), Value()}}});
  const TargetedWalkScheme tws{kBack, 2};
  CHECK(exact_dest_distribution(db, 0, kBack) == DestDistribution{{1, 0.5}, {2, 0.5}});
  CHECK(exact_target_distribution(db, 0, tws) == DestDistribution{{1, 1.0}});
  Rng rng(9);
  for (int i = 0; i < 200; ++i) {
    const auto v = dest_attr_sample(db, 0, tws, rng);
    REQUIRE(v);
    CHECK(*v == cat("v"));
  }
  CHECK(exact_target_distribution(db, 3, tws).empty());
  CHECK_FALSE(dest_attr_sample(db, 3, tws, rng));
  CHECK_THROWS_AS(dest_attr_sample(db, 0, TargetedWalkScheme{kBack, 7}, rng), SchemaError);
}

TEST_CASE("without nulls dest_attr_sample follows the destination law") {
  const auto db = fixtures::toy_db();
  Rng rng(2);
  std::size_t x = 0;
  const std::size_t n = 20000;
  for (std::size_t i = 0; i < n; ++i) x += *dest_attr_sample(db, 0, {kBack, 0}, rng) == cat("x");
  CHECK(std::abs(static_cast<double>(x) / n - 0.5) < 0.02);
}

TEST_CASE("property: exact distribution equals brute-force walk enumeration") {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const auto schema = fixtures::random_schema(rng, 4, 5);
    const auto db = fixtures::random_database(schema, rng, 40);
    const RelationId start = uniform_index(rng, schema.relations().size());
    for (const auto& s : enumerate_walk_schemes(schema, start, 3)) {
      for (FactId f : db.facts_of(start)) {
        const auto got = exact_dest_distribution(db, f, s);
        const auto want = fixtures::brute_force_destinations(db, f, s);
        REQUIRE(got.size() == want.size());
        double sum = 0.0;
        for (const auto& [g, p] : want) {
          REQUIRE(got.count(g));
          CHECK(got.at(g) == doctest::Approx(p).epsilon(1e-12));
          sum += got.at(g);
        }
        if (!got.empty()) CHECK(std::abs(sum - 1.0) < 1e-12);
      }
    }
  }
}

TEST_CASE("property: sampling converges to the exact law") {
  Rng rng(33);
  for (int trial = 0; trial < 5; ++trial) {
    const auto schema = fixtures::random_schema(rng, 3, 4);
    const auto db = fixtures::random_database(schema, rng, 30);
    const RelationId start = uniform_index(rng, schema.relations().size());
    const auto schemes = enumerate_walk_schemes(schema, start, 2);
    const auto& s = schemes.back();
    for (FactId f : db.facts_of(start)) {
      const auto exact = exact_dest_distribution(db, f, s);
      if (exact.empty()) continue;
      std::map<FactId, std::size_t> counts;
      std::size_t n = 0;
      Rng walk_rng(derive_seed(trial, "walk", f));
      while (n < 20000) {
        const FactId g = sample_destination(db, f, s, walk_rng);
        if (g == kNoFact) continue;
        ++counts[g];
        ++n;
      }
      CHECK(total_variation(exact, counts, n) < 0.03);
    }
  }
}

TEST_CASE("sampling is deterministic under a seed") {
  Rng rng(4);
  const auto schema = fixtures::random_schema(rng, 4, 5);
  const auto db = fixtures::random_database(schema, rng, 50);
  const auto schemes = enumerate_walk_schemes(schema, 0, 3);
  Rng a(99), b(99);
  for (int i = 0; i < 500; ++i) {
    const auto& s = schemes[i % schemes.size()];
    const FactId f = db.facts_of(0)[i % db.facts_of(0).size()];
    CHECK(sample_walk(db, f, s, a) == sample_walk(db, f, s, b));
  }
}
