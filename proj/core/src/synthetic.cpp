#include "relembed/synthetic.hpp"

#include <random>

#include "relembed/random.hpp"

namespace relembed {

namespace {

AttributeDecl attr(std::string name, DomainKind kind = DomainKind::kCategorical, bool nullable = false) {
  return {std::move(name), kind, nullable};
}

}  // namespace

PlantedDataset make_planted_dataset(const PlantedParams& params) {
  RelationSchema p{"P", {attr("pid"), attr("y"), attr("a1"), attr("c1"), attr("fg")}, {0}};
  RelationSchema g{"G", {attr("gid"), attr("gname", DomainKind::kText), attr("gregion"), attr("gconst")}, {0}};
  RelationSchema e{"E", {attr("eid"), attr("fp"), attr("etype"), attr("econst")}, {0}};
  std::vector<ForeignKey> fks{{"P.fg", 0, {4}, 1, {0}}, {"E.fp", 2, {1}, 0, {0}}};
  DatabaseSchema schema({p, g, e}, fks);

  Rng rng = make_rng(params.seed, "planted");
  std::bernoulli_distribution noisy(params.label_noise);
  std::vector<NewFact> facts;
  auto cat = [](std::string s) { return Value::categorical(std::move(s)); };

  // Groups alternate between two regions; the region decides the label.
  for (std::size_t i = 0; i < params.n_groups; ++i) {
    facts.push_back({1, {cat("g" + std::to_string(i)), Value::text("group " + std::to_string(i)),
                         cat(i % 2 ? "south" : "north"), cat("same")}});
  }
  std::size_t event = 0;
  for (std::size_t i = 0; i < params.n_start; ++i) {
    const std::size_t group = uniform_index(rng, params.n_groups);
    int y = static_cast<int>(group % 2);
    if (noisy(rng)) y = static_cast<int>(uniform_index(rng, 2));
    // a1 takes one of three values per label side.
    const std::string a1 = (y ? "b" : "a") + std::to_string(uniform_index(rng, 3));
    const std::string pid = "p" + std::to_string(i);
    facts.push_back({0, {cat(pid), cat(std::to_string(y)), cat(a1), cat("const"),
                         cat("g" + std::to_string(group))}});
    const std::size_t n_events = 1 + uniform_index(rng, 3);
    for (std::size_t k = 0; k < n_events; ++k) {
      std::bernoulli_distribution typical(0.85);
      const int side = typical(rng) ? y : 1 - y;
      const std::string etype = (side ? "u" : "t") + std::to_string(uniform_index(rng, 2));
      facts.push_back({2, {cat("e" + std::to_string(event++)), cat(pid), cat(etype), cat("const")}});
    }
  }

  PlantedDataset out;
  out.db = Database(std::move(schema), std::move(facts));
  out.informative = {{"P", "a1"}, {"P", "fg"}, {"G", "gid"}, {"G", "gname"}, {"G", "gregion"}, {"E", "etype"}};
  out.noise = {{"P", "pid"}, {"P", "c1"}, {"G", "gconst"}, {"E", "eid"}, {"E", "fp"}, {"E", "econst"}};
  return out;
}

}  // namespace relembed
