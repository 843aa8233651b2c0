#include "relembed/walks.hpp"

#include <algorithm>
#include <tuple>

#include <nlohmann/json.hpp>

#include "relembed/error.hpp"

namespace relembed {

namespace {

constexpr const char* kDash = "\xE2\x80\x94";  // U+2014

std::string join_attrs(const RelationSchema& rel, const std::vector<AttrId>& attrs) {
  std::string out;
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (i) out += ",";
    out += rel.attributes[attrs[i]].name;
  }
  return out;
}

void check_start(const Database& db, FactId f, const WalkScheme& scheme) {
  if (f >= db.size() || db.fact(f).relation != scheme.start) {
    throw SchemaError("fact " + std::to_string(f) + " is not in the start relation '" +
                      db.schema().relation(scheme.start).name + "' of the walk scheme");
  }
}

/// Successor candidates of `f` under one hop.
std::span<const FactId> hop(const Database& db, FactId f, const WalkStep& step, FactId& single) {
  if (step.direction == Direction::kForward) {
    single = db.forward(step.fk, f);
    if (single == kNoFact) return {};
    return {&single, 1};
  }
  return db.backward(step.fk, f);
}

}  // namespace

RelationId step_target(const DatabaseSchema& schema, RelationId from, const WalkStep& step) {
  const auto& fk = schema.foreign_key(step.fk);
  if (step.direction == Direction::kForward) {
    if (fk.src != from) throw SchemaError("forward step over '" + fk.name + "' does not start at " + schema.relation(from).name);
    return fk.dst;
  }
  if (fk.dst != from) throw SchemaError("backward step over '" + fk.name + "' does not start at " + schema.relation(from).name);
  return fk.src;
}

RelationId end_relation(const DatabaseSchema& schema, const WalkScheme& scheme) {
  RelationId cur = scheme.start;
  for (const auto& step : scheme.steps) cur = step_target(schema, cur, step);
  return cur;
}

std::vector<RelationId> relations_along(const DatabaseSchema& schema, const WalkScheme& scheme) {
  std::vector<RelationId> out{scheme.start};
  for (const auto& step : scheme.steps) out.push_back(step_target(schema, out.back(), step));
  return out;
}

std::string scheme_text(const DatabaseSchema& schema, const WalkScheme& scheme) {
  RelationId cur = scheme.start;
  std::string out = schema.relation(cur).name;
  for (const auto& step : scheme.steps) {
    const auto& fk = schema.foreign_key(step.fk);
    RelationId next = step_target(schema, cur, step);
    const bool fwd = step.direction == Direction::kForward;
    out += "[" + join_attrs(schema.relation(cur), fwd ? fk.src_attrs : fk.dst_attrs) + "]";
    out += kDash;
    out += "[" + join_attrs(schema.relation(next), fwd ? fk.dst_attrs : fk.src_attrs) + "]";
    out += schema.relation(next).name;
    cur = next;
  }
  return out;
}

std::string targeted_text(const DatabaseSchema& schema, const TargetedWalkScheme& tws) {
  RelationId end = end_relation(schema, tws.scheme);
  return scheme_text(schema, tws.scheme) + "." + schema.relation(end).attributes.at(tws.target).name;
}

nlohmann::json targeted_to_json(const DatabaseSchema& schema, const TargetedWalkScheme& tws) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& step : tws.scheme.steps) {
    steps.push_back({{"fk", schema.foreign_key(step.fk).name},
                     {"direction", step.direction == Direction::kForward ? "forward" : "backward"}});
  }
  RelationId end = end_relation(schema, tws.scheme);
  return {{"text", targeted_text(schema, tws)},
          {"start", schema.relation(tws.scheme.start).name},
          {"steps", steps},
          {"target", schema.relation(end).attributes.at(tws.target).name}};
}

TargetedWalkScheme targeted_from_json(const DatabaseSchema& schema, const nlohmann::json& j) {
  try {
    TargetedWalkScheme tws;
    tws.scheme.start = schema.relation_id(j.at("start").get<std::string>());
    for (const auto& s : j.at("steps")) {
      const auto name = s.at("fk").get<std::string>();
      const auto dir = s.at("direction").get<std::string>();
      WalkStep step;
      bool found = false;
      for (FkId fk = 0; fk < schema.foreign_keys().size(); ++fk) {
        if (schema.foreign_key(fk).name == name) {
          step.fk = fk;
          found = true;
        }
      }
      if (!found) throw SchemaError("unknown foreign key '" + name + "'");
      if (dir == "forward") {
        step.direction = Direction::kForward;
      } else if (dir == "backward") {
        step.direction = Direction::kBackward;
      } else {
        throw SchemaError("unknown step direction '" + dir + "'");
      }
      tws.scheme.steps.push_back(step);
    }
    RelationId end = end_relation(schema, tws.scheme);
    tws.target = schema.relation(end).attribute(j.at("target").get<std::string>());
    return tws;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("walk scheme: ") + e.what());
  }
}

std::vector<WalkScheme> enumerate_walk_schemes(const DatabaseSchema& schema, RelationId start,
                                               std::size_t max_length) {
  if (start >= schema.relations().size()) throw SchemaError("unknown relation id " + std::to_string(start));

  // Hops available from each relation, sorted by (fk name, direction).
  std::vector<std::vector<WalkStep>> options(schema.relations().size());
  for (FkId fk = 0; fk < schema.foreign_keys().size(); ++fk) {
    const auto& def = schema.foreign_key(fk);
    options[def.src].push_back({fk, Direction::kForward});
    options[def.dst].push_back({fk, Direction::kBackward});
  }
  for (auto& opts : options) {
    std::sort(opts.begin(), opts.end(), [&](const WalkStep& a, const WalkStep& b) {
      return std::tie(schema.foreign_key(a.fk).name, a.direction) <
             std::tie(schema.foreign_key(b.fk).name, b.direction);
    });
  }

  std::vector<WalkScheme> all{WalkScheme{start, {}}};
  std::vector<std::pair<WalkScheme, RelationId>> frontier{{all.front(), start}};
  for (std::size_t len = 1; len <= max_length; ++len) {
    std::vector<std::pair<WalkScheme, RelationId>> next;
    for (const auto& [scheme, end] : frontier) {
      for (const auto& step : options[end]) {
        WalkScheme extended = scheme;
        extended.steps.push_back(step);
        all.push_back(extended);
        next.emplace_back(std::move(extended), step_target(schema, end, step));
      }
    }
    frontier = std::move(next);
  }
  return all;
}

std::vector<TargetedWalkScheme> enumerate_targeted(const DatabaseSchema& schema, RelationId start,
                                                   std::size_t max_length) {
  std::vector<TargetedWalkScheme> out;
  for (auto& scheme : enumerate_walk_schemes(schema, start, max_length)) {
    const auto n_attrs = schema.relation(end_relation(schema, scheme)).attributes.size();
    for (AttrId a = 0; a < n_attrs; ++a) out.push_back({scheme, a});
  }
  return out;
}

std::optional<Walk> sample_walk(const Database& db, FactId f, const WalkScheme& scheme, Rng& rng) {
  check_start(db, f, scheme);
  Walk walk{f};
  walk.reserve(scheme.length() + 1);
  FactId single = kNoFact;
  for (const auto& step : scheme.steps) {
    auto candidates = hop(db, walk.back(), step, single);
    if (candidates.empty()) return std::nullopt;
    walk.push_back(candidates.size() == 1 ? candidates[0] : candidates[uniform_index(rng, candidates.size())]);
  }
  return walk;
}

FactId sample_destination(const Database& db, FactId f, const WalkScheme& scheme, Rng& rng) {
  FactId cur = f;
  FactId single = kNoFact;
  for (const auto& step : scheme.steps) {
    auto candidates = hop(db, cur, step, single);
    if (candidates.empty()) return kNoFact;
    cur = candidates.size() == 1 ? candidates[0] : candidates[uniform_index(rng, candidates.size())];
  }
  return cur;
}

DestDistribution exact_dest_distribution(const Database& db, FactId f, const WalkScheme& scheme) {
  check_start(db, f, scheme);
  DestDistribution mass{{f, 1.0}};
  FactId single = kNoFact;
  for (const auto& step : scheme.steps) {
    DestDistribution next;
    for (const auto& [g, p] : mass) {
      auto candidates = hop(db, g, step, single);
      if (candidates.empty()) continue;
      const double share = p / static_cast<double>(candidates.size());
      for (FactId h : candidates) next[h] += share;
    }
    mass = std::move(next);
  }
  double total = 0.0;
  for (const auto& [g, p] : mass) total += p;
  if (total <= 0.0) return {};
  for (auto& [g, p] : mass) p /= total;
  return mass;
}

DestDistribution exact_target_distribution(const Database& db, FactId f, const TargetedWalkScheme& tws) {
  DestDistribution dist = exact_dest_distribution(db, f, tws.scheme);
  double total = 0.0;
  for (auto it = dist.begin(); it != dist.end();) {
    if (db.value(it->first, tws.target).is_null()) {
      it = dist.erase(it);
    } else {
      total += it->second;
      ++it;
    }
  }
  if (dist.empty()) return {};
  for (auto& [g, p] : dist) p /= total;
  return dist;
}

std::optional<FactId> sample_target_destination(const Database& db, FactId f, const TargetedWalkScheme& tws,
                                                Rng& rng, std::size_t retry_cap) {
  check_start(db, f, tws.scheme);
  for (std::size_t attempt = 0; attempt < retry_cap; ++attempt) {
    FactId g = sample_destination(db, f, tws.scheme, rng);
    if (g != kNoFact && !db.value(g, tws.target).is_null()) return g;
  }
  return std::nullopt;
}

std::optional<Value> dest_attr_sample(const Database& db, FactId f, const TargetedWalkScheme& tws, Rng& rng,
                                      std::size_t retry_cap) {
  RelationId end = end_relation(db.schema(), tws.scheme);
  if (tws.target >= db.schema().relation(end).attributes.size()) {
    throw SchemaError("target attribute is not an attribute of the scheme's end relation");
  }
  auto g = sample_target_destination(db, f, tws, rng, retry_cap);
  if (!g) return std::nullopt;
  return db.value(*g, tws.target);
}

std::vector<FactId> facts_with_complete_walk(const Database& db, const WalkScheme& scheme) {
  const auto rels = relations_along(db.schema(), scheme);
  // alive[g]: a walk suffix from g (at the current position) completes.
  std::vector<char> alive(db.size(), 0);
  for (FactId g : db.facts_of(rels.back())) alive[g] = 1;
  FactId single = kNoFact;
  for (std::size_t k = scheme.length(); k-- > 0;) {
    std::vector<char> prev(db.size(), 0);
    for (FactId g : db.facts_of(rels[k])) {
      for (FactId h : hop(db, g, scheme.steps[k], single)) {
        if (alive[h]) {
          prev[g] = 1;
          break;
        }
      }
    }
    alive = std::move(prev);
  }
  std::vector<FactId> out;
  for (FactId g : db.facts_of(scheme.start)) {
    if (alive[g]) out.push_back(g);
  }
  return out;
}

}  // namespace relembed
