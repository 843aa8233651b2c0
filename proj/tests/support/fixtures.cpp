#include "fixtures.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <tuple>

#include <unistd.h>

namespace fixtures {

Value cat(const std::string& s) { return Value::categorical(s); }

DatabaseSchema toy_schema() {
  RelationSchema r{"R", {{"A", DomainKind::kCategorical, false}}, {0}};
  RelationSchema s{"S", {{"B", DomainKind::kCategorical, false}, {"C", DomainKind::kCategorical, true}}, {0}};
  return DatabaseSchema({r, s}, {{"S[C]->R", 1, {1}, 0, {0}}});
}

Database toy_db() {
  return Database(toy_schema(), {{0, {cat("1")}}, {0, {cat("2")}}, {1, {cat("x"), cat("1")}}, {1, {cat("y"), cat("1")}}});
}

DatabaseSchema random_schema(Rng& rng, std::size_t max_relations, std::size_t max_fks) {
  const std::size_t n_rel = 1 + uniform_index(rng, max_relations);
  std::vector<RelationSchema> rels;
  for (std::size_t r = 0; r < n_rel; ++r) {
    RelationSchema rel;
    rel.name = "T" + std::to_string(r);
    const bool composite = uniform_index(rng, 4) == 0;
    rel.attributes.push_back({"id", DomainKind::kCategorical, false});
    rel.key.push_back(0);
    if (composite) {
      rel.attributes.push_back({"id2", DomainKind::kCategorical, false});
      rel.key.push_back(1);
    }
    const std::size_t payload = uniform_index(rng, 3);
    for (std::size_t a = 0; a < payload; ++a) {
      const bool numeric = uniform_index(rng, 3) == 0;
      rel.attributes.push_back({"v" + std::to_string(a), numeric ? DomainKind::kNumeric : DomainKind::kCategorical, true});
    }
    rels.push_back(std::move(rel));
  }
  std::vector<ForeignKey> fks;
  const std::size_t n_fk = uniform_index(rng, max_fks + 1);
  for (std::size_t i = 0; i < n_fk; ++i) {
    ForeignKey fk;
    fk.src = uniform_index(rng, n_rel);
    fk.dst = uniform_index(rng, n_rel);
    fk.name = "fk" + std::to_string(i);
    auto& src = rels[fk.src];
    const auto& dst_key = rels[fk.dst].key;
    for (std::size_t k = 0; k < dst_key.size(); ++k) {
      src.attributes.push_back({fk.name + "_" + std::to_string(k), DomainKind::kCategorical, true});
      fk.src_attrs.push_back(src.attributes.size() - 1);
      fk.dst_attrs.push_back(dst_key[k]);
    }
    fks.push_back(std::move(fk));
  }
  return DatabaseSchema(std::move(rels), std::move(fks));
}

Database random_database(const DatabaseSchema& schema, Rng& rng, std::size_t max_facts, double null_rate) {
  const std::size_t n_rel = schema.relations().size();
  std::vector<std::size_t> sizes(n_rel);
  std::size_t budget = max_facts;
  for (std::size_t r = 0; r < n_rel; ++r) {
    sizes[r] = std::min(budget, 1 + uniform_index(rng, std::max<std::size_t>(1, 2 * max_facts / n_rel)));
    budget -= sizes[r];
  }
  // Keys first, so foreign keys can point anywhere (including cycles).
  std::vector<std::vector<std::vector<Value>>> keys(n_rel);
  for (RelationId r = 0; r < n_rel; ++r) {
    const bool composite = schema.relation(r).key.size() == 2;
    for (std::size_t i = 0; i < sizes[r]; ++i) {
      if (composite) {
        keys[r].push_back({cat("k" + std::to_string(i / 2)), cat(std::to_string(i % 2))});
      } else {
        keys[r].push_back({cat("k" + std::to_string(i))});
      }
    }
  }
  std::bernoulli_distribution is_null(null_rate);
  std::vector<NewFact> facts;
  for (RelationId r = 0; r < n_rel; ++r) {
    const auto& rel = schema.relation(r);
    for (std::size_t i = 0; i < sizes[r]; ++i) {
      std::vector<Value> values(rel.attributes.size());
      for (std::size_t k = 0; k < rel.key.size(); ++k) values[rel.key[k]] = keys[r][i][k];
      for (AttrId a = 0; a < rel.attributes.size(); ++a) {
        if (rel.is_key_attribute(a) || rel.attributes[a].name[0] != 'v') continue;
        if (is_null(rng)) continue;
        if (rel.attributes[a].kind == DomainKind::kNumeric) {
          values[a] = Value::numeric(static_cast<double>(uniform_index(rng, 5)));
        } else {
          values[a] = cat("c" + std::to_string(uniform_index(rng, 3)));
        }
      }
      for (const auto& fk : schema.foreign_keys()) {
        if (fk.src != r) continue;
        if (keys[fk.dst].empty() || is_null(rng)) continue;
        const auto& target = keys[fk.dst][uniform_index(rng, keys[fk.dst].size())];
        for (std::size_t k = 0; k < fk.src_attrs.size(); ++k) values[fk.src_attrs[k]] = target[k];
      }
      facts.push_back({r, std::move(values)});
    }
  }
  return Database(schema, std::move(facts));
}

std::vector<WalkScheme> brute_force_schemes(const DatabaseSchema& schema, RelationId start, std::size_t max_length) {
  std::vector<WalkScheme> out;
  std::function<void(WalkScheme&, RelationId)> grow = [&](WalkScheme& s, RelationId at) {
    out.push_back(s);
    if (s.steps.size() == max_length) return;
    for (FkId fk = 0; fk < schema.foreign_keys().size(); ++fk) {
      const auto& def = schema.foreign_key(fk);
      if (def.src == at) {
        s.steps.push_back({fk, Direction::kForward});
        grow(s, def.dst);
        s.steps.pop_back();
      }
      if (def.dst == at) {
        s.steps.push_back({fk, Direction::kBackward});
        grow(s, def.src);
        s.steps.pop_back();
      }
    }
  };
  WalkScheme root{start, {}};
  grow(root, start);
  auto sort_key = [&](const WalkScheme& s) {
    std::vector<std::pair<std::string, int>> seq;
    for (const auto& st : s.steps) {
      seq.emplace_back(schema.foreign_key(st.fk).name, st.direction == Direction::kForward ? 0 : 1);
    }
    return std::make_pair(s.steps.size(), seq);
  };
  std::sort(out.begin(), out.end(), [&](const WalkScheme& a, const WalkScheme& b) { return sort_key(a) < sort_key(b); });
  return out;
}

FactId scan_forward(const Database& db, FkId fk, FactId f) {
  const auto& def = db.schema().foreign_key(fk);
  const auto& src = db.fact(f);
  for (AttrId a : def.src_attrs) {
    if (src.values[a].is_null()) return kNoFact;
  }
  for (const auto& g : db.facts()) {
    if (g.relation != def.dst) continue;
    bool match = true;
    for (std::size_t k = 0; k < def.src_attrs.size(); ++k) {
      match = match && src.values[def.src_attrs[k]] == g.values[def.dst_attrs[k]];
    }
    if (match) return g.id;
  }
  return kNoFact;
}

std::vector<FactId> scan_backward(const Database& db, FkId fk, FactId f) {
  const auto& def = db.schema().foreign_key(fk);
  std::vector<FactId> out;
  for (const auto& g : db.facts()) {
    if (g.relation == def.src && scan_forward(db, fk, g.id) == f) out.push_back(g.id);
  }
  return out;
}

std::map<FactId, double> brute_force_destinations(const Database& db, FactId f, const WalkScheme& scheme) {
  std::map<FactId, double> law;
  std::function<void(FactId, std::size_t, double)> walk = [&](FactId at, std::size_t depth, double p) {
    if (depth == scheme.steps.size()) {
      law[at] += p;
      return;
    }
    const auto& step = scheme.steps[depth];
    std::vector<FactId> next;
    if (step.direction == Direction::kForward) {
      const FactId g = scan_forward(db, step.fk, at);
      if (g != kNoFact) next.push_back(g);
    } else {
      next = scan_backward(db, step.fk, at);
    }
    for (FactId g : next) walk(g, depth + 1, p / static_cast<double>(next.size()));
  };
  walk(f, 0, 1.0);
  double total = 0.0;
  for (const auto& [g, p] : law) total += p;
  for (auto& [g, p] : law) p /= total;
  return law;
}

double brute_force_kd(const Database& db, FactId f, FactId f2, const TargetedWalkScheme& tws, const KernelSpec& spec) {
  auto law = [&](FactId x) {
    std::map<FactId, double> out;
    double total = 0.0;
    for (const auto& [g, p] : brute_force_destinations(db, x, tws.scheme)) {
      if (db.value(g, tws.target).is_null()) continue;
      out[g] = p;
      total += p;
    }
    for (auto& [g, p] : out) p /= total;
    return out;
  };
  double kd = 0.0;
  for (const auto& [g, p] : law(f)) {
    for (const auto& [h, q] : law(f2)) kd += p * q * kernel_eval(spec, db.value(g, tws.target), db.value(h, tws.target));
  }
  return kd;
}

std::filesystem::path temp_dir(const std::string& tag) {
  static int counter = 0;
  auto dir = std::filesystem::temp_directory_path() /
             ("relembed_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

}  // namespace fixtures
