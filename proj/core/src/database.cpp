#include "relembed/database.hpp"

#include <algorithm>

#include "relembed/csv.hpp"
#include "relembed/error.hpp"

namespace relembed {

namespace {

std::string describe_key(const KeyTuple& key) {
  std::string s = "(";
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (i) s += ",";
    s += key[i].to_string();
  }
  return s + ")";
}

/// Source-side tuple of `fk` for a fact, arranged in key(dst) order; empty if any part is Null.
KeyTuple referenced_key(const DatabaseSchema& schema, const ForeignKey& fk, const std::vector<Value>& values) {
  const auto& dst = schema.relation(fk.dst);
  KeyTuple key;
  key.reserve(dst.key.size());
  for (AttrId k : dst.key) {
    auto pos = std::find(fk.dst_attrs.begin(), fk.dst_attrs.end(), k) - fk.dst_attrs.begin();
    const Value& v = values[fk.src_attrs[static_cast<std::size_t>(pos)]];
    if (v.is_null()) return {};
    key.push_back(v);
  }
  return key;
}

}  // namespace

Database::Database(DatabaseSchema schema, std::vector<NewFact> facts) : schema_(std::move(schema)) {
  const auto n_rel = schema_.relations().size();
  by_relation_.resize(n_rel);
  key_index_.resize(n_rel);
  fk_index_.resize(schema_.foreign_keys().size());
  for (const auto& nf : facts) append(nf);
  for (FactId id = 0; id < facts_.size(); ++id) link(id);
}

void Database::check_fact(const NewFact& nf) const {
  if (nf.relation >= schema_.relations().size()) throw IntegrityError("fact of unknown relation");
  const auto& rel = schema_.relation(nf.relation);
  if (nf.values.size() != rel.attributes.size()) {
    throw IntegrityError("arity mismatch in '" + rel.name + "': expected " +
                         std::to_string(rel.attributes.size()) + " values, got " +
                         std::to_string(nf.values.size()));
  }
  for (AttrId a = 0; a < rel.attributes.size(); ++a) {
    const auto& decl = rel.attributes[a];
    const Value& v = nf.values[a];
    if (!v.matches(decl.kind)) {
      throw IntegrityError("value of wrong kind for '" + rel.name + "." + decl.name + "'");
    }
    if (v.is_null() && rel.is_key_attribute(a)) {
      throw IntegrityError("null in key attribute '" + rel.name + "." + decl.name + "'");
    }
    if (v.is_null() && !decl.nullable) {
      throw IntegrityError("null in non-nullable attribute '" + rel.name + "." + decl.name + "'");
    }
  }
}

void Database::append(const NewFact& nf) {
  check_fact(nf);
  const auto& rel = schema_.relation(nf.relation);
  Fact f;
  f.relation = nf.relation;
  f.id = static_cast<FactId>(facts_.size());
  f.row = by_relation_[nf.relation].size();
  f.values = nf.values;

  KeyTuple key;
  for (AttrId k : rel.key) key.push_back(f.values[k]);
  auto [it, inserted] = key_index_[nf.relation].emplace(key, f.id);
  if (!inserted) throw IntegrityError("key duplicate " + describe_key(key) + " in '" + rel.name + "'");

  by_relation_[nf.relation].push_back(f.id);
  for (FkId fk = 0; fk < schema_.foreign_keys().size(); ++fk) {
    const auto& def = schema_.foreign_key(fk);
    if (def.src == nf.relation) fk_index_[fk].forward.push_back(kNoFact);
    if (def.dst == nf.relation) fk_index_[fk].backward.emplace_back();
  }
  facts_.push_back(std::move(f));
}

void Database::link(FactId id) {
  const Fact& f = facts_[id];
  for (FkId fk = 0; fk < schema_.foreign_keys().size(); ++fk) {
    const auto& def = schema_.foreign_key(fk);
    if (def.src != f.relation) continue;
    KeyTuple key = referenced_key(schema_, def, f.values);
    if (key.empty()) continue;
    auto target = find_by_key(def.dst, key);
    if (!target) {
      throw IntegrityError("dangling foreign key '" + def.name + "': " +
                           schema_.relation(f.relation).name + " fact " + std::to_string(f.row) +
                           " references missing " + schema_.relation(def.dst).name + describe_key(key));
    }
    fk_index_[fk].forward[f.row] = *target;
    fk_index_[fk].backward[facts_[*target].row].push_back(id);
  }
}

Database Database::load(DatabaseSchema schema, const std::filesystem::path& dir) {
  std::vector<NewFact> facts;
  for (RelationId r = 0; r < schema.relations().size(); ++r) {
    auto rows = read_relation_csv(schema, r, dir / (schema.relation(r).name + ".csv"));
    facts.insert(facts.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
  }
  return Database(std::move(schema), std::move(facts));
}

std::vector<NewFact> read_relation_csv(const DatabaseSchema& schema, RelationId rel_id,
                                       const std::filesystem::path& path) {
  const auto& rel = schema.relation(rel_id);
  auto rows = csv::read_file(path);
  if (rows.empty()) throw IntegrityError(path.string() + ": missing header row");
  const auto& header = rows.front();
  bool header_ok = header.size() == rel.attributes.size();
  for (std::size_t i = 0; header_ok && i < header.size(); ++i) header_ok = header[i] == rel.attributes[i].name;
  if (!header_ok) {
    throw IntegrityError(path.string() + ": header does not match the attributes of '" + rel.name + "'");
  }
  std::vector<NewFact> out;
  out.reserve(rows.size() - 1);
  for (std::size_t line = 1; line < rows.size(); ++line) {
    const auto& row = rows[line];
    if (row.size() == 1 && row[0].empty()) continue;  // blank line
    if (row.size() != rel.attributes.size()) {
      throw IntegrityError(path.string() + ":" + std::to_string(line + 1) + ": arity mismatch");
    }
    NewFact nf{rel_id, {}};
    nf.values.reserve(row.size());
    for (std::size_t a = 0; a < row.size(); ++a) {
      try {
        nf.values.push_back(Value::parse(row[a], rel.attributes[a].kind));
      } catch (const IntegrityError& e) {
        throw IntegrityError(path.string() + ":" + std::to_string(line + 1) + ": " + e.what());
      }
    }
    out.push_back(std::move(nf));
  }
  return out;
}

std::optional<FactId> Database::find_by_key(RelationId rel, const KeyTuple& key) const {
  const auto& index = key_index_.at(rel);
  auto it = index.find(key);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

KeyTuple Database::key_of(FactId id) const {
  const Fact& f = fact(id);
  KeyTuple key;
  for (AttrId k : schema_.relation(f.relation).key) key.push_back(f.values[k]);
  return key;
}

Database Database::insert_facts(const std::vector<NewFact>& batch) const {
  Database out = *this;
  const auto first_new = static_cast<FactId>(out.facts_.size());
  for (const auto& nf : batch) out.append(nf);
  for (FactId id = first_new; id < out.facts_.size(); ++id) out.link(id);
  return out;
}

Database Database::subset(const std::vector<bool>& keep, std::vector<FactId>* old_to_new) const {
  if (keep.size() != facts_.size()) throw IntegrityError("subset mask has the wrong size");
  std::vector<NewFact> kept;
  std::vector<FactId> mapping(facts_.size(), kNoFact);
  for (const Fact& f : facts_) {
    if (!keep[f.id]) continue;
    mapping[f.id] = static_cast<FactId>(kept.size());
    kept.push_back({f.relation, f.values});
  }
  Database out(schema_, std::move(kept));
  if (old_to_new) *old_to_new = std::move(mapping);
  return out;
}

Database Database::without_attribute(RelationId rel, AttrId attr) const {
  DatabaseSchema reduced = schema_.without_attribute(rel, attr);
  Database out = *this;
  out.schema_ = std::move(reduced);
  for (FactId id : by_relation_[rel]) {
    auto& values = out.facts_[id].values;
    values.erase(values.begin() + static_cast<std::ptrdiff_t>(attr));
  }
  return out;
}

bool operator==(const Database& a, const Database& b) {
  return a.schema_ == b.schema_ && a.facts_ == b.facts_ && a.by_relation_ == b.by_relation_ &&
         a.key_index_ == b.key_index_ && a.fk_index_ == b.fk_index_;
}

std::set<Value> active_domain(const Database& db, std::string_view relation, std::string_view attr) {
  RelationId rel = db.schema().relation_id(relation);
  AttrId a = db.schema().relation(rel).attribute(attr);
  std::set<Value> out;
  for (FactId id : db.facts_of(rel)) {
    const Value& v = db.value(id, a);
    if (!v.is_null()) out.insert(v);
  }
  return out;
}

}  // namespace relembed
