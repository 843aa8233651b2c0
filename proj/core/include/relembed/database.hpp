#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <vector>

#include "relembed/schema.hpp"
#include "relembed/value.hpp"

namespace relembed {

/// Dense 0-based identity of a fact in load order over the whole database.
using FactId = std::uint32_t;
inline constexpr FactId kNoFact = std::numeric_limits<FactId>::max();

using KeyTuple = std::vector<Value>;

struct Fact {
  RelationId relation = 0;
  FactId id = 0;
  std::size_t row = 0;  // position within its relation
  std::vector<Value> values;

  friend bool operator==(const Fact&, const Fact&) = default;
};

/// A fact awaiting insertion; it has no id yet.
struct NewFact {
  RelationId relation = 0;
  std::vector<Value> values;
};

/// Traversal index of one foreign key, addressed by row within a relation.
struct FkIndex {
  std::vector<FactId> forward;                // per src row: referenced dst fact or kNoFact
  std::vector<std::vector<FactId>> backward;  // per dst row: referencing src facts, ascending

  friend bool operator==(const FkIndex&, const FkIndex&) = default;
};

/// Facts over a schema together with key and foreign-key indices.
///
/// A Database is a value: it is never mutated after construction, and
/// insert_facts() / subset() return new databases. Concurrent reads are safe.
class Database {
 public:
  Database() = default;

  /// Validates every fact and builds all indices; throws IntegrityError.
  Database(DatabaseSchema schema, std::vector<NewFact> facts);

  /// Reads <dir>/<relation>.csv for every relation of the schema.
  static Database load(DatabaseSchema schema, const std::filesystem::path& dir);

  const DatabaseSchema& schema() const { return schema_; }

  std::size_t size() const { return facts_.size(); }
  const Fact& fact(FactId id) const { return facts_.at(id); }
  const std::vector<Fact>& facts() const { return facts_; }
  std::span<const FactId> facts_of(RelationId rel) const { return by_relation_.at(rel); }

  const Value& value(FactId id, AttrId attr) const { return facts_[id].values[attr]; }

  /// Referenced fact of `src` under `fk`, or kNoFact if a source attribute is Null.
  FactId forward(FkId fk, FactId src) const {
    return fk_index_[fk].forward[facts_[src].row];
  }
  std::span<const FactId> backward(FkId fk, FactId dst) const {
    return fk_index_[fk].backward[facts_[dst].row];
  }

  std::optional<FactId> find_by_key(RelationId rel, const KeyTuple& key) const;
  KeyTuple key_of(FactId id) const;

  const FkIndex& fk_index(FkId fk) const { return fk_index_.at(fk); }

  /// Appends a batch atomically. Existing facts keep their ids; new facts get
  /// fresh ids in batch order. Throws IntegrityError and leaves *this intact.
  Database insert_facts(const std::vector<NewFact>& batch) const;

  /// Database restricted to facts with keep[id] set, renumbered in load order.
  /// `old_to_new`, if given, receives the id mapping (kNoFact for dropped facts).
  /// Throws IntegrityError if a kept fact references a dropped one.
  Database subset(const std::vector<bool>& keep, std::vector<FactId>* old_to_new = nullptr) const;

  /// Same facts with attribute `attr` of `rel` dropped from schema and values.
  Database without_attribute(RelationId rel, AttrId attr) const;

  friend bool operator==(const Database&, const Database&);

 private:
  void append(const NewFact& nf);
  void link(FactId id);
  void check_fact(const NewFact& nf) const;

  DatabaseSchema schema_;
  std::vector<Fact> facts_;
  std::vector<std::vector<FactId>> by_relation_;
  std::vector<std::map<KeyTuple, FactId>> key_index_;
  std::vector<FkIndex> fk_index_;
};

/// Active domain of an attribute: its distinct non-null values.
std::set<Value> active_domain(const Database& db, std::string_view relation, std::string_view attr);

/// Parses rows of `<relation>.csv`-style tables into NewFacts (header checked).
std::vector<NewFact> read_relation_csv(const DatabaseSchema& schema, RelationId rel,
                                       const std::filesystem::path& path);

}  // namespace relembed
