#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "relembed/value.hpp"

namespace relembed {

using RelationId = std::size_t;
using AttrId = std::size_t;
using FkId = std::size_t;

struct AttributeDecl {
  std::string name;
  DomainKind kind = DomainKind::kCategorical;
  bool nullable = true;
};

struct RelationSchema {
  std::string name;
  std::vector<AttributeDecl> attributes;
  std::vector<AttrId> key;  // indices into attributes, in declaration order of the key

  std::optional<AttrId> find_attribute(std::string_view attr) const;
  AttrId attribute(std::string_view attr) const;  // throws SchemaError
  bool is_key_attribute(AttrId attr) const;
};

/// Inclusion dependency src[src_attrs] ⊆ dst[dst_attrs]; dst_attrs is key(dst) as a set.
struct ForeignKey {
  std::string name;
  RelationId src = 0;
  std::vector<AttrId> src_attrs;
  RelationId dst = 0;
  std::vector<AttrId> dst_attrs;
};

class DatabaseSchema {
 public:
  DatabaseSchema() = default;

  /// Validates and takes ownership; throws SchemaError on any invariant violation.
  DatabaseSchema(std::vector<RelationSchema> relations, std::vector<ForeignKey> foreign_keys);

  const std::vector<RelationSchema>& relations() const { return relations_; }
  const std::vector<ForeignKey>& foreign_keys() const { return foreign_keys_; }

  const RelationSchema& relation(RelationId id) const { return relations_.at(id); }
  const ForeignKey& foreign_key(FkId id) const { return foreign_keys_.at(id); }

  std::optional<RelationId> find_relation(std::string_view name) const;
  RelationId relation_id(std::string_view name) const;  // throws SchemaError

  /// Copy of this schema with one non-key, non-FK attribute removed.
  DatabaseSchema without_attribute(RelationId rel, AttrId attr) const;

  friend bool operator==(const DatabaseSchema&, const DatabaseSchema&);

 private:
  void validate() const;

  std::vector<RelationSchema> relations_;
  std::vector<ForeignKey> foreign_keys_;
};

bool operator==(const AttributeDecl& a, const AttributeDecl& b);
bool operator==(const RelationSchema& a, const RelationSchema& b);
bool operator==(const ForeignKey& a, const ForeignKey& b);

/// Parses the JSON schema descriptor:
///   {"relations": [{"name", "attributes": [{"name", "kind", "nullable"}], "key": [...]}],
///    "foreign_keys": [{"name"?, "src", "src_attrs", "dst", "dst_attrs"}]}
DatabaseSchema parse_schema(const nlohmann::json& descriptor);
DatabaseSchema load_schema(const std::filesystem::path& path);
nlohmann::json schema_to_json(const DatabaseSchema& schema);

}  // namespace relembed
