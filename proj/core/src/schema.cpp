#include "relembed/schema.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "relembed/error.hpp"

namespace relembed {

using nlohmann::json;

std::optional<AttrId> RelationSchema::find_attribute(std::string_view attr) const {
  for (AttrId i = 0; i < attributes.size(); ++i) {
    if (attributes[i].name == attr) return i;
  }
  return std::nullopt;
}

AttrId RelationSchema::attribute(std::string_view attr) const {
  if (auto id = find_attribute(attr)) return *id;
  throw SchemaError("unknown attribute '" + std::string(attr) + "' in relation '" + name + "'");
}

bool RelationSchema::is_key_attribute(AttrId attr) const {
  return std::find(key.begin(), key.end(), attr) != key.end();
}

bool operator==(const AttributeDecl& a, const AttributeDecl& b) {
  return a.name == b.name && a.kind == b.kind && a.nullable == b.nullable;
}
bool operator==(const RelationSchema& a, const RelationSchema& b) {
  return a.name == b.name && a.attributes == b.attributes && a.key == b.key;
}
bool operator==(const ForeignKey& a, const ForeignKey& b) {
  return a.name == b.name && a.src == b.src && a.src_attrs == b.src_attrs && a.dst == b.dst &&
         a.dst_attrs == b.dst_attrs;
}
bool operator==(const DatabaseSchema& a, const DatabaseSchema& b) {
  return a.relations_ == b.relations_ && a.foreign_keys_ == b.foreign_keys_;
}

DatabaseSchema::DatabaseSchema(std::vector<RelationSchema> relations,
                               std::vector<ForeignKey> foreign_keys)
    : relations_(std::move(relations)), foreign_keys_(std::move(foreign_keys)) {
  validate();
}

void DatabaseSchema::validate() const {
  std::set<std::string> rel_names;
  for (const auto& rel : relations_) {
    if (rel.name.empty()) throw SchemaError("relation with empty name");
    if (!rel_names.insert(rel.name).second) throw SchemaError("duplicate relation '" + rel.name + "'");
    std::set<std::string> attr_names;
    for (const auto& a : rel.attributes) {
      if (a.name.empty()) throw SchemaError("empty attribute name in '" + rel.name + "'");
      if (!attr_names.insert(a.name).second) {
        throw SchemaError("duplicate attribute '" + a.name + "' in '" + rel.name + "'");
      }
    }
    if (rel.key.empty()) throw SchemaError("relation '" + rel.name + "' has an empty key");
    std::set<AttrId> key_set(rel.key.begin(), rel.key.end());
    if (key_set.size() != rel.key.size()) throw SchemaError("repeated key attribute in '" + rel.name + "'");
    for (AttrId k : rel.key) {
      if (k >= rel.attributes.size()) throw SchemaError("unknown attribute in key of '" + rel.name + "'");
    }
  }

  std::set<std::string> fk_names;
  for (const auto& fk : foreign_keys_) {
    if (!fk_names.insert(fk.name).second) throw SchemaError("duplicate foreign key name '" + fk.name + "'");
    if (fk.src >= relations_.size() || fk.dst >= relations_.size()) {
      throw SchemaError("foreign key '" + fk.name + "' references an unknown relation");
    }
    const auto& src = relations_[fk.src];
    const auto& dst = relations_[fk.dst];
    if (fk.src_attrs.empty() || fk.src_attrs.size() != fk.dst_attrs.size()) {
      throw SchemaError("foreign key '" + fk.name + "' must pair equally many (>= 1) attributes");
    }
    for (AttrId a : fk.src_attrs) {
      if (a >= src.attributes.size()) throw SchemaError("unknown attribute in foreign key '" + fk.name + "'");
    }
    for (AttrId a : fk.dst_attrs) {
      if (a >= dst.attributes.size()) throw SchemaError("unknown attribute in foreign key '" + fk.name + "'");
    }
    if (std::set<AttrId>(fk.src_attrs.begin(), fk.src_attrs.end()).size() != fk.src_attrs.size()) {
      throw SchemaError("foreign key '" + fk.name + "' repeats a source attribute");
    }
    std::set<AttrId> dst_set(fk.dst_attrs.begin(), fk.dst_attrs.end());
    if (dst_set.size() != fk.dst_attrs.size() || dst_set != std::set<AttrId>(dst.key.begin(), dst.key.end())) {
      throw SchemaError("FK must target key: '" + fk.name + "' does not reference key(" + dst.name + ")");
    }
    for (std::size_t i = 0; i < fk.src_attrs.size(); ++i) {
      if (src.attributes[fk.src_attrs[i]].kind != dst.attributes[fk.dst_attrs[i]].kind) {
        throw SchemaError("foreign key '" + fk.name + "' pairs attributes of different kinds");
      }
    }
  }
}

std::optional<RelationId> DatabaseSchema::find_relation(std::string_view name) const {
  for (RelationId i = 0; i < relations_.size(); ++i) {
    if (relations_[i].name == name) return i;
  }
  return std::nullopt;
}

RelationId DatabaseSchema::relation_id(std::string_view name) const {
  if (auto id = find_relation(name)) return *id;
  throw SchemaError("unknown relation '" + std::string(name) + "'");
}

DatabaseSchema DatabaseSchema::without_attribute(RelationId rel, AttrId attr) const {
  const auto& r = relation(rel);
  if (attr >= r.attributes.size()) throw SchemaError("attribute index out of range");
  if (r.is_key_attribute(attr)) {
    throw SchemaError("cannot remove key attribute '" + r.attributes[attr].name + "'");
  }
  for (const auto& fk : foreign_keys_) {
    bool used = (fk.src == rel && std::count(fk.src_attrs.begin(), fk.src_attrs.end(), attr)) ||
                (fk.dst == rel && std::count(fk.dst_attrs.begin(), fk.dst_attrs.end(), attr));
    if (used) {
      throw SchemaError("cannot remove attribute '" + r.attributes[attr].name +
                        "' used by foreign key '" + fk.name + "'");
    }
  }
  auto shift = [attr](AttrId a) { return a > attr ? a - 1 : a; };

  auto relations = relations_;
  auto& target = relations[rel];
  target.attributes.erase(target.attributes.begin() + static_cast<std::ptrdiff_t>(attr));
  for (auto& k : target.key) k = shift(k);
  auto fks = foreign_keys_;
  for (auto& fk : fks) {
    if (fk.src == rel) for (auto& a : fk.src_attrs) a = shift(a);
    if (fk.dst == rel) for (auto& a : fk.dst_attrs) a = shift(a);
  }
  return DatabaseSchema(std::move(relations), std::move(fks));
}

namespace {

std::vector<AttrId> resolve_attrs(const RelationSchema& rel, const json& names) {
  std::vector<AttrId> out;
  for (const auto& n : names) out.push_back(rel.attribute(n.get<std::string>()));
  return out;
}

}  // namespace

DatabaseSchema parse_schema(const json& descriptor) {
  try {
    std::vector<RelationSchema> relations;
    for (const auto& r : descriptor.at("relations")) {
      RelationSchema rel;
      rel.name = r.at("name").get<std::string>();
      for (const auto& a : r.at("attributes")) {
        AttributeDecl decl;
        decl.name = a.at("name").get<std::string>();
        decl.kind = parse_domain_kind(a.value("kind", std::string("categorical")));
        decl.nullable = a.value("nullable", true);
        rel.attributes.push_back(std::move(decl));
      }
      rel.key = resolve_attrs(rel, r.at("key"));
      relations.push_back(std::move(rel));
    }

    auto rel_index = [&](const std::string& name) -> RelationId {
      for (RelationId i = 0; i < relations.size(); ++i) {
        if (relations[i].name == name) return i;
      }
      throw SchemaError("unknown relation '" + name + "' in foreign key");
    };

    std::vector<ForeignKey> fks;
    if (descriptor.contains("foreign_keys")) {
      for (const auto& f : descriptor.at("foreign_keys")) {
        ForeignKey fk;
        fk.src = rel_index(f.at("src").get<std::string>());
        fk.dst = rel_index(f.at("dst").get<std::string>());
        fk.src_attrs = resolve_attrs(relations[fk.src], f.at("src_attrs"));
        fk.dst_attrs = resolve_attrs(relations[fk.dst], f.at("dst_attrs"));
        if (f.contains("name")) {
          fk.name = f.at("name").get<std::string>();
        } else {
          fk.name = relations[fk.src].name + "[";
          for (std::size_t i = 0; i < fk.src_attrs.size(); ++i) {
            if (i) fk.name += ",";
            fk.name += relations[fk.src].attributes[fk.src_attrs[i]].name;
          }
          fk.name += "]->" + relations[fk.dst].name;
        }
        fks.push_back(std::move(fk));
      }
    }
    return DatabaseSchema(std::move(relations), std::move(fks));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("schema descriptor: ") + e.what());
  }
}

DatabaseSchema load_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open schema descriptor " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw SchemaError("parse error in " + path.string() + ": " + e.what());
  }
  return parse_schema(j);
}

json schema_to_json(const DatabaseSchema& schema) {
  json rels = json::array();
  for (const auto& r : schema.relations()) {
    json attrs = json::array();
    for (const auto& a : r.attributes) {
      attrs.push_back({{"name", a.name}, {"kind", to_string(a.kind)}, {"nullable", a.nullable}});
    }
    json key = json::array();
    for (AttrId k : r.key) key.push_back(r.attributes[k].name);
    rels.push_back({{"name", r.name}, {"attributes", attrs}, {"key", key}});
  }
  json fks = json::array();
  for (const auto& fk : schema.foreign_keys()) {
    const auto& src = schema.relation(fk.src);
    const auto& dst = schema.relation(fk.dst);
    json sa = json::array(), da = json::array();
    for (AttrId a : fk.src_attrs) sa.push_back(src.attributes[a].name);
    for (AttrId a : fk.dst_attrs) da.push_back(dst.attributes[a].name);
    fks.push_back({{"name", fk.name}, {"src", src.name}, {"src_attrs", sa}, {"dst", dst.name}, {"dst_attrs", da}});
  }
  return {{"relations", rels}, {"foreign_keys", fks}};
}

}  // namespace relembed
