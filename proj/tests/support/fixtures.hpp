#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "relembed/database.hpp"
#include "relembed/kernels.hpp"
#include "relembed/random.hpp"
#include "relembed/walks.hpp"

namespace fixtures {

using namespace relembed;

/// R(A) and S(B, C) with S[C] referencing R[A]; all categorical.
DatabaseSchema toy_schema();
/// R = {1, 2}, S = {(x, 1), (y, 1)}.
Database toy_db();

Value cat(const std::string& s);

/// Random schema: 1..max_relations relations, 0..max_fks foreign keys
/// (self references allowed), some composite keys.
DatabaseSchema random_schema(Rng& rng, std::size_t max_relations = 5, std::size_t max_fks = 6);

/// Random facts over `schema`; at most max_facts in total. FK attributes are
/// Null with probability null_rate when nullable.
Database random_database(const DatabaseSchema& schema, Rng& rng, std::size_t max_facts = 50, double null_rate = 0.1);

/// Every step sequence of length <= max_length from `start`, found by trying
/// every (fk, direction) at every position; sorted by length, then by the
/// (fk name, direction) sequence.
std::vector<WalkScheme> brute_force_schemes(const DatabaseSchema& schema, RelationId start, std::size_t max_length);

/// Destination law obtained by enumerating every complete walk with its
/// probability (product of 1/#candidates), then renormalising.
std::map<FactId, double> brute_force_destinations(const Database& db, FactId f, const WalkScheme& scheme);

/// Expected kernel value computed from brute_force_destinations with Null
/// targets dropped and the rest renormalised.
double brute_force_kd(const Database& db, FactId f, FactId f2, const TargetedWalkScheme& tws, const KernelSpec& spec);

/// Facts referenced by / referencing `f` under `fk`, by scanning every fact.
FactId scan_forward(const Database& db, FkId fk, FactId f);
std::vector<FactId> scan_backward(const Database& db, FkId fk, FactId f);

/// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

void write_text(const std::filesystem::path& p, const std::string& text);

}  // namespace fixtures
