#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "relembed/database.hpp"
#include "relembed/random.hpp"

namespace relembed {

/// Forward follows a foreign key from its source relation to the referenced
/// relation; backward goes from the referenced relation to the referencing one.
enum class Direction : std::uint8_t { kForward, kBackward };

struct WalkStep {
  FkId fk = 0;
  Direction direction = Direction::kForward;

  friend bool operator==(const WalkStep&, const WalkStep&) = default;
};

/// A chain of foreign-key hops starting at a relation. Reversing a scheme
/// gives a different scheme; immediate back-and-forth hops are allowed.
struct WalkScheme {
  RelationId start = 0;
  std::vector<WalkStep> steps;

  std::size_t length() const { return steps.size(); }

  friend bool operator==(const WalkScheme&, const WalkScheme&) = default;
};

/// A walk scheme paired with an attribute of its end relation.
struct TargetedWalkScheme {
  WalkScheme scheme;
  AttrId target = 0;

  friend bool operator==(const TargetedWalkScheme&, const TargetedWalkScheme&) = default;
};

/// Facts f_0..f_l visited by a walk.
using Walk = std::vector<FactId>;

/// Destination distribution: fact id -> probability.
using DestDistribution = std::map<FactId, double>;

/// Relation reached by taking `step` from `from`; throws if the step does not apply.
RelationId step_target(const DatabaseSchema& schema, RelationId from, const WalkStep& step);
RelationId end_relation(const DatabaseSchema& schema, const WalkScheme& scheme);
/// R_0, ..., R_l along the scheme.
std::vector<RelationId> relations_along(const DatabaseSchema& schema, const WalkScheme& scheme);

/// Renders R0[A0]—[B1]R1[A1]—[B2]R2... with comma-separated attribute lists.
std::string scheme_text(const DatabaseSchema& schema, const WalkScheme& scheme);
/// scheme_text followed by ".<target attribute>".
std::string targeted_text(const DatabaseSchema& schema, const TargetedWalkScheme& tws);

nlohmann::json targeted_to_json(const DatabaseSchema& schema, const TargetedWalkScheme& tws);
/// Rebuilds a targeted scheme from targeted_to_json output; throws SchemaError if it does not fit `schema`.
TargetedWalkScheme targeted_from_json(const DatabaseSchema& schema, const nlohmann::json& j);

/// All schemes of length 0..max_length from `start`, ordered by length and
/// then lexicographically by their (foreign key name, direction) sequence.
std::vector<WalkScheme> enumerate_walk_schemes(const DatabaseSchema& schema, RelationId start,
                                               std::size_t max_length);

/// Every scheme paired with every attribute of its end relation, in scheme
/// order and then attribute order.
std::vector<TargetedWalkScheme> enumerate_targeted(const DatabaseSchema& schema, RelationId start,
                                                   std::size_t max_length);

/// Uniform random walk from `f`; nullopt when some hop has no candidates.
std::optional<Walk> sample_walk(const Database& db, FactId f, const WalkScheme& scheme, Rng& rng);

/// Destination of a uniform random walk, or kNoFact on a dead end. Allocation free.
FactId sample_destination(const Database& db, FactId f, const WalkScheme& scheme, Rng& rng);

/// Exact law of the destination. Mass reaching dead ends is dropped and the
/// rest renormalised; empty when no walk completes.
DestDistribution exact_dest_distribution(const Database& db, FactId f, const WalkScheme& scheme);

/// Exact law of d_{f,s}[A] over destination facts, with Null-valued destinations removed and renormalised.
DestDistribution exact_target_distribution(const Database& db, FactId f, const TargetedWalkScheme& tws);

/// Destination whose target value is non-null, by rejection over at most
/// `retry_cap` walks. nullopt if every attempt failed.
std::optional<FactId> sample_target_destination(const Database& db, FactId f, const TargetedWalkScheme& tws,
                                                Rng& rng, std::size_t retry_cap = 20);

/// Target value of sample_target_destination.
std::optional<Value> dest_attr_sample(const Database& db, FactId f, const TargetedWalkScheme& tws, Rng& rng,
                                      std::size_t retry_cap = 20);

/// Start facts of `scheme` with at least one complete walk.
std::vector<FactId> facts_with_complete_walk(const Database& db, const WalkScheme& scheme);

}  // namespace relembed
