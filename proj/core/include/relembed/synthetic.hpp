#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relembed/database.hpp"
#include "relembed/evaluation.hpp"

namespace relembed {

struct PlantedParams {
  std::size_t n_start = 200;   // facts of the start relation P
  std::size_t n_groups = 6;    // facts of G
  double label_noise = 0.1;    // probability that a label ignores its group
  std::uint64_t seed = 0;
};

struct AttributeRef {
  std::string relation;
  std::string attribute;
};

/// Three relations with a binary label P.y:
///   P(pid, y, a1, c1, fg -> G)   G(gid, gname, gregion, gconst)   E(eid, fp -> P, etype, econst)
/// From P with length <= 1 there are 12 targeted schemes once y is removed.
/// Six of them end in attributes correlated with y; the other six end in
/// unique identifiers or constants and carry no signal.
struct PlantedDataset {
  Database db;  // includes the label column
  TaskSpec task{"P", "y"};
  std::vector<AttributeRef> informative;
  std::vector<AttributeRef> noise;
};

PlantedDataset make_planted_dataset(const PlantedParams& params = {});

}  // namespace relembed
