#pragma once

#include <cstdint>
#include <map>
#include <utility>

#include <nlohmann/json_fwd.hpp>

#include "relembed/database.hpp"
#include "relembed/walks.hpp"

namespace relembed {

enum class KernelKind : std::uint8_t { kCategoricalEquality, kNumericGaussian, kTextEquality };

/// Similarity on one attribute's domain: κ(a,a) = 1, 0 <= κ <= 1, symmetric.
struct KernelSpec {
  RelationId relation = 0;
  AttrId attr = 0;
  KernelKind kind = KernelKind::kCategoricalEquality;
  double sigma = 1.0;  // bandwidth of the gaussian kernel
};

/// Equality for categorical/text, exp(-(a-b)^2 / (2 sigma^2)) for numeric.
/// Throws on Null arguments or values that do not match the kernel's kind.
double kernel_eval(const KernelSpec& spec, const Value& a, const Value& b);

/// Kernels for every attribute of a schema.
class KernelSet {
 public:
  KernelSet() = default;

  /// Equality for categorical and text; gaussian for numeric with sigma the
  /// sample standard deviation of the active domain (1 when degenerate).
  static KernelSet defaults(const Database& db);

  /// Applies [{relation, attribute, kind, sigma?}] overrides.
  void apply_overrides(const DatabaseSchema& schema, const nlohmann::json& overrides);

  const KernelSpec& get(RelationId rel, AttrId attr) const;
  const KernelSpec& for_target(const DatabaseSchema& schema, const TargetedWalkScheme& tws) const;
  void set(const KernelSpec& spec) { specs_[{spec.relation, spec.attr}] = spec; }

 private:
  std::map<std::pair<RelationId, AttrId>, KernelSpec> specs_;
};

/// Monte-Carlo estimate of the expected kernel value.
struct KDEstimate {
  double value = 0.0;
  std::size_t n_pairs = 0;
  double std_error = 0.0;  // sample standard deviation / sqrt(n_pairs)
};

/// Expected kernel value between independent draws of d_{f,s}[A] and d_{f',s}[A].
///
/// Called a "distance" in the literature, this is a similarity: 1 for
/// identical point masses. Computed exactly from the destination
/// distributions; throws if either renormalised support is empty.
double kd_exact(const Database& db, FactId f, FactId f2, const TargetedWalkScheme& tws, const KernelSpec& spec);

/// Mean kernel value over n sampled destination pairs; dead-ended pairs are
/// skipped. Throws NumericError if every pair dead-ended.
KDEstimate kd_mc(const Database& db, FactId f, FactId f2, const TargetedWalkScheme& tws, const KernelSpec& spec,
                 std::size_t n, Rng& rng, std::size_t retry_cap = 20);

}  // namespace relembed
