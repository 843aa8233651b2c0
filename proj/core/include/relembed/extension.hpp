#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "relembed/kernels.hpp"
#include "relembed/model.hpp"

namespace relembed {

enum class TargetMode : std::uint8_t {
  kSampled,  // mean kernel value over sampled destination pairs
  kExact,    // exact expected kernel value (small databases)
};

struct ExtensionConfig {
  std::size_t partners_per_scheme = 10;
  std::size_t samples_per_partner = 5;
  double ridge = 1e-6;
  std::size_t retry_cap = 20;
  bool exhaustive_partners = false;  // every embedded fact is a partner of every scheme
  TargetMode targets = TargetMode::kSampled;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Rows a_j = ψ(s,A)·φ(f'_j) and targets b_j for one new fact; the new
/// embedding x should satisfy a_jᵀx ≈ b_j.
struct ExtensionSystem {
  Eigen::MatrixXd rows;
  Eigen::VectorXd targets;
  std::vector<std::pair<std::size_t, FactId>> origin;  // (scheme, partner) per row
};

/// Solves (AᵀA + λI)x = Aᵀb. With λ = 0 a rank-deficient system throws NumericError.
Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double ridge);

/// Builds the system of `new_fact` against the model's embedded facts. Walks
/// run on `db`, which must already contain the new fact.
ExtensionSystem build_extension_system(const Database& db, const EmbeddingModel& model, FactId new_fact,
                                       const ExtensionConfig& cfg, const KernelSet& kernels);

/// Embeds new start-relation facts with every existing φ and all ψ frozen.
/// Partners are only facts embedded before the call, and each new fact uses
/// its own random stream, so the result does not depend on batch order.
EmbeddingModel extend_embedding(const Database& db, const EmbeddingModel& model, const std::vector<FactId>& new_facts,
                                const ExtensionConfig& cfg, const KernelSet& kernels);

struct CloneCheck {
  FactId new_fact = 0;
  std::optional<FactId> twin;  // embedded fact with identical destination laws on every active scheme
  double max_residual = 0.0;   // max |(x_new - x_twin)ᵀψφ(f')| over partners, exact targets
};

/// For each new fact, finds a structural twin among `before`'s facts and
/// compares the exact-target, exhaustive-partner solutions of both.
std::vector<CloneCheck> verify_clones(const Database& db, const EmbeddingModel& before,
                                      const std::vector<FactId>& new_facts, const KernelSet& kernels, double ridge);

}  // namespace relembed
