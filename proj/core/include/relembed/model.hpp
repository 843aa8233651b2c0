#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "relembed/database.hpp"
#include "relembed/walks.hpp"

namespace relembed {

/// Fact embeddings φ for one start relation plus a symmetric matrix ψ per
/// targeted walk scheme, with φ(f)ᵀψ(s,A)φ(f') modelling the expected
/// kernel value of (s,A) between f and f'.
///
/// Schemes are never erased: online elimination deactivates them, which
/// freezes their ψ and excludes them from sampling.
class EmbeddingModel {
 public:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  EmbeddingModel() = default;
  EmbeddingModel(RelationId start, std::size_t dim) : start_(start), dim_(dim), phi_(0, static_cast<Eigen::Index>(dim)) {}

  RelationId start_relation() const { return start_; }
  std::size_t dim() const { return dim_; }

  // -- fact embeddings
  std::size_t fact_count() const { return facts_.size(); }
  std::span<const FactId> facts() const { return facts_; }
  bool has_fact(FactId f) const { return f < row_of_.size() && row_of_[f] != kNoRow; }
  Eigen::Index row(FactId f) const;
  auto phi(FactId f) const { return phi_.row(row(f)); }
  auto phi(FactId f) { return phi_.row(row(f)); }
  const RowMatrix& phi_matrix() const { return phi_; }
  void add_fact(FactId f, const Eigen::VectorXd& embedding);

  // -- scheme matrices
  std::size_t scheme_count() const { return schemes_.size(); }
  const TargetedWalkScheme& scheme(std::size_t i) const { return schemes_.at(i); }
  const std::vector<TargetedWalkScheme>& schemes() const { return schemes_; }
  const Eigen::MatrixXd& psi(std::size_t i) const { return psi_.at(i); }
  Eigen::MatrixXd& psi(std::size_t i) { return psi_.at(i); }
  bool is_active(std::size_t i) const { return active_.at(i) != 0; }
  void set_active(std::size_t i, bool active) { active_.at(i) = active ? 1 : 0; }
  std::vector<std::size_t> active_indices() const;
  void add_scheme(const TargetedWalkScheme& tws, Eigen::MatrixXd psi, bool active = true);

  friend bool operator==(const EmbeddingModel& a, const EmbeddingModel& b);

 private:
  static constexpr std::uint32_t kNoRow = 0xFFFFFFFFu;

  RelationId start_ = 0;
  std::size_t dim_ = 0;
  std::vector<FactId> facts_;
  std::vector<std::uint32_t> row_of_;
  RowMatrix phi_;
  std::vector<TargetedWalkScheme> schemes_;
  std::vector<Eigen::MatrixXd> psi_;
  std::vector<char> active_;
};

/// φ(f)ᵀψ(s,A)φ(f').
double bilinear(const EmbeddingModel& model, FactId f, FactId f2, std::size_t scheme);

/// Forces exact symmetry by mirroring the upper triangle.
void symmetrize(Eigen::MatrixXd& m);

}  // namespace relembed
