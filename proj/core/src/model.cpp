#include "relembed/model.hpp"

#include "relembed/error.hpp"

namespace relembed {

Eigen::Index EmbeddingModel::row(FactId f) const {
  if (!has_fact(f)) throw SchemaError("fact " + std::to_string(f) + " has no embedding");
  return static_cast<Eigen::Index>(row_of_[f]);
}

void EmbeddingModel::add_fact(FactId f, const Eigen::VectorXd& embedding) {
  if (has_fact(f)) throw SchemaError("fact " + std::to_string(f) + " is already embedded");
  if (static_cast<std::size_t>(embedding.size()) != dim_) throw SchemaError("embedding has the wrong dimension");
  if (f >= row_of_.size()) row_of_.resize(static_cast<std::size_t>(f) + 1, kNoRow);
  const Eigen::Index r = phi_.rows();
  phi_.conservativeResize(r + 1, Eigen::NoChange);
  phi_.row(r) = embedding.transpose();
  row_of_[f] = static_cast<std::uint32_t>(r);
  facts_.push_back(f);
}

std::vector<std::size_t> EmbeddingModel::active_indices() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < active_.size(); ++i) {
    if (active_[i]) out.push_back(i);
  }
  return out;
}

void EmbeddingModel::add_scheme(const TargetedWalkScheme& tws, Eigen::MatrixXd psi, bool active) {
  const auto k = static_cast<Eigen::Index>(dim_);
  if (psi.rows() != k || psi.cols() != k) throw SchemaError("scheme matrix has the wrong shape");
  symmetrize(psi);
  schemes_.push_back(tws);
  psi_.push_back(std::move(psi));
  active_.push_back(active ? 1 : 0);
}

bool operator==(const EmbeddingModel& a, const EmbeddingModel& b) {
  return a.start_ == b.start_ && a.dim_ == b.dim_ && a.facts_ == b.facts_ && a.phi_ == b.phi_ &&
         a.schemes_ == b.schemes_ && a.psi_ == b.psi_ && a.active_ == b.active_;
}

double bilinear(const EmbeddingModel& model, FactId f, FactId f2, std::size_t scheme) {
  const auto& psi = model.psi(scheme);
  return model.phi(f).dot(model.phi(f2) * psi);
}

void symmetrize(Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) m(j, i) = m(i, j);
  }
}

}  // namespace relembed
