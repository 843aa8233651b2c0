#include "relembed/extension.hpp"

#include <algorithm>
#include <cmath>

#include "relembed/error.hpp"

namespace relembed {

void ExtensionConfig::validate() const {
  if (partners_per_scheme == 0) throw SchemaError("extension: partners_per_scheme must be positive");
  if (samples_per_partner == 0) throw SchemaError("extension: samples_per_partner must be positive");
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw SchemaError("extension: ridge must be >= 0");
  if (retry_cap == 0) throw SchemaError("extension: retry_cap must be positive");
}

Eigen::VectorXd solve_ridge(const Eigen::MatrixXd& a, const Eigen::VectorXd& b, double ridge) {
  if (a.rows() != b.size()) throw SchemaError("solve_ridge: row count mismatch");
  const Eigen::Index k = a.cols();
  Eigen::MatrixXd normal = a.transpose() * a;
  normal.diagonal().array() += ridge;
  const Eigen::VectorXd rhs = a.transpose() * b;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  if (ldlt.info() != Eigen::Success) throw NumericError("solve_ridge: factorisation failed");
  const auto d = ldlt.vectorD().cwiseAbs();
  if (k > 0 && (d.minCoeff() <= 1e-12 * std::max(d.maxCoeff(), 1e-300))) {
    throw NumericError("singular extension system; use a ridge parameter > 0");
  }
  Eigen::VectorXd x = ldlt.solve(rhs);
  if (!x.allFinite()) throw NumericError("solve_ridge: non-finite solution");
  return x;
}

ExtensionSystem build_extension_system(const Database& db, const EmbeddingModel& model, FactId new_fact,
                                       const ExtensionConfig& cfg, const KernelSet& kernels) {
  cfg.validate();
  const auto partners_all = model.facts();
  Rng rng = make_rng(cfg.seed, "extend", new_fact);

  std::vector<Eigen::VectorXd> rows;
  std::vector<double> targets;
  ExtensionSystem sys;
  for (std::size_t s : model.active_indices()) {
    const auto& tws = model.scheme(s);
    const auto& spec = kernels.for_target(db.schema(), tws);
    std::vector<FactId> partners;
    if (cfg.exhaustive_partners) {
      partners.assign(partners_all.begin(), partners_all.end());
    } else {
      std::sample(partners_all.begin(), partners_all.end(), std::back_inserter(partners),
                  std::min(cfg.partners_per_scheme, partners_all.size()), rng);
    }
    for (FactId p : partners) {
      double target = 0.0;
      if (cfg.targets == TargetMode::kExact) {
        try {
          target = kd_exact(db, new_fact, p, tws, spec);
        } catch (const NumericError&) {
          continue;
        }
      } else {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t j = 0; j < cfg.samples_per_partner; ++j) {
          auto g = sample_target_destination(db, new_fact, tws, rng, cfg.retry_cap);
          auto g2 = g ? sample_target_destination(db, p, tws, rng, cfg.retry_cap) : std::nullopt;
          if (!g || !g2) continue;
          sum += kernel_eval(spec, db.value(*g, tws.target), db.value(*g2, tws.target));
          ++n;
        }
        if (n == 0) continue;
        target = sum / static_cast<double>(n);
      }
      rows.push_back(model.psi(s) * model.phi(p).transpose());
      targets.push_back(target);
      sys.origin.emplace_back(s, p);
    }
  }
  const auto k = static_cast<Eigen::Index>(model.dim());
  sys.rows.resize(static_cast<Eigen::Index>(rows.size()), k);
  sys.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    sys.rows.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    sys.targets[static_cast<Eigen::Index>(i)] = targets[i];
  }
  return sys;
}

EmbeddingModel extend_embedding(const Database& db, const EmbeddingModel& model, const std::vector<FactId>& new_facts,
                                const ExtensionConfig& cfg, const KernelSet& kernels) {
  cfg.validate();
  if (model.active_indices().empty()) throw SchemaError("extend: model has no active schemes");
  for (FactId f : new_facts) {
    if (f >= db.size() || db.fact(f).relation != model.start_relation()) {
      throw SchemaError("extend: fact " + std::to_string(f) + " is not a start-relation fact of the database");
    }
    if (model.has_fact(f)) throw SchemaError("extend: fact " + std::to_string(f) + " is already embedded");
  }
  std::vector<Eigen::VectorXd> solved;
  for (FactId f : new_facts) {
    ExtensionSystem sys = build_extension_system(db, model, f, cfg, kernels);
    if (sys.rows.rows() == 0) {
      throw NumericError("extend: no complete walks for any scheme from fact " + std::to_string(f));
    }
    solved.push_back(solve_ridge(sys.rows, sys.targets, cfg.ridge));
  }
  EmbeddingModel out = model;
  for (std::size_t i = 0; i < new_facts.size(); ++i) out.add_fact(new_facts[i], solved[i]);
  return out;
}

namespace {

std::map<Value, double> value_law(const Database& db, FactId f, const TargetedWalkScheme& tws) {
  std::map<Value, double> law;
  for (const auto& [g, p] : exact_target_distribution(db, f, tws)) law[db.value(g, tws.target)] += p;
  return law;
}

bool same_law(const std::map<Value, double>& a, const std::map<Value, double>& b) {
  if (a.size() != b.size()) return false;
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
    if (!(ia->first == ib->first) || std::abs(ia->second - ib->second) > 1e-12) return false;
  }
  return true;
}

}  // namespace

std::vector<CloneCheck> verify_clones(const Database& db, const EmbeddingModel& before,
                                      const std::vector<FactId>& new_facts, const KernelSet& kernels, double ridge) {
  ExtensionConfig exact;
  exact.exhaustive_partners = true;
  exact.targets = TargetMode::kExact;
  exact.ridge = ridge;
  const auto active = before.active_indices();

  std::vector<CloneCheck> out;
  for (FactId f : new_facts) {
    CloneCheck check{f, std::nullopt, 0.0};
    std::vector<std::map<Value, double>> laws;
    for (std::size_t s : active) laws.push_back(value_law(db, f, before.scheme(s)));
    for (FactId h : before.facts()) {
      bool twin = true;
      for (std::size_t i = 0; twin && i < active.size(); ++i) {
        twin = same_law(laws[i], value_law(db, h, before.scheme(active[i])));
      }
      if (twin) {
        check.twin = h;
        break;
      }
    }
    if (check.twin) {
      const auto sys_new = build_extension_system(db, before, f, exact, kernels);
      if (sys_new.rows.rows() == 0) {
        throw NumericError("verify: no complete walks for any scheme from fact " + std::to_string(f));
      }
      const auto sys_twin = build_extension_system(db, before, *check.twin, exact, kernels);
      const Eigen::VectorXd x_new = solve_ridge(sys_new.rows, sys_new.targets, ridge);
      const Eigen::VectorXd x_twin = solve_ridge(sys_twin.rows, sys_twin.targets, ridge);
      check.max_residual = (sys_new.rows * (x_new - x_twin)).cwiseAbs().maxCoeff();
    }
    out.push_back(check);
  }
  return out;
}

}  // namespace relembed
