#include "relembed/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "relembed/error.hpp"

namespace relembed {

void TrainConfig::validate() const {
  if (dim == 0) throw SchemaError("trainer: dim must be positive");
  if (n_samples == 0) throw SchemaError("trainer: n_samples must be positive");
  if (epochs == 0) throw SchemaError("trainer: epochs must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw SchemaError("trainer: learning_rate must be > 0");
  if (retry_cap == 0) throw SchemaError("trainer: retry_cap must be positive");
}

EmbeddingModel init_model(const Database& db, RelationId start, const std::vector<TargetedWalkScheme>& schemes,
                          const TrainConfig& cfg) {
  cfg.validate();
  if (schemes.empty()) throw SchemaError("init_model: empty scheme list");
  for (const auto& tws : schemes) {
    if (tws.scheme.start != start) throw SchemaError("init_model: scheme does not start at the start relation");
  }
  const auto k = static_cast<Eigen::Index>(cfg.dim);
  EmbeddingModel model(start, cfg.dim);
  Rng rng = make_rng(cfg.seed, "init");
  const double bound = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
  std::uniform_real_distribution<double> unif(-bound, bound);
  for (FactId f : db.facts_of(start)) {
    Eigen::VectorXd v(k);
    for (Eigen::Index i = 0; i < k; ++i) v[i] = unif(rng);
    if (cfg.init == InitScheme::kCentered) v[0] = std::sqrt(0.5);
    model.add_fact(f, v);
  }
  for (const auto& tws : schemes) model.add_scheme(tws, Eigen::MatrixXd::Identity(k, k));
  return model;
}

LossGradient loss_gradient(const EmbeddingModel& model, FactId f, FactId f2, std::size_t scheme, double kappa) {
  const Eigen::VectorXd a = model.phi(f).transpose();
  const Eigen::VectorXd b = model.phi(f2).transpose();
  const auto& psi = model.psi(scheme);
  LossGradient out;
  out.residual = a.dot(psi * b) - kappa;
  out.loss = 0.5 * out.residual * out.residual;
  out.d_phi_f = out.residual * (psi * b);
  out.d_phi_f2 = out.residual * (psi.transpose() * a);
  out.d_psi = out.residual * (a * b.transpose());
  return out;
}

double sgd_step(EmbeddingModel& model, FactId f, FactId f2, std::size_t scheme, double kappa, double learning_rate) {
  if (f == f2) throw SchemaError("sgd_step: f and f' must differ");
  auto& psi = model.psi(scheme);
  const Eigen::VectorXd a = model.phi(f).transpose();
  const Eigen::VectorXd b = model.phi(f2).transpose();
  const Eigen::VectorXd psi_b = psi * b;
  const Eigen::VectorXd psi_a = psi * a;
  const double residual = a.dot(psi_b) - kappa;
  const double loss = 0.5 * residual * residual;
  auto fail = [&](const char* what) {
    std::ostringstream msg;
    msg << "non-finite " << what << " in sgd_step (facts " << f << ", " << f2 << "; scheme " << scheme
        << "; kappa " << kappa << "; residual " << residual << "; learning rate " << learning_rate << ")";
    throw NumericError(msg.str());
  };
  if (!std::isfinite(loss)) fail("loss");
  if (residual == 0.0) return loss;

  const double step = learning_rate * residual;
  model.phi(f) -= step * psi_b.transpose();
  model.phi(f2) -= step * psi_a.transpose();
  const double half = 0.5 * step;
  const Eigen::Index k = psi.rows();
  for (Eigen::Index i = 0; i < k; ++i) {
    for (Eigen::Index j = i; j < k; ++j) {
      psi(i, j) -= half * (a[i] * b[j] + b[i] * a[j]);
      psi(j, i) = psi(i, j);
    }
  }
  if (!model.phi(f).allFinite() || !model.phi(f2).allFinite()) fail("embedding");
  if (!psi.allFinite()) fail("scheme matrix");
  return loss;
}

Trainer::Trainer(const Database& db, const KernelSet& kernels, TrainConfig cfg, EmbeddingModel model)
    : db_(&db),
      kernels_(&kernels),
      cfg_(cfg),
      model_(std::move(model)),
      rng_(make_rng(cfg.seed, "train")),
      cum_sum_(model_.scheme_count(), 0.0),
      cum_count_(model_.scheme_count(), 0) {
  cfg_.validate();
  if (model_.fact_count() < 2) throw SchemaError("training needs at least two start facts");
}

EpochStats Trainer::run_epoch(std::vector<SampleRecord>* log) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& db = *db_;
  const auto facts = model_.facts();
  const std::size_t n_facts = facts.size();
  const auto active = model_.active_indices();

  std::vector<const KernelSpec*> kernel_of(model_.scheme_count(), nullptr);
  for (std::size_t s : active) kernel_of[s] = &kernels_->for_target(db.schema(), model_.scheme(s));

  struct Task {
    FactId f, f2;
    std::uint32_t scheme;
  };
  std::vector<Task> tasks;
  tasks.reserve(n_facts * active.size() * cfg_.n_samples);
  for (std::size_t i = 0; i < n_facts; ++i) {
    for (std::size_t s : active) {
      for (std::size_t j = 0; j < cfg_.n_samples; ++j) {
        std::size_t p = uniform_index(rng_, n_facts - 1);
        if (p >= i) ++p;
        tasks.push_back({facts[i], facts[p], static_cast<std::uint32_t>(s)});
      }
    }
  }
  std::shuffle(tasks.begin(), tasks.end(), rng_);

  EpochStats stats;
  stats.epoch = ++epochs_done_;
  std::vector<double> sum(model_.scheme_count(), 0.0);
  std::vector<std::size_t> count(model_.scheme_count(), 0);
  double total = 0.0;

  for (const Task& t : tasks) {
    const auto& tws = model_.scheme(t.scheme);
    auto g = sample_target_destination(db, t.f, tws, rng_, cfg_.retry_cap);
    auto g2 = g ? sample_target_destination(db, t.f2, tws, rng_, cfg_.retry_cap) : std::nullopt;
    if (!g || !g2) {
      ++stats.samples_skipped;
      continue;
    }
    const double kappa = kernel_eval(*kernel_of[t.scheme], db.value(*g, tws.target), db.value(*g2, tws.target));
    const double loss = sgd_step(model_, t.f, t.f2, t.scheme, kappa, cfg_.learning_rate);
    sum[t.scheme] += loss;
    ++count[t.scheme];
    total += loss;
    ++stats.samples_used;
    if (log) log->push_back({stats.epoch, t.f, t.f2, t.scheme, *g, *g2, kappa, loss});
  }

  stats.epoch_loss.resize(model_.scheme_count());
  stats.cumulative_loss.resize(model_.scheme_count());
  for (std::size_t s = 0; s < model_.scheme_count(); ++s) {
    cum_sum_[s] += sum[s];
    cum_count_[s] += count[s];
    if (count[s]) stats.epoch_loss[s] = sum[s] / static_cast<double>(count[s]);
    if (cum_count_[s]) stats.cumulative_loss[s] = cum_sum_[s] / static_cast<double>(cum_count_[s]);
  }
  stats.mean_loss = stats.samples_used ? total / static_cast<double>(stats.samples_used) : 0.0;
  stats.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return stats;
}

TrainResult train(const Database& db, RelationId start, const std::vector<TargetedWalkScheme>& schemes,
                  const TrainConfig& cfg, const KernelSet& kernels, const EpochCallback& on_epoch) {
  cfg.validate();
  Trainer trainer(db, kernels, cfg, init_model(db, start, schemes, cfg));
  TrainResult result;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    result.stats.push_back(trainer.run_epoch());
    if (on_epoch) on_epoch(result.stats.back(), trainer.model());
  }
  result.model = std::move(trainer).release();
  return result;
}

}  // namespace relembed
