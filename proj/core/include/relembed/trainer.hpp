#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "relembed/kernels.hpp"
#include "relembed/model.hpp"

namespace relembed {

/// How init_model draws the starting parameters. Both use ψ = I.
enum class InitScheme : std::uint8_t {
  /// φ entries i.i.d. uniform(-1/√k, 1/√k): initial bilinear values near 0.
  kUniform,
  /// As kUniform, but the first coordinate of every φ is 1/√2, so initial
  /// bilinear values sit near 0.5, the middle of the kernel range.
  kCentered,
};

struct TrainConfig {
  std::size_t dim = 32;
  std::size_t n_samples = 5;  // partner samples per (fact, scheme) per epoch
  std::size_t epochs = 10;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
  std::size_t retry_cap = 20;
  InitScheme init = InitScheme::kCentered;

  void validate() const;  // throws SchemaError
};

struct EpochStats {
  std::size_t epoch = 0;                                // 1-based
  std::vector<std::optional<double>> epoch_loss;        // per scheme: mean loss within this epoch
  std::vector<std::optional<double>> cumulative_loss;   // per scheme: mean loss over epochs 1..epoch
  double wall_time = 0.0;                               // seconds spent in this epoch
  std::size_t samples_used = 0;
  std::size_t samples_skipped = 0;
  double mean_loss = 0.0;                               // over all samples used in this epoch
};

/// One processed training sample, for replaying loss bookkeeping.
struct SampleRecord {
  std::size_t epoch = 0;
  FactId f = 0, f2 = 0;
  std::size_t scheme = 0;
  FactId g = 0, g2 = 0;
  double kappa = 0.0;
  double loss = 0.0;
};

/// Loss ½(φ(f)ᵀψφ(f') − κ)² and its raw gradients (d_psi is not symmetrised).
struct LossGradient {
  double loss = 0.0;
  double residual = 0.0;
  Eigen::VectorXd d_phi_f;
  Eigen::VectorXd d_phi_f2;
  Eigen::MatrixXd d_psi;
};

EmbeddingModel init_model(const Database& db, RelationId start, const std::vector<TargetedWalkScheme>& schemes,
                          const TrainConfig& cfg);

LossGradient loss_gradient(const EmbeddingModel& model, FactId f, FactId f2, std::size_t scheme, double kappa);

/// One SGD update on a single sample; the ψ step is symmetrised. Returns the
/// pre-update loss. Throws NumericError if anything becomes non-finite.
double sgd_step(EmbeddingModel& model, FactId f, FactId f2, std::size_t scheme, double kappa, double learning_rate);

/// Stateful single-threaded SGD over a model's active schemes.
class Trainer {
 public:
  Trainer(const Database& db, const KernelSet& kernels, TrainConfig cfg, EmbeddingModel model);

  /// Draws n_samples partners f' != f for every start fact and active scheme,
  /// shuffles the work list, samples destinations and applies sgd_step.
  EpochStats run_epoch(std::vector<SampleRecord>* log = nullptr);

  const EmbeddingModel& model() const { return model_; }
  EmbeddingModel& model() { return model_; }
  EmbeddingModel release() && { return std::move(model_); }
  std::size_t epochs_done() const { return epochs_done_; }

 private:
  const Database* db_;
  const KernelSet* kernels_;
  TrainConfig cfg_;
  EmbeddingModel model_;
  Rng rng_;
  std::vector<double> cum_sum_;
  std::vector<std::size_t> cum_count_;
  std::size_t epochs_done_ = 0;
};

using EpochCallback = std::function<void(const EpochStats&, const EmbeddingModel&)>;

struct TrainResult {
  EmbeddingModel model;
  std::vector<EpochStats> stats;
};

/// Fresh model on `schemes`, trained for cfg.epochs epochs.
TrainResult train(const Database& db, RelationId start, const std::vector<TargetedWalkScheme>& schemes,
                  const TrainConfig& cfg, const KernelSet& kernels, const EpochCallback& on_epoch = {});

}  // namespace relembed
