#pragma once

#include "hjreach/common.hpp"
#include "hjreach/rng.hpp"
#include "hjreach/siren.hpp"
#include "hjreach/systems.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <ostream>
#include <utility>
#include <vector>

namespace hjreach {

struct TrainConfig {
  Variant variant = Variant::Exact;
  int iters = 200000;
  int pretrain_iters = 50000;
  int batch_size = 65000;
  double lr = 2e-5;
  double lambda = 1.0;           // boundary-loss weight (Vanilla only)
  bool adaptive_lambda = true;   // gradient-statistics rebalancing (Vanilla only)
  int lambda_update_every = 10;
  double curriculum_fraction = 1.0;
  std::uint64_t seed = 0;
  Precision precision = Precision::Double;
  double terminal_fraction = 0.2;  // share of a Vanilla batch pinned at t = T
  // Share of the batch spent on reset-consistency samples (systems with a
  // state reset only).
  double reset_fraction = 0.1;
  // Optional training box (one entry per state). Empty means the system
  // domain. A wider box lets the sampler see trajectories that leave the
  // reporting domain and come back.
  std::vector<double> sample_lo;
  std::vector<double> sample_hi;
  int hidden_width = 512;
  int hidden_layers = 3;
  double omega0 = 30.0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  bool deterministic = true;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Time interval [t_lo, T] sampled at iteration `iter`; t_lo shrinks
/// linearly from T to 0 over curriculum_fraction * iters.
std::pair<double, double> curriculum_interval(int iter, const TrainConfig& cfg, double horizon);

/// A training batch. `states` are canonical (columns), `times` per column.
/// `surface` holds pre-reset points on the switching surface with
/// their own times; it is empty for systems without resets.
struct TrainBatch {
  Eigen::MatrixXd states;
  Eigen::VectorXd times;
  Eigen::MatrixXd surface;
  Eigen::VectorXd surface_times;
  int terminal_count = 0;  // Vanilla: the first terminal_count columns have t = T
};

TrainBatch sample_batch(const System& sys, std::pair<double, double> interval, const TrainConfig& cfg, Rng& rng);

/// |min{D_t V + H, l - V}| for one sample.
double pde_residual(Variant variant, const NetParams& params, const std::shared_ptr<const System>& sys,
                    const StateVec& x, double t);
/// |V(x, T) - l(x)| for the Vanilla model.
double bc_residual(const NetParams& params, const std::shared_ptr<const System>& sys, const StateVec& x);

/// Losses and their parameter gradient for one batch.
struct LossGradient {
  double pde_loss = 0.0;
  double bc_loss = 0.0;
  NetParams pde_grad;
  NetParams bc_grad;  // unweighted; empty architecture for Exact/Diff
  /// pde_grad + lambda * bc_grad
  NetParams total(double lambda) const;
};

/// Mean residual losses for a batch, differentiated exactly with respect to
/// every network parameter. Exposed so the engine can be checked against
/// finite differences.
LossGradient loss_gradient(Variant variant, const NetParams& params, const System& sys, const TrainBatch& batch);
/// Loss values only (same definition as loss_gradient).
std::pair<double, double> batch_loss(Variant variant, const NetParams& params, const System& sys,
                                     const TrainBatch& batch);

/// Pretraining loss mean |O(x, T)| over the given states and its gradient.
std::pair<double, NetParams> pretrain_loss_gradient(const NetParams& params, const System& sys,
                                                    const Eigen::MatrixXd& states);

/// lambda <- 0.9 lambda + 0.1 max|grad_pde| / mean|grad_bc|, clipped to [1e-2, 1e4].
double adaptive_lambda_update(double lambda, const NetParams& pde_grad, const NetParams& bc_grad);

/// Adam moment state shaped like the parameters.
template <typename Scalar>
struct AdamState {
  BasicNetParams<Scalar> first;
  BasicNetParams<Scalar> second;
  std::int64_t step = 0;

  static AdamState like(const BasicNetParams<Scalar>& params);
  void apply(BasicNetParams<Scalar>& params, const BasicNetParams<Scalar>& grad, const TrainConfig& cfg);
};

struct StepReport {
  int iter = 0;
  double t_lo = 0.0;
  double pde_loss = 0.0;
  double bc_loss = 0.0;
  double lambda = 0.0;
  double wall_seconds = 0.0;
};

/// Owns parameters, optimizer state and sampling streams for one run.
/// Arithmetic runs in the configured precision; params() always returns
/// doubles.
class Trainer {
 public:
  Trainer(std::shared_ptr<const System> sys, TrainConfig cfg, const NetParams& initial);
  ~Trainer();
  Trainer(Trainer&&) noexcept;
  Trainer& operator=(Trainer&&) noexcept;

  /// One Adam step on the pretraining loss; returns the batch loss.
  double pretrain_step();
  /// One curriculum step at iteration `iter`.
  StepReport train_step(int iter);

  /// Runs `count` pretraining steps, logging every `log_every`.
  void pretrain(int count, std::ostream* log = nullptr, int log_every = 100);
  /// Runs iterations [first_iter, cfg.iters).
  void train(int first_iter = 0, std::ostream* log = nullptr, int log_every = 100);

  NetParams params() const;
  double lambda() const;
  const TrainConfig& config() const;
  /// Number of per-sample boundary residuals evaluated so far.
  std::uint64_t bc_evaluations() const;

  /// Optional per-step observer (used by tests and the CLI).
  void set_observer(std::function<void(const StepReport&)> observer);

  struct Impl;

 private:
  std::unique_ptr<Impl> impl_;
};

/// Writes one line-delimited JSON record.
void write_log_record(std::ostream& out, const StepReport& report, const char* phase);

}  // namespace hjreach
