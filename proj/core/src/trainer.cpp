#include "hjreach/trainer.hpp"

#include "hjreach/value_model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hjreach {

void TrainConfig::validate() const {
  if (iters < 0 || pretrain_iters < 0) throw ContractError("train: iteration counts must be non-negative");
  if (batch_size < 1) throw ContractError("train: batch_size must be at least 1");
  if (!(lr > 0.0)) throw ContractError("train: lr must be positive");
  if (!(curriculum_fraction > 0.0 && curriculum_fraction <= 1.0)) {
    throw ContractError("train: curriculum_fraction must lie in (0, 1]");
  }
  if (!(terminal_fraction >= 0.0 && terminal_fraction < 1.0)) {
    throw ContractError("train: terminal_fraction must lie in [0, 1)");
  }
  if (!(reset_fraction >= 0.0 && reset_fraction < 1.0)) throw ContractError("train: reset_fraction must lie in [0, 1)");
  if (!(lambda > 0.0)) throw ContractError("train: lambda must be positive");
  if (lambda_update_every < 1) throw ContractError("train: lambda_update_every must be at least 1");
  if (hidden_width < 1 || hidden_layers < 1) throw ContractError("train: network must have a hidden layer");
  if (sample_lo.size() != sample_hi.size()) throw ContractError("train: sample_lo and sample_hi differ in length");
  for (std::size_t d = 0; d < sample_lo.size(); ++d) {
    if (!(sample_lo[d] < sample_hi[d])) throw ContractError("train: sample_lo must lie below sample_hi");
  }
}

std::pair<double, double> curriculum_interval(int iter, const TrainConfig& cfg, double horizon) {
  const double ramp = cfg.curriculum_fraction * std::max(cfg.iters, 1);
  const double progress = std::min(1.0, std::max(0.0, iter / ramp));
  return {horizon * (1.0 - progress), horizon};
}

// ---------------------------------------------------------------------------
// Sampling

namespace {

StateVec uniform_state(const System& sys, const TrainConfig& cfg, Rng& rng) {
  const auto& s = sys.spec();
  const bool custom = !cfg.sample_lo.empty();
  if (custom && static_cast<int>(cfg.sample_lo.size()) != sys.state_dim()) {
    throw ContractError("train: sample_lo/sample_hi need " + std::to_string(sys.state_dim()) + " entries");
  }
  StateVec x(sys.state_dim());
  for (int d = 0; d < sys.state_dim(); ++d) {
    const auto k = static_cast<std::size_t>(d);
    x(d) = custom ? rng.uniform(cfg.sample_lo[k], cfg.sample_hi[k]) : rng.uniform(s.domain_lo(d), s.domain_hi(d));
  }
  return x;
}

// Pre-reset point whose flow crosses the switching surface.
StateVec crossing_surface_point(const System& sys, const TrainConfig& cfg, Rng& rng) {
  constexpr double kProbe = 1e-6;
  StateVec pre;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    pre = sys.surface_point(uniform_state(sys, cfg, rng));
    const StateVec f = sys.drift(pre);
    if (sys.past_switching_surface(pre + kProbe * f) && !sys.past_switching_surface(pre - kProbe * f)) break;
  }
  return pre;
}

}  // namespace

TrainBatch sample_batch(const System& sys, std::pair<double, double> interval, const TrainConfig& cfg, Rng& rng) {
  const auto [t_lo, t_hi] = interval;
  if (!(t_lo >= 0.0 && t_lo <= t_hi && t_hi <= sys.horizon())) {
    throw ContractError("sample_batch: interval must lie within [0, T]");
  }
  const int reset_count =
      sys.has_reset() ? static_cast<int>(std::lround(cfg.reset_fraction * cfg.batch_size)) : 0;
  const int count = std::max(1, cfg.batch_size - reset_count);

  TrainBatch batch;
  batch.states.resize(sys.state_dim(), count);
  batch.times.resize(count);
  for (int i = 0; i < count; ++i) {
    batch.states.col(i) = sys.canonicalize(uniform_state(sys, cfg, rng));
    batch.times(i) = t_lo == t_hi ? t_hi : rng.uniform(t_lo, t_hi);
  }
  if (cfg.variant == Variant::Vanilla) {
    batch.terminal_count = std::min(count, static_cast<int>(std::ceil(cfg.terminal_fraction * count - 1e-9)));
    batch.times.head(batch.terminal_count).setConstant(t_hi == sys.horizon() ? t_hi : sys.horizon());
  }
  batch.surface.resize(sys.state_dim(), reset_count);
  batch.surface_times.resize(reset_count);
  for (int j = 0; j < reset_count; ++j) {
    batch.surface.col(j) = crossing_surface_point(sys, cfg, rng);
    batch.surface_times(j) = t_lo == t_hi ? t_hi : rng.uniform(t_lo, t_hi);
  }
  return batch;
}

// ---------------------------------------------------------------------------
// Residuals and their adjoints

namespace {

struct VariantTerms {
  double value;
  double dvalue_dout;  // dV/dO
};

VariantTerms value_terms(Variant variant, double l, double out, double remaining) {
  switch (variant) {
    case Variant::Vanilla:
      return {out, 1.0};
    case Variant::Diff:
      return {l + out, 1.0};
    case Variant::Exact:
      return {l + remaining * out, remaining};
  }
  return {0.0, 0.0};
}

double sign_of(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

template <typename Scalar>
struct Adjoints {
  Vec<Scalar> pde_out;
  Mat<Scalar> pde_in;
  Vec<Scalar> bc_out;
  double pde_loss = 0.0;
  double bc_loss = 0.0;
  int bc_count = 0;
};

template <typename Scalar>
Mat<Scalar> network_inputs(const System& sys, const TrainBatch& batch) {
  const int n = sys.state_dim();
  const Eigen::Index count = batch.states.cols();
  const Eigen::Index resets = batch.surface.cols();
  Mat<Scalar> z(n + 1, count + 2 * resets);
  const double horizon = sys.horizon();
  for (Eigen::Index i = 0; i < count; ++i) {
    z(0, i) = static_cast<Scalar>(batch.times(i) / horizon);
    z.col(i).tail(n) = sys.normalize(batch.states.col(i)).template cast<Scalar>();
  }
  for (Eigen::Index j = 0; j < resets; ++j) {
    const StateVec pre = batch.surface.col(j);
    const double t = batch.surface_times(j) / horizon;
    z(0, count + j) = static_cast<Scalar>(t);
    z.col(count + j).tail(n) = sys.normalize(pre).template cast<Scalar>();
    z(0, count + resets + j) = static_cast<Scalar>(t);
    z.col(count + resets + j).tail(n) = sys.normalize(sys.reset_map(pre)).template cast<Scalar>();
  }
  return z;
}

// Forward pass plus per-sample adjoints of the mean residual losses.
template <typename Scalar>
Adjoints<Scalar> residual_adjoints(Variant variant, const BasicNetParams<Scalar>& params, const System& sys,
                                   const TrainBatch& batch, SirenWorkspace<Scalar>& ws) {
  const int n = sys.state_dim();
  const Eigen::Index count = batch.states.cols();
  const Eigen::Index resets = batch.surface.cols();
  const Eigen::Index columns = count + 2 * resets;
  const double horizon = sys.horizon();
  const Eigen::VectorXd& scale = sys.normalization_scale();

  ws.forward(params, network_inputs<Scalar>(sys, batch), true);
  const Vec<Scalar>& out = ws.outputs();
  const Mat<Scalar>& in_grad = ws.input_grads();

  Adjoints<Scalar> adj;
  adj.pde_out = Vec<Scalar>::Zero(columns);
  adj.pde_in = Mat<Scalar>::Zero(n + 1, columns);
  adj.bc_out = Vec<Scalar>::Zero(columns);
  const double weight = 1.0 / static_cast<double>(count + resets);

  StateVec flow(n);
  for (Eigen::Index i = 0; i < count; ++i) {
    const StateVec x = batch.states.col(i);
    const double t = batch.times(i);
    const double remaining = horizon - t;
    const double o = static_cast<double>(out(i));
    const Eigen::VectorXd g = in_grad.col(i).template cast<double>();
    const double o_dt = g(0) / horizon;
    const Eigen::VectorXd o_grad = g.tail(n).cwiseProduct(scale);
    const double l = sys.target(x);

    // V, grad V, D_t V and their sensitivities to (o, g).
    double v, dt, ddt_do, ddt_dg0, dgrad_dg;
    Eigen::VectorXd grad;
    const VariantTerms terms = value_terms(variant, l, o, remaining);
    v = terms.value;
    if (variant == Variant::Exact) {
      grad = sys.target_grad(x) + remaining * o_grad;
      dt = -o + remaining * o_dt;
      ddt_do = -1.0;
      ddt_dg0 = remaining / horizon;
      dgrad_dg = remaining;
    } else {
      grad = variant == Variant::Diff ? Eigen::VectorXd(sys.target_grad(x) + o_grad) : o_grad;
      dt = o_dt;
      ddt_do = 0.0;
      ddt_dg0 = 1.0 / horizon;
      dgrad_dg = 1.0;
    }
    const double ham = sys.hamiltonian(x, grad, &flow);
    const double pde_branch = dt + ham;
    const double clamp_branch = l - v;
    const bool pde_active = pde_branch <= clamp_branch;
    const double r = pde_active ? pde_branch : clamp_branch;
    adj.pde_loss += std::abs(r) * weight;
    const double s = sign_of(r) * weight;
    if (pde_active) {
      adj.pde_out(i) = static_cast<Scalar>(s * ddt_do);
      adj.pde_in(0, i) = static_cast<Scalar>(s * ddt_dg0);
      for (int k = 0; k < n; ++k) adj.pde_in(1 + k, i) = static_cast<Scalar>(s * flow(k) * dgrad_dg * scale(k));
    } else {
      adj.pde_out(i) = static_cast<Scalar>(-s * terms.dvalue_dout);
    }
  }

  if (variant == Variant::Vanilla && batch.terminal_count > 0) {
    const double bc_weight = 1.0 / batch.terminal_count;
    for (int i = 0; i < batch.terminal_count; ++i) {
      const double mismatch = static_cast<double>(out(i)) - sys.target(batch.states.col(i));
      adj.bc_loss += std::abs(mismatch) * bc_weight;
      adj.bc_out(i) = static_cast<Scalar>(sign_of(mismatch) * bc_weight);
      ++adj.bc_count;
    }
  }

  // Reset consistency: V(x-, t) = min(l(x-), V(Delta(x-), t)) on the surface.
  for (Eigen::Index j = 0; j < resets; ++j) {
    const StateVec pre = batch.surface.col(j);
    const StateVec post = sys.reset_map(pre);
    const double remaining = horizon - batch.surface_times(j);
    const double l_pre = sys.target(pre);
    const VariantTerms before = value_terms(variant, l_pre, static_cast<double>(out(count + j)), remaining);
    const VariantTerms after =
        value_terms(variant, sys.target(post), static_cast<double>(out(count + resets + j)), remaining);
    const bool through_reset = after.value < l_pre;
    const double r = before.value - (through_reset ? after.value : l_pre);
    adj.pde_loss += std::abs(r) * weight;
    const double s = sign_of(r) * weight;
    adj.pde_out(count + j) = static_cast<Scalar>(s * before.dvalue_dout);
    if (through_reset) adj.pde_out(count + resets + j) = static_cast<Scalar>(-s * after.dvalue_dout);
  }
  return adj;
}

}  // namespace

NetParams LossGradient::total(double lambda) const {
  NetParams out = pde_grad;
  if (!bc_grad.weights.empty()) out.axpy(lambda, bc_grad);
  return out;
}

LossGradient loss_gradient(Variant variant, const NetParams& params, const System& sys, const TrainBatch& batch) {
  SirenWorkspace<double> ws;
  const Adjoints<double> adj = residual_adjoints(variant, params, sys, batch, ws);
  LossGradient lg;
  lg.pde_loss = adj.pde_loss;
  lg.bc_loss = adj.bc_loss;
  lg.pde_grad = params.zeros_like();
  ws.backward(params, adj.pde_out, &adj.pde_in, lg.pde_grad);
  if (variant == Variant::Vanilla) {
    lg.bc_grad = params.zeros_like();
    ws.backward(params, adj.bc_out, nullptr, lg.bc_grad);
  }
  return lg;
}

std::pair<double, double> batch_loss(Variant variant, const NetParams& params, const System& sys,
                                     const TrainBatch& batch) {
  SirenWorkspace<double> ws;
  const Adjoints<double> adj = residual_adjoints(variant, params, sys, batch, ws);
  return {adj.pde_loss, adj.bc_loss};
}

double pde_residual(Variant variant, const NetParams& params, const std::shared_ptr<const System>& sys,
                    const StateVec& x, double t) {
  const StateVec canonical = sys->canonicalize(x);
  const ValueEval e = ValueModel(variant, params, sys).evaluate(canonical, t);
  const double ham = sys->hamiltonian(canonical, e.grad_x);
  return std::abs(std::min(e.dt + ham, sys->target(canonical) - e.v));
}

double bc_residual(const NetParams& params, const std::shared_ptr<const System>& sys, const StateVec& x) {
  const StateVec canonical = sys->canonicalize(x);
  const ValueEval e = ValueModel(Variant::Vanilla, params, sys).evaluate(canonical, sys->horizon());
  return std::abs(e.v - sys->target(canonical));
}

namespace {

template <typename Scalar>
Mat<Scalar> terminal_inputs(const System& sys, const Eigen::MatrixXd& states) {
  Mat<Scalar> z(sys.state_dim() + 1, states.cols());
  for (Eigen::Index i = 0; i < states.cols(); ++i) {
    z(0, i) = Scalar(1);
    z.col(i).tail(sys.state_dim()) = sys.normalize(states.col(i)).template cast<Scalar>();
  }
  return z;
}

template <typename Scalar>
double pretrain_adjoint(const BasicNetParams<Scalar>& params, const System& sys, const Eigen::MatrixXd& states,
                        SirenWorkspace<Scalar>& ws, Vec<Scalar>& adjoint) {
  ws.forward(params, terminal_inputs<Scalar>(sys, states), false);
  const Vec<Scalar>& out = ws.outputs();
  const double weight = 1.0 / static_cast<double>(out.size());
  adjoint.resize(out.size());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    const double o = static_cast<double>(out(i));
    loss += std::abs(o) * weight;
    adjoint(i) = static_cast<Scalar>(sign_of(o) * weight);
  }
  return loss;
}

}  // namespace

std::pair<double, NetParams> pretrain_loss_gradient(const NetParams& params, const System& sys,
                                                    const Eigen::MatrixXd& states) {
  SirenWorkspace<double> ws;
  Eigen::VectorXd adjoint;
  const double loss = pretrain_adjoint(params, sys, states, ws, adjoint);
  NetParams grad = params.zeros_like();
  ws.backward(params, adjoint, nullptr, grad);
  return {loss, grad};
}

namespace {

template <typename Scalar>
std::pair<double, double> abs_max_and_mean(const BasicNetParams<Scalar>& p) {
  double max_abs = 0.0;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    max_abs = std::max(max_abs, static_cast<double>(p.weights[l].cwiseAbs().maxCoeff()));
    max_abs = std::max(max_abs, static_cast<double>(p.biases[l].cwiseAbs().maxCoeff()));
    sum += static_cast<double>(p.weights[l].cwiseAbs().sum()) + static_cast<double>(p.biases[l].cwiseAbs().sum());
    count += static_cast<std::size_t>(p.weights[l].size() + p.biases[l].size());
  }
  return {max_abs, count ? sum / static_cast<double>(count) : 0.0};
}

template <typename Scalar>
double adaptive_lambda_impl(double lambda, const BasicNetParams<Scalar>& pde_grad,
                            const BasicNetParams<Scalar>& bc_grad) {
  const double pde_max = abs_max_and_mean(pde_grad).first;
  const double bc_mean = abs_max_and_mean(bc_grad).second;
  if (!(bc_mean > 0.0)) return lambda;
  const double updated = 0.9 * lambda + 0.1 * (pde_max / bc_mean);
  return std::clamp(updated, 1e-2, 1e4);
}

}  // namespace

double adaptive_lambda_update(double lambda, const NetParams& pde_grad, const NetParams& bc_grad) {
  return adaptive_lambda_impl(lambda, pde_grad, bc_grad);
}

// ---------------------------------------------------------------------------
// Adam

template <typename Scalar>
AdamState<Scalar> AdamState<Scalar>::like(const BasicNetParams<Scalar>& params) {
  AdamState s;
  s.first = params.zeros_like();
  s.second = params.zeros_like();
  return s;
}

template <typename Scalar>
void AdamState<Scalar>::apply(BasicNetParams<Scalar>& params, const BasicNetParams<Scalar>& grad,
                              const TrainConfig& cfg) {
  ++step;
  const auto b1 = static_cast<Scalar>(cfg.adam_beta1);
  const auto b2 = static_cast<Scalar>(cfg.adam_beta2);
  const auto eps = static_cast<Scalar>(cfg.adam_eps);
  const auto lr = static_cast<Scalar>(cfg.lr);
  const auto c1 = static_cast<Scalar>(1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step)));
  const auto c2 = static_cast<Scalar>(1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step)));
  const auto update = [&](auto& p, auto& m, auto& v, const auto& g) {
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  };
  for (std::size_t l = 0; l < params.weights.size(); ++l) {
    update(params.weights[l], first.weights[l], second.weights[l], grad.weights[l]);
    update(params.biases[l], first.biases[l], second.biases[l], grad.biases[l]);
  }
}

template struct AdamState<double>;
template struct AdamState<float>;

// ---------------------------------------------------------------------------
// Trainer

struct Trainer::Impl {
  virtual ~Impl() = default;
  virtual double pretrain_step() = 0;
  virtual StepReport train_step(int iter) = 0;
  virtual NetParams params() const = 0;

  Impl(std::shared_ptr<const System> s, TrainConfig c)
      : sys(std::move(s)),
        cfg(std::move(c)),
        sampling(Rng::stream(cfg.seed, "sampling")),
        pretraining(Rng::stream(cfg.seed, "pretrain")),
        lambda(cfg.lambda),
        start(std::chrono::steady_clock::now()) {}

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  std::shared_ptr<const System> sys;
  TrainConfig cfg;
  Rng sampling;
  Rng pretraining;
  double lambda;
  std::uint64_t bc_evaluations = 0;
  std::chrono::steady_clock::time_point start;
  std::function<void(const StepReport&)> observer;
};

namespace {

template <typename Scalar>
struct TypedImpl final : Trainer::Impl {
  TypedImpl(std::shared_ptr<const System> s, TrainConfig c, const NetParams& initial)
      : Impl(std::move(s), std::move(c)),
        net(initial.template cast<Scalar>()),
        adam(AdamState<Scalar>::like(net)),
        grad(net.zeros_like()),
        grad_bc(net.zeros_like()) {}

  double pretrain_step() override {
    if (cfg.variant == Variant::Vanilla) throw ContractError("pretraining applies to the diff and exact variants only");
    Eigen::MatrixXd states(sys->state_dim(), cfg.batch_size);
    for (int i = 0; i < cfg.batch_size; ++i) {
      StateVec x(sys->state_dim());
      for (int d = 0; d < sys->state_dim(); ++d) {
        x(d) = pretraining.uniform(sys->spec().domain_lo(d), sys->spec().domain_hi(d));
      }
      states.col(i) = sys->canonicalize(x);
    }
    Vec<Scalar> adjoint;
    const double loss = pretrain_adjoint(net, *sys, states, ws, adjoint);
    if (!std::isfinite(loss)) throw NumericalError("pretraining produced a non-finite loss");
    grad.set_zero();
    ws.backward(net, adjoint, nullptr, grad);
    adam.apply(net, grad, cfg);
    return loss;
  }

  StepReport train_step(int iter) override {
    if (iter < 0 || iter >= cfg.iters) {
      throw ContractError("train_step: iteration " + std::to_string(iter) + " outside [0, " +
                          std::to_string(cfg.iters) + ")");
    }
    const auto interval = curriculum_interval(iter, cfg, sys->horizon());
    const TrainBatch batch = sample_batch(*sys, interval, cfg, sampling);
    const Adjoints<Scalar> adj = residual_adjoints(cfg.variant, net, *sys, batch, ws);
    bc_evaluations += static_cast<std::uint64_t>(adj.bc_count);
    if (!std::isfinite(adj.pde_loss) || !std::isfinite(adj.bc_loss)) {
      std::ostringstream msg;
      msg << "non-finite loss at iteration " << iter << " (pde=" << adj.pde_loss << ", bc=" << adj.bc_loss
          << ", batch=" << batch.states.cols() << ", t_lo=" << interval.first
          << ", |states|max=" << batch.states.cwiseAbs().maxCoeff() << ")";
      throw NumericalError(msg.str());
    }

    grad.set_zero();
    const bool rebalance = cfg.variant == Variant::Vanilla && cfg.adaptive_lambda && iter % cfg.lambda_update_every == 0;
    if (rebalance) {
      grad_bc.set_zero();
      ws.backward(net, adj.pde_out, &adj.pde_in, grad);
      ws.backward(net, adj.bc_out, nullptr, grad_bc);
      lambda = adaptive_lambda_impl(lambda, grad, grad_bc);
      grad.axpy(static_cast<Scalar>(lambda), grad_bc);
    } else {
      Vec<Scalar> out_adj = adj.pde_out;
      if (cfg.variant == Variant::Vanilla) out_adj += static_cast<Scalar>(lambda) * adj.bc_out;
      ws.backward(net, out_adj, &adj.pde_in, grad);
    }
    adam.apply(net, grad, cfg);

    StepReport report;
    report.iter = iter;
    report.t_lo = interval.first;
    report.pde_loss = adj.pde_loss;
    report.bc_loss = adj.bc_loss;
    report.lambda = cfg.variant == Variant::Vanilla ? lambda : 0.0;
    report.wall_seconds = elapsed();
    return report;
  }

  NetParams params() const override { return net.template cast<double>(); }

  BasicNetParams<Scalar> net;
  AdamState<Scalar> adam;
  BasicNetParams<Scalar> grad;
  BasicNetParams<Scalar> grad_bc;
  SirenWorkspace<Scalar> ws;
};

}  // namespace

Trainer::Trainer(std::shared_ptr<const System> sys, TrainConfig cfg, const NetParams& initial) {
  if (!sys) throw ContractError("Trainer: null system");
  cfg.validate();
  initial.validate();
  if (initial.input_dim() != sys->state_dim() + 1) throw ContractError("Trainer: network input width mismatch");
  if (cfg.precision == Precision::Single) {
    impl_ = std::make_unique<TypedImpl<float>>(std::move(sys), std::move(cfg), initial);
  } else {
    impl_ = std::make_unique<TypedImpl<double>>(std::move(sys), std::move(cfg), initial);
  }
}

Trainer::~Trainer() = default;
Trainer::Trainer(Trainer&&) noexcept = default;
Trainer& Trainer::operator=(Trainer&&) noexcept = default;

double Trainer::pretrain_step() { return impl_->pretrain_step(); }

StepReport Trainer::train_step(int iter) {
  StepReport report = impl_->train_step(iter);
  if (impl_->observer) impl_->observer(report);
  return report;
}

void Trainer::pretrain(int count, std::ostream* log, int log_every) {
  for (int i = 0; i < count; ++i) {
    const double loss = impl_->pretrain_step();
    if (log != nullptr && (i % log_every == 0 || i + 1 == count)) {
      StepReport r;
      r.iter = i;
      r.t_lo = impl_->sys->horizon();
      r.pde_loss = loss;
      r.wall_seconds = impl_->elapsed();
      write_log_record(*log, r, "pretrain");
    }
  }
}

void Trainer::train(int first_iter, std::ostream* log, int log_every) {
  for (int iter = first_iter; iter < impl_->cfg.iters; ++iter) {
    const StepReport r = train_step(iter);
    if (log != nullptr && (iter % log_every == 0 || iter + 1 == impl_->cfg.iters)) {
      write_log_record(*log, r, "train");
    }
  }
}

NetParams Trainer::params() const { return impl_->params(); }
double Trainer::lambda() const { return impl_->lambda; }
const TrainConfig& Trainer::config() const { return impl_->cfg; }
std::uint64_t Trainer::bc_evaluations() const { return impl_->bc_evaluations; }
void Trainer::set_observer(std::function<void(const StepReport&)> observer) { impl_->observer = std::move(observer); }

void write_log_record(std::ostream& out, const StepReport& r, const char* phase) {
  char buf[320];
  std::snprintf(buf, sizeof(buf),
                "{\"phase\":\"%s\",\"iter\":%d,\"t_lo\":%.9g,\"pde_loss\":%.9g,\"bc_loss\":%.9g,\"lambda\":%.9g,"
                "\"wall_time\":%.3f}\n",
                phase, r.iter, r.t_lo, r.pde_loss, r.bc_loss, r.lambda, r.wall_seconds);
  out << buf;
  out.flush();
}

}  // namespace hjreach
