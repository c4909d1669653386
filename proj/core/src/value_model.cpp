#include "hjreach/value_model.hpp"

#include <string>

namespace hjreach {

std::vector<ValueEval> ValueFunction::evaluate_batch(const Eigen::MatrixXd& states, double t) const {
  std::vector<ValueEval> out;
  out.reserve(static_cast<std::size_t>(states.cols()));
  for (Eigen::Index i = 0; i < states.cols(); ++i) out.push_back(evaluate(states.col(i), t));
  return out;
}

Eigen::VectorXd ValueFunction::values(const Eigen::MatrixXd& states, double t) const {
  Eigen::VectorXd v(states.cols());
  for (Eigen::Index i = 0; i < states.cols(); ++i) v(i) = evaluate(states.col(i), t).v;
  return v;
}

bool is_safe(Mode mode, double value, double delta) {
  return mode == Mode::Avoid ? value > delta : value < -delta;
}

std::vector<int> layer_sizes_for(const System& system, int hidden_width, int hidden_layers) {
  if (hidden_width <= 0 || hidden_layers <= 0) throw ContractError("hidden width and layer count must be positive");
  std::vector<int> sizes{system.state_dim() + 1};
  for (int i = 0; i < hidden_layers; ++i) sizes.push_back(hidden_width);
  sizes.push_back(1);
  return sizes;
}

ValueModel::ValueModel(Variant variant, NetParams params, std::shared_ptr<const System> system)
    : variant_(variant), params_(std::move(params)), system_(std::move(system)) {
  if (!system_) throw ContractError("ValueModel: null system");
  params_.validate();
  if (params_.input_dim() != system_->state_dim() + 1) {
    throw ContractError("ValueModel: network input width " + std::to_string(params_.input_dim()) +
                        " does not match state_dim + 1 = " + std::to_string(system_->state_dim() + 1));
  }
}

void ValueModel::check_time(double t) const {
  if (!(t >= 0.0 && t <= system_->horizon())) {
    throw ContractError("value: time " + std::to_string(t) + " outside [0, " + std::to_string(system_->horizon()) +
                        "]");
  }
}

Eigen::VectorXd ValueModel::network_input(const StateVec& canonical_x, double t) const {
  Eigen::VectorXd z(canonical_x.size() + 1);
  z(0) = t / system_->horizon();
  z.tail(canonical_x.size()) = system_->normalize(canonical_x);
  return z;
}

ValueEval ValueModel::compose(const StateVec& x, const Eigen::MatrixXd& jacobian, double t, double out,
                              const Eigen::VectorXd& input_grad) const {
  const System& sys = *system_;
  const double horizon = sys.horizon();
  const Eigen::Index n = x.size();
  const double out_dt = input_grad(0) / horizon;
  const Eigen::VectorXd out_grad = input_grad.tail(n).cwiseProduct(sys.normalization_scale());

  ValueEval e;
  e.net_out = out;
  e.net_dt = out_dt;
  Eigen::VectorXd grad;
  switch (variant_) {
    case Variant::Vanilla:
      e.v = out;
      grad = out_grad;
      e.dt = out_dt;
      break;
    case Variant::Diff:
      e.v = sys.target(x) + out;
      grad = sys.target_grad(x) + out_grad;
      e.dt = out_dt;
      break;
    case Variant::Exact: {
      const double remaining = horizon - t;
      e.v = sys.target(x) + remaining * out;
      grad = sys.target_grad(x) + remaining * out_grad;
      e.dt = -out + remaining * out_dt;
      break;
    }
  }
  e.grad_x = jacobian.transpose() * grad;
  return e;
}

ValueEval ValueModel::evaluate(const StateVec& x, double t) const {
  check_time(t);
  const auto [canonical, jacobian] = system_->canonicalize_with_jacobian(x);
  const NetEval net = forward_with_grad(params_, network_input(canonical, t));
  return compose(canonical, jacobian, t, net.output, net.input_grad);
}

std::vector<ValueEval> ValueModel::evaluate_batch(const Eigen::MatrixXd& states, double t) const {
  check_time(t);
  const Eigen::Index batch = states.cols();
  std::vector<StateVec> canonical(static_cast<std::size_t>(batch));
  std::vector<Eigen::MatrixXd> jacobians(static_cast<std::size_t>(batch));
  Eigen::MatrixXd inputs(params_.input_dim(), batch);
  for (Eigen::Index i = 0; i < batch; ++i) {
    auto [c, j] = system_->canonicalize_with_jacobian(states.col(i));
    inputs.col(i) = network_input(c, t);
    canonical[static_cast<std::size_t>(i)] = std::move(c);
    jacobians[static_cast<std::size_t>(i)] = std::move(j);
  }
  SirenWorkspace<double> ws;
  ws.forward(params_, inputs, true);
  std::vector<ValueEval> out;
  out.reserve(static_cast<std::size_t>(batch));
  for (Eigen::Index i = 0; i < batch; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out.push_back(compose(canonical[k], jacobians[k], t, ws.outputs()(i), ws.input_grads().col(i)));
  }
  return out;
}

Eigen::VectorXd ValueModel::values(const Eigen::MatrixXd& states, double t) const {
  check_time(t);
  const Eigen::Index batch = states.cols();
  Eigen::MatrixXd inputs(params_.input_dim(), batch);
  Eigen::MatrixXd canonical(states.rows(), batch);
  for (Eigen::Index i = 0; i < batch; ++i) {
    canonical.col(i) = system_->canonicalize(states.col(i));
    inputs.col(i) = network_input(canonical.col(i), t);
  }
  const Eigen::VectorXd out = forward_batch(params_, inputs);
  Eigen::VectorXd v(batch);
  const double remaining = system_->horizon() - t;
  for (Eigen::Index i = 0; i < batch; ++i) {
    switch (variant_) {
      case Variant::Vanilla:
        v(i) = out(i);
        break;
      case Variant::Diff:
        v(i) = system_->target(canonical.col(i)) + out(i);
        break;
      case Variant::Exact:
        v(i) = system_->target(canonical.col(i)) + remaining * out(i);
        break;
    }
  }
  return v;
}

ControlVec ValueModel::policy(const StateVec& x, double t) const {
  const ValueEval e = evaluate(x, t);
  return system_->optimal_control(x, e.grad_x);
}

bool ValueModel::brt_membership(const StateVec& x, double t, double delta) const {
  if (delta < 0.0) throw ContractError("brt_membership: delta must be non-negative");
  return is_safe(system_->mode(), evaluate(x, t).v, delta);
}

ValueEval value(Variant variant, const NetParams& params, const std::shared_ptr<const System>& system,
                const StateVec& x, double t) {
  return ValueModel(variant, params, system).evaluate(x, t);
}

ControlVec policy(Variant variant, const NetParams& params, const std::shared_ptr<const System>& system,
                  const StateVec& x, double t) {
  return ValueModel(variant, params, system).policy(x, t);
}

bool brt_membership(Variant variant, const NetParams& params, const std::shared_ptr<const System>& system,
                    const StateVec& x, double t, double delta) {
  return ValueModel(variant, params, system).brt_membership(x, t, delta);
}

}  // namespace hjreach
