#pragma once

#include "hjreach/common.hpp"
#include "hjreach/siren.hpp"
#include "hjreach/systems.hpp"

#include <memory>
#include <vector>

namespace hjreach {

/// V, its state gradient and time derivative at one (x, t), plus the raw
/// network output O and dO/dt (unnormalized time).
struct ValueEval {
  double v = 0.0;
  Eigen::VectorXd grad_x;
  double dt = 0.0;
  double net_out = 0.0;
  double net_dt = 0.0;
};

/// Anything that can be queried as a value function over a system. The
/// neural model implements it; verification also accepts analytic stand-ins.
class ValueFunction {
 public:
  virtual ~ValueFunction() = default;
  virtual const System& system() const = 0;
  virtual ValueEval evaluate(const StateVec& x, double t) const = 0;
  /// Columns of `states` evaluated at a common time. The default loops over
  /// evaluate(); implementations override it with batched kernels.
  virtual std::vector<ValueEval> evaluate_batch(const Eigen::MatrixXd& states, double t) const;
  /// Values only.
  virtual Eigen::VectorXd values(const Eigen::MatrixXd& states, double t) const;
};

/// Safe-set membership at correction level delta. Avoid: safe iff V > delta.
/// Reach: live iff V < -delta.
bool is_safe(Mode mode, double value, double delta);

/// Network-backed value function in one of the three parameterizations:
///   Vanilla  V = O
///   Diff     V = l(x) + O
///   Exact    V = l(x) + (T - t) * O
/// where O is evaluated on z = (t / T, normalize(canonicalize(x))).
class ValueModel final : public ValueFunction {
 public:
  ValueModel(Variant variant, NetParams params, std::shared_ptr<const System> system);

  const System& system() const override { return *system_; }
  Variant variant() const { return variant_; }
  const NetParams& params() const { return params_; }

  ValueEval evaluate(const StateVec& x, double t) const override;
  std::vector<ValueEval> evaluate_batch(const Eigen::MatrixXd& states, double t) const override;
  Eigen::VectorXd values(const Eigen::MatrixXd& states, double t) const override;

  ControlVec policy(const StateVec& x, double t) const;
  bool brt_membership(const StateVec& x, double t, double delta) const;

  /// Network input for an already-canonical state.
  Eigen::VectorXd network_input(const StateVec& canonical_x, double t) const;

 private:
  void check_time(double t) const;
  ValueEval compose(const StateVec& canonical_x, const Eigen::MatrixXd& jacobian, double t, double out,
                    const Eigen::VectorXd& input_grad) const;

  Variant variant_;
  NetParams params_;
  std::shared_ptr<const System> system_;
};

// Free-function forms.
ValueEval value(Variant variant, const NetParams& params, const std::shared_ptr<const System>& system,
                const StateVec& x, double t);
ControlVec policy(Variant variant, const NetParams& params, const std::shared_ptr<const System>& system,
                  const StateVec& x, double t);
bool brt_membership(Variant variant, const NetParams& params, const std::shared_ptr<const System>& system,
                    const StateVec& x, double t, double delta);

/// Network input widths for a system: (n + 1, hidden..., 1).
std::vector<int> layer_sizes_for(const System& system, int hidden_width, int hidden_layers);

}  // namespace hjreach
