#pragma once

#include "hjreach/common.hpp"
#include "hjreach/systems.hpp"
#include "hjreach/value_model.hpp"

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace hjreach {

/// Sampled closed-loop trajectory. controls[k] is held over
/// [times[k], times[k + 1]); cost is the minimum of l over `states`.
struct Trajectory {
  std::vector<double> times;
  std::vector<StateVec> states;
  std::vector<ControlVec> controls;
  double cost = 0.0;
  bool failed = false;  // integration hit a non-finite state and was cut short
  std::string error;
};

using Controller = std::function<ControlVec(const StateVec& x, double t)>;

/// T / 500 for the system's horizon.
double default_rollout_step(const System& sys);

/// RK4 with zero-order-hold control from t0 to T. States are canonicalized
/// after each step, which applies resets; the final step is shortened to
/// land on T.
Trajectory simulate(const System& sys, const Controller& controller, const StateVec& x0, double t0, double dt);

/// Controller that applies the model's bang-bang policy.
Controller policy_controller(const ValueFunction& model);

/// Cost J(x0) of the rollout from t = 0 under the model's policy.
double empirical_value(const ValueFunction& model, const StateVec& x0, double dt);
double empirical_value(Variant variant, const NetParams& params, const std::shared_ptr<const System>& sys,
                       const StateVec& x0, double dt);

struct RolloutBatch {
  Eigen::VectorXd costs;
  std::vector<bool> failed;
  int failures() const;
};

/// J for every column of `states`, integrated like empirical_value().
/// Trajectories advance in lockstep so the policy is evaluated with batched
/// network passes.
RolloutBatch empirical_values(const ValueFunction& model, const Eigen::MatrixXd& states, double dt);

/// CSV with columns t, state names, u0.., l. The control of the last row
/// is left empty.
void write_trajectory_csv(std::ostream& out, const System& sys, const Trajectory& traj);

}  // namespace hjreach
