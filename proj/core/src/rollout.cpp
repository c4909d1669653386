#include "hjreach/rollout.hpp"

#include "hjreach/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace hjreach {

namespace {

StateVec rk4(const System& sys, const StateVec& x, const ControlVec& u, double h) {
  const StateVec k1 = sys.dynamics(x, u);
  const StateVec k2 = sys.dynamics(x + 0.5 * h * k1, u);
  const StateVec k3 = sys.dynamics(x + 0.5 * h * k2, u);
  const StateVec k4 = sys.dynamics(x + h * k3, u);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// Step count and the k-th time on [t0, T] with a shortened final step.
int step_count(double t0, double horizon, double dt) {
  return std::max(0, static_cast<int>(std::ceil((horizon - t0) / dt - 1e-9)));
}

double time_at(int k, int steps, double t0, double horizon, double dt) {
  return k >= steps ? horizon : t0 + k * dt;
}

void check_start(const System& sys, const StateVec& x0, double t0, double dt) {
  if (x0.size() != sys.state_dim()) throw ContractError("simulate: state dimension mismatch");
  if (!(dt > 0.0)) throw ContractError("simulate: dt must be positive");
  if (!(t0 >= 0.0 && t0 <= sys.horizon())) throw ContractError("simulate: t0 outside [0, T]");
  const auto& s = sys.spec();
  for (int d = 0; d < sys.state_dim(); ++d) {
    const double slack = 1e-9 * (s.domain_hi(d) - s.domain_lo(d));
    if (!(x0(d) >= s.domain_lo(d) - slack && x0(d) <= s.domain_hi(d) + slack)) {
      throw ContractError("simulate: initial state outside the domain in dimension " + std::to_string(d));
    }
  }
}

}  // namespace

double default_rollout_step(const System& sys) { return sys.horizon() / 500.0; }

Trajectory simulate(const System& sys, const Controller& controller, const StateVec& x0, double t0, double dt) {
  check_start(sys, x0, t0, dt);
  const double horizon = sys.horizon();
  const int steps = step_count(t0, horizon, dt);
  Trajectory traj;
  traj.times.reserve(static_cast<std::size_t>(steps) + 1);
  traj.states.reserve(static_cast<std::size_t>(steps) + 1);
  traj.times.push_back(t0);
  traj.states.push_back(x0);
  traj.cost = sys.target(x0);
  StateVec x = x0;
  for (int k = 0; k < steps; ++k) {
    const double t = time_at(k, steps, t0, horizon, dt);
    const double t_next = time_at(k + 1, steps, t0, horizon, dt);
    const ControlVec u = controller(x, t);
    const StateVec next = rk4(sys, x, u, t_next - t);
    if (!next.allFinite()) {
      traj.failed = true;
      char buf[96];
      std::snprintf(buf, sizeof(buf), "non-finite state at t = %.6g", t_next);
      traj.error = buf;
      break;
    }
    x = sys.canonicalize(next);
    traj.controls.push_back(u);
    traj.times.push_back(t_next);
    traj.states.push_back(x);
    traj.cost = std::min(traj.cost, sys.target(x));
  }
  return traj;
}

Controller policy_controller(const ValueFunction& model) {
  return [&model](const StateVec& x, double t) {
    const ValueEval e = model.evaluate(x, t);
    return model.system().optimal_control(x, e.grad_x);
  };
}

double empirical_value(const ValueFunction& model, const StateVec& x0, double dt) {
  const Trajectory traj = simulate(model.system(), policy_controller(model), x0, 0.0, dt);
  if (traj.failed) throw NumericalError("rollout failed: " + traj.error);
  return traj.cost;
}

double empirical_value(Variant variant, const NetParams& params, const std::shared_ptr<const System>& sys,
                       const StateVec& x0, double dt) {
  return empirical_value(ValueModel(variant, params, sys), x0, dt);
}

int RolloutBatch::failures() const { return static_cast<int>(std::count(failed.begin(), failed.end(), true)); }

RolloutBatch empirical_values(const ValueFunction& model, const Eigen::MatrixXd& states, double dt) {
  const System& sys = model.system();
  const Eigen::Index count = states.cols();
  for (Eigen::Index i = 0; i < count; ++i) check_start(sys, states.col(i), 0.0, dt);
  const double horizon = sys.horizon();
  const int steps = step_count(0.0, horizon, dt);
  const bool controlled = sys.control_dim() > 0;

  RolloutBatch result;
  result.costs.resize(count);
  result.failed.assign(static_cast<std::size_t>(count), false);
  std::vector<char> failed(static_cast<std::size_t>(count), 0);

  constexpr Eigen::Index kChunk = 256;
  const Eigen::Index chunks = (count + kChunk - 1) / kChunk;
  parallel_for(0, chunks, [&](std::ptrdiff_t c) {
    const Eigen::Index lo = c * kChunk;
    const Eigen::Index n = std::min(kChunk, count - lo);
    Eigen::MatrixXd x = states.middleCols(lo, n);
    std::vector<char> alive(static_cast<std::size_t>(n), 1);
    for (Eigen::Index i = 0; i < n; ++i) result.costs(lo + i) = sys.target(x.col(i));
    std::vector<ControlVec> controls(static_cast<std::size_t>(n), ControlVec::Zero(sys.control_dim()));
    for (int k = 0; k < steps; ++k) {
      const double t = time_at(k, steps, 0.0, horizon, dt);
      const double h = time_at(k + 1, steps, 0.0, horizon, dt) - t;
      if (controlled) {
        const std::vector<ValueEval> evals = model.evaluate_batch(x, t);
        for (Eigen::Index i = 0; i < n; ++i) {
          if (alive[static_cast<std::size_t>(i)]) {
            controls[static_cast<std::size_t>(i)] = sys.optimal_control(x.col(i), evals[static_cast<std::size_t>(i)].grad_x);
          }
        }
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!alive[static_cast<std::size_t>(i)]) continue;
        const StateVec next = rk4(sys, x.col(i), controls[static_cast<std::size_t>(i)], h);
        if (!next.allFinite()) {
          alive[static_cast<std::size_t>(i)] = 0;
          failed[static_cast<std::size_t>(lo + i)] = 1;
          continue;
        }
        x.col(i) = sys.canonicalize(next);
        result.costs(lo + i) = std::min(result.costs(lo + i), sys.target(x.col(i)));
      }
    }
  });
  for (Eigen::Index i = 0; i < count; ++i) result.failed[static_cast<std::size_t>(i)] = failed[static_cast<std::size_t>(i)] != 0;
  return result;
}

void write_trajectory_csv(std::ostream& out, const System& sys, const Trajectory& traj) {
  out << "t";
  for (const auto& name : sys.state_names()) out << ',' << name;
  for (int j = 0; j < sys.control_dim(); ++j) out << ",u" << j;
  out << ",l\n";
  char buf[40];
  const auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << buf;
  };
  for (std::size_t k = 0; k < traj.states.size(); ++k) {
    put(traj.times[k]);
    for (Eigen::Index d = 0; d < traj.states[k].size(); ++d) {
      out << ',';
      put(traj.states[k](d));
    }
    for (int j = 0; j < sys.control_dim(); ++j) {
      out << ',';
      if (k < traj.controls.size()) put(traj.controls[k](j));
    }
    out << ',';
    put(sys.target(traj.states[k]));
    out << '\n';
  }
}

}  // namespace hjreach
