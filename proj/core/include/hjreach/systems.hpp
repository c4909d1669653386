#pragma once

#include "hjreach/common.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace hjreach {

struct Obstacle {
  double cx = 0.0;
  double cy = 0.0;
  double radius = 0.0;
  bool operator==(const Obstacle&) const = default;
};

/// Static description of a benchmark problem. Which concrete dynamics it
/// selects is determined by `name` (see make_system()).
struct SystemSpec {
  std::string name;
  int state_dim = 0;
  int control_dim = 0;
  Eigen::VectorXd control_lo;
  Eigen::VectorXd control_hi;
  Eigen::VectorXd domain_lo;
  Eigen::VectorXd domain_hi;
  Mode mode = Mode::Avoid;
  double horizon = 1.0;
  std::map<std::string, double> params;
  std::vector<Obstacle> obstacles;

  void validate() const;
  double param(const std::string& key) const;
  /// FNV-1a over a canonical text rendering; used to tie checkpoints to a system.
  std::uint64_t hash() const;
};

/// Names accepted by default_spec()/make_system().
std::vector<std::string> known_systems();
SystemSpec default_spec(const std::string& name);

/// Control-affine dynamics xdot = drift(x) + input_matrix(x) * u plus the
/// target function l(x) whose sub-zero level set is the target/failure set.
class System {
 public:
  explicit System(SystemSpec spec);
  virtual ~System() = default;

  const SystemSpec& spec() const { return spec_; }
  int state_dim() const { return spec_.state_dim; }
  int control_dim() const { return spec_.control_dim; }
  Mode mode() const { return spec_.mode; }
  double horizon() const { return spec_.horizon; }

  StateVec dynamics(const StateVec& x, const ControlVec& u) const;
  virtual StateVec drift(const StateVec& x) const = 0;
  /// n x m matrix whose column j is the channel-j input direction g_j(x).
  virtual Eigen::MatrixXd input_matrix(const StateVec& x) const = 0;

  virtual double target(const StateVec& x) const = 0;
  /// Subgradient of target(); at min/abs kinks the active branch with the
  /// lowest index is differentiated.
  virtual StateVec target_grad(const StateVec& x) const = 0;

  /// Bang-bang extremal control for the value gradient `grad`.
  ControlVec optimal_control(const StateVec& x, const StateVec& grad) const;
  double hamiltonian(const StateVec& x, const StateVec& grad) const;
  /// Hamiltonian together with f(x, u*) (the Hamiltonian's gradient in `grad`).
  double hamiltonian(const StateVec& x, const StateVec& grad, StateVec* flow) const;

  /// Maps x onto the canonical chart: applies resets and wraps angles.
  StateVec canonicalize(const StateVec& x) const;
  /// Same as canonicalize() and also returns d canonicalize / dx.
  virtual std::pair<StateVec, Eigen::MatrixXd> canonicalize_with_jacobian(const StateVec& x) const;
  /// True if the system has a state reset (switching surface).
  virtual bool has_reset() const { return false; }
  /// Switching surface test; only meaningful when has_reset().
  virtual bool past_switching_surface(const StateVec& /*x*/) const { return false; }
  /// Pre-reset point on the switching surface with the given secondary
  /// coordinates; used to sample reset-consistency constraints.
  virtual StateVec surface_point(const StateVec& x) const { return x; }
  /// Apply the reset map once (no surface test).
  virtual StateVec reset_map(const StateVec& x) const { return x; }

  virtual std::vector<std::string> state_names() const;
  /// Per-dimension Lipschitz-style bound on |l(x) - l(y)| / |x - y|.
  virtual double target_lipschitz() const { return 1.0; }

  StateVec normalize(const StateVec& x) const;
  StateVec denormalize(const StateVec& z) const;
  /// d normalize / dx, per dimension: 2 / (hi - lo).
  const Eigen::VectorXd& normalization_scale() const { return scale_; }

 protected:
  void check_state(const StateVec& x, const char* what) const;
  /// Angle wrapping applied by canonicalize(); dimensions listed here are
  /// mapped into [-pi, pi).
  std::vector<int> angle_dims_;

 private:
  SystemSpec spec_;
  Eigen::VectorXd center_;
  Eigen::VectorXd scale_;
};

std::unique_ptr<System> make_system(const SystemSpec& spec);

double wrap_angle(double angle);

}  // namespace hjreach
