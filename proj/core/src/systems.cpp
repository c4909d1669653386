#include "hjreach/systems.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace hjreach {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double v : values) out(i++) = v;
  return out;
}

// -------------------------------------------------------------------------
// Rimless wheel: pendulum-like stance dynamics with a spoke-impact reset at
// theta = alpha + gamma. The target is a thin energy band around the gait.
class RimlessWheel final : public System {
 public:
  explicit RimlessWheel(SystemSpec spec)
      : System(std::move(spec)),
        gamma_(this->spec().param("gamma")),
        alpha_(this->spec().param("alpha")),
        energy_(this->spec().param("E")),
        band_(this->spec().param("eps_band")) {}

  StateVec drift(const StateVec& x) const override {
    check_state(x, "drift");
    return vec({x(1), std::sin(x(0))});
  }
  Eigen::MatrixXd input_matrix(const StateVec& x) const override {
    check_state(x, "input_matrix");
    return Eigen::MatrixXd::Zero(2, 0);
  }

  double target(const StateVec& x) const override {
    check_state(x, "target");
    return std::abs(energy_gap(x)) - band_;
  }
  StateVec target_grad(const StateVec& x) const override {
    check_state(x, "target_grad");
    const double s = energy_gap(x) >= 0.0 ? 1.0 : -1.0;
    return vec({-s * std::sin(x(0)), s * x(1)});
  }

  std::pair<StateVec, Eigen::MatrixXd> canonicalize_with_jacobian(const StateVec& x) const override {
    check_state(x, "canonicalize");
    StateVec y = x;
    Eigen::MatrixXd jac = Eigen::MatrixXd::Identity(2, 2);
    const Eigen::Matrix2d step_jac = vec({-1.0, std::cos(2.0 * alpha_)}).asDiagonal();
    // A single reset lands at theta <= gamma - alpha, so this runs at most once
    // for alpha > 0; the bound guards against degenerate parameters.
    for (int guard = 0; guard < 64 && past_switching_surface(y); ++guard) {
      y = reset_map(y);
      jac = step_jac * jac;
    }
    return {y, jac};
  }
  bool has_reset() const override { return true; }
  // Slack so the surface itself (theta = alpha + gamma, the domain edge) resets despite rounding.
  bool past_switching_surface(const StateVec& x) const override { return x(0) >= alpha_ + gamma_ - 1e-12; }
  StateVec surface_point(const StateVec& x) const override { return vec({alpha_ + gamma_, x(1)}); }
  StateVec reset_map(const StateVec& x) const override {
    return vec({2.0 * gamma_ - x(0), std::cos(2.0 * alpha_) * x(1)});
  }

  std::vector<std::string> state_names() const override { return {"theta", "theta_dot"}; }
  double target_lipschitz() const override {
    const auto& s = spec();
    const double max_rate = std::max(std::abs(s.domain_lo(1)), std::abs(s.domain_hi(1)));
    return std::sqrt(1.0 + max_rate * max_rate);
  }

 private:
  double energy_gap(const StateVec& x) const {
    return std::cos(x(0)) + 0.5 * x(1) * x(1) - energy_;
  }

  double gamma_, alpha_, energy_, band_;
};

// -------------------------------------------------------------------------
// Kinematic bicycle among circular obstacles.
// State (p_x, p_y, v, theta, psi); controls (a, omega).
class Bicycle final : public System {
 public:
  explicit Bicycle(SystemSpec spec) : System(std::move(spec)), wheelbase_(this->spec().param("L")) {
    if (this->spec().obstacles.empty()) throw ContractError("bicycle: obstacle list is empty");
    angle_dims_ = {3, 4};
  }

  StateVec drift(const StateVec& x) const override {
    check_state(x, "drift");
    const double v = x(2);
    return vec({v * std::cos(x(3)), v * std::sin(x(3)), 0.0, v / wheelbase_ * std::tan(x(4)), 0.0});
  }
  Eigen::MatrixXd input_matrix(const StateVec& x) const override {
    check_state(x, "input_matrix");
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(5, 2);
    g(2, 0) = 1.0;
    g(4, 1) = 1.0;
    return g;
  }

  double target(const StateVec& x) const override {
    check_state(x, "target");
    return signed_distance(x).first;
  }
  StateVec target_grad(const StateVec& x) const override {
    check_state(x, "target_grad");
    const auto [value, index] = signed_distance(x);
    (void)value;
    const Obstacle& o = spec().obstacles[static_cast<std::size_t>(index)];
    StateVec g = StateVec::Zero(5);
    const double dx = x(0) - o.cx;
    const double dy = x(1) - o.cy;
    const double r = std::hypot(dx, dy);
    if (r > 0.0) {
      g(0) = dx / r;
      g(1) = dy / r;
    }
    return g;
  }

  std::vector<std::string> state_names() const override { return {"p_x", "p_y", "v", "theta", "psi"}; }

 private:
  std::pair<double, int> signed_distance(const StateVec& x) const {
    double best = 0.0;
    int best_index = -1;
    const auto& obstacles = spec().obstacles;
    for (std::size_t i = 0; i < obstacles.size(); ++i) {
      const double d = std::hypot(x(0) - obstacles[i].cx, x(1) - obstacles[i].cy) - obstacles[i].radius;
      if (best_index < 0 || d < best) {
        best = d;
        best_index = static_cast<int>(i);
      }
    }
    return {best, best_index};
  }

  double wheelbase_;
};

// -------------------------------------------------------------------------
// Planar rocket landing. State (p_x, p_y, theta, v_x, v_y, omega);
// controls (tau_1, tau_2). Target is the landing pad |p_x| <= w, p_y <= h.
class Rocket final : public System {
 public:
  explicit Rocket(SystemSpec spec)
      : System(std::move(spec)),
        g_(this->spec().param("g")),
        k_(this->spec().param("k")),
        pad_half_width_(this->spec().param("pad_half_width")),
        pad_height_(this->spec().param("pad_height")) {
    angle_dims_ = {2};
  }

  StateVec drift(const StateVec& x) const override {
    check_state(x, "drift");
    return vec({x(3), x(4), x(5), 0.0, -g_, 0.0});
  }
  Eigen::MatrixXd input_matrix(const StateVec& x) const override {
    check_state(x, "input_matrix");
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(6, 2);
    const double c = std::cos(x(2));
    const double s = std::sin(x(2));
    g(3, 0) = c;
    g(4, 0) = s;
    g(5, 0) = k_;
    g(3, 1) = -s;
    g(4, 1) = c;
    return g;
  }

  double target(const StateVec& x) const override {
    check_state(x, "target");
    return std::max(std::abs(x(0)) - pad_half_width_, x(1) - pad_height_);
  }
  StateVec target_grad(const StateVec& x) const override {
    check_state(x, "target_grad");
    StateVec g = StateVec::Zero(6);
    const double lateral = std::abs(x(0)) - pad_half_width_;
    const double vertical = x(1) - pad_height_;
    if (lateral >= vertical) {
      g(0) = x(0) >= 0.0 ? 1.0 : -1.0;
    } else {
      g(1) = 1.0;
    }
    return g;
  }

  std::vector<std::string> state_names() const override {
    return {"p_x", "p_y", "theta", "v_x", "v_y", "omega"};
  }

 private:
  double g_, k_, pad_half_width_, pad_height_;
};

// -------------------------------------------------------------------------
// Three Dubins aircraft at constant speed; state (x_i, y_i, theta_i) x 3.
class MultiAircraft final : public System {
 public:
  explicit MultiAircraft(SystemSpec spec)
      : System(std::move(spec)), speed_(this->spec().param("v")), radius_(this->spec().param("R")) {
    angle_dims_ = {2, 5, 8};
  }

  StateVec drift(const StateVec& x) const override {
    check_state(x, "drift");
    StateVec f = StateVec::Zero(9);
    for (int i = 0; i < 3; ++i) {
      f(3 * i) = speed_ * std::cos(x(3 * i + 2));
      f(3 * i + 1) = speed_ * std::sin(x(3 * i + 2));
    }
    return f;
  }
  Eigen::MatrixXd input_matrix(const StateVec& x) const override {
    check_state(x, "input_matrix");
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(9, 3);
    for (int i = 0; i < 3; ++i) g(3 * i + 2, i) = 1.0;
    return g;
  }

  double target(const StateVec& x) const override {
    check_state(x, "target");
    return closest_pair(x).first - radius_;
  }
  StateVec target_grad(const StateVec& x) const override {
    check_state(x, "target_grad");
    const int pair = closest_pair(x).second;
    const auto [a, b] = kPairs[pair];
    StateVec g = StateVec::Zero(9);
    const double dx = x(3 * a) - x(3 * b);
    const double dy = x(3 * a + 1) - x(3 * b + 1);
    const double d = std::hypot(dx, dy);
    if (d > 0.0) {
      g(3 * a) = dx / d;
      g(3 * a + 1) = dy / d;
      g(3 * b) = -dx / d;
      g(3 * b + 1) = -dy / d;
    }
    return g;
  }

  std::vector<std::string> state_names() const override {
    return {"x_1", "y_1", "theta_1", "x_2", "y_2", "theta_2", "x_3", "y_3", "theta_3"};
  }
  double target_lipschitz() const override { return std::sqrt(2.0); }

 private:
  // Branch order of the pairwise minimum: (1,2), (2,3), (1,3).
  static constexpr std::pair<int, int> kPairs[3] = {{0, 1}, {1, 2}, {0, 2}};

  std::pair<double, int> closest_pair(const StateVec& x) const {
    double best = 0.0;
    int best_index = -1;
    for (int p = 0; p < 3; ++p) {
      const auto [a, b] = kPairs[p];
      const double d = std::hypot(x(3 * a) - x(3 * b), x(3 * a + 1) - x(3 * b + 1));
      if (best_index < 0 || d < best) {
        best = d;
        best_index = p;
      }
    }
    return {best, best_index};
  }

  double speed_, radius_;
};

// -------------------------------------------------------------------------
// 1D single integrator xdot = u, |u| <= u_max, l = |x| - r. With u_max = 0 it
// is the zero-dynamics system.
class Integrator1D final : public System {
 public:
  explicit Integrator1D(SystemSpec spec) : System(std::move(spec)), radius_(this->spec().param("r")) {}

  StateVec drift(const StateVec& x) const override {
    check_state(x, "drift");
    return StateVec::Zero(1);
  }
  Eigen::MatrixXd input_matrix(const StateVec& x) const override {
    check_state(x, "input_matrix");
    return Eigen::MatrixXd::Ones(1, 1);
  }
  double target(const StateVec& x) const override {
    check_state(x, "target");
    return std::abs(x(0)) - radius_;
  }
  StateVec target_grad(const StateVec& x) const override {
    check_state(x, "target_grad");
    return vec({x(0) >= 0.0 ? 1.0 : -1.0});
  }
  std::vector<std::string> state_names() const override { return {"x"}; }

 private:
  double radius_;
};

void append_number(std::ostringstream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g;", v);
  out << buf;
}

}  // namespace

// -------------------------------------------------------------------------

void SystemSpec::validate() const {
  const auto fail = [&](const std::string& msg) { throw ContractError("system '" + name + "': " + msg); };
  if (state_dim <= 0) fail("state_dim must be positive");
  if (control_dim < 0) fail("control_dim must be non-negative");
  if (control_lo.size() != control_dim || control_hi.size() != control_dim) fail("control bounds size mismatch");
  if (domain_lo.size() != state_dim || domain_hi.size() != state_dim) fail("domain bounds size mismatch");
  for (int j = 0; j < control_dim; ++j) {
    if (!(control_lo(j) <= control_hi(j))) fail("control_lo must not exceed control_hi");
  }
  for (int i = 0; i < state_dim; ++i) {
    if (!(domain_lo(i) < domain_hi(i))) fail("domain_lo must be below domain_hi");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) fail("horizon must be positive");
  for (const auto& o : obstacles) {
    if (!(o.radius > 0.0)) fail("obstacle radius must be positive");
  }
}

double SystemSpec::param(const std::string& key) const {
  auto it = params.find(key);
  if (it == params.end()) throw ContractError("system '" + name + "': missing parameter '" + key + "'");
  return it->second;
}

std::uint64_t SystemSpec::hash() const {
  std::ostringstream out;
  out << name << '|' << state_dim << '|' << control_dim << '|' << to_string(mode) << '|';
  append_number(out, horizon);
  for (const auto* v : {&control_lo, &control_hi, &domain_lo, &domain_hi}) {
    for (Eigen::Index i = 0; i < v->size(); ++i) append_number(out, (*v)(i));
    out << '|';
  }
  for (const auto& [k, v] : params) {
    out << k << '=';
    append_number(out, v);
  }
  out << '|';
  for (const auto& o : obstacles) {
    append_number(out, o.cx);
    append_number(out, o.cy);
    append_number(out, o.radius);
  }
  const std::string text = out.str();
  return fnv1a64(text.data(), text.size());
}

std::vector<std::string> known_systems() {
  return {"rimless_wheel", "bicycle", "rocket", "multi_aircraft", "integrator1d"};
}

SystemSpec default_spec(const std::string& name) {
  SystemSpec s;
  s.name = name;
  if (name == "rimless_wheel") {
    s.state_dim = 2;
    s.control_dim = 0;
    s.control_lo = s.control_hi = Eigen::VectorXd(0);
    s.domain_lo = vec({-0.2, -1.3});
    s.domain_hi = vec({0.6, 0.6});
    s.mode = Mode::Reach;
    s.horizon = 6.3;
    s.params = {{"gamma", 0.2}, {"alpha", 0.4}, {"E", 1.132}, {"eps_band", 0.05}};
  } else if (name == "bicycle") {
    s.state_dim = 5;
    s.control_dim = 2;
    s.control_lo = vec({-2.0, -2.0});
    s.control_hi = vec({2.0, 2.0});
    s.domain_lo = vec({-4.0, -4.0, 1.0, -kPi, -kPi / 3.0});
    s.domain_hi = vec({4.0, 4.0, 5.0, kPi, kPi / 3.0});
    s.mode = Mode::Avoid;
    s.horizon = 1.0;
    s.params = {{"L", 1.0}};
    // Five distinct radii in [0.5, 1.5]; gaps between obstacles 1-2 (0.41 m)
    // and 2-3 (0.70 m) are narrower than 1 m.
    s.obstacles = {{-2.0, 2.0, 1.0}, {0.0, 2.2, 0.6}, {2.4, 1.5, 1.2}, {-1.5, -2.0, 1.4}, {1.8, -2.2, 0.8}};
  } else if (name == "rocket") {
    s.state_dim = 6;
    s.control_dim = 2;
    s.control_lo = vec({0.0, 0.0});
    s.control_hi = vec({25.0, 25.0});
    s.domain_lo = vec({-150.0, 0.0, -kPi, -50.0, -50.0, -2.0});
    s.domain_hi = vec({150.0, 150.0, kPi, 50.0, 50.0, 2.0});
    s.mode = Mode::Reach;
    s.horizon = 1.0;
    s.params = {{"g", 9.8}, {"k", 1.0}, {"pad_half_width", 20.0}, {"pad_height", 20.0}};
  } else if (name == "multi_aircraft") {
    s.state_dim = 9;
    s.control_dim = 3;
    s.control_lo = Eigen::VectorXd::Constant(3, -1.1);
    s.control_hi = Eigen::VectorXd::Constant(3, 1.1);
    s.domain_lo = vec({-1.0, -1.0, -kPi, -1.0, -1.0, -kPi, -1.0, -1.0, -kPi});
    s.domain_hi = vec({1.0, 1.0, kPi, 1.0, 1.0, kPi, 1.0, 1.0, kPi});
    s.mode = Mode::Avoid;
    s.horizon = 1.0;
    s.params = {{"v", 0.6}, {"R", 0.25}};
  } else if (name == "integrator1d") {
    s.state_dim = 1;
    s.control_dim = 1;
    s.control_lo = vec({-1.0});
    s.control_hi = vec({1.0});
    s.domain_lo = vec({-1.0});
    s.domain_hi = vec({1.0});
    s.mode = Mode::Avoid;
    s.horizon = 0.5;
    s.params = {{"r", 0.25}};
  } else {
    throw ContractError("unknown system '" + name + "'");
  }
  return s;
}

std::unique_ptr<System> make_system(const SystemSpec& spec) {
  spec.validate();
  const auto require_dims = [&](int n, int m) {
    if (spec.state_dim != n || spec.control_dim != m) {
      throw ContractError("system '" + spec.name + "' requires state_dim=" + std::to_string(n) +
                          " and control_dim=" + std::to_string(m));
    }
  };
  if (spec.name == "rimless_wheel") {
    require_dims(2, 0);
    return std::make_unique<RimlessWheel>(spec);
  }
  if (spec.name == "bicycle") {
    require_dims(5, 2);
    return std::make_unique<Bicycle>(spec);
  }
  if (spec.name == "rocket") {
    require_dims(6, 2);
    return std::make_unique<Rocket>(spec);
  }
  if (spec.name == "multi_aircraft") {
    require_dims(9, 3);
    return std::make_unique<MultiAircraft>(spec);
  }
  if (spec.name == "integrator1d") {
    require_dims(1, 1);
    return std::make_unique<Integrator1D>(spec);
  }
  throw ContractError("unknown system '" + spec.name + "'");
}

double wrap_angle(double angle) {
  double wrapped = angle - 2.0 * kPi * std::floor((angle + kPi) / (2.0 * kPi));
  // Guard the half-open upper end against roundoff.
  if (wrapped >= kPi) wrapped -= 2.0 * kPi;
  if (wrapped < -kPi) wrapped = -kPi;
  return wrapped;
}

// -------------------------------------------------------------------------

System::System(SystemSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  center_ = 0.5 * (spec_.domain_hi + spec_.domain_lo);
  scale_ = 2.0 * (spec_.domain_hi - spec_.domain_lo).cwiseInverse();
}

void System::check_state(const StateVec& x, const char* what) const {
  if (x.size() != spec_.state_dim) {
    throw ContractError(std::string(what) + ": state has length " + std::to_string(x.size()) + ", system '" +
                        spec_.name + "' expects " + std::to_string(spec_.state_dim));
  }
}

StateVec System::dynamics(const StateVec& x, const ControlVec& u) const {
  check_state(x, "dynamics");
  if (u.size() != spec_.control_dim) {
    throw ContractError("dynamics: control has length " + std::to_string(u.size()) + ", expected " +
                        std::to_string(spec_.control_dim));
  }
  StateVec f = drift(x);
  if (spec_.control_dim > 0) f.noalias() += input_matrix(x) * u;
  return f;
}

ControlVec System::optimal_control(const StateVec& x, const StateVec& grad) const {
  check_state(grad, "optimal_control");
  ControlVec u(spec_.control_dim);
  if (spec_.control_dim == 0) return u;
  const Eigen::VectorXd coeff = input_matrix(x).transpose() * grad;
  const double sign = mode_sign(spec_.mode);
  for (int j = 0; j < spec_.control_dim; ++j) {
    u(j) = sign * coeff(j) >= 0.0 ? spec_.control_hi(j) : spec_.control_lo(j);
  }
  return u;
}

double System::hamiltonian(const StateVec& x, const StateVec& grad) const {
  return hamiltonian(x, grad, nullptr);
}

double System::hamiltonian(const StateVec& x, const StateVec& grad, StateVec* flow) const {
  StateVec f = dynamics(x, optimal_control(x, grad));
  const double h = grad.dot(f);
  if (flow != nullptr) *flow = std::move(f);
  return h;
}

StateVec System::canonicalize(const StateVec& x) const { return canonicalize_with_jacobian(x).first; }

std::pair<StateVec, Eigen::MatrixXd> System::canonicalize_with_jacobian(const StateVec& x) const {
  check_state(x, "canonicalize");
  StateVec y = x;
  for (int d : angle_dims_) y(d) = wrap_angle(y(d));
  return {y, Eigen::MatrixXd::Identity(spec_.state_dim, spec_.state_dim)};
}

std::vector<std::string> System::state_names() const {
  std::vector<std::string> names;
  for (int i = 0; i < spec_.state_dim; ++i) names.push_back("x" + std::to_string(i));
  return names;
}

StateVec System::normalize(const StateVec& x) const {
  check_state(x, "normalize");
  return (x - center_).cwiseProduct(scale_);
}

StateVec System::denormalize(const StateVec& z) const {
  check_state(z, "denormalize");
  return z.cwiseQuotient(scale_) + center_;
}

}  // namespace hjreach
