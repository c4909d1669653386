#include "hjreach/grid.hpp"

#include "hjreach/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>

namespace hjreach {

Grid Grid::uniform(const Eigen::VectorXd& mins, const Eigen::VectorXd& maxs, std::vector<int> counts,
                   std::vector<bool> periodic) {
  Grid g;
  g.dims = static_cast<int>(mins.size());
  g.mins = mins;
  g.maxs = maxs;
  g.counts = std::move(counts);
  g.periodic = periodic.empty() ? std::vector<bool>(static_cast<std::size_t>(g.dims), false) : std::move(periodic);
  g.validate();
  return g;
}

Grid Grid::for_system(const System& sys, int nodes) {
  const auto& s = sys.spec();
  return uniform(s.domain_lo, s.domain_hi, std::vector<int>(static_cast<std::size_t>(sys.state_dim()), nodes));
}

void Grid::validate() const {
  if (dims < 1 || dims > 3) throw ContractError("grid: 1 to 3 dimensions supported, got " + std::to_string(dims));
  if (mins.size() != dims || maxs.size() != dims || static_cast<int>(counts.size()) != dims ||
      static_cast<int>(periodic.size()) != dims) {
    throw ContractError("grid: field sizes disagree with dims");
  }
  for (int d = 0; d < dims; ++d) {
    if (counts[static_cast<std::size_t>(d)] < 3) throw ContractError("grid: at least 3 nodes per dimension");
    if (!(mins(d) < maxs(d))) throw ContractError("grid: mins must be below maxs");
  }
}

std::size_t Grid::size() const {
  std::size_t total = 1;
  for (int c : counts) total *= static_cast<std::size_t>(c);
  return total;
}

double Grid::spacing(int d) const {
  const int c = counts[static_cast<std::size_t>(d)];
  return (maxs(d) - mins(d)) / (periodic[static_cast<std::size_t>(d)] ? c : c - 1);
}

double Grid::coordinate(int d, int i) const { return mins(d) + i * spacing(d); }

std::size_t Grid::flat_index(const std::vector<int>& idx) const {
  std::size_t flat = 0;
  for (int d = 0; d < dims; ++d) flat = flat * static_cast<std::size_t>(counts[static_cast<std::size_t>(d)]) +
                                       static_cast<std::size_t>(idx[static_cast<std::size_t>(d)]);
  return flat;
}

std::vector<int> Grid::multi_index(std::size_t flat) const {
  std::vector<int> idx(static_cast<std::size_t>(dims));
  for (int d = dims - 1; d >= 0; --d) {
    const auto c = static_cast<std::size_t>(counts[static_cast<std::size_t>(d)]);
    idx[static_cast<std::size_t>(d)] = static_cast<int>(flat % c);
    flat /= c;
  }
  return idx;
}

StateVec Grid::node(std::size_t flat) const {
  const std::vector<int> idx = multi_index(flat);
  StateVec x(dims);
  for (int d = 0; d < dims; ++d) x(d) = coordinate(d, idx[static_cast<std::size_t>(d)]);
  return x;
}

bool Grid::operator==(const Grid& other) const {
  return dims == other.dims && mins == other.mins && maxs == other.maxs && counts == other.counts &&
         periodic == other.periodic;
}

void GridField::validate() const {
  grid.validate();
  if (values.size() != grid.size()) throw ContractError("grid field: value count does not match the grid");
  for (double v : values) {
    if (!std::isfinite(v)) throw NumericalError("grid field: non-finite value");
  }
}

double GridField::min_value() const { return *std::min_element(values.begin(), values.end()); }

double GridField::interpolate(const StateVec& x) const {
  if (x.size() != grid.dims) throw ContractError("interpolate: dimension mismatch");
  std::vector<int> base(static_cast<std::size_t>(grid.dims));
  std::vector<double> frac(static_cast<std::size_t>(grid.dims));
  for (int d = 0; d < grid.dims; ++d) {
    const auto k = static_cast<std::size_t>(d);
    const int c = grid.counts[k];
    double u = (x(d) - grid.mins(d)) / grid.spacing(d);
    if (grid.periodic[k]) {
      u -= c * std::floor(u / c);
    } else {
      u = std::clamp(u, 0.0, static_cast<double>(c - 1));
    }
    int i = static_cast<int>(std::floor(u));
    if (!grid.periodic[k]) i = std::min(i, c - 2);
    base[k] = i;
    frac[k] = u - i;
  }
  double total = 0.0;
  std::vector<int> idx(base.size());
  for (int corner = 0; corner < (1 << grid.dims); ++corner) {
    double w = 1.0;
    for (int d = 0; d < grid.dims; ++d) {
      const auto k = static_cast<std::size_t>(d);
      const bool upper = (corner >> d) & 1;
      w *= upper ? frac[k] : 1.0 - frac[k];
      idx[k] = (base[k] + (upper ? 1 : 0)) % grid.counts[k];
    }
    if (w != 0.0) total += w * values[grid.flat_index(idx)];
  }
  return total;
}

double GridField::subzero_fraction() const {
  const auto n = std::count_if(values.begin(), values.end(), [](double v) { return v < 0.0; });
  return static_cast<double>(n) / static_cast<double>(values.size());
}

namespace {

void check_dims(const System& sys, const Grid& grid) {
  grid.validate();
  if (grid.dims != sys.state_dim()) {
    throw ContractError("grid has " + std::to_string(grid.dims) + " dimensions but system '" + sys.spec().name +
                        "' has " + std::to_string(sys.state_dim()));
  }
}

double cfl_rate(const Grid& grid, const Eigen::VectorXd& alpha) {
  double rate = 0.0;
  for (int d = 0; d < grid.dims; ++d) rate += alpha(d) / grid.spacing(d);
  return rate;
}

}  // namespace

GridField init_field(const System& sys, const Grid& grid) {
  check_dims(sys, grid);
  GridField field;
  field.grid = grid;
  field.time_label = sys.horizon();
  field.values.resize(grid.size());
  parallel_for(0, static_cast<std::ptrdiff_t>(grid.size()), [&](std::ptrdiff_t i) {
    field.values[static_cast<std::size_t>(i)] = sys.target(grid.node(static_cast<std::size_t>(i)));
  });
  return field;
}

Eigen::VectorXd dissipation_coefficients(const System& sys, const Grid& grid) {
  return LaxFriedrichs(sys, grid).alpha();
}

double stable_step(const System& sys, const Grid& grid, double cfl) { return LaxFriedrichs(sys, grid).stable_step(cfl); }

LaxFriedrichs::LaxFriedrichs(const System& sys, const Grid& grid)
    : grid_(grid), mode_(sys.mode()), n_(sys.state_dim()), m_(sys.control_dim()) {
  check_dims(sys, grid);
  control_lo_ = sys.spec().control_lo;
  control_hi_ = sys.spec().control_hi;
  const std::size_t nodes = grid.size();
  target_.resize(nodes);
  drift_.resize(nodes * static_cast<std::size_t>(n_));
  input_.resize(nodes * static_cast<std::size_t>(n_ * m_));
  std::vector<double> speed(nodes * static_cast<std::size_t>(n_));

  parallel_for(0, static_cast<std::ptrdiff_t>(nodes), [&](std::ptrdiff_t p) {
    const auto i = static_cast<std::size_t>(p);
    const StateVec x = grid.node(i);
    target_[i] = sys.target(x);
    const StateVec f = sys.drift(x);
    const Eigen::MatrixXd g = sys.input_matrix(x);
    for (int d = 0; d < n_; ++d) {
      drift_[i * n_ + d] = f(d);
      double hi = f(d);
      double lo = f(d);
      for (int j = 0; j < m_; ++j) {
        const double gij = g(d, j);
        input_[i * n_ * m_ + j * n_ + d] = gij;
        hi += std::max(gij * control_lo_(j), gij * control_hi_(j));
        lo += std::min(gij * control_lo_(j), gij * control_hi_(j));
      }
      speed[i * n_ + d] = std::max(std::abs(hi), std::abs(lo));
    }
  });
  alpha_ = Eigen::VectorXd::Zero(n_);
  for (std::size_t i = 0; i < nodes; ++i) {
    for (int d = 0; d < n_; ++d) alpha_(d) = std::max(alpha_(d), speed[i * n_ + d]);
  }

  strides_.assign(static_cast<std::size_t>(n_), 1);
  for (int d = n_ - 2; d >= 0; --d) {
    strides_[static_cast<std::size_t>(d)] =
        strides_[static_cast<std::size_t>(d) + 1] * static_cast<std::size_t>(grid.counts[static_cast<std::size_t>(d) + 1]);
  }

  reset_ghosts_.assign(static_cast<std::size_t>(2 * n_), {});
  ghost_slot_.assign(static_cast<std::size_t>(2 * n_), {});
  if (!sys.has_reset()) return;
  for (int d = 0; d < n_; ++d) {
    if (grid.periodic[static_cast<std::size_t>(d)]) continue;
    for (int side = 0; side < 2; ++side) {
      auto& slots = ghost_slot_[static_cast<std::size_t>(2 * d + side)];
      auto& ghosts = reset_ghosts_[static_cast<std::size_t>(2 * d + side)];
      slots.assign(nodes, -1);
      const int edge = side == 0 ? 0 : grid.counts[static_cast<std::size_t>(d)] - 1;
      for (std::size_t i = 0; i < nodes; ++i) {
        if (grid.multi_index(i)[static_cast<std::size_t>(d)] != edge) continue;
        StateVec ghost = grid.node(i);
        ghost(d) += (side == 0 ? -1.0 : 1.0) * grid.spacing(d);
        if (!sys.past_switching_surface(ghost)) continue;
        StateVec image = sys.canonicalize(ghost);
        for (int k = 0; k < n_; ++k) image(k) = std::clamp(image(k), grid.mins(k), grid.maxs(k));
        Ghost stencil;
        std::vector<int> base(static_cast<std::size_t>(n_));
        std::vector<double> frac(static_cast<std::size_t>(n_));
        for (int k = 0; k < n_; ++k) {
          const auto kk = static_cast<std::size_t>(k);
          const double u = (image(k) - grid.mins(k)) / grid.spacing(k);
          base[kk] = std::min(static_cast<int>(std::floor(u)), grid.counts[kk] - 2);
          frac[kk] = u - base[kk];
        }
        std::vector<int> idx(static_cast<std::size_t>(n_));
        for (int corner = 0; corner < (1 << n_); ++corner) {
          double w = 1.0;
          for (int k = 0; k < n_; ++k) {
            const auto kk = static_cast<std::size_t>(k);
            const bool upper = (corner >> k) & 1;
            w *= upper ? frac[kk] : 1.0 - frac[kk];
            idx[kk] = base[kk] + (upper ? 1 : 0);
          }
          if (w > 0.0) {
            stencil.nodes.push_back(grid.flat_index(idx));
            stencil.weights.push_back(w);
          }
        }
        slots[i] = static_cast<std::ptrdiff_t>(ghosts.size());
        ghosts.push_back(std::move(stencil));
      }
    }
  }
}

double LaxFriedrichs::stable_step(double cfl) const {
  if (!(cfl > 0.0 && cfl <= 1.0)) throw ContractError("cfl must lie in (0, 1]");
  const double rate = cfl_rate(grid_, alpha_);
  return rate > 0.0 ? cfl / rate : std::numeric_limits<double>::infinity();
}

double LaxFriedrichs::ghost_value(const std::vector<double>& values, std::size_t node, int dim, int side) const {
  const auto key = static_cast<std::size_t>(2 * dim + side);
  if (!ghost_slot_[key].empty()) {
    const std::ptrdiff_t slot = ghost_slot_[key][node];
    if (slot >= 0) {
      const Ghost& g = reset_ghosts_[key][static_cast<std::size_t>(slot)];
      double v = 0.0;
      for (std::size_t k = 0; k < g.nodes.size(); ++k) v += g.weights[k] * values[g.nodes[k]];
      return v;
    }
  }
  return values[node];
}

GridField LaxFriedrichs::step(const GridField& field, double dt) const {
  if (!(field.grid == grid_)) throw ContractError("step: field grid differs from the solver grid");
  if (field.values.size() != grid_.size()) throw ContractError("step: value count does not match the grid");
  if (!(dt > 0.0)) throw ContractError("step: dt must be positive");
  const double courant = dt * cfl_rate(grid_, alpha_);
  if (courant > 1.0 + 1e-12) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "step: dt = %.6g violates the CFL bound (dt * sum(alpha/dx) = %.6g > 1)", dt,
                  courant);
    throw ContractError(buf);
  }

  GridField out;
  out.grid = grid_;
  out.time_label = field.time_label - dt;
  out.values.resize(field.values.size());
  const std::vector<double>& v = field.values;
  const bool avoid = mode_ == Mode::Avoid;

  parallel_for(0, static_cast<std::ptrdiff_t>(v.size()), [&](std::ptrdiff_t p) {
    const auto i = static_cast<std::size_t>(p);
    double grad[3];
    double dissipation = 0.0;
    std::size_t rest = i;
    int idx[3] = {0, 0, 0};
    for (int d = n_ - 1; d >= 0; --d) {
      const auto c = static_cast<std::size_t>(grid_.counts[static_cast<std::size_t>(d)]);
      idx[d] = static_cast<int>(rest % c);
      rest /= c;
    }
    for (int d = 0; d < n_; ++d) {
      const auto dd = static_cast<std::size_t>(d);
      const int c = grid_.counts[dd];
      const std::size_t stride = strides_[dd];
      double lower, upper;
      if (grid_.periodic[dd]) {
        lower = v[idx[d] == 0 ? i + (c - 1) * stride : i - stride];
        upper = v[idx[d] == c - 1 ? i - (c - 1) * stride : i + stride];
      } else {
        lower = idx[d] == 0 ? ghost_value(v, i, d, 0) : v[i - stride];
        upper = idx[d] == c - 1 ? ghost_value(v, i, d, 1) : v[i + stride];
      }
      const double h = grid_.spacing(d);
      const double minus = (v[i] - lower) / h;
      const double plus = (upper - v[i]) / h;
      grad[d] = 0.5 * (minus + plus);
      dissipation += 0.5 * alpha_(d) * (plus - minus);
    }
    double ham = 0.0;
    for (int d = 0; d < n_; ++d) ham += grad[d] * drift_[i * n_ + d];
    for (int j = 0; j < m_; ++j) {
      double s = 0.0;
      for (int d = 0; d < n_; ++d) s += grad[d] * input_[i * n_ * m_ + j * n_ + d];
      const double a = s * control_lo_(j);
      const double b = s * control_hi_(j);
      ham += avoid ? std::max(a, b) : std::min(a, b);
    }
    out.values[i] = std::min(target_[i], v[i] + dt * (ham + dissipation));
  });
  return out;
}

GridField step(const System& sys, const GridField& field, double dt) {
  return LaxFriedrichs(sys, field.grid).step(field, dt);
}

std::vector<GridField> solve_snapshots(const System& sys, const Grid& grid, double horizon, double cfl, int every) {
  if (!(horizon >= 0.0)) throw ContractError("solve: horizon must be non-negative");
  if (every < 1) throw ContractError("solve: snapshot interval must be at least 1");
  const LaxFriedrichs solver(sys, grid);
  GridField field = init_field(sys, grid);
  field.time_label = horizon;
  std::vector<GridField> snapshots{field};
  const double dt_max = solver.stable_step(cfl);
  double t = horizon;
  int steps = 0;
  while (t > 0.0) {
    // Land exactly on 0 instead of leaving a sliver step.
    const double dt = t <= dt_max * (1.0 + 1e-9) ? t : dt_max;
    field = solver.step(field, dt);
    t = dt == t ? 0.0 : t - dt;
    field.time_label = t;
    ++steps;
    if (t == 0.0 || steps % every == 0) snapshots.push_back(field);
  }
  return snapshots;
}

GridField solve(const System& sys, const Grid& grid, double horizon, double cfl) {
  if (!(horizon >= 0.0)) throw ContractError("solve: horizon must be non-negative");
  const LaxFriedrichs solver(sys, grid);
  GridField field = init_field(sys, grid);
  field.time_label = horizon;
  const double dt_max = solver.stable_step(cfl);
  double t = horizon;
  while (t > 0.0) {
    const double dt = t <= dt_max * (1.0 + 1e-9) ? t : dt_max;
    field = solver.step(field, dt);
    t = dt == t ? 0.0 : t - dt;
    field.time_label = t;
  }
  return field;
}

double iou(const GridField& a, const GridField& b) {
  if (!(a.grid == b.grid) || a.values.size() != b.values.size()) throw ContractError("iou: fields on different grids");
  std::size_t both = 0;
  std::size_t either = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const bool in_a = a.values[i] < 0.0;
    const bool in_b = b.values[i] < 0.0;
    both += in_a && in_b;
    either += in_a || in_b;
  }
  return either == 0 ? 1.0 : static_cast<double>(both) / static_cast<double>(either);
}

}  // namespace hjreach
