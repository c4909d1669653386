#pragma once

#include "hjreach/common.hpp"
#include "hjreach/systems.hpp"

#include <cstddef>
#include <vector>

namespace hjreach {

/// Uniform tensor grid over at most three dimensions. Non-periodic
/// dimensions place nodes on both end points; periodic ones treat `maxs`
/// as an alias of `mins` and place counts nodes in [min, max).
struct Grid {
  int dims = 0;
  Eigen::VectorXd mins;
  Eigen::VectorXd maxs;
  std::vector<int> counts;
  std::vector<bool> periodic;

  static Grid uniform(const Eigen::VectorXd& mins, const Eigen::VectorXd& maxs, std::vector<int> counts,
                      std::vector<bool> periodic = {});
  /// The system's domain box with `nodes` nodes in every dimension.
  static Grid for_system(const System& sys, int nodes);

  void validate() const;
  std::size_t size() const;
  double spacing(int d) const;
  double coordinate(int d, int i) const;
  /// Row-major: the last dimension varies fastest.
  std::size_t flat_index(const std::vector<int>& idx) const;
  std::vector<int> multi_index(std::size_t flat) const;
  StateVec node(std::size_t flat) const;

  bool operator==(const Grid& other) const;
};

struct GridField {
  Grid grid;
  std::vector<double> values;
  double time_label = 0.0;

  void validate() const;
  double min_value() const;
  /// Multilinear interpolation; points outside the box are clamped onto it.
  double interpolate(const StateVec& x) const;
  /// Share of nodes with a negative value.
  double subzero_fraction() const;
};

/// V(x, T) = l(x) on every node.
GridField init_field(const System& sys, const Grid& grid);

/// Per-dimension bound alpha_i = max over nodes and control corners of |f_i|.
Eigen::VectorXd dissipation_coefficients(const System& sys, const Grid& grid);

/// Largest dt allowed at Courant number `cfl`; +inf for a motionless system.
double stable_step(const System& sys, const Grid& grid, double cfl = 0.5);

/// Precomputed dynamics, target values and boundary stencils for repeated
/// Lax-Friedrichs updates on one grid. Ghost values at a non-periodic edge
/// repeat the edge node, except past a switching surface, where they are
/// interpolated at the reset image of the ghost point.
class LaxFriedrichs {
 public:
  LaxFriedrichs(const System& sys, const Grid& grid);

  const Grid& grid() const { return grid_; }
  const Eigen::VectorXd& alpha() const { return alpha_; }
  double stable_step(double cfl) const;

  /// One backward-time step: V <- min(l, V + dt * H_LF). Throws
  /// ContractError if dt breaks dt * sum(alpha_i / dx_i) <= 1.
  GridField step(const GridField& field, double dt) const;

 private:
  struct Ghost {
    std::vector<std::size_t> nodes;
    std::vector<double> weights;
  };

  double ghost_value(const std::vector<double>& values, std::size_t node, int dim, int side) const;

  Grid grid_;
  Mode mode_;
  int n_ = 0;
  int m_ = 0;
  Eigen::VectorXd alpha_;
  Eigen::VectorXd control_lo_;
  Eigen::VectorXd control_hi_;
  std::vector<double> target_;
  std::vector<double> drift_;  // n per node
  std::vector<double> input_;  // n * m per node, column-major per node
  std::vector<std::size_t> strides_;
  // Reset stencils keyed by (node, dim, side); absent means a repeated edge.
  std::vector<std::vector<Ghost>> reset_ghosts_;  // [dim * 2 + side][edge slot]
  std::vector<std::vector<std::ptrdiff_t>> ghost_slot_;  // same key -> node-indexed slot or -1
};

/// One step with freshly computed coefficients.
GridField step(const System& sys, const GridField& field, double dt);

/// Steps from `horizon` down to 0 with dt = cfl / sum(alpha_i / dx_i); the
/// last step is shortened to land on t = 0.
GridField solve(const System& sys, const Grid& grid, double horizon, double cfl = 0.5);

/// Same as solve() and also returns the field after every `every` steps,
/// starting with V(., horizon) and ending with V(., 0).
std::vector<GridField> solve_snapshots(const System& sys, const Grid& grid, double horizon, double cfl, int every);

/// Jaccard index of the sub-zero node sets; 1 when both are empty.
double iou(const GridField& a, const GridField& b);

}  // namespace hjreach
