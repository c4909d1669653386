#pragma once

#include "hjreach/common.hpp"
#include "hjreach/grid.hpp"
#include "hjreach/rng.hpp"
#include "hjreach/value_model.hpp"

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace hjreach {

struct VerifyConfig {
  double epsilon = 1e-2;
  int calib_samples = 10000;
  int volume_samples = 100000;
  std::uint64_t seed = 0;
  double rollout_dt = 0.0;  // 0 selects T / 500

  void validate() const;
  bool operator==(const VerifyConfig&) const = default;
};

/// Smallest M for which the conformal rank ceil((M + 1)(1 - epsilon)) is at most M.
int min_calibration_samples(double epsilon);

/// k-th smallest error with k = ceil((M + 1)(1 - epsilon)), floored at 0.
double conformal_delta(std::vector<double> errors, double epsilon);

struct Calibration {
  double delta = 0.0;
  std::vector<double> errors;  // sign_mode * (V(x, 0) - J(x))
};

/// Draws calib_samples uniform states from `rng`, rolls each out under the
/// model's policy and returns the conformal bound on the optimistic error.
Calibration calibrate(const ValueFunction& model, const VerifyConfig& cfg, Rng& rng);

/// Uniform samples from the system's domain box, one per column.
Eigen::MatrixXd sample_domain(const System& sys, int count, Rng& rng);

/// brt_membership at time 0 for every column.
std::vector<bool> safe_flags(const ValueFunction& model, const Eigen::MatrixXd& states, double delta);

/// 100 * n_s / N over volume_samples uniform states.
double mc_volume(const ValueFunction& model, double delta, const VerifyConfig& cfg, Rng& rng);

/// The model's V(., t) sampled on every node of `grid`.
GridField model_field(const ValueFunction& model, const Grid& grid, double t);

struct VolumeRecord {
  std::string system;
  std::string variant;
  std::uint64_t seed = 0;
  double delta = 0.0;
  double volume = 0.0;
};

struct VolumeSummary {
  std::string system;
  std::string variant;
  int runs = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation across runs
};

/// Groups records by (system, variant) in first-appearance order.
std::vector<VolumeSummary> volume_report(const std::vector<VolumeRecord>& records);

void write_volume_table(std::ostream& out, const std::vector<VolumeSummary>& rows);
void write_volume_record(std::ostream& out, const VolumeRecord& record);

}  // namespace hjreach
