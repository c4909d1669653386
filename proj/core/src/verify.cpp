#include "hjreach/verify.hpp"

#include "hjreach/parallel.hpp"
#include "hjreach/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace hjreach {

namespace {

int conformal_rank(std::size_t count, double epsilon) {
  return static_cast<int>(std::ceil((static_cast<double>(count) + 1.0) * (1.0 - epsilon) - 1e-9));
}

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ContractError("epsilon must lie in (0, 1)");
}

}  // namespace

int min_calibration_samples(double epsilon) {
  check_epsilon(epsilon);
  return std::max(1, static_cast<int>(std::ceil(1.0 / epsilon - 1.0 - 1e-9)));
}

void VerifyConfig::validate() const {
  check_epsilon(epsilon);
  const int needed = min_calibration_samples(epsilon);
  if (calib_samples < needed) {
    throw ContractError("verify: calib_samples = " + std::to_string(calib_samples) + " is too small for epsilon = " +
                        std::to_string(epsilon) + "; need M >= " + std::to_string(needed));
  }
  if (volume_samples < 1) throw ContractError("verify: volume_samples must be at least 1");
  if (rollout_dt < 0.0) throw ContractError("verify: rollout_dt must be non-negative");
}

double conformal_delta(std::vector<double> errors, double epsilon) {
  check_epsilon(epsilon);
  const int k = conformal_rank(errors.size(), epsilon);
  if (k > static_cast<int>(errors.size())) {
    throw ContractError("conformal_delta: M = " + std::to_string(errors.size()) + " is too small for epsilon = " +
                        std::to_string(epsilon) + "; need M >= " + std::to_string(min_calibration_samples(epsilon)));
  }
  for (double e : errors) {
    if (std::isnan(e)) throw NumericalError("conformal_delta: NaN error");
  }
  auto kth = errors.begin() + (k - 1);
  std::nth_element(errors.begin(), kth, errors.end());
  return std::max(0.0, *kth);
}

Eigen::MatrixXd sample_domain(const System& sys, int count, Rng& rng) {
  const auto& s = sys.spec();
  Eigen::MatrixXd states(sys.state_dim(), count);
  for (int i = 0; i < count; ++i) {
    for (int d = 0; d < sys.state_dim(); ++d) states(d, i) = rng.uniform(s.domain_lo(d), s.domain_hi(d));
  }
  return states;
}

Calibration calibrate(const ValueFunction& model, const VerifyConfig& cfg, Rng& rng) {
  cfg.validate();
  const System& sys = model.system();
  const Eigen::MatrixXd states = sample_domain(sys, cfg.calib_samples, rng);
  const double dt = cfg.rollout_dt > 0.0 ? cfg.rollout_dt : default_rollout_step(sys);
  const RolloutBatch rollouts = empirical_values(model, states, dt);
  if (rollouts.failures() > 0) {
    throw NumericalError("calibrate: " + std::to_string(rollouts.failures()) + " rollouts produced non-finite states");
  }
  const Eigen::VectorXd v = model.values(states, 0.0);
  const double sign = mode_sign(sys.mode());
  Calibration out;
  out.errors.resize(static_cast<std::size_t>(cfg.calib_samples));
  for (int i = 0; i < cfg.calib_samples; ++i) out.errors[static_cast<std::size_t>(i)] = sign * (v(i) - rollouts.costs(i));
  out.delta = conformal_delta(out.errors, cfg.epsilon);
  return out;
}

std::vector<bool> safe_flags(const ValueFunction& model, const Eigen::MatrixXd& states, double delta) {
  if (delta < 0.0) throw ContractError("safe_flags: delta must be non-negative");
  const Mode mode = model.system().mode();
  const Eigen::Index count = states.cols();
  std::vector<char> flags(static_cast<std::size_t>(count), 0);
  constexpr Eigen::Index kChunk = 4096;
  const Eigen::Index chunks = (count + kChunk - 1) / kChunk;
  parallel_for(0, chunks, [&](std::ptrdiff_t c) {
    const Eigen::Index lo = c * kChunk;
    const Eigen::Index n = std::min(kChunk, count - lo);
    const Eigen::VectorXd v = model.values(states.middleCols(lo, n), 0.0);
    for (Eigen::Index i = 0; i < n; ++i) flags[static_cast<std::size_t>(lo + i)] = is_safe(mode, v(i), delta);
  });
  return {flags.begin(), flags.end()};
}

double mc_volume(const ValueFunction& model, double delta, const VerifyConfig& cfg, Rng& rng) {
  if (delta < 0.0) throw ContractError("mc_volume: delta must be non-negative");
  if (cfg.volume_samples < 1) throw ContractError("mc_volume: volume_samples must be at least 1");
  constexpr int kBlock = 1 << 16;
  std::int64_t safe = 0;
  for (int done = 0; done < cfg.volume_samples; done += kBlock) {
    const int n = std::min(kBlock, cfg.volume_samples - done);
    const std::vector<bool> flags = safe_flags(model, sample_domain(model.system(), n, rng), delta);
    safe += std::count(flags.begin(), flags.end(), true);
  }
  return 100.0 * static_cast<double>(safe) / static_cast<double>(cfg.volume_samples);
}

GridField model_field(const ValueFunction& model, const Grid& grid, double t) {
  grid.validate();
  if (grid.dims != model.system().state_dim()) throw ContractError("model_field: grid and system dimensions differ");
  GridField field;
  field.grid = grid;
  field.time_label = t;
  field.values.resize(grid.size());
  const auto count = static_cast<Eigen::Index>(grid.size());
  constexpr Eigen::Index kChunk = 4096;
  parallel_for(0, (count + kChunk - 1) / kChunk, [&](std::ptrdiff_t c) {
    const Eigen::Index lo = c * kChunk;
    const Eigen::Index n = std::min(kChunk, count - lo);
    Eigen::MatrixXd states(grid.dims, n);
    for (Eigen::Index i = 0; i < n; ++i) states.col(i) = grid.node(static_cast<std::size_t>(lo + i));
    const Eigen::VectorXd v = model.values(states, t);
    for (Eigen::Index i = 0; i < n; ++i) field.values[static_cast<std::size_t>(lo + i)] = v(i);
  });
  return field;
}

std::vector<VolumeSummary> volume_report(const std::vector<VolumeRecord>& records) {
  std::vector<VolumeSummary> rows;
  std::vector<std::vector<double>> samples;
  for (const auto& r : records) {
    auto it = std::find_if(rows.begin(), rows.end(),
                           [&](const VolumeSummary& s) { return s.system == r.system && s.variant == r.variant; });
    if (it == rows.end()) {
      rows.push_back({r.system, r.variant, 0, 0.0, 0.0});
      samples.emplace_back();
      it = rows.end() - 1;
    }
    samples[static_cast<std::size_t>(it - rows.begin())].push_back(r.volume);
  }
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto& xs = samples[k];
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    var /= static_cast<double>(xs.size());
    rows[k].runs = static_cast<int>(xs.size());
    rows[k].mean = mean;
    rows[k].stddev = std::sqrt(var);
  }
  return rows;
}

void write_volume_table(std::ostream& out, const std::vector<VolumeSummary>& rows) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-16s %-8s %5s %18s\n", "system", "variant", "runs", "volume (%)");
  out << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-16s %-8s %5d %9.2f +- %6.2f\n", r.system.c_str(), r.variant.c_str(), r.runs,
                  r.mean, r.stddev);
    out << buf;
  }
}

void write_volume_record(std::ostream& out, const VolumeRecord& r) {
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "{\"system\":\"%s\",\"variant\":\"%s\",\"seed\":%llu,\"delta\":%.17g,\"volume\":%.17g}\n",
                r.system.c_str(), r.variant.c_str(), static_cast<unsigned long long>(r.seed), r.delta, r.volume);
  out << buf;
}

}  // namespace hjreach
