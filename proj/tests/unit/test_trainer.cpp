#include "hjreach/rng.hpp"
#include "hjreach/trainer.hpp"
#include "hjreach/value_model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

using namespace hjreach;

namespace {

std::shared_ptr<const System> sys(const std::string& name) { return make_system(default_spec(name)); }

TrainConfig small_config(Variant variant) {
  TrainConfig cfg;
  cfg.variant = variant;
  cfg.iters = 100;
  cfg.pretrain_iters = 0;
  cfg.batch_size = 64;
  cfg.hidden_width = 16;
  cfg.hidden_layers = 2;
  cfg.precision = Precision::Double;
  return cfg;
}

NetParams random_net(const System& s, std::uint64_t seed, int width, double omega0 = 30.0) {
  NetParams p = init_params(seed, layer_sizes_for(s, width, 2), omega0);
  Rng rng(seed + 77);
  for (auto& b : p.biases) {
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = rng.uniform(-0.2, 0.2);
  }
  return p;
}

double fd_relative_error(const NetParams& p, const std::function<double(const NetParams&)>& loss,
                         const NetParams& analytic) {
  const auto flat = p.flatten();
  const auto g = analytic.flatten();
  double max_err = 0.0, max_fd = 0.0;
  for (std::size_t k = 0; k < flat.size(); ++k) {
    const double h = 1e-6;
    auto fa = flat, fb = flat;
    fa[k] += h;
    fb[k] -= h;
    NetParams a = p, b = p;
    a.unflatten(fa);
    b.unflatten(fb);
    const double fd = (loss(a) - loss(b)) / (2 * h);
    max_err = std::max(max_err, std::abs(fd - g[k]));
    max_fd = std::max(max_fd, std::abs(fd));
  }
  return max_err / std::max(max_fd, 1e-12);
}

TrainBatch tiny_batch(const System& s, Variant variant, Rng& rng) {
  TrainConfig cfg = small_config(variant);
  cfg.batch_size = 4;
  cfg.reset_fraction = 0.0;
  TrainBatch batch = sample_batch(s, {0.2 * s.horizon(), s.horizon()}, cfg, rng);
  if (variant == Variant::Vanilla) {
    batch.terminal_count = 2;
    batch.times(0) = batch.times(1) = s.horizon();
  }
  if (s.has_reset()) {
    // Two surface samples in the region where the flow crosses the surface.
    batch.surface.resize(s.state_dim(), 2);
    batch.surface_times.resize(2);
    for (int j = 0; j < 2; ++j) {
      StateVec x(2);
      x << 0.6, rng.uniform(0.1, 0.6);
      batch.surface.col(j) = x;
      batch.surface_times(j) = rng.uniform(0.2, 1.0) * s.horizon();
    }
  }
  return batch;
}

}  // namespace

TEST(Config, Validation) {
  TrainConfig cfg = small_config(Variant::Exact);
  EXPECT_NO_THROW(cfg.validate());
  cfg.batch_size = 0;
  EXPECT_THROW(cfg.validate(), ContractError);
  cfg = small_config(Variant::Exact);
  cfg.lr = 0.0;
  EXPECT_THROW(cfg.validate(), ContractError);
  cfg = small_config(Variant::Exact);
  cfg.curriculum_fraction = 0.0;
  EXPECT_THROW(cfg.validate(), ContractError);
  cfg.curriculum_fraction = 1.5;
  EXPECT_THROW(cfg.validate(), ContractError);
}

TEST(Curriculum, Examples) {
  TrainConfig cfg = small_config(Variant::Exact);
  cfg.iters = 1000;
  cfg.curriculum_fraction = 0.5;
  const double T = 4.0;
  EXPECT_EQ(curriculum_interval(0, cfg, T), std::make_pair(T, T));
  EXPECT_EQ(curriculum_interval(500, cfg, T), std::make_pair(0.0, T));
  EXPECT_EQ(curriculum_interval(999, cfg, T), std::make_pair(0.0, T));
  EXPECT_DOUBLE_EQ(curriculum_interval(250, cfg, T).first, T / 2);
}

TEST(Curriculum, NonincreasingLowerBound) {
  TrainConfig cfg = small_config(Variant::Exact);
  cfg.iters = 777;
  cfg.curriculum_fraction = 0.8;
  double prev = 1e9;
  for (int i = 0; i < cfg.iters; ++i) {
    const auto [lo, hi] = curriculum_interval(i, cfg, 6.3);
    EXPECT_LE(lo, prev);
    EXPECT_EQ(hi, 6.3);
    EXPECT_GE(lo, 0.0);
    prev = lo;
  }
}

TEST(Sampling, DegenerateIntervalPinsTime) {
  const auto s = sys("bicycle");
  Rng rng(1);
  const TrainBatch b = sample_batch(*s, {s->horizon(), s->horizon()}, small_config(Variant::Exact), rng);
  for (Eigen::Index i = 0; i < b.times.size(); ++i) EXPECT_EQ(b.times(i), s->horizon());
}

TEST(Sampling, NormalizedStatesAreCentred) {
  const auto s = sys("bicycle");
  TrainConfig cfg = small_config(Variant::Exact);
  cfg.batch_size = 100000;
  Rng rng(2);
  const TrainBatch b = sample_batch(*s, {0.0, s->horizon()}, cfg, rng);
  ASSERT_EQ(b.states.cols(), 100000);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(s->state_dim());
  for (Eigen::Index i = 0; i < b.states.cols(); ++i) mean += s->normalize(b.states.col(i));
  mean /= static_cast<double>(b.states.cols());
  for (int d = 0; d < s->state_dim(); ++d) EXPECT_LT(std::abs(mean(d)), 0.02) << d;
  EXPECT_NEAR(b.times.mean(), s->horizon() / 2, 0.02 * s->horizon());
}

TEST(Sampling, VanillaTerminalShare) {
  const auto s = sys("bicycle");
  TrainConfig cfg = small_config(Variant::Vanilla);
  cfg.batch_size = 1001;
  Rng rng(3);
  const TrainBatch b = sample_batch(*s, {0.0, s->horizon()}, cfg, rng);
  EXPECT_EQ(b.terminal_count, 201);
  int at_horizon = 0;
  for (Eigen::Index i = 0; i < b.times.size(); ++i) at_horizon += b.times(i) == s->horizon();
  EXPECT_EQ(at_horizon, 201);
  for (int i = 0; i < b.terminal_count; ++i) EXPECT_EQ(b.times(i), s->horizon());
}

TEST(Sampling, DeterministicGivenRngState) {
  const auto s = sys("rimless_wheel");
  Rng a(4), b(4);
  const TrainBatch x = sample_batch(*s, {0.0, 1.0}, small_config(Variant::Exact), a);
  const TrainBatch y = sample_batch(*s, {0.0, 1.0}, small_config(Variant::Exact), b);
  EXPECT_EQ(x.states, y.states);
  EXPECT_EQ(x.times, y.times);
  EXPECT_EQ(x.surface, y.surface);
}

TEST(Sampling, CustomBoxOverridesDomain) {
  const auto s = sys("rimless_wheel");
  TrainConfig cfg = small_config(Variant::Exact);
  cfg.batch_size = 2000;
  cfg.sample_lo = {-0.2, -1.3};
  cfg.sample_hi = {0.6, 1.0};
  Rng rng(12);
  const TrainBatch batch = sample_batch(*s, {0.0, s->horizon()}, cfg, rng);
  EXPECT_GT(batch.states.row(1).maxCoeff(), 0.9);  // beyond the domain edge at 0.6
  EXPECT_LE(batch.states.row(1).maxCoeff(), 1.0);
  EXPECT_GT(batch.surface.row(1).maxCoeff(), 0.6);
  cfg.sample_hi = {0.6};
  cfg.sample_lo = {-0.2};
  EXPECT_THROW(sample_batch(*s, {0.0, s->horizon()}, cfg, rng), ContractError);
  cfg.sample_lo = {-0.2, 2.0};
  cfg.sample_hi = {0.6, 1.0};
  EXPECT_THROW(cfg.validate(), ContractError);
}

TEST(Sampling, RimlessSurfaceSamplesCrossTheSurface) {
  const auto s = sys("rimless_wheel");
  TrainConfig cfg = small_config(Variant::Exact);
  cfg.batch_size = 200;
  Rng rng(5);
  const TrainBatch b = sample_batch(*s, {0.0, s->horizon()}, cfg, rng);
  EXPECT_EQ(b.surface.cols(), 20);
  EXPECT_EQ(b.states.cols(), 180);
  for (Eigen::Index j = 0; j < b.surface.cols(); ++j) {
    EXPECT_NEAR(b.surface(0, j), 0.6, 1e-12);
    EXPECT_GT(b.surface(1, j), 0.0);  // theta increasing
  }
  // Canonical states never sit past the surface.
  for (Eigen::Index i = 0; i < b.states.cols(); ++i) EXPECT_LT(b.states(0, i), 0.6 - 1e-12);
}

TEST(Residual, ExactAtHorizonUsesOnlyTheDerivativeBranch) {
  const auto s = sys("bicycle");
  const NetParams p = random_net(*s, 1, 16);
  const ValueModel m(Variant::Exact, p, s);
  Rng rng(6);
  for (int i = 0; i < 20; ++i) {
    StateVec x(5);
    for (int d = 0; d < 5; ++d) x(d) = rng.uniform(s->spec().domain_lo(d), s->spec().domain_hi(d));
    const ValueEval e = m.evaluate(x, s->horizon());
    const double h = s->hamiltonian(x, e.grad_x);
    EXPECT_NEAR(pde_residual(Variant::Exact, p, s, x, s->horizon()), std::abs(std::min(-e.net_out + h, 0.0)), 1e-12);
  }
}

TEST(Residual, RunAwayAvoidSolvedByTarget) {
  const auto s = sys("integrator1d");
  NetParams zero = init_params(0, layer_sizes_for(*s, 8, 2));
  zero.set_zero();
  for (double x : {-0.9, -0.3, -0.1, 0.05, 0.2, 0.7}) {
    for (double t : {0.0, 0.2, 0.5}) {
      EXPECT_EQ(pde_residual(Variant::Diff, zero, s, StateVec::Constant(1, x), t), 0.0);
    }
  }
}

TEST(Residual, MinOfTheTwoBranches) {
  // Vanilla one-unit net O = b + w2 sin(t/T) with unit frequency; at t = 0,
  // O = b, grad_x O = 0 and D_t O = w2 / T.
  const auto s = sys("integrator1d");
  NetParams p = init_params(0, {2, 1, 1}, 1.0);
  p.set_zero();
  const double T = s->horizon();
  p.weights[0](0, 0) = 1.0;
  p.weights[1](0, 0) = 0.5 * T;
  p.biases[1](0) = 0.85;
  const StateVec x = StateVec::Constant(1, 0.8);
  // l = 0.8 - 0.25 = 0.55, so l - V = -0.3 and D_t V + H = 0.5.
  EXPECT_NEAR(pde_residual(Variant::Vanilla, p, s, x, 0.0), 0.3, 1e-12);
}

TEST(Residual, BoundaryExamples) {
  const auto s = sys("bicycle");
  NetParams zero = init_params(0, layer_sizes_for(*s, 8, 2));
  zero.set_zero();
  StateVec x(5);
  x << 1.0, -2.0, 0.3, 0.1, 3.0;
  EXPECT_NEAR(bc_residual(zero, s, x), std::abs(s->target(x)), 1e-15);
  // Output bias equal to l(x) cancels exactly.
  NetParams matched = zero;
  matched.biases.back()(0) = s->target(x);
  EXPECT_EQ(bc_residual(matched, s, x), 0.0);
}

TEST(LossGradient, MatchesFiniteDifferencesForAllVariants) {
  Rng rng(7);
  for (const std::string name : {"integrator1d", "bicycle", "rimless_wheel"}) {
    const auto s = sys(name);
    for (Variant variant : {Variant::Vanilla, Variant::Diff, Variant::Exact}) {
      const NetParams p = random_net(*s, 11, 8, 10.0);
      const TrainBatch batch = tiny_batch(*s, variant, rng);
      const LossGradient lg = loss_gradient(variant, p, *s, batch);
      const auto pde = [&](const NetParams& q) { return batch_loss(variant, q, *s, batch).first; };
      EXPECT_LT(fd_relative_error(p, pde, lg.pde_grad), 1e-4) << name << " " << to_string(variant);
      const auto [pde_loss, bc_loss] = batch_loss(variant, p, *s, batch);
      EXPECT_NEAR(lg.pde_loss, pde_loss, 1e-12);
      EXPECT_NEAR(lg.bc_loss, bc_loss, 1e-12);
      if (variant == Variant::Vanilla) {
        const auto bc = [&](const NetParams& q) { return batch_loss(variant, q, *s, batch).second; };
        EXPECT_LT(fd_relative_error(p, bc, lg.bc_grad), 1e-4) << name;
        EXPECT_GT(lg.bc_loss, 0.0);
      } else {
        EXPECT_EQ(lg.bc_loss, 0.0);
      }
    }
  }
}

TEST(LossGradient, TotalCombinesWithLambda) {
  const auto s = sys("integrator1d");
  Rng rng(8);
  const NetParams p = random_net(*s, 12, 8);
  const LossGradient lg = loss_gradient(Variant::Vanilla, p, *s, tiny_batch(*s, Variant::Vanilla, rng));
  const auto total = lg.total(2.5).flatten();
  const auto a = lg.pde_grad.flatten();
  const auto b = lg.bc_grad.flatten();
  for (std::size_t k = 0; k < total.size(); ++k) EXPECT_NEAR(total[k], a[k] + 2.5 * b[k], 1e-15);
}

TEST(Pretrain, ZeroNetworkGivesZeroGradient) {
  const auto s = sys("bicycle");
  NetParams zero = init_params(0, layer_sizes_for(*s, 8, 2));
  zero.set_zero();
  Eigen::MatrixXd states = Eigen::MatrixXd::Random(5, 32);
  const auto [loss, grad] = pretrain_loss_gradient(zero, *s, states);
  EXPECT_EQ(loss, 0.0);
  for (double g : grad.flatten()) EXPECT_EQ(g, 0.0);

  TrainConfig cfg = small_config(Variant::Exact);
  Trainer trainer(s, cfg, zero);
  EXPECT_EQ(trainer.pretrain_step(), 0.0);
  EXPECT_EQ(trainer.params().flatten(), zero.flatten());
}

TEST(Pretrain, LossDropsTenfoldIn200Steps) {
  const auto s = sys("bicycle");
  TrainConfig cfg = small_config(Variant::Exact);
  cfg.hidden_width = 32;
  cfg.batch_size = 512;
  cfg.lr = 1e-3;
  Trainer trainer(s, cfg, init_params(3, layer_sizes_for(*s, 32, 2)));
  const double first = trainer.pretrain_step();
  double last = first;
  for (int i = 1; i < 200; ++i) last = trainer.pretrain_step();
  EXPECT_LT(last, 0.1 * first) << first << " -> " << last;
}

TEST(Pretrain, VanillaRejected) {
  const auto s = sys("bicycle");
  Trainer trainer(s, small_config(Variant::Vanilla), init_params(0, layer_sizes_for(*s, 16, 2)));
  EXPECT_THROW(trainer.pretrain_step(), ContractError);
}

TEST(Pretrain, DeterministicLossTrace) {
  const auto s = sys("rocket");
  TrainConfig cfg = small_config(Variant::Exact);
  const NetParams init = init_params(4, layer_sizes_for(*s, 16, 2));
  Trainer a(s, cfg, init), b(s, cfg, init);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(a.pretrain_step(), b.pretrain_step());
}

TEST(Lambda, FixedPointAtEqualMagnitudes) {
  const auto s = sys("integrator1d");
  NetParams pde = init_params(0, layer_sizes_for(*s, 8, 2));
  NetParams bc = pde;
  auto flat = pde.flatten();
  for (std::size_t k = 0; k < flat.size(); ++k) flat[k] = (k % 2 ? 0.3 : -0.3);
  pde.unflatten(flat);
  for (auto& f : flat) f = 0.3;
  bc.unflatten(flat);
  EXPECT_DOUBLE_EQ(adaptive_lambda_update(1.0, pde, bc), 1.0);
}

TEST(Lambda, RuleAndClipping) {
  const auto s = sys("integrator1d");
  NetParams pde = init_params(0, layer_sizes_for(*s, 8, 2));
  NetParams bc = pde;
  auto flat = pde.flatten();
  for (auto& f : flat) f = 2.0;
  pde.unflatten(flat);
  for (auto& f : flat) f = 0.5;
  bc.unflatten(flat);
  EXPECT_DOUBLE_EQ(adaptive_lambda_update(1.0, pde, bc), 0.9 + 0.1 * 4.0);
  for (auto& f : flat) f = 1e-9;
  bc.unflatten(flat);
  EXPECT_EQ(adaptive_lambda_update(9000.0, pde, bc), 1e4);
  for (auto& f : flat) f = 1e9;
  bc.unflatten(flat);
  EXPECT_EQ(adaptive_lambda_update(0.001, pde, bc), 1e-2);
}

TEST(Training, SingleLossVariantsNeverEvaluateBoundary) {
  const auto s = sys("bicycle");
  for (Variant variant : {Variant::Diff, Variant::Exact}) {
    TrainConfig cfg = small_config(variant);
    cfg.iters = 20;
    Trainer trainer(s, cfg, init_params(5, layer_sizes_for(*s, 16, 2)));
    std::vector<StepReport> reports;
    trainer.set_observer([&](const StepReport& r) { reports.push_back(r); });
    trainer.train();
    EXPECT_EQ(trainer.bc_evaluations(), 0u);
    ASSERT_EQ(reports.size(), 20u);
    for (const auto& r : reports) EXPECT_EQ(r.bc_loss, 0.0);
  }
}

TEST(Training, VanillaEvaluatesBoundaryAndAdaptsLambda) {
  const auto s = sys("bicycle");
  TrainConfig cfg = small_config(Variant::Vanilla);
  cfg.iters = 21;
  Trainer trainer(s, cfg, init_params(5, layer_sizes_for(*s, 16, 2)));
  trainer.train();
  EXPECT_EQ(trainer.bc_evaluations(), 21u * 13u);  // ceil(0.2 * 64) per step
  EXPECT_NE(trainer.lambda(), 1.0);
  EXPECT_GE(trainer.lambda(), 1e-2);
  EXPECT_LE(trainer.lambda(), 1e4);
}

TEST(Training, DeterministicParameters) {
  const auto s = sys("rimless_wheel");
  for (Precision precision : {Precision::Double, Precision::Single}) {
    TrainConfig cfg = small_config(Variant::Exact);
    cfg.iters = 15;
    cfg.precision = precision;
    const NetParams init = init_params(6, layer_sizes_for(*s, 16, 2));
    Trainer a(s, cfg, init), b(s, cfg, init);
    a.train();
    b.train();
    EXPECT_EQ(a.params().flatten(), b.params().flatten());
    EXPECT_NE(a.params().flatten(), init.flatten());
  }
}

TEST(Training, IterationOutOfRangeThrows) {
  const auto s = sys("bicycle");
  Trainer trainer(s, small_config(Variant::Exact), init_params(0, layer_sizes_for(*s, 16, 2)));
  EXPECT_THROW(trainer.train_step(100), ContractError);
  EXPECT_THROW(trainer.train_step(-1), ContractError);
}

TEST(Training, NonFiniteLossAborts) {
  const auto s = sys("bicycle");
  NetParams p = init_params(0, layer_sizes_for(*s, 16, 2));
  p.biases.back()(0) = std::numeric_limits<double>::quiet_NaN();
  Trainer trainer(s, small_config(Variant::Exact), p);
  EXPECT_THROW(trainer.train_step(0), NumericalError);
}

TEST(Training, LogRecordsAreJsonLines) {
  const auto s = sys("integrator1d");
  TrainConfig cfg = small_config(Variant::Exact);
  cfg.iters = 30;
  Trainer trainer(s, cfg, init_params(0, layer_sizes_for(*s, 16, 2)));
  std::ostringstream log;
  trainer.train(0, &log, 10);
  std::istringstream in(log.str());
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    EXPECT_EQ(line.front(), '{');
    EXPECT_NE(line.find("\"pde_loss\""), std::string::npos);
    EXPECT_NE(line.find("\"t_lo\""), std::string::npos);
  }
  EXPECT_GE(lines, 3);
}
