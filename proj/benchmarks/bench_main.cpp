#include "hjreach/grid.hpp"
#include "hjreach/rng.hpp"
#include "hjreach/siren.hpp"
#include "hjreach/trainer.hpp"
#include "hjreach/value_model.hpp"

#include <benchmark/benchmark.h>

using namespace hjreach;

namespace {

template <typename Scalar>
Mat<Scalar> random_inputs(int dim, int batch) {
  Rng rng(1);
  Mat<Scalar> z(dim, batch);
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = static_cast<Scalar>(rng.uniform(-1, 1));
  return z;
}

// Args: width, batch. Input is the 5D bicycle state plus time.
template <typename Scalar>
void BM_SirenForward(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const int batch = static_cast<int>(state.range(1));
  const auto params = init_params(1, {6, width, width, width, 1}).template cast<Scalar>();
  const auto z = random_inputs<Scalar>(6, batch);
  SirenWorkspace<Scalar> ws;
  for (auto _ : state) {
    ws.forward(params, z, true);
    benchmark::DoNotOptimize(ws.outputs().data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}

template <typename Scalar>
void BM_SirenForwardBackward(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  const int batch = static_cast<int>(state.range(1));
  const auto params = init_params(1, {6, width, width, width, 1}).template cast<Scalar>();
  const auto z = random_inputs<Scalar>(6, batch);
  const Vec<Scalar> out_adj = Vec<Scalar>::Constant(batch, Scalar(1) / batch);
  const Mat<Scalar> grad_adj = random_inputs<Scalar>(6, batch);
  SirenWorkspace<Scalar> ws;
  auto grad = params.zeros_like();
  for (auto _ : state) {
    ws.forward(params, z, true);
    grad.set_zero();
    ws.backward(params, out_adj, &grad_adj, grad);
    benchmark::DoNotOptimize(grad.weights.front().data());
  }
  state.SetItemsProcessed(state.iterations() * batch);
}

void BM_TrainStep(benchmark::State& state) {
  const auto sys = std::shared_ptr<const System>(make_system(default_spec("rimless_wheel")));
  TrainConfig cfg;
  cfg.iters = 1 << 30;
  cfg.batch_size = static_cast<int>(state.range(0));
  cfg.hidden_width = 128;
  cfg.precision = Precision::Single;
  Trainer trainer(sys, cfg, init_params(1, layer_sizes_for(*sys, cfg.hidden_width, cfg.hidden_layers)));
  int iter = 0;
  for (auto _ : state) benchmark::DoNotOptimize(trainer.train_step(iter++));
  state.SetItemsProcessed(state.iterations() * cfg.batch_size);
}

// Arg: nodes per axis of the 2D rimless grid.
void BM_GridStep(benchmark::State& state) {
  const auto sys = make_system(default_spec("rimless_wheel"));
  const Grid g = Grid::for_system(*sys, static_cast<int>(state.range(0)));
  const LaxFriedrichs lf(*sys, g);
  GridField f = init_field(*sys, g);
  const double dt = lf.stable_step(0.5);
  for (auto _ : state) {
    f = lf.step(f, dt);
    benchmark::DoNotOptimize(f.values.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size()));
}

}  // namespace

BENCHMARK(BM_SirenForward<double>)->Args({128, 1024})->Args({512, 1024});
BENCHMARK(BM_SirenForward<float>)->Args({128, 1024})->Args({512, 1024});
BENCHMARK(BM_SirenForwardBackward<double>)->Args({128, 1024})->Args({512, 1024});
BENCHMARK(BM_SirenForwardBackward<float>)->Args({128, 1024})->Args({512, 1024});
BENCHMARK(BM_TrainStep)->Arg(1024)->Arg(8192)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridStep)->Arg(101)->Arg(201)->Unit(benchmark::kMicrosecond);
BENCHMARK_MAIN();
