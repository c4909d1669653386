#include "hjreach/pipeline.hpp"

#include "hjreach/rng.hpp"
#include "hjreach/value_model.hpp"

#include <algorithm>

namespace hjreach {

NetParams initial_params(const System& sys, const TrainConfig& cfg) {
  Rng init = Rng::stream(cfg.seed, "init");
  return init_params(init.next_u64(), layer_sizes_for(sys, cfg.hidden_width, cfg.hidden_layers), cfg.omega0);
}

namespace {

Checkpoint make_checkpoint(const System& sys, const TrainConfig& cfg, const NetParams& params, std::int64_t iteration) {
  Checkpoint c;
  c.system = sys.spec().name;
  c.system_hash = sys.spec().hash();
  c.variant = cfg.variant;
  c.precision = cfg.precision;
  c.iteration = iteration;
  c.params = params;
  return c;
}

}  // namespace

Checkpoint run_pretrain(const std::shared_ptr<const System>& sys, const TrainConfig& cfg, std::ostream* log) {
  Trainer trainer(sys, cfg, initial_params(*sys, cfg));
  if (cfg.variant != Variant::Vanilla) trainer.pretrain(cfg.pretrain_iters, log);
  return make_checkpoint(*sys, cfg, trainer.params(), 0);
}

Checkpoint run_train(const std::shared_ptr<const System>& sys, const TrainConfig& cfg, const Checkpoint* from,
                     std::ostream* log, int log_every) {
  if (from != nullptr) {
    if (from->variant != cfg.variant) throw ContractError("train: checkpoint variant differs from the config variant");
    Trainer trainer(sys, cfg, from->params);
    const int first = static_cast<int>(std::min<std::int64_t>(from->iteration, cfg.iters));
    trainer.train(first, log, log_every);
    return make_checkpoint(*sys, cfg, trainer.params(), cfg.iters);
  }
  const Checkpoint pretrained = run_pretrain(sys, cfg, log);
  return run_train(sys, cfg, &pretrained, log, log_every);
}

}  // namespace hjreach
