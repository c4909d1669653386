#pragma once

#include "hjreach/io.hpp"
#include "hjreach/systems.hpp"
#include "hjreach/trainer.hpp"

#include <memory>
#include <ostream>

namespace hjreach {

/// Freshly initialized network for the config, drawn from the "init"
/// stream of the run seed.
NetParams initial_params(const System& sys, const TrainConfig& cfg);

/// Initialization followed by cfg.pretrain_iters pretraining steps.
Checkpoint run_pretrain(const std::shared_ptr<const System>& sys, const TrainConfig& cfg, std::ostream* log = nullptr);

/// Curriculum training with a fresh optimizer. Without `from` this is
/// run_pretrain() followed by training from its result, so it matches the
/// two-stage pretrain/train path exactly.
Checkpoint run_train(const std::shared_ptr<const System>& sys, const TrainConfig& cfg, const Checkpoint* from = nullptr,
                     std::ostream* log = nullptr, int log_every = 100);

}  // namespace hjreach
