#pragma once

#include "stand/config.hpp"
#include "stand/data.hpp"
#include "stand/model.hpp"
#include "stand/trainer.hpp"

namespace stand {

// Flat-config bindings shared by the command-line front end and the tests:
// every documented key maps onto one field of the module configs.
data::SceneSpec scene_spec_from(const config::KeyValues& kv);
ModelConfig model_config_from(const config::KeyValues& kv, const data::Dataset& ds);
TrainConfig train_config_from(const config::KeyValues& kv);

// Effective key set for hashing / checkpoint embedding: fills in every
// default so the hash pins the complete configuration.
config::KeyValues effective_config(const config::KeyValues& kv, const data::Dataset& ds);

// STAND_SEED environment override applied to `train.seed` / `gen.seed`.
void apply_seed_env(config::KeyValues& kv);

}  // namespace stand
