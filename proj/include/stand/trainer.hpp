#pragma once

#include <map>
#include <string>
#include <vector>

#include "stand/model.hpp"

namespace stand {

struct TrainConfig {
    float lambda_ca = 1.0f;
    float lambda_cls = 1.0f;
    float lr = 1e-3f;
    float weight_decay = 0.0f;  // decoupled AdamW-style
    int batch_size = 4;
    int steps = 500;
    // Final fraction of steps trained with frozen normalization statistics
    // (inference-mode batch norm), closing the train/eval feature gap.
    float bn_freeze_fraction = 0.25f;
    std::uint64_t seed = 0;
    std::string log_path;  // per-step JSONL; empty = no log

    void validate() const;
};

struct LossBundle {
    ag::Var l_cap, l_ca, l_cls;
};

struct StepRecord {
    int step = 0;
    float l_cap = 0, l_ca = 0, l_cls = 0, total = 0;
};

// Weighted sum of Eq-style joint objective; NaN in any component raises a
// training error naming the offending term.
ag::Var total_loss(const LossBundle& bundle, float lambda_ca, float lambda_cls);

// Full-batch forward over `indices` producing the joint loss (caption and
// classification terms averaged over the batch, transition loss over the
// batch embedding matrix).
LossBundle batch_forward(StandModel& model, const data::Dataset& ds,
                         const std::vector<int>& indices, int caption_index, bool training);

// When `opt` is supplied its state is used and updated in place (enables
// checkpoint resume); otherwise a fresh optimizer is created internally.
std::vector<StepRecord> train(StandModel& model, const data::Dataset& ds, const TrainConfig& cfg,
                              nn::Adam* opt = nullptr);

// Checkpoint container: "STCK" magic, version, JSON manifest (config hash,
// step, tensor directory), then raw little-endian float payloads.
void save_checkpoint(const std::string& path, const StandModel& model, const nn::Adam& opt,
                     const std::string& config_hash, long step,
                     const std::map<std::string, std::string>& config_kv = {});
// Loads into an already-constructed model with a matching parameter set.
void load_checkpoint(const std::string& path, StandModel& model, nn::Adam& opt,
                     std::string* config_hash = nullptr, long* step = nullptr);
// Manifest-only read of the embedded flat config.
std::map<std::string, std::string> checkpoint_config(const std::string& path);
// Manifest-only read: names of stored parameter tensors.
std::vector<std::string> checkpoint_param_names(const std::string& path);

}  // namespace stand
