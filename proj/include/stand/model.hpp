#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "stand/cavd.hpp"
#include "stand/data.hpp"
#include "stand/decoder.hpp"
#include "stand/encoder.hpp"
#include "stand/itc.hpp"
#include "stand/sca.hpp"

namespace stand {

struct ModelConfig {
    EncoderConfig encoder;
    ItcConfig itc;
    FrcaConfig frca;
    CavdConfig cavd;
    ScaConfig sca;
    DecoderConfig decoder;
    bool enable_itc = true;
    bool enable_dgtd = true;
    bool enable_sca = true;
    MaskSource mask_source = MaskSource::GroundTruth;
    float diff_threshold = 0.1f;  // naive-diff mask threshold
    int vocab_size = 0;
    unsigned long long seed = 0;

    void validate() const;
    // Table-style presets: "b0" encoder+decoder, "b1" +itc, "b2" +itc+dgtd,
    // "b3" full.
    void apply_ablation(const std::string& name);
};

struct SampleForward {
    ag::Var l_cap;          // scalar caption loss
    ag::Var l_cls;          // scalar classification loss (zero when sca off)
    ag::Var emb_aft;        // [D] (itc only)
    ag::Var emb_pseudo;     // [D] (itc only)
    ag::Var bef_mod;        // [C,H,W] modulated before feature (itc only)
    ag::Var x_c;            // [C,H,W] change-branch feature (itc only)
    ag::Var truth;          // [C,H,W] change-truth feature
    ScaOutput sca;          // valid when sca enabled
    std::vector<Tensor> attention;  // filled when requested
};

struct StandModel {
    ModelConfig cfg;
    nn::ParamStore ps;
    ClipEncoder encoder;
    Itc itc;    // constructed only when enable_itc
    Dgtd dgtd;  // constructed only when enable_dgtd
    Sca sca;    // constructed only when enable_sca
    Decoder decoder;
    int feat_dim = 0;

    explicit StandModel(const ModelConfig& cfg);

    // Per-sample forward. The caption index selects which reference caption
    // supervises the decoder; ITC embeddings are collected by the caller
    // into the batch-level transition loss.
    SampleForward forward(const data::Sample& sample, const data::Vocabulary& vocab, int caption_index,
                          bool training, bool collect_attention = false);

    std::string generate_caption(const data::Sample& sample, const data::Vocabulary& vocab,
                                 int beam_width = 1);
    std::vector<int> predicted_change_labels(const data::Sample& sample);

    // Feature triplet (before/change/after) at the configured pyramid level.
    std::array<ag::Var, 3> encode_sample(const data::Sample& sample, bool training);
};

}  // namespace stand
