#include "stand/model.hpp"

#include <algorithm>

#include "stand/errors.hpp"

namespace stand {

void ModelConfig::validate() const {
    itc.validate();
    frca.validate();
    sca.validate();
    decoder.validate();
    if (vocab_size < 5) throw ConfigError("model: vocab_size too small");
    if (encoder.channels.empty()) throw ConfigError("model: encoder needs at least one stage");
    if (encoder.feature_level < 0 ||
        encoder.feature_level >= static_cast<int>(encoder.channels.size()))
        throw ConfigError("model: feature_level out of range");
    if (diff_threshold <= 0.0f || diff_threshold >= 1.0f)
        throw ConfigError("model: diff_threshold must lie in (0,1)");
}

void ModelConfig::apply_ablation(const std::string& name) {
    if (name == "b0") {
        enable_itc = enable_dgtd = enable_sca = false;
    } else if (name == "b1") {
        enable_itc = true;
        enable_dgtd = enable_sca = false;
    } else if (name == "b2") {
        enable_itc = enable_dgtd = true;
        enable_sca = false;
    } else if (name == "b3") {
        enable_itc = enable_dgtd = enable_sca = true;
    } else {
        throw ConfigError("model: unknown ablation preset '" + name + "'");
    }
}

StandModel::StandModel(const ModelConfig& cfg_) : cfg(cfg_) {
    cfg.validate();
    Rng rng(cfg.seed ^ 0x5741'4e44ull);  // model-init stream, distinct from data
    encoder = ClipEncoder(ps, "encoder", cfg.encoder, rng);
    feat_dim = cfg.encoder.channels[cfg.encoder.feature_level];
    if (cfg.enable_itc) itc = Itc(ps, "itc", feat_dim, cfg.itc, rng);
    if (cfg.enable_dgtd) dgtd = Dgtd(ps, "dgtd", feat_dim, cfg.cavd, cfg.frca, rng);
    if (cfg.enable_sca) sca = Sca(ps, "sca", feat_dim, cfg.sca, rng);
    decoder = Decoder(ps, "decoder", feat_dim, cfg.vocab_size, cfg.decoder, rng);
}

std::array<ag::Var, 3> StandModel::encode_sample(const data::Sample& sample, bool training) {
    ClipTriplet clip = assemble_clip(sample, cfg.mask_source, cfg.diff_threshold);
    FramePyramid pyr = encoder.encode(clip, training);
    return pyr.levels.at(cfg.encoder.feature_level);
}

SampleForward StandModel::forward(const data::Sample& sample, const data::Vocabulary& vocab,
                                  int caption_index, bool training, bool collect_attention) {
    if (sample.captions.empty()) throw InputError("model: sample has no captions");
    caption_index %= static_cast<int>(sample.captions.size());
    auto [x_bef, x_c, x_aft] = encode_sample(sample, training);

    SampleForward out;
    std::vector<Tensor>* attn = collect_attention ? &out.attention : nullptr;

    if (cfg.enable_itc) {
        ag::Var bef_mod = itc.modulate(x_bef, x_aft);
        ag::Var aft_mod = itc.modulate(x_aft, x_bef);
        ag::Var pseudo = itc.synthesize_pseudo_after(bef_mod, x_c, training);
        out.emb_aft = itc.embed_after(aft_mod);
        out.emb_pseudo = itc.embed_pseudo(pseudo);
        out.bef_mod = bef_mod;
        out.x_c = x_c;
    }

    if (cfg.enable_dgtd) {
        out.truth = dgtd.forward(x_bef, x_c, x_aft, training, attn);
    } else {
        out.truth = x_c;  // raw change-branch feature stands in for C_truth
    }
    ag::Var truth_tokens = ag::flatten_tokens(out.truth);

    ag::Var object_tokens;
    if (cfg.enable_sca) {
        out.sca = sca.forward(out.truth, attn);
        object_tokens = out.sca.weighted;
        if (static_cast<int>(sample.change_labels.size()) != sca.cfg.num_categories)
            throw InputError("model: change_labels length must match sca.num_categories");
        std::vector<int> cls;
        cls.reserve(sample.change_labels.size());
        for (int v : sample.change_labels) cls.push_back(v ? 0 : 1);  // class 0 = change
        out.l_cls = Sca::classification_loss(out.sca, cls);
    } else {
        object_tokens = ag::constant(Tensor({1, feat_dim}));
        out.l_cls = ag::constant(Tensor::scalar(0.0f));
    }

    std::vector<int> ids = vocab.encode(sample.captions[caption_index]);
    // strip <bos>/<eos>; caption_loss re-adds them
    std::vector<int> body(ids.begin() + 1, ids.end() - 1);
    out.l_cap = decoder.caption_loss(body, truth_tokens, object_tokens,
                                     data::Vocabulary::kBos, data::Vocabulary::kEos,
                                     data::Vocabulary::kPad);
    return out;
}

std::string StandModel::generate_caption(const data::Sample& sample, const data::Vocabulary& vocab,
                                         int beam_width) {
    auto [x_bef, x_c, x_aft] = encode_sample(sample, false);
    ag::Var truth = cfg.enable_dgtd ? dgtd.forward(x_bef, x_c, x_aft, false) : x_c;
    ag::Var truth_tokens = ag::flatten_tokens(truth);
    ag::Var object_tokens = cfg.enable_sca ? sca.forward(truth).weighted
                                           : ag::constant(Tensor({1, feat_dim}));
    std::vector<int> ids =
        beam_width <= 1
            ? decoder.generate_greedy(truth_tokens, object_tokens, data::Vocabulary::kBos,
                                      data::Vocabulary::kEos)
            : decoder.generate_beam(truth_tokens, object_tokens, data::Vocabulary::kBos,
                                    data::Vocabulary::kEos, beam_width);
    return vocab.decode(ids);
}

std::vector<int> StandModel::predicted_change_labels(const data::Sample& sample) {
    if (!cfg.enable_sca) throw ConfigError("model: sca disabled, no change classifier");
    auto [x_bef, x_c, x_aft] = encode_sample(sample, false);
    ag::Var truth = cfg.enable_dgtd ? dgtd.forward(x_bef, x_c, x_aft, false) : x_c;
    ScaOutput so = sca.forward(truth);
    std::vector<int> labels(sca.cfg.num_categories, 0);
    const Tensor& p = so.class_probs->value;
    for (int i = 0; i < sca.cfg.num_categories; ++i)
        labels[i] = p.data[i * sca.cfg.num_classes + 0] > 0.5f ? 1 : 0;
    return labels;
}

}  // namespace stand
