#include "stand/runconfig.hpp"

#include <cstdlib>
#include <sstream>

#include "stand/errors.hpp"

namespace stand {

using config::get;
using config::get_bool;
using config::get_int;
using config::get_real;
using config::KeyValues;

data::SceneSpec scene_spec_from(const KeyValues& kv) {
    data::SceneSpec spec;
    spec.seed = static_cast<std::uint64_t>(get_int(kv, "gen.seed", 0));
    spec.grid_size = static_cast<int>(get_int(kv, "gen.grid_size", spec.grid_size));
    spec.max_objects = static_cast<int>(get_int(kv, "gen.max_objects", spec.max_objects));
    spec.change_probability =
        static_cast<float>(get_real(kv, "gen.change_probability", spec.change_probability));
    spec.small_object_fraction =
        static_cast<float>(get_real(kv, "gen.small_object_fraction", spec.small_object_fraction));
    spec.validate();
    return spec;
}

ModelConfig model_config_from(const KeyValues& kv, const data::Dataset& ds) {
    ModelConfig mc;
    std::string channels = get(kv, "encoder.channels", "16,32,64,128");
    mc.encoder.channels.clear();
    std::istringstream cs(channels);
    for (std::string tok; std::getline(cs, tok, ',');) {
        try {
            mc.encoder.channels.push_back(std::stoi(tok));
        } catch (const std::exception&) {
            throw ConfigError("config: bad encoder.channels entry '" + tok + "'");
        }
    }
    mc.encoder.feature_level = static_cast<int>(
        get_int(kv, "encoder.feature_level", static_cast<long>(mc.encoder.channels.size()) - 1));

    mc.itc.tau = static_cast<float>(get_real(kv, "itc.tau", mc.itc.tau));
    mc.itc.embed_dim = static_cast<int>(get_int(kv, "itc.embed_dim", mc.itc.embed_dim));
    mc.itc.n_extra_negatives =
        static_cast<int>(get_int(kv, "itc.n_extra_negatives", mc.itc.n_extra_negatives));
    std::string fusion = get(kv, "itc.fusion", "aff");
    if (fusion == "aff") mc.itc.fusion = ItcConfig::Fusion::Aff;
    else if (fusion == "add") mc.itc.fusion = ItcConfig::Fusion::Add;
    else throw ConfigError("config: itc.fusion must be aff or add");
    mc.itc.l2_normalize = get_bool(kv, "itc.l2_normalize", mc.itc.l2_normalize);

    mc.frca.gamma = static_cast<float>(get_real(kv, "frca.gamma", mc.frca.gamma));
    mc.frca.kappa = static_cast<float>(get_real(kv, "frca.kappa", mc.frca.kappa));
    mc.frca.t = static_cast<float>(get_real(kv, "frca.t", mc.frca.t));
    mc.frca.beta_init = static_cast<float>(get_real(kv, "frca.beta_init", mc.frca.beta_init));
    mc.frca.mc_init = static_cast<float>(get_real(kv, "frca.mc_init", mc.frca.mc_init));

    mc.cavd.heads = static_cast<int>(get_int(kv, "cavd.heads", mc.cavd.heads));
    mc.cavd.share_stage1 = get_bool(kv, "cavd.share_stage1", mc.cavd.share_stage1);
    mc.cavd.residual = get_bool(kv, "cavd.residual", mc.cavd.residual);

    mc.sca.heads = static_cast<int>(get_int(kv, "sca.heads", mc.sca.heads));
    mc.sca.tau = static_cast<float>(get_real(kv, "sca.tau", mc.sca.tau));
    mc.sca.num_categories = static_cast<int>(
        get_int(kv, "sca.num_categories", static_cast<long>(ds.spec.categories.size())));
    if (mc.sca.num_categories != static_cast<int>(ds.spec.categories.size()))
        throw ConfigError("config: sca.num_categories must equal the dataset category count");

    mc.decoder.layers = static_cast<int>(get_int(kv, "decoder.layers", mc.decoder.layers));
    mc.decoder.heads = static_cast<int>(get_int(kv, "decoder.heads", mc.decoder.heads));
    mc.decoder.max_len = static_cast<int>(get_int(kv, "decoder.max_len", mc.decoder.max_len));

    std::string mask = get(kv, "model.mask_source", "gt");
    if (mask == "gt") mc.mask_source = MaskSource::GroundTruth;
    else if (mask == "naive") mc.mask_source = MaskSource::NaiveDiff;
    else throw ConfigError("config: model.mask_source must be gt or naive");
    mc.diff_threshold = static_cast<float>(get_real(kv, "model.diff_threshold", mc.diff_threshold));

    std::string ablation = get(kv, "model.ablation", "b3");
    mc.apply_ablation(ablation);
    mc.vocab_size = ds.vocab.size();
    mc.seed = static_cast<std::uint64_t>(get_int(kv, "train.seed", 0));
    mc.validate();
    return mc;
}

TrainConfig train_config_from(const KeyValues& kv) {
    TrainConfig tc;
    tc.lambda_ca = static_cast<float>(get_real(kv, "train.lambda_ca", tc.lambda_ca));
    tc.lambda_cls = static_cast<float>(get_real(kv, "train.lambda_cls", tc.lambda_cls));
    tc.lr = static_cast<float>(get_real(kv, "train.lr", tc.lr));
    tc.weight_decay = static_cast<float>(get_real(kv, "train.weight_decay", tc.weight_decay));
    tc.batch_size = static_cast<int>(get_int(kv, "train.batch_size", tc.batch_size));
    tc.steps = static_cast<int>(get_int(kv, "train.steps", tc.steps));
    tc.bn_freeze_fraction =
        static_cast<float>(get_real(kv, "train.bn_freeze_fraction", tc.bn_freeze_fraction));
    tc.seed = static_cast<std::uint64_t>(get_int(kv, "train.seed", 0));
    tc.validate();
    return tc;
}

config::KeyValues effective_config(const KeyValues& kv, const data::Dataset& ds) {
    ModelConfig mc = model_config_from(kv, ds);
    TrainConfig tc = train_config_from(kv);
    KeyValues out = kv;
    auto put = [&](const std::string& k, const std::string& v) {
        if (!out.count(k)) out[k] = v;
    };
    auto putf = [&](const std::string& k, double v) {
        std::ostringstream os;
        os << v;
        put(k, os.str());
    };
    std::ostringstream ch;
    for (size_t i = 0; i < mc.encoder.channels.size(); ++i)
        ch << (i ? "," : "") << mc.encoder.channels[i];
    put("encoder.channels", ch.str());
    putf("encoder.feature_level", mc.encoder.feature_level);
    putf("itc.tau", mc.itc.tau);
    putf("itc.embed_dim", mc.itc.embed_dim);
    putf("itc.n_extra_negatives", mc.itc.n_extra_negatives);
    put("itc.fusion", mc.itc.fusion == ItcConfig::Fusion::Aff ? "aff" : "add");
    put("itc.l2_normalize", mc.itc.l2_normalize ? "true" : "false");
    putf("frca.gamma", mc.frca.gamma);
    putf("frca.kappa", mc.frca.kappa);
    putf("frca.t", mc.frca.t);
    putf("frca.beta_init", mc.frca.beta_init);
    putf("frca.mc_init", mc.frca.mc_init);
    putf("cavd.heads", mc.cavd.heads);
    put("cavd.share_stage1", mc.cavd.share_stage1 ? "true" : "false");
    put("cavd.residual", mc.cavd.residual ? "true" : "false");
    putf("sca.heads", mc.sca.heads);
    putf("sca.tau", mc.sca.tau);
    putf("sca.num_categories", mc.sca.num_categories);
    putf("decoder.layers", mc.decoder.layers);
    putf("decoder.heads", mc.decoder.heads);
    putf("decoder.max_len", mc.decoder.max_len);
    put("model.mask_source", mc.mask_source == MaskSource::GroundTruth ? "gt" : "naive");
    putf("model.diff_threshold", mc.diff_threshold);
    put("model.ablation", config::get(kv, "model.ablation", "b3"));
    putf("model.vocab_size", mc.vocab_size);
    putf("train.lambda_ca", tc.lambda_ca);
    putf("train.lambda_cls", tc.lambda_cls);
    putf("train.lr", tc.lr);
    putf("train.weight_decay", tc.weight_decay);
    putf("train.batch_size", tc.batch_size);
    putf("train.steps", tc.steps);
    putf("train.bn_freeze_fraction", tc.bn_freeze_fraction);
    putf("train.seed", static_cast<double>(tc.seed));
    return out;
}

void apply_seed_env(config::KeyValues& kv) {
    const char* env = std::getenv("STAND_SEED");
    if (!env || !*env) return;
    try {
        size_t pos = 0;
        (void)std::stoull(env, &pos);
        if (env[pos] != '\0') throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
        throw ConfigError(std::string("config: STAND_SEED is not an integer: ") + env);
    }
    kv["train.seed"] = env;
    kv["gen.seed"] = env;
}

}  // namespace stand
