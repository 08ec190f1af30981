#include "stand/cavd.hpp"

#include "stand/errors.hpp"

namespace stand {

Cavd::Cavd(nn::ParamStore& ps, const std::string& prefix, int dim, const CavdConfig& cfg_, Rng& rng)
    : cfg(cfg_) {
    if (cfg.heads < 1 || dim % cfg.heads != 0)
        throw ConfigError("cavd: dim must be divisible by heads");
    diff1 = nn::Mha(ps, prefix + ".diff1", dim, cfg.heads, rng, cfg.residual, cfg.residual);
    diff2 = nn::Mha(ps, prefix + ".diff2", dim, cfg.heads, rng, cfg.residual, cfg.residual);
    if (!cfg.share_stage1)
        glob_bef = nn::Mha(ps, prefix + ".glob_bef", dim, cfg.heads, rng, cfg.residual, cfg.residual);
    glob_aft = nn::Mha(ps, prefix + ".glob_aft", dim, cfg.heads, rng, cfg.residual, cfg.residual);
    gate = nn::Linear(ps, prefix + ".gate", 2 * dim, dim, rng);
    proj_bef = nn::Linear(ps, prefix + ".proj_bef", dim, dim, rng);
    proj_aft = nn::Linear(ps, prefix + ".proj_aft", dim, dim, rng);
}

static void check_cavd_inputs(const ag::Var& x_bef, const ag::Var& x_c, const ag::Var& x_aft) {
    if (x_bef->value.shape.size() != 3)
        throw InputError("cavd: expected [C,H,W] features");
    if (!x_bef->value.same_shape(x_c->value) || !x_bef->value.same_shape(x_aft->value))
        throw InputError("cavd: before/change/after feature shapes must match");
}

ag::Var Cavd::extract_diff(const ag::Var& x_bef, const ag::Var& x_c, const ag::Var& x_aft,
                           std::vector<Tensor>* attn_out) const {
    check_cavd_inputs(x_bef, x_c, x_aft);
    const int H = x_bef->value.shape[1], W = x_bef->value.shape[2];
    ag::Var q = ag::flatten_tokens(x_c);
    ag::Var stage1 = diff1.forward(q, ag::flatten_tokens(x_bef), false, attn_out);
    ag::Var stage2 = diff2.forward(stage1, ag::flatten_tokens(x_aft), false, attn_out);
    return ag::unflatten_tokens(stage2, H, W);
}

ag::Var Cavd::extract_global(const ag::Var& x_bef, const ag::Var& x_c, const ag::Var& x_aft,
                             std::vector<Tensor>* attn_out) const {
    check_cavd_inputs(x_bef, x_c, x_aft);
    const int H = x_bef->value.shape[1], W = x_bef->value.shape[2];
    ag::Var q = ag::flatten_tokens(x_c);
    const nn::Mha& bef_attn = cfg.share_stage1 ? diff1 : glob_bef;
    ag::Var c_bef = bef_attn.forward(q, ag::flatten_tokens(x_bef), false, attn_out);
    ag::Var c_aft = glob_aft.forward(q, ag::flatten_tokens(x_aft), false, attn_out);
    ag::Var g = ag::sigmoid(gate.forward(ag::concat_cols(c_bef, c_aft)));
    ag::Var fused = ag::add(ag::mul(g, proj_bef.forward(c_bef)),
                            ag::mul(ag::add_scalar(ag::neg(g), 1.0f), proj_aft.forward(c_aft)));
    return ag::unflatten_tokens(fused, H, W);
}

Dgtd::Dgtd(nn::ParamStore& ps, const std::string& prefix, int dim, const CavdConfig& ccfg,
           const FrcaConfig& fcfg, Rng& rng)
    : cavd(ps, prefix + ".cavd", dim, ccfg, rng),
      frca_diff(ps, prefix + ".frca_diff", dim, fcfg, rng),
      frca_global(ps, prefix + ".frca_global", dim, fcfg, rng),
      frca_final(ps, prefix + ".frca_final", dim, fcfg, rng),
      fuse(ps, prefix + ".fuse", 2 * dim, dim, rng) {}

ag::Var Dgtd::synthesize_truth(const ag::Var& c_diff, const ag::Var& c_global, bool training) const {
    const int H = c_diff->value.shape[1], W = c_diff->value.shape[2];
    ag::Var d = frca_diff.forward(c_diff, training);
    ag::Var g = frca_global.forward(c_global, training);
    ag::Var cat = ag::concat_cols(ag::flatten_tokens(g), ag::flatten_tokens(d));
    ag::Var fused = ag::unflatten_tokens(fuse.forward(cat), H, W);
    return frca_final.forward(fused, training);
}

ag::Var Dgtd::forward(const ag::Var& x_bef, const ag::Var& x_c, const ag::Var& x_aft, bool training,
                      std::vector<Tensor>* attn_out) const {
    ag::Var c_diff = cavd.extract_diff(x_bef, x_c, x_aft, attn_out);
    ag::Var c_global = cavd.extract_global(x_bef, x_c, x_aft, attn_out);
    return synthesize_truth(c_diff, c_global, training);
}

}  // namespace stand
