#include "stand/itc.hpp"

#include "stand/errors.hpp"

namespace stand {

void ItcConfig::validate() const {
    if (tau <= 0.0f) throw ConfigError("itc.tau must be > 0");
    if (embed_dim < 1) throw ConfigError("itc.embed_dim must be >= 1");
    if (n_extra_negatives < 0) throw ConfigError("itc.n_extra_negatives must be >= 0");
}

FilmNet::FilmNet(nn::ParamStore& ps, const std::string& prefix, int channels, Rng& rng) {
    c1 = nn::Conv2d(ps, prefix + ".c1", channels, channels, 1, 1, 0, rng);
    c2 = nn::Conv2d(ps, prefix + ".c2", channels, channels, 1, 1, 0, rng);
}

ag::Var FilmNet::forward(const ag::Var& x) const { return c2.forward(ag::relu(c1.forward(x))); }

AffFusion::AffFusion(nn::ParamStore& ps, const std::string& prefix, int channels, Rng& rng, int reduction) {
    int mid = std::max(1, channels / reduction);
    l1 = nn::Conv2d(ps, prefix + ".l1", channels, mid, 1, 1, 0, rng);
    l2 = nn::Conv2d(ps, prefix + ".l2", mid, channels, 1, 1, 0, rng);
    bn1 = nn::ChannelNorm(ps, prefix + ".bn1", mid);
    bn2 = nn::ChannelNorm(ps, prefix + ".bn2", channels);
    g1 = nn::Linear(ps, prefix + ".g1", channels, mid, rng);
    g2 = nn::Linear(ps, prefix + ".g2", mid, channels, rng);
}

ag::Var AffFusion::forward(const ag::Var& a, const ag::Var& b, bool training) const {
    ag::Var s = ag::add(a, b);
    ag::Var local = bn2.forward(l2.forward(ag::relu(bn1.forward(l1.forward(s), training))), training);
    ag::Var pooled = ag::reshape(ag::global_avgpool_hw(s), {1, s->value.dim(0)});
    ag::Var glob = ag::reshape(g2.forward(ag::relu(g1.forward(pooled))), {s->value.dim(0)});
    ag::Var logits = ag::add(local, [&] {
        // broadcast the channel vector over space
        ag::Var ones = ag::constant(Tensor::full({s->value.dim(0), s->value.dim(1), s->value.dim(2)}, 1.0f));
        return ag::scale_channels(ones, glob);
    }());
    ag::Var w = ag::sigmoid(logits);
    ag::Var one_minus_w = ag::add_scalar(ag::neg(w), 1.0f);
    return ag::add(ag::mul(w, a), ag::mul(one_minus_w, b));
}

ProjectionHead::ProjectionHead(nn::ParamStore& ps, const std::string& prefix, int channels, int embed_dim,
                               Rng& rng) {
    l1 = nn::Linear(ps, prefix + ".l1", channels, embed_dim, rng);
    l2 = nn::Linear(ps, prefix + ".l2", embed_dim, embed_dim, rng);
}

ag::Var ProjectionHead::forward(const ag::Var& x) const {
    ag::Var pooled = ag::reshape(ag::global_avgpool_hw(x), {1, x->value.dim(0)});
    return ag::reshape(l2.forward(ag::relu(l1.forward(pooled))), {l2.b->value.numel()});
}

Itc::Itc(nn::ParamStore& ps, const std::string& prefix, int channels, const ItcConfig& cfg_, Rng& rng)
    : cfg(cfg_) {
    cfg.validate();
    f_net = FilmNet(ps, prefix + ".f", channels, rng);
    h_net = FilmNet(ps, prefix + ".h", channels, rng);
    if (cfg.fusion == ItcConfig::Fusion::Aff) fusion = AffFusion(ps, prefix + ".fus", channels, rng);
    proj = ProjectionHead(ps, prefix + ".proj", channels, cfg.embed_dim, rng);
    if (!cfg.share_projection)
        proj_pseudo = ProjectionHead(ps, prefix + ".proj_pseudo", channels, cfg.embed_dim, rng);
}

ag::Var Itc::modulate(const ag::Var& x_target, const ag::Var& x_other) const {
    if (!x_target->value.same_shape(x_other->value)) throw InputError("modulate: shape mismatch");
    ag::Var alpha = f_net.forward(x_other);
    ag::Var beta = h_net.forward(x_other);
    return ag::add(ag::mul(alpha, x_target), beta);
}

ag::Var Itc::synthesize_pseudo_after(const ag::Var& x_bef, const ag::Var& x_c, bool training) const {
    if (!x_bef->value.same_shape(x_c->value)) throw InputError("synthesize_pseudo_after: shape mismatch");
    if (cfg.fusion == ItcConfig::Fusion::Add) return ag::add(x_bef, x_c);
    return fusion.forward(x_bef, x_c, training);
}

ag::Var Itc::embed_after(const ag::Var& x) const { return proj.forward(x); }

ag::Var Itc::embed_pseudo(const ag::Var& x) const {
    return cfg.share_projection ? proj.forward(x) : proj_pseudo.forward(x);
}

ag::Var transition_loss(const ag::Var& aft_batch, const ag::Var& pseudo_batch, float tau,
                        const std::vector<ag::Var>& extra_negatives, bool l2_normalize) {
    if (tau <= 0.0f) throw ConfigError("transition_loss: tau must be > 0");
    int B = aft_batch->value.dim(0);
    if (pseudo_batch->value.dim(0) != B || pseudo_batch->value.dim(1) != aft_batch->value.dim(1))
        throw InputError("transition_loss: batch shape mismatch");
    if (!extra_negatives.empty()) {
        if (static_cast<int>(extra_negatives.size()) != B)
            throw InputError("transition_loss: extra negatives must be per-sample");
        int n = extra_negatives[0]->value.dim(0);
        if (n > B - 1) throw ConfigError("transition_loss: n_extra_negatives must be <= B-1");
    }

    ag::Var aft = l2_normalize ? ag::l2_normalize_rows(aft_batch) : aft_batch;
    ag::Var pseudo = l2_normalize ? ag::l2_normalize_rows(pseudo_batch) : pseudo_batch;

    float inv_tau = 1.0f / tau;
    // pseudo-to-after direction: anchor = after, candidates = pseudo set
    ag::Var l_p2a;
    if (extra_negatives.empty()) {
        ag::Var sim = ag::scale(ag::matmul(aft, ag::transpose(pseudo)), inv_tau);
        l_p2a = ag::neg(ag::mean(ag::take_diag(ag::log_softmax_rows(sim))));
    } else {
        std::vector<ag::Var> diag_terms;
        for (int k = 0; k < B; ++k) {
            ag::Var extras = extra_negatives[static_cast<size_t>(k)];
            if (l2_normalize) extras = ag::l2_normalize_rows(extras);
            ag::Var anchor = ag::reshape(ag::row(aft, k), {1, aft->value.dim(1)});
            ag::Var cands = ag::concat_rows({pseudo, extras});
            ag::Var sims = ag::scale(ag::matmul(anchor, ag::transpose(cands)), inv_tau);
            ag::Var lsm = ag::log_softmax_rows(sims);
            diag_terms.push_back(ag::reshape(ag::slice_cols(lsm, k, 1), {1}));
        }
        l_p2a = ag::neg(ag::mean(ag::stack_rows(diag_terms)));
    }
    // after-to-pseudo direction
    ag::Var sim2 = ag::scale(ag::matmul(pseudo, ag::transpose(aft)), inv_tau);
    ag::Var l_a2p = ag::neg(ag::mean(ag::take_diag(ag::log_softmax_rows(sim2))));
    return ag::add(l_p2a, l_a2p);
}

}  // namespace stand
