#pragma once

#include <string>
#include <vector>

#include "stand/nn.hpp"

namespace stand {

struct ItcConfig {
    float tau = 0.07f;
    int embed_dim = 128;
    int n_extra_negatives = 0;  // n of the (n+1) negative-composition sweep
    enum class Fusion { Aff, Add };
    Fusion fusion = Fusion::Aff;
    bool l2_normalize = false;
    bool share_projection = true;

    void validate() const;
};

// Two-layer 1x1 conv net producing a full [C,H,W] modulation map from the
// conditioning frame.
struct FilmNet {
    nn::Conv2d c1, c2;
    FilmNet() = default;
    FilmNet(nn::ParamStore& ps, const std::string& prefix, int channels, Rng& rng);
    ag::Var forward(const ag::Var& x) const;
};

// Attentional feature fusion: gate from a local (pointwise-conv) and a
// global (pooled MLP) path, out = w*a + (1-w)*b.
struct AffFusion {
    nn::Conv2d l1, l2;
    nn::ChannelNorm bn1, bn2;
    nn::Linear g1, g2;
    AffFusion() = default;
    AffFusion(nn::ParamStore& ps, const std::string& prefix, int channels, Rng& rng, int reduction = 4);
    ag::Var forward(const ag::Var& a, const ag::Var& b, bool training) const;
};

// Global average pool then a two-layer projection into the shared
// embedding space.
struct ProjectionHead {
    nn::Linear l1, l2;
    ProjectionHead() = default;
    ProjectionHead(nn::ParamStore& ps, const std::string& prefix, int channels, int embed_dim, Rng& rng);
    ag::Var forward(const ag::Var& x) const;  // [C,H,W] -> [D]
};

struct Itc {
    ItcConfig cfg;
    FilmNet f_net, h_net;  // alpha / beta generators, shared across directions
    AffFusion fusion;
    ProjectionHead proj;
    ProjectionHead proj_pseudo;  // used only when !share_projection

    Itc() = default;
    Itc(nn::ParamStore& ps, const std::string& prefix, int channels, const ItcConfig& cfg, Rng& rng);

    // x_target scaled/shifted by maps conditioned on the *other* frame.
    ag::Var modulate(const ag::Var& x_target, const ag::Var& x_other) const;
    ag::Var synthesize_pseudo_after(const ag::Var& x_bef, const ag::Var& x_c, bool training) const;
    ag::Var embed_after(const ag::Var& x) const;
    ag::Var embed_pseudo(const ag::Var& x) const;
};

// Bidirectional InfoNCE over batch embeddings [B,D]. `extra_negatives`
// optionally carries, per sample, n mismatched pseudo-after embeddings
// [n,D] that extend the pseudo-side candidate set.
ag::Var transition_loss(const ag::Var& aft_batch, const ag::Var& pseudo_batch, float tau,
                        const std::vector<ag::Var>& extra_negatives = {}, bool l2_normalize = false);

}  // namespace stand
