#include "stand/frca.hpp"

#include <cmath>

#include "stand/errors.hpp"

namespace stand {

void FrcaConfig::validate() const {
    if (gamma <= 0.0f || gamma >= 1.0f) throw ConfigError("frca.gamma must be in (0,1)");
    if (t <= 0.0f || t >= 1.0f) throw ConfigError("frca.t must be in (0,1)");
    if (kappa <= 0.0f) throw ConfigError("frca.kappa must be > 0");
}

Tensor radial_distance_grid(int H, int W) {
    if (H < 2 || W < 2) throw InputError("radial_distance_grid: H, W must be >= 2");
    Tensor d({1, H, W});
    for (int x = 0; x < H; ++x)
        for (int y = 0; y < W; ++y) {
            float nx = static_cast<float>(x) / static_cast<float>(H - 1);
            float ny = static_cast<float>(y) / static_cast<float>(W - 1);
            d.at({0, x, y}) = std::sqrt(nx * nx + ny * ny) / std::sqrt(2.0f);
        }
    return d;
}

Tensor build_spatial_mask(int H, int W, float beta, float kappa, float t) {
    if (t <= 0.0f || t >= 1.0f) throw ConfigError("build_spatial_mask: t must be in (0,1)");
    if (kappa <= 0.0f) throw ConfigError("build_spatial_mask: kappa must be > 0");
    Tensor d = radial_distance_grid(H, W);
    Tensor m({1, H, W});
    // accumulate in double and round once so the literal high+(1-beta)*low
    // form agrees with the algebraic 1 - beta*sigma(kappa(t-d)) to float ulp
    auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
    for (int i = 0; i < H * W; ++i) {
        double dist = d.data[static_cast<size_t>(i)];
        double high = sig(static_cast<double>(kappa) * (dist - t));
        double low = sig(static_cast<double>(kappa) * (t - dist));
        m.data[static_cast<size_t>(i)] =
            static_cast<float>(high + (1.0 - static_cast<double>(beta)) * low);
    }
    return m;
}

Frca::Frca(nn::ParamStore& ps, const std::string& prefix, int channels_, const FrcaConfig& cfg_, Rng& rng)
    : cfg(cfg_), channels(channels_) {
    cfg.validate();
    float split = cfg.gamma * static_cast<float>(channels);
    int c1 = static_cast<int>(std::lround(split));
    if (std::fabs(split - static_cast<float>(c1)) > 1e-6f || c1 < 1 || c1 >= channels)
        throw ConfigError("frca.gamma * channels must be an integer in [1, C-1]");
    m_c = ps.add(prefix + ".m_c", Tensor::full({channels}, cfg.mc_init));
    beta_f = ps.add(prefix + ".beta_f", Tensor::full({1}, cfg.beta_init));
    conv1 = nn::Conv2d(ps, prefix + ".conv1", c1, channels, 3, 1, 1, rng);
    conv2 = nn::Conv2d(ps, prefix + ".conv2", channels - c1, channels, 3, 1, 1, rng);
    reduce = nn::Conv2d(ps, prefix + ".reduce", channels, 1, 1, 1, 0, rng);
    bn = nn::ChannelNorm(ps, prefix + ".bn", 1);
}

ag::Var Frca::forward(const ag::Var& x, bool training) const {
    if (cfg.identity_bypass) return x;
    int C = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    if (C != channels) throw InputError("Frca: channel count mismatch");
    int c1 = static_cast<int>(std::lround(cfg.gamma * static_cast<float>(channels)));

    // channel split + per-branch conv
    ag::Var flat = ag::reshape(x, {C, H * W});
    ag::Var x1 = ag::reshape(ag::slice_rows(flat, 0, c1), {c1, H, W});
    ag::Var x2 = ag::reshape(ag::slice_rows(flat, c1, C - c1), {C - c1, H, W});
    ag::Var xs = conv1.forward(x1);
    ag::Var xc = conv2.forward(x2);

    // DCT-domain soft masking; the spatial mask keeps the literal
    // HighPass + (1 - beta) LowPass form with beta learnable
    Tensor d = radial_distance_grid(H, W);
    Tensor high_plus_low({H, W});
    Tensor low({H, W});
    auto sig = [](float z) { return 1.0f / (1.0f + std::exp(-z)); };
    for (int i = 0; i < H * W; ++i) {
        float hp = sig(cfg.kappa * (d.data[static_cast<size_t>(i)] - cfg.t));
        float lp = sig(cfg.kappa * (cfg.t - d.data[static_cast<size_t>(i)]));
        high_plus_low.data[static_cast<size_t>(i)] = hp + lp;
        low.data[static_cast<size_t>(i)] = lp;
    }
    ag::Var m_s = ag::sub(ag::constant(high_plus_low), ag::scale_by_scalar(ag::constant(low), beta_f));
    ag::Var xs_f = idct2(ag::scale_spatial(dct2(xs), m_s));
    ag::Var xc_f = idct2(ag::scale_channels(dct2(xc), m_c));

    // complementary recombination
    ag::Var chan_w = ag::global_avgpool_hw(xc_f);                                     // [C]
    ag::Var spat_w = ag::sigmoid(bn.forward(reduce.forward(xs_f), training));          // [1,H,W]
    ag::Var att_s = ag::scale_channels(xs, chan_w);
    ag::Var att_c = ag::scale_spatial(xc, ag::reshape(spat_w, {H, W}));
    return ag::add(att_s, att_c);
}

}  // namespace stand
