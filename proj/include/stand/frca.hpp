#pragma once

#include <string>

#include "stand/dct.hpp"
#include "stand/nn.hpp"

namespace stand {

struct FrcaConfig {
    float gamma = 0.5f;    // channel-split ratio
    float kappa = 20.0f;   // soft-step sharpness
    float t = 0.25f;       // radial frequency threshold
    float beta_init = 0.5f;
    float mc_init = 0.99f;
    bool identity_bypass = false;  // forward returns its input untouched

    void validate() const;
};

// Radial distance to the DC component on the normalized frequency grid:
// d(x,y) = (1/sqrt(2)) * sqrt((x/(H-1))^2 + (y/(W-1))^2).
Tensor radial_distance_grid(int H, int W);

// M_s = HighPass + (1 - beta) * LowPass with HighPass = sigma(kappa (d - t))
// and LowPass = sigma(kappa (t - d)). Shape [1,H,W].
Tensor build_spatial_mask(int H, int W, float beta, float kappa, float t);

// Frequency-refocused complementary attention: channel split, per-branch
// conv, DCT-domain soft masking, complementary spatial/channel
// recombination. Shape preserving.
struct Frca {
    FrcaConfig cfg;
    int channels = 0;
    ag::Var m_c;     // [C] channel mask (learnable, near-one init)
    ag::Var beta_f;  // [1] learnable low-frequency attenuation
    nn::Conv2d conv1, conv2;   // 3x3, restore full channel capacity
    nn::Conv2d reduce;         // 1x1 -> 1 channel
    nn::ChannelNorm bn;        // on the reduced map

    Frca() = default;
    Frca(nn::ParamStore& ps, const std::string& prefix, int channels, const FrcaConfig& cfg, Rng& rng);

    ag::Var forward(const ag::Var& x, bool training) const;
};

}  // namespace stand
