#pragma once

#include <array>
#include <string>
#include <vector>

#include "stand/data.hpp"
#include "stand/nn.hpp"

namespace stand {

enum class MaskSource { GroundTruth, NaiveDiff };

// Before / mask / after stacked as a 3-frame clip. Stored channel-major
// ([C=3, T=3, H, W]) to feed 3-D convolutions directly; frame order is
// fixed as (before, mask, after) along T.
struct ClipTriplet {
    Tensor frames;  // [3, 3, H, W] = [C, T, H, W]
    int height() const { return frames.dim(2); }
    int width() const { return frames.dim(3); }
};

ClipTriplet assemble_clip(const data::Sample& sample, MaskSource mask_source,
                          float diff_threshold = 0.1f);

// Per-frame multi-scale features: levels[i][t] has shape
// [C_i, H/2^{i+1}, W/2^{i+1}] with t in {before, change, after}.
struct FramePyramid {
    std::vector<std::array<ag::Var, 3>> levels;
};

struct EncoderConfig {
    std::vector<int> channels = {16, 32, 64, 128};
    int feature_level = 3;  // level consumed by ITC / DGTD
};

// Four-stage 3-D convolutional pyramid: temporal kernel 3 / stride 1,
// spatial kernel 3 / stride 2 per stage, channel norm + ReLU. The
// temporal dimension stays at 3 so Split is exact per-frame slicing.
struct ClipEncoder {
    EncoderConfig cfg;
    std::vector<nn::Conv3d> convs;
    std::vector<nn::ChannelNorm> norms;

    ClipEncoder() = default;
    ClipEncoder(nn::ParamStore& ps, const std::string& prefix, const EncoderConfig& cfg, Rng& rng);

    FramePyramid encode(const ClipTriplet& clip, bool training) const;
};

}  // namespace stand
