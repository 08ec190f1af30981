#include "stand/encoder.hpp"

#include "stand/errors.hpp"

namespace stand {

ClipTriplet assemble_clip(const data::Sample& sample, MaskSource mask_source, float diff_threshold) {
    const Tensor& bef = sample.image_before;
    const Tensor& aft = sample.image_after;
    if (!bef.same_shape(aft)) throw InputError("assemble_clip: image shape mismatch");
    int H = bef.dim(1), W = bef.dim(2);
    Tensor mask = (mask_source == MaskSource::GroundTruth)
                      ? sample.mask_gt
                      : data::naive_diff_mask(bef, aft, diff_threshold);
    if (mask.dim(1) != H || mask.dim(2) != W) throw InputError("assemble_clip: mask shape mismatch");

    ClipTriplet clip;
    clip.frames = Tensor({3, 3, H, W});
    int HW = H * W;
    for (int c = 0; c < 3; ++c) {
        float* dst = clip.frames.data.data() + static_cast<size_t>(c) * 3 * HW;
        // t=0 before, t=1 mask replicated across channels, t=2 after
        std::copy_n(bef.data.begin() + static_cast<size_t>(c) * HW, HW, dst);
        std::copy_n(mask.data.begin(), HW, dst + HW);
        std::copy_n(aft.data.begin() + static_cast<size_t>(c) * HW, HW, dst + 2 * HW);
    }
    return clip;
}

ClipEncoder::ClipEncoder(nn::ParamStore& ps, const std::string& prefix, const EncoderConfig& cfg_,
                         Rng& rng)
    : cfg(cfg_) {
    int in_ch = 3;
    for (size_t i = 0; i < cfg.channels.size(); ++i) {
        std::string stage = prefix + ".stage" + std::to_string(i);
        convs.emplace_back(ps, stage + ".conv", in_ch, cfg.channels[i], 3, 3, 2, rng);
        norms.emplace_back(ps, stage + ".norm", cfg.channels[i]);
        in_ch = cfg.channels[i];
    }
}

FramePyramid ClipEncoder::encode(const ClipTriplet& clip, bool training) const {
    int H = clip.height(), W = clip.width();
    if (H % 16 != 0 || W % 16 != 0) throw InputError("ClipEncoder: H and W must be divisible by 16");
    FramePyramid pyr;
    ag::Var x = ag::constant(clip.frames);
    for (size_t i = 0; i < convs.size(); ++i) {
        x = ag::relu(norms[i].forward(convs[i].forward(x), training));
        pyr.levels.push_back({ag::slice_time(x, 0), ag::slice_time(x, 1), ag::slice_time(x, 2)});
    }
    return pyr;
}

}  // namespace stand
