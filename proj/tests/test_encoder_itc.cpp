#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "stand/data.hpp"
#include "stand/encoder.hpp"
#include "stand/errors.hpp"
#include "stand/gradcheck.hpp"
#include "stand/itc.hpp"

using namespace stand;

static data::Sample make_sample(std::uint64_t seed, int grid = 32) {
    data::SceneSpec spec;
    spec.seed = seed;
    spec.grid_size = grid;
    return data::generate_corpus(spec, 1).front();
}

TEST_CASE("clip assembly stacks before/mask/after along time") {
    data::Sample s = make_sample(31);
    ClipTriplet clip = assemble_clip(s, MaskSource::GroundTruth);
    REQUIRE(clip.frames.shape == std::vector<int>{3, 3, 32, 32});
    const int HW = 32 * 32;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < HW; ++i) {
            CHECK(clip.frames.data[(c * 3 + 0) * HW + i] == s.image_before.data[c * HW + i]);
            CHECK(clip.frames.data[(c * 3 + 1) * HW + i] == s.mask_gt.data[i]);  // replicated
            CHECK(clip.frames.data[(c * 3 + 2) * HW + i] == s.image_after.data[c * HW + i]);
        }
}

TEST_CASE("naive-diff clip differs from ground truth only in the mask frame") {
    data::Sample s = make_sample(32);
    ClipTriplet gt = assemble_clip(s, MaskSource::GroundTruth);
    ClipTriplet nd = assemble_clip(s, MaskSource::NaiveDiff, 0.1f);
    const int HW = 32 * 32;
    for (int c = 0; c < 3; ++c)
        for (int i = 0; i < HW; ++i) {
            CHECK(gt.frames.data[(c * 3 + 0) * HW + i] == nd.frames.data[(c * 3 + 0) * HW + i]);
            CHECK(gt.frames.data[(c * 3 + 2) * HW + i] == nd.frames.data[(c * 3 + 2) * HW + i]);
        }
}

TEST_CASE("encoder pyramid halves resolution and tracks channel plan") {
    Rng rng(33);
    nn::ParamStore ps;
    EncoderConfig ec;
    ec.channels = {8, 16, 32, 64};
    ClipEncoder enc(ps, "enc", ec, rng);
    data::Sample s = make_sample(34);
    FramePyramid pyr = enc.encode(assemble_clip(s, MaskSource::GroundTruth), false);
    REQUIRE(pyr.levels.size() == 4);
    int hw = 16;
    for (size_t l = 0; l < 4; ++l) {
        for (int t = 0; t < 3; ++t)
            CHECK(pyr.levels[l][t]->value.shape ==
                  std::vector<int>{ec.channels[l], hw, hw});
        hw /= 2;
    }
}

TEST_CASE("encoder rejects sizes not divisible by 16") {
    Rng rng(35);
    nn::ParamStore ps;
    EncoderConfig ec;
    ec.channels = {4, 8, 16, 32};
    ClipEncoder enc(ps, "enc", ec, rng);
    ClipTriplet clip;
    clip.frames = Tensor({3, 3, 24, 24});
    CHECK_THROWS_AS(enc.encode(clip, false), InputError);
}

TEST_CASE("film modulation collapses to identity with unit alpha, zero beta") {
    Rng rng(36);
    nn::ParamStore ps;
    ItcConfig ic;
    Itc itc(ps, "itc", 4, ic, rng);
    // zero both nets' weights; bias of the alpha net's last conv = 1
    for (auto& [name, p] : ps.params)
        if (name.rfind("itc.f", 0) == 0 || name.rfind("itc.h", 0) == 0)
            std::fill(p->value.data.begin(), p->value.data.end(), 0.0f);
    for (float& v : itc.f_net.c2.b->value.data) v = 1.0f;
    Tensor x = randn({4, 4, 4}, rng);
    Tensor other = randn({4, 4, 4}, rng);
    Tensor y = itc.modulate(ag::constant(x), ag::constant(other))->value;
    CHECK(max_abs_diff(y, x) < 1e-6f);
}

TEST_CASE("additive fusion with zero change frame returns the before frame") {
    Rng rng(37);
    nn::ParamStore ps;
    ItcConfig ic;
    ic.fusion = ItcConfig::Fusion::Add;
    Itc itc(ps, "itc", 4, ic, rng);
    Tensor bef = randn({4, 4, 4}, rng);
    ag::Var zero = ag::constant(Tensor({4, 4, 4}));
    Tensor y = itc.synthesize_pseudo_after(ag::constant(bef), zero, false)->value;
    CHECK(max_abs_diff(y, bef) == 0.0f);
}

TEST_CASE("aff gate blends half-and-half when both logit paths are zero") {
    Rng rng(38);
    nn::ParamStore ps;
    AffFusion aff(ps, "aff", 4, rng);
    for (auto& [name, p] : ps.params)
        std::fill(p->value.data.begin(), p->value.data.end(), 0.0f);
    Tensor a = randn({4, 4, 4}, rng);
    Tensor b = randn({4, 4, 4}, rng);
    Tensor y = aff.forward(ag::constant(a), ag::constant(b), false)->value;
    for (int i = 0; i < y.numel(); ++i)
        CHECK(y.data[i] == doctest::Approx(0.5f * (a.data[i] + b.data[i])).epsilon(1e-5));
}

TEST_CASE("transition loss degenerate and oracle cases") {
    Tensor single({1, 3});
    single.data = {1.0f, 2.0f, 3.0f};
    CHECK(transition_loss(ag::constant(single), ag::constant(single), 0.07f)->value.data[0] ==
          0.0f);

    Tensor eye({2, 2});
    eye.data = {1, 0, 0, 1};
    float l = transition_loss(ag::constant(eye), ag::constant(eye), 1.0f)->value.data[0];
    CHECK(l == doctest::Approx(2.0 * std::log(1.0 + std::exp(-1.0))).epsilon(1e-6));
}

TEST_CASE("transition loss matches a direct-evaluation oracle") {
    Rng rng(39);
    const int B = 3, D = 4;
    Tensor aft = randn({B, D}, rng);
    Tensor ps = randn({B, D}, rng);
    const float tau = 0.5f;
    float l = transition_loss(ag::constant(aft), ag::constant(ps), tau)->value.data[0];

    auto dot = [&](const Tensor& a, int i, const Tensor& b, int j) {
        double s = 0;
        for (int k = 0; k < D; ++k) s += a.data[i * D + k] * b.data[j * D + k];
        return s / tau;
    };
    double p2a = 0, a2p = 0;
    for (int i = 0; i < B; ++i) {
        double denom = 0;
        for (int j = 0; j < B; ++j) denom += std::exp(dot(ps, i, aft, j));
        p2a += -std::log(std::exp(dot(ps, i, aft, i)) / denom);
        denom = 0;
        for (int j = 0; j < B; ++j) denom += std::exp(dot(aft, i, ps, j));
        a2p += -std::log(std::exp(dot(aft, i, ps, i)) / denom);
    }
    double oracle = p2a / B + a2p / B;
    CHECK(l == doctest::Approx(oracle).epsilon(1e-5));
}

TEST_CASE("extra negatives extend only the pseudo-side denominator") {
    Rng rng(40);
    const int B = 2, D = 3;
    Tensor aft = randn({B, D}, rng);
    Tensor ps = randn({B, D}, rng);
    Tensor neg = randn({1, D}, rng);
    std::vector<ag::Var> extras{ag::constant(neg), ag::constant(neg)};
    float with = transition_loss(ag::constant(aft), ag::constant(ps), 1.0f, extras)
                     ->value.data[0];
    float without = transition_loss(ag::constant(aft), ag::constant(ps), 1.0f)->value.data[0];
    CHECK(with >= without);  // extra candidates can only grow the denominator
}

TEST_CASE("transition loss configuration errors") {
    Tensor e({2, 2});
    e.data = {1, 0, 0, 1};
    ag::Var v = ag::constant(e);
    CHECK_THROWS_AS(transition_loss(v, v, 0.0f), ConfigError);
    Tensor one({1, 2});
    ag::Var s = ag::constant(one);
    std::vector<ag::Var> extras{ag::constant(Tensor({2, 2}))};
    CHECK_THROWS_AS(transition_loss(s, s, 1.0f, extras), ConfigError);
}

TEST_CASE("itc config validation") {
    ItcConfig ic;
    ic.tau = -1.0f;
    CHECK_THROWS_AS(ic.validate(), ConfigError);
    ic = ItcConfig{};
    ic.embed_dim = 0;
    CHECK_THROWS_AS(ic.validate(), ConfigError);
}
