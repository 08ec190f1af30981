#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "stand/decoder.hpp"
#include "stand/errors.hpp"
#include "stand/sca.hpp"

using namespace stand;

static ag::Var feat(Rng& rng, int C = 8, int H = 2, int W = 2) {
    return ag::constant(randn({C, H, W}, rng));
}

TEST_CASE("sca output shapes and row-stochastic class probabilities") {
    Rng rng(51);
    nn::ParamStore ps;
    ScaConfig sc;
    sc.num_categories = 3;
    sc.heads = 2;
    Sca sca(ps, "s", 8, sc, rng);
    auto out = sca.forward(feat(rng));
    CHECK(out.objects->value.shape == std::vector<int>{3, 8});
    CHECK(out.class_logits->value.shape == std::vector<int>{3, 2});
    CHECK(out.weighted->value.shape == std::vector<int>{3, 8});
    for (int r = 0; r < 3; ++r) {
        float s = 0;
        for (int k = 0; k < 2; ++k) {
            float p = out.class_probs->value.data[r * 2 + k];
            CHECK(p >= 0.0f);
            s += p;
        }
        CHECK(s == doctest::Approx(1.0f).epsilon(1e-5));
    }
}

TEST_CASE("zero queries give uniform attention: every slot is the token mean") {
    Rng rng(52);
    nn::ParamStore ps;
    ScaConfig sc;
    sc.num_categories = 2;
    sc.heads = 3;
    Sca sca(ps, "s", 8, sc, rng);
    std::fill(sca.queries->value.data.begin(), sca.queries->value.data.end(), 0.0f);
    ag::Var x = feat(rng);
    auto out = sca.forward(x);
    // oracle: mean over HW of the projected tokens
    ag::Var toks = sca.proj.forward(ag::flatten_tokens(x));
    const int T = 4, C = 8;
    for (int n = 0; n < 2; ++n)
        for (int c = 0; c < C; ++c) {
            float m = 0;
            for (int t = 0; t < T; ++t) m += toks->value.data[t * C + c];
            m /= T;
            CHECK(out.objects->value.data[n * C + c] == doctest::Approx(m).epsilon(1e-5));
        }
}

TEST_CASE("zeroed classifier gives N*log(K) classification loss") {
    Rng rng(53);
    nn::ParamStore ps;
    ScaConfig sc;
    sc.num_categories = 5;
    Sca sca(ps, "s", 8, sc, rng);
    std::fill(sca.classifier.w->value.data.begin(), sca.classifier.w->value.data.end(), 0.0f);
    std::fill(sca.classifier.b->value.data.begin(), sca.classifier.b->value.data.end(), 0.0f);
    auto out = sca.forward(feat(rng));
    ag::Var l = Sca::classification_loss(out, {0, 1, 0, 1, 1});
    CHECK(l->value.data[0] == doctest::Approx(5.0 * std::log(2.0)).epsilon(1e-5));
    CHECK_THROWS_AS(Sca::classification_loss(out, {0, 1}), InputError);     // wrong count
    CHECK_THROWS_AS(Sca::classification_loss(out, {0, 1, 0, 1, 2}), InputError);  // bad label
}

TEST_CASE("weighted slots are objects scaled by the change probability") {
    Rng rng(54);
    nn::ParamStore ps;
    ScaConfig sc;
    sc.num_categories = 2;
    Sca sca(ps, "s", 8, sc, rng);
    auto out = sca.forward(feat(rng));
    for (int n = 0; n < 2; ++n) {
        float p = out.class_probs->value.data[n * 2 + 0];  // class 0 = change
        for (int c = 0; c < 8; ++c)
            CHECK(out.weighted->value.data[n * 8 + c] ==
                  doctest::Approx(p * out.objects->value.data[n * 8 + c]).epsilon(1e-5));
    }
}

TEST_CASE("sca config validation") {
    ScaConfig sc;
    sc.tau = 0.0f;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
    sc = ScaConfig{};
    sc.num_categories = 0;
    CHECK_THROWS_AS(sc.validate(), ConfigError);
}

TEST_CASE("sinusoidal positions match the closed form") {
    Tensor pe = sinusoidal_positions(5, 8);
    CHECK(pe.shape == std::vector<int>{5, 8});
    for (int p = 0; p < 5; ++p)
        for (int i = 0; i < 4; ++i) {
            double w = p / std::pow(10000.0, 2.0 * i / 8.0);
            CHECK(pe.data[p * 8 + 2 * i] == doctest::Approx(std::sin(w)).epsilon(1e-5));
            CHECK(pe.data[p * 8 + 2 * i + 1] == doctest::Approx(std::cos(w)).epsilon(1e-5));
        }
}

struct DecFixture {
    Rng rng{55};
    nn::ParamStore ps;
    Decoder dec;
    ag::Var truth, obj;
    DecFixture() {
        DecoderConfig dc;
        dc.layers = 2;
        dc.heads = 2;
        dc.max_len = 8;
        dec = Decoder(ps, "d", 8, 10, dc, rng);
        truth = ag::constant(randn({4, 8}, rng));
        obj = ag::constant(randn({3, 8}, rng));
    }
};

TEST_CASE("decoder is causal: a future token cannot change earlier states") {
    DecFixture f;
    Tensor a = f.dec.decode_train({1, 4, 5, 6}, f.truth, f.obj)->value;
    Tensor b = f.dec.decode_train({1, 4, 5, 9}, f.truth, f.obj)->value;
    for (int t = 0; t < 3; ++t)
        for (int c = 0; c < 8; ++c)
            CHECK(a.data[t * 8 + c] == b.data[t * 8 + c]);
    // and the differing position does change
    float d = 0;
    for (int c = 0; c < 8; ++c) d = std::max(d, std::fabs(a.data[3 * 8 + c] - b.data[3 * 8 + c]));
    CHECK(d > 0.0f);
}

TEST_CASE("caption loss shifts targets and ignores nothing for a clean caption") {
    DecFixture f;
    // hand-build the mean CE over positions from decode_train logits
    std::vector<int> cap = {4, 5, 6};
    const int bos = 1, eos = 2, pad = 0;
    ag::Var h = f.dec.decode_train({bos, 4, 5, 6}, f.truth, f.obj);
    ag::Var logits = f.dec.head.forward(h);
    std::vector<int> tgt = {4, 5, 6, eos};
    double ce = 0;
    for (int t = 0; t < 4; ++t) {
        double m = -1e30, z = 0;
        for (int v = 0; v < 10; ++v) m = std::max(m, (double)logits->value.data[t * 10 + v]);
        for (int v = 0; v < 10; ++v) z += std::exp((double)logits->value.data[t * 10 + v] - m);
        ce += -(logits->value.data[t * 10 + tgt[t]] - m - std::log(z));
    }
    ce /= 4.0;
    ag::Var l = f.dec.caption_loss(cap, f.truth, f.obj, bos, eos, pad);
    CHECK(l->value.data[0] == doctest::Approx(ce).epsilon(1e-4));
}

TEST_CASE("greedy generation terminates, excludes specials, respects max_len") {
    DecFixture f;
    auto toks = f.dec.generate_greedy(f.truth, f.obj, 1, 2);
    CHECK(toks.size() <= 8);
    for (int t : toks) {
        CHECK(t != 0);
        CHECK(t != 1);
        CHECK(t != 2);
    }
}

TEST_CASE("beam width 1 equals greedy") {
    DecFixture f;
    auto g = f.dec.generate_greedy(f.truth, f.obj, 1, 2);
    auto b = f.dec.generate_beam(f.truth, f.obj, 1, 2, 1);
    CHECK(g == b);
    CHECK_THROWS_AS(f.dec.generate_beam(f.truth, f.obj, 1, 2, 0), ConfigError);
}

TEST_CASE("beam search is deterministic and emits valid tokens") {
    DecFixture f;
    auto b1 = f.dec.generate_beam(f.truth, f.obj, 1, 2, 3);
    auto b2 = f.dec.generate_beam(f.truth, f.obj, 1, 2, 3);
    CHECK(b1 == b2);
    CHECK(b1.size() <= 8);
    for (int t : b1) {
        CHECK(t != 0);
        CHECK(t != 1);
        CHECK(t != 2);
    }
}
