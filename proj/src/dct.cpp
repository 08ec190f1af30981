#include "stand/dct.hpp"

#include <cmath>
#include <map>
#include <memory>

#include "stand/errors.hpp"

namespace stand {

Tensor dct_basis(int n) {
    static std::map<int, Tensor> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    Tensor b({n, n});
    const double pi = 3.14159265358979323846;
    for (int k = 0; k < n; ++k) {
        double s = (k == 0) ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
        for (int i = 0; i < n; ++i)
            b.at({k, i}) = static_cast<float>(s * std::cos(pi * (2 * i + 1) * k / (2.0 * n)));
    }
    cache[n] = b;
    return b;
}

namespace {

// y = Bh x Bw^T per channel (forward) or Bh^T x Bw (inverse)
Tensor transform2d(const Tensor& x, bool inverse) {
    if (x.rank() != 2 && x.rank() != 3) throw InputError("dct2: expected [H,W] or [C,H,W]");
    int C = x.rank() == 3 ? x.dim(0) : 1;
    int H = x.dim(x.rank() - 2), W = x.dim(x.rank() - 1);
    Tensor bh = dct_basis(H);
    Tensor bw = dct_basis(W);
    Tensor out = Tensor::zeros_like(x);
    std::vector<double> tmp(static_cast<size_t>(H) * W);
    for (int c = 0; c < C; ++c) {
        const float* xin = x.data.data() + static_cast<size_t>(c) * H * W;
        float* xout = out.data.data() + static_cast<size_t>(c) * H * W;
        // rows: tmp = (Bh or Bh^T) * x
        for (int k = 0; k < H; ++k)
            for (int j = 0; j < W; ++j) {
                double acc = 0.0;
                for (int i = 0; i < H; ++i) {
                    float bv = inverse ? bh.at({i, k}) : bh.at({k, i});
                    acc += static_cast<double>(bv) * xin[static_cast<size_t>(i) * W + j];
                }
                tmp[static_cast<size_t>(k) * W + j] = acc;
            }
        // cols: out = tmp * (Bw^T or Bw)
        for (int k = 0; k < H; ++k)
            for (int l = 0; l < W; ++l) {
                double acc = 0.0;
                for (int j = 0; j < W; ++j) {
                    float bv = inverse ? bw.at({j, l}) : bw.at({l, j});
                    acc += tmp[static_cast<size_t>(k) * W + j] * bv;
                }
                xout[static_cast<size_t>(k) * W + l] = static_cast<float>(acc);
            }
    }
    return out;
}

}  // namespace

Tensor dct2(const Tensor& x) { return transform2d(x, false); }
Tensor idct2(const Tensor& x) { return transform2d(x, true); }

namespace {

ag::Var transform2d_ag(const ag::Var& x, bool inverse) {
    Tensor out = transform2d(x->value, inverse);
    auto n = std::make_shared<ag::Node>();
    n->value = std::move(out);
    n->requires_grad = x->requires_grad;
    if (x->requires_grad) {
        n->parents = {x};
        n->backprop = [inverse](ag::Node& self) {
            auto& p = self.parents[0];
            p->ensure_grad();
            Tensor g = transform2d(self.grad, !inverse);
            for (size_t i = 0; i < g.data.size(); ++i) p->grad.data[i] += g.data[i];
        };
    }
    return n;
}

}  // namespace

ag::Var dct2(const ag::Var& x) { return transform2d_ag(x, false); }
ag::Var idct2(const ag::Var& x) { return transform2d_ag(x, true); }

}  // namespace stand
