#include "stand/nn.hpp"

#include <cmath>

#include "stand/errors.hpp"

namespace stand::nn {

ag::Var ParamStore::add(const std::string& name, Tensor init) {
    auto v = ag::leaf(std::move(init), true);
    v->zero_grad();
    params.emplace_back(name, v);
    return v;
}

std::shared_ptr<Tensor> ParamStore::add_buffer(const std::string& name, Tensor init) {
    auto t = std::make_shared<Tensor>(std::move(init));
    buffers.emplace_back(name, t);
    return t;
}

void ParamStore::zero_grads() {
    for (auto& [name, p] : params) p->zero_grad();
}

ag::Var ParamStore::find(const std::string& name) const {
    for (const auto& [n, p] : params)
        if (n == name) return p;
    return nullptr;
}

Tensor xavier_init(std::vector<int> shape, int fan_in, int fan_out, Rng& rng) {
    float std = std::sqrt(2.0f / static_cast<float>(fan_in + fan_out));
    return randn(std::move(shape), rng, std);
}

Linear::Linear(ParamStore& ps, const std::string& prefix, int in, int out, Rng& rng, bool zero_init) {
    Tensor wi = zero_init ? Tensor({in, out}) : xavier_init({in, out}, in, out, rng);
    w = ps.add(prefix + ".w", std::move(wi));
    b = ps.add(prefix + ".b", Tensor({out}));
}

ag::Var Linear::forward(const ag::Var& x) const { return ag::add_rowvec(ag::matmul(x, w), b); }

Conv2d::Conv2d(ParamStore& ps, const std::string& prefix, int in_ch, int out_ch, int k, int stride_,
               int pad_, Rng& rng)
    : stride(stride_), pad(pad_) {
    int fan_in = in_ch * k * k;
    w = ps.add(prefix + ".w", xavier_init({out_ch, in_ch, k, k}, fan_in, out_ch * k * k, rng));
    b = ps.add(prefix + ".b", Tensor({out_ch}));
}

ag::Var Conv2d::forward(const ag::Var& x) const { return ag::conv2d(x, w, b, stride, pad); }

Conv3d::Conv3d(ParamStore& ps, const std::string& prefix, int in_ch, int out_ch, int kt, int ks,
               int spatial_stride_, Rng& rng)
    : spatial_stride(spatial_stride_), pad_t(kt / 2), pad_s(ks / 2) {
    int fan_in = in_ch * kt * ks * ks;
    w = ps.add(prefix + ".w", xavier_init({out_ch, in_ch, kt, ks, ks}, fan_in, out_ch * kt * ks * ks, rng));
    b = ps.add(prefix + ".b", Tensor({out_ch}));
}

ag::Var Conv3d::forward(const ag::Var& x) const {
    return ag::conv3d(x, w, b, spatial_stride, pad_t, pad_s);
}

ChannelNorm::ChannelNorm(ParamStore& ps, const std::string& prefix, int channels) {
    gamma = ps.add(prefix + ".gamma", Tensor::full({channels}, 1.0f));
    beta = ps.add(prefix + ".beta", Tensor({channels}));
    running_mean = ps.add_buffer(prefix + ".running_mean", Tensor({channels}));
    running_var = ps.add_buffer(prefix + ".running_var", Tensor::full({channels}, 1.0f));
}

ag::Var ChannelNorm::forward(const ag::Var& x, bool training) const {
    return ag::channel_norm(x, gamma, beta, *running_mean, *running_var, training);
}

LayerNorm::LayerNorm(ParamStore& ps, const std::string& prefix, int dim) {
    gamma = ps.add(prefix + ".gamma", Tensor::full({dim}, 1.0f));
    beta = ps.add(prefix + ".beta", Tensor({dim}));
}

ag::Var LayerNorm::forward(const ag::Var& x) const { return ag::layer_norm_rows(x, gamma, beta); }

Mha::Mha(ParamStore& ps, const std::string& prefix, int dim, int heads_, Rng& rng, bool residual_,
         bool layernorm_)
    : heads(heads_), residual(residual_), layernorm(layernorm_) {
    if (dim % heads_ != 0) throw ConfigError("Mha: dim not divisible by head count");
    wq = Linear(ps, prefix + ".wq", dim, dim, rng);
    wk = Linear(ps, prefix + ".wk", dim, dim, rng);
    wv = Linear(ps, prefix + ".wv", dim, dim, rng);
    wo = Linear(ps, prefix + ".wo", dim, dim, rng);
    if (layernorm) ln = LayerNorm(ps, prefix + ".ln", dim);
}

ag::Var Mha::forward(const ag::Var& q_in, const ag::Var& memory, bool causal,
                     std::vector<Tensor>* attn_out) const {
    int dim = q_in->value.dim(1);
    int dh = dim / heads;
    ag::Var qx = layernorm ? ln.forward(q_in) : q_in;
    ag::Var q = wq.forward(qx);
    ag::Var k = wk.forward(memory);
    ag::Var v = wv.forward(memory);
    float scale = 1.0f / std::sqrt(static_cast<float>(dh));
    std::vector<ag::Var> head_outs;
    head_outs.reserve(static_cast<size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        ag::Var qh = ag::slice_cols(q, h * dh, dh);
        ag::Var kh = ag::slice_cols(k, h * dh, dh);
        ag::Var vh = ag::slice_cols(v, h * dh, dh);
        ag::Var scores = ag::scale(ag::matmul(qh, ag::transpose(kh)), scale);
        ag::Var attn = ag::softmax_rows(scores, causal);
        if (attn_out) attn_out->push_back(attn->value);
        head_outs.push_back(ag::matmul(attn, vh));
    }
    ag::Var cat = head_outs[0];
    for (size_t h = 1; h < head_outs.size(); ++h) cat = ag::concat_cols(cat, head_outs[h]);
    ag::Var out = wo.forward(cat);
    if (residual) out = ag::add(q_in, out);
    return out;
}

void Adam::step(ParamStore& ps) {
    ++step_count;
    float bc1 = 1.0f - std::pow(beta1, static_cast<float>(step_count));
    float bc2 = 1.0f - std::pow(beta2, static_cast<float>(step_count));
    for (auto& [name, p] : ps.params) {
        auto it = state.find(name);
        if (it == state.end())
            it = state.emplace(name, std::make_pair(Tensor::zeros_like(p->value), Tensor::zeros_like(p->value)))
                     .first;
        Tensor& m = it->second.first;
        Tensor& v = it->second.second;
        p->ensure_grad();
        for (size_t i = 0; i < p->value.data.size(); ++i) {
            float g = p->grad.data[i];
            m.data[i] = beta1 * m.data[i] + (1.0f - beta1) * g;
            v.data[i] = beta2 * v.data[i] + (1.0f - beta2) * g * g;
            float mhat = m.data[i] / bc1;
            float vhat = v.data[i] / bc2;
            p->value.data[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * p->value.data[i]);
        }
    }
}

}  // namespace stand::nn
