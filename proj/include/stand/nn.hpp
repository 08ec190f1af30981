#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "stand/autograd.hpp"
#include "stand/tensor.hpp"

namespace stand::nn {

// Named registry of trainable parameters and persistent buffers (running
// statistics). Modules register themselves under a dotted prefix; the
// checkpoint writer serializes the registry verbatim.
struct ParamStore {
    std::vector<std::pair<std::string, ag::Var>> params;
    std::vector<std::pair<std::string, std::shared_ptr<Tensor>>> buffers;

    ag::Var add(const std::string& name, Tensor init);
    std::shared_ptr<Tensor> add_buffer(const std::string& name, Tensor init);
    void zero_grads();
    ag::Var find(const std::string& name) const;  // nullptr if absent
};

Tensor xavier_init(std::vector<int> shape, int fan_in, int fan_out, Rng& rng);

struct Linear {
    ag::Var w;  // [in, out]
    ag::Var b;  // [out]
    Linear() = default;
    Linear(ParamStore& ps, const std::string& prefix, int in, int out, Rng& rng, bool zero_init = false);
    ag::Var forward(const ag::Var& x) const;  // [T,in] -> [T,out]
};

struct Conv2d {
    ag::Var w;  // [O,C,kh,kw]
    ag::Var b;  // [O]
    int stride = 1, pad = 0;
    Conv2d() = default;
    Conv2d(ParamStore& ps, const std::string& prefix, int in_ch, int out_ch, int k, int stride, int pad,
           Rng& rng);
    ag::Var forward(const ag::Var& x) const;
};

struct Conv3d {
    ag::Var w;  // [O,C,kt,kh,kw]
    ag::Var b;
    int spatial_stride = 1, pad_t = 1, pad_s = 1;
    Conv3d() = default;
    Conv3d(ParamStore& ps, const std::string& prefix, int in_ch, int out_ch, int kt, int ks,
           int spatial_stride, Rng& rng);
    ag::Var forward(const ag::Var& x) const;
};

// Channel-wise batch normalization with persistent running statistics.
struct ChannelNorm {
    ag::Var gamma, beta;
    std::shared_ptr<Tensor> running_mean, running_var;
    ChannelNorm() = default;
    ChannelNorm(ParamStore& ps, const std::string& prefix, int channels);
    ag::Var forward(const ag::Var& x, bool training) const;
};

struct LayerNorm {
    ag::Var gamma, beta;
    LayerNorm() = default;
    LayerNorm(ParamStore& ps, const std::string& prefix, int dim);
    ag::Var forward(const ag::Var& x) const;  // normalizes rows of [T,D]
};

// Multi-head attention block. Queries [Tq,D], memory [Tm,D]. Residual and
// layer normalization (pre-norm on the query path) are configurable so the
// bare attention can be probed directly in tests.
struct Mha {
    Linear wq, wk, wv, wo;
    LayerNorm ln;
    int heads = 1;
    bool residual = true;
    bool layernorm = true;
    Mha() = default;
    Mha(ParamStore& ps, const std::string& prefix, int dim, int heads, Rng& rng, bool residual = true,
        bool layernorm = true);
    ag::Var forward(const ag::Var& q_in, const ag::Var& memory, bool causal = false,
                    std::vector<Tensor>* attn_out = nullptr) const;
};

struct Adam {
    float lr = 1e-3f;
    float beta1 = 0.9f, beta2 = 0.999f, eps = 1e-8f;
    float weight_decay = 0.0f;  // decoupled (AdamW-style)
    long step_count = 0;
    std::map<std::string, std::pair<Tensor, Tensor>> state;  // name -> (m, v)
    void step(ParamStore& ps);
};

}  // namespace stand::nn
