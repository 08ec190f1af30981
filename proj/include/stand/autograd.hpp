#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "stand/tensor.hpp"

namespace stand::ag {

// Node in a dynamically built computation graph. Graphs are rebuilt per
// forward pass; parameter nodes persist across passes and accumulate
// gradients until explicitly cleared.
struct Node {
    Tensor value;
    Tensor grad;  // allocated lazily during backward
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backprop;  // reads this->grad, accumulates into parents

    void ensure_grad();
    void zero_grad();
};

using Var = std::shared_ptr<Node>;

Var constant(Tensor v);
Var leaf(Tensor v, bool requires_grad);

// Runs reverse-mode accumulation from a scalar root (numel == 1).
void backward(const Var& root);

// ---- elementwise / scalar ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, float s);
Var add_scalar(const Var& a, float s);
Var relu(const Var& a);
Var sigmoid(const Var& a);
Var expv(const Var& a);
Var logv(const Var& a);
Var square(const Var& a);
// x * s where s is a learnable scalar ([1])
Var scale_by_scalar(const Var& x, const Var& s);

// ---- reductions ----
Var sum(const Var& a);
Var mean(const Var& a);

// ---- shape ----
Var reshape(const Var& a, std::vector<int> new_shape);
Var flatten_tokens(const Var& x);    // [C,H,W] -> [H*W, C]
Var unflatten_tokens(const Var& x, int H, int W);  // [H*W, C] -> [C,H,W]

// ---- 2-D linear algebra ----
Var matmul(const Var& a, const Var& b);       // [m,k]x[k,n]
Var transpose(const Var& a);                  // [m,n] -> [n,m]
Var slice_cols(const Var& a, int start, int len);
Var slice_rows(const Var& a, int start, int len);
Var concat_cols(const Var& a, const Var& b);
Var concat_rows(const std::vector<Var>& parts);
Var stack_rows(const std::vector<Var>& rows); // k vectors [D] -> [k,D]
Var row(const Var& a, int i);                 // [m,n] -> [n]
Var gather_rows(const Var& a, const std::vector<int>& cols);  // [m,n] -> [m], a[i, cols[i]]
Var l2_normalize_rows(const Var& a, float eps = 1e-8f);
Var take_diag(const Var& a);                  // [n,n] -> [n]
Var add_rowvec(const Var& x, const Var& v);   // [T,D] + [D]
Var mean_rows(const Var& x);                  // [n,D] -> [D]
Var scale_rows(const Var& x, const Var& s);   // [n,D] * [n] (broadcast per row)

// ---- row-wise nonlinear ----
Var softmax_rows(const Var& x, bool causal = false);
Var log_softmax_rows(const Var& x);
Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, float eps = 1e-5f);

// ---- embeddings / losses ----
Var embedding_rows(const Var& table, const std::vector<int>& ids);
// Mean token-level NLL over positions where target != pad_id.
Var cross_entropy_rows(const Var& logits, const std::vector<int>& targets, int pad_id);

// ---- convolution / feature-map ops ----
Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad);
// x [C,T,H,W], w [O,C,kt,kh,kw]; temporal stride fixed at 1.
Var conv3d(const Var& x, const Var& w, const Var& b, int spatial_stride, int pad_t, int pad_s);
Var slice_time(const Var& x, int t);              // [C,T,H,W] -> [C,H,W]
Var scale_channels(const Var& x, const Var& s);   // [C,...] * [C]
Var scale_spatial(const Var& x, const Var& m);    // [C,H,W] * [H,W]
Var global_avgpool_hw(const Var& x);              // [C,H,W] -> [C]

// Channel-wise normalization (channel = dim 0, reduce over the rest).
// Training mode normalizes with the current activation statistics and
// updates the running buffers in place; eval mode uses the running stats.
Var channel_norm(const Var& x, const Var& gamma, const Var& beta,
                 Tensor& running_mean, Tensor& running_var,
                 bool training, float momentum = 0.1f, float eps = 1e-5f);

}  // namespace stand::ag
