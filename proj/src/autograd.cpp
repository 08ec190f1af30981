#include "stand/autograd.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "stand/errors.hpp"

namespace stand::ag {

void Node::ensure_grad() {
    if (grad.data.empty()) grad = Tensor::zeros_like(value);
}

void Node::zero_grad() {
    grad = Tensor::zeros_like(value);
}

Var constant(Tensor v) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->requires_grad = false;
    return n;
}

Var leaf(Tensor v, bool requires_grad) {
    auto n = std::make_shared<Node>();
    n->value = std::move(v);
    n->requires_grad = requires_grad;
    return n;
}

namespace {

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> backprop) {
    auto n = std::make_shared<Node>();
    n->value = std::move(value);
    bool rg = false;
    for (const auto& p : parents) rg = rg || p->requires_grad;
    n->requires_grad = rg;
    if (rg) {
        n->parents = std::move(parents);
        n->backprop = std::move(backprop);
    }
    return n;
}

bool wants(const Var& p) { return p->requires_grad; }

void accumulate(const Var& p, const Tensor& g) {
    p->ensure_grad();
    for (size_t i = 0; i < g.data.size(); ++i) p->grad.data[i] += g.data[i];
}

}  // namespace

void backward(const Var& root) {
    if (root->value.numel() != 1) throw InputError("backward: root must be scalar");
    // iterative postorder topological sort
    std::vector<Node*> order;
    std::unordered_set<Node*> visited;
    std::vector<std::pair<Node*, size_t>> stack;
    stack.emplace_back(root.get(), 0);
    visited.insert(root.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->parents.size()) {
            Node* p = node->parents[next++].get();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.emplace_back(p, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    root->ensure_grad();
    root->grad.data[0] += 1.0f;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node* n = *it;
        if (n->backprop && !n->grad.data.empty()) n->backprop(*n);
    }
}

// ---------------------------------------------------------------- elementwise

static void check_same_shape(const Var& a, const Var& b, const char* op) {
    if (!a->value.same_shape(b->value))
        throw InputError(std::string(op) + ": shape mismatch");
}

Var add(const Var& a, const Var& b) {
    check_same_shape(a, b, "add");
    Tensor out = a->value;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] += b->value.data[i];
    return make_op(std::move(out), {a, b}, [](Node& self) {
        for (const auto& p : self.parents)
            if (wants(p)) accumulate(p, self.grad);
    });
}

Var sub(const Var& a, const Var& b) {
    check_same_shape(a, b, "sub");
    Tensor out = a->value;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] -= b->value.data[i];
    return make_op(std::move(out), {a, b}, [](Node& self) {
        if (wants(self.parents[0])) accumulate(self.parents[0], self.grad);
        if (wants(self.parents[1])) {
            auto& p = self.parents[1];
            p->ensure_grad();
            for (size_t i = 0; i < self.grad.data.size(); ++i) p->grad.data[i] -= self.grad.data[i];
        }
    });
}

Var mul(const Var& a, const Var& b) {
    check_same_shape(a, b, "mul");
    Tensor out = a->value;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b->value.data[i];
    return make_op(std::move(out), {a, b}, [](Node& self) {
        auto& a = self.parents[0];
        auto& b = self.parents[1];
        if (wants(a)) {
            a->ensure_grad();
            for (size_t i = 0; i < self.grad.data.size(); ++i)
                a->grad.data[i] += self.grad.data[i] * b->value.data[i];
        }
        if (wants(b)) {
            b->ensure_grad();
            for (size_t i = 0; i < self.grad.data.size(); ++i)
                b->grad.data[i] += self.grad.data[i] * a->value.data[i];
        }
    });
}

Var neg(const Var& a) { return scale(a, -1.0f); }

Var scale(const Var& a, float s) {
    Tensor out = a->value;
    for (float& v : out.data) v *= s;
    return make_op(std::move(out), {a}, [s](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        for (size_t i = 0; i < self.grad.data.size(); ++i) p->grad.data[i] += s * self.grad.data[i];
    });
}

Var add_scalar(const Var& a, float s) {
    Tensor out = a->value;
    for (float& v : out.data) v += s;
    return make_op(std::move(out), {a}, [](Node& self) {
        if (wants(self.parents[0])) accumulate(self.parents[0], self.grad);
    });
}

Var relu(const Var& a) {
    Tensor out = a->value;
    for (float& v : out.data) v = v > 0.0f ? v : 0.0f;
    return make_op(std::move(out), {a}, [](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        for (size_t i = 0; i < self.grad.data.size(); ++i)
            if (p->value.data[i] > 0.0f) p->grad.data[i] += self.grad.data[i];
    });
}

Var sigmoid(const Var& a) {
    Tensor out = a->value;
    for (float& v : out.data) v = 1.0f / (1.0f + std::exp(-v));
    return make_op(std::move(out), {a}, [](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        for (size_t i = 0; i < self.grad.data.size(); ++i) {
            float y = self.value.data[i];
            p->grad.data[i] += self.grad.data[i] * y * (1.0f - y);
        }
    });
}

Var expv(const Var& a) {
    Tensor out = a->value;
    for (float& v : out.data) v = std::exp(v);
    return make_op(std::move(out), {a}, [](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        for (size_t i = 0; i < self.grad.data.size(); ++i)
            p->grad.data[i] += self.grad.data[i] * self.value.data[i];
    });
}

Var logv(const Var& a) {
    Tensor out = a->value;
    for (float& v : out.data) v = std::log(v);
    return make_op(std::move(out), {a}, [](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        for (size_t i = 0; i < self.grad.data.size(); ++i)
            p->grad.data[i] += self.grad.data[i] / p->value.data[i];
    });
}

Var square(const Var& a) { return mul(a, a); }

Var scale_by_scalar(const Var& x, const Var& s) {
    if (s->value.numel() != 1) throw InputError("scale_by_scalar: s must be scalar");
    float sv = s->value.data[0];
    Tensor out = x->value;
    for (float& v : out.data) v *= sv;
    return make_op(std::move(out), {x, s}, [](Node& self) {
        auto& x = self.parents[0];
        auto& s = self.parents[1];
        float sv = s->value.data[0];
        if (wants(x)) {
            x->ensure_grad();
            for (size_t i = 0; i < self.grad.data.size(); ++i)
                x->grad.data[i] += sv * self.grad.data[i];
        }
        if (wants(s)) {
            s->ensure_grad();
            double acc = 0.0;
            for (size_t i = 0; i < self.grad.data.size(); ++i)
                acc += static_cast<double>(self.grad.data[i]) * x->value.data[i];
            s->grad.data[0] += static_cast<float>(acc);
        }
    });
}

// ---------------------------------------------------------------- reductions

Var sum(const Var& a) {
    double acc = 0.0;
    for (float v : a->value.data) acc += v;
    return make_op(Tensor::scalar(static_cast<float>(acc)), {a}, [](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        float g = self.grad.data[0];
        for (float& v : p->grad.data) v += g;
    });
}

Var mean(const Var& a) {
    int n = a->value.numel();
    return scale(sum(a), 1.0f / static_cast<float>(n));
}

// --------------------------------------------------------------------- shape

Var reshape(const Var& a, std::vector<int> new_shape) {
    Tensor out;
    out.shape = std::move(new_shape);
    out.data = a->value.data;
    if (out.numel() != a->value.numel()) throw InputError("reshape: numel mismatch");
    return make_op(std::move(out), {a}, [](Node& self) {
        if (wants(self.parents[0])) accumulate(self.parents[0], self.grad);
    });
}

Var flatten_tokens(const Var& x) {
    if (x->value.rank() != 3) throw InputError("flatten_tokens: expected [C,H,W]");
    int C = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    Tensor out({H * W, C});
    for (int c = 0; c < C; ++c)
        for (int p = 0; p < H * W; ++p)
            out.data[static_cast<size_t>(p) * C + c] = x->value.data[static_cast<size_t>(c) * H * W + p];
    return make_op(std::move(out), {x}, [C, H, W](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        for (int c = 0; c < C; ++c)
            for (int t = 0; t < H * W; ++t)
                p->grad.data[static_cast<size_t>(c) * H * W + t] +=
                    self.grad.data[static_cast<size_t>(t) * C + c];
    });
}

Var unflatten_tokens(const Var& x, int H, int W) {
    if (x->value.rank() != 2 || x->value.dim(0) != H * W)
        throw InputError("unflatten_tokens: expected [H*W,C]");
    int C = x->value.dim(1);
    Tensor out({C, H, W});
    for (int c = 0; c < C; ++c)
        for (int p = 0; p < H * W; ++p)
            out.data[static_cast<size_t>(c) * H * W + p] = x->value.data[static_cast<size_t>(p) * C + c];
    return make_op(std::move(out), {x}, [C, H, W](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        for (int c = 0; c < C; ++c)
            for (int t = 0; t < H * W; ++t)
                p->grad.data[static_cast<size_t>(t) * C + c] +=
                    self.grad.data[static_cast<size_t>(c) * H * W + t];
    });
}

// ----------------------------------------------------------- 2-D linear alg.

Var matmul(const Var& a, const Var& b) {
    if (a->value.rank() != 2 || b->value.rank() != 2 || a->value.dim(1) != b->value.dim(0))
        throw InputError("matmul: incompatible shapes");
    int m = a->value.dim(0), k = a->value.dim(1), n = b->value.dim(1);
    Tensor out({m, n});
    const float* A = a->value.data.data();
    const float* B = b->value.data.data();
    float* O = out.data.data();
    for (int i = 0; i < m; ++i)
        for (int kk = 0; kk < k; ++kk) {
            float av = A[i * k + kk];
            if (av == 0.0f) continue;
            const float* brow = B + static_cast<size_t>(kk) * n;
            float* orow = O + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    return make_op(std::move(out), {a, b}, [m, k, n](Node& self) {
        auto& a = self.parents[0];
        auto& b = self.parents[1];
        const float* G = self.grad.data.data();
        if (wants(a)) {
            a->ensure_grad();
            const float* B = b->value.data.data();
            float* GA = a->grad.data.data();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) {
                    float g = G[i * n + j];
                    if (g == 0.0f) continue;
                    const float* brow = B + static_cast<size_t>(j);
                    for (int kk = 0; kk < k; ++kk) GA[i * k + kk] += g * brow[static_cast<size_t>(kk) * n];
                }
        }
        if (wants(b)) {
            b->ensure_grad();
            const float* A = a->value.data.data();
            float* GB = b->grad.data.data();
            for (int i = 0; i < m; ++i)
                for (int kk = 0; kk < k; ++kk) {
                    float av = A[i * k + kk];
                    if (av == 0.0f) continue;
                    const float* grow = G + static_cast<size_t>(i) * n;
                    float* brow = GB + static_cast<size_t>(kk) * n;
                    for (int j = 0; j < n; ++j) brow[j] += av * grow[j];
                }
        }
    });
}

Var transpose(const Var& a) {
    if (a->value.rank() != 2) throw InputError("transpose: expected 2-D");
    int m = a->value.dim(0), n = a->value.dim(1);
    Tensor out({n, m});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
            out.data[static_cast<size_t>(j) * m + i] = a->value.data[static_cast<size_t>(i) * n + j];
    return make_op(std::move(out), {a}, [m, n](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                p->grad.data[static_cast<size_t>(i) * n + j] +=
                    self.grad.data[static_cast<size_t>(j) * m + i];
    });
}

Var slice_cols(const Var& a, int start, int len) {
    int m = a->value.dim(0), n = a->value.dim(1);
    if (start < 0 || start + len > n) throw InputError("slice_cols: out of range");
    Tensor out({m, len});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < len; ++j)
            out.data[static_cast<size_t>(i) * len + j] = a->value.data[static_cast<size_t>(i) * n + start + j];
    return make_op(std::move(out), {a}, [m, n, start, len](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < len; ++j)
                p->grad.data[static_cast<size_t>(i) * n + start + j] +=
                    self.grad.data[static_cast<size_t>(i) * len + j];
    });
}

Var slice_rows(const Var& a, int start, int len) {
    int m = a->value.dim(0), n = a->value.dim(1);
    if (start < 0 || start + len > m) throw InputError("slice_rows: out of range");
    Tensor out({len, n});
    std::copy_n(a->value.data.begin() + static_cast<size_t>(start) * n, static_cast<size_t>(len) * n,
                out.data.begin());
    return make_op(std::move(out), {a}, [n, start, len](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        for (size_t i = 0; i < static_cast<size_t>(len) * n; ++i)
            p->grad.data[static_cast<size_t>(start) * n + i] += self.grad.data[i];
    });
}

Var concat_cols(const Var& a, const Var& b) {
    if (a->value.dim(0) != b->value.dim(0)) throw InputError("concat_cols: row mismatch");
    int m = a->value.dim(0), na = a->value.dim(1), nb = b->value.dim(1);
    Tensor out({m, na + nb});
    for (int i = 0; i < m; ++i) {
        std::copy_n(a->value.data.begin() + static_cast<size_t>(i) * na, na,
                    out.data.begin() + static_cast<size_t>(i) * (na + nb));
        std::copy_n(b->value.data.begin() + static_cast<size_t>(i) * nb, nb,
                    out.data.begin() + static_cast<size_t>(i) * (na + nb) + na);
    }
    return make_op(std::move(out), {a, b}, [m, na, nb](Node& self) {
        auto& a = self.parents[0];
        auto& b = self.parents[1];
        for (int i = 0; i < m; ++i) {
            if (wants(a)) {
                a->ensure_grad();
                for (int j = 0; j < na; ++j)
                    a->grad.data[static_cast<size_t>(i) * na + j] +=
                        self.grad.data[static_cast<size_t>(i) * (na + nb) + j];
            }
            if (wants(b)) {
                b->ensure_grad();
                for (int j = 0; j < nb; ++j)
                    b->grad.data[static_cast<size_t>(i) * nb + j] +=
                        self.grad.data[static_cast<size_t>(i) * (na + nb) + na + j];
            }
        }
    });
}

Var concat_rows(const std::vector<Var>& parts) {
    if (parts.empty()) throw InputError("concat_rows: empty");
    int n = parts[0]->value.dim(1);
    int m = 0;
    for (const auto& p : parts) {
        if (p->value.rank() != 2 || p->value.dim(1) != n) throw InputError("concat_rows: col mismatch");
        m += p->value.dim(0);
    }
    Tensor out({m, n});
    size_t off = 0;
    for (const auto& p : parts) {
        std::copy(p->value.data.begin(), p->value.data.end(), out.data.begin() + off);
        off += p->value.data.size();
    }
    std::vector<Var> parents(parts.begin(), parts.end());
    return make_op(std::move(out), std::move(parents), [](Node& self) {
        size_t off = 0;
        for (auto& p : self.parents) {
            if (wants(p)) {
                p->ensure_grad();
                for (size_t i = 0; i < p->grad.data.size(); ++i) p->grad.data[i] += self.grad.data[off + i];
            }
            off += p->value.data.size();
        }
    });
}

Var stack_rows(const std::vector<Var>& rows) {
    if (rows.empty()) throw InputError("stack_rows: empty");
    int d = rows[0]->value.numel();
    Tensor out({static_cast<int>(rows.size()), d});
    for (size_t i = 0; i < rows.size(); ++i) {
        if (rows[i]->value.numel() != d) throw InputError("stack_rows: length mismatch");
        std::copy(rows[i]->value.data.begin(), rows[i]->value.data.end(),
                  out.data.begin() + i * static_cast<size_t>(d));
    }
    std::vector<Var> parents(rows.begin(), rows.end());
    return make_op(std::move(out), std::move(parents), [d](Node& self) {
        for (size_t i = 0; i < self.parents.size(); ++i) {
            auto& p = self.parents[i];
            if (!wants(p)) continue;
            p->ensure_grad();
            for (int j = 0; j < d; ++j)
                p->grad.data[j] += self.grad.data[i * static_cast<size_t>(d) + j];
        }
    });
}

Var row(const Var& a, int i) {
    int n = a->value.dim(1);
    Tensor out({n});
    std::copy_n(a->value.data.begin() + static_cast<size_t>(i) * n, n, out.data.begin());
    return make_op(std::move(out), {a}, [i, n](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        for (int j = 0; j < n; ++j) p->grad.data[static_cast<size_t>(i) * n + j] += self.grad.data[j];
    });
}

Var gather_rows(const Var& a, const std::vector<int>& cols) {
    int m = a->value.dim(0), n = a->value.dim(1);
    if (static_cast<int>(cols.size()) != m) throw InputError("gather_rows: index length mismatch");
    Tensor out({m});
    for (int i = 0; i < m; ++i) {
        if (cols[static_cast<size_t>(i)] < 0 || cols[static_cast<size_t>(i)] >= n)
            throw InputError("gather_rows: column out of range");
        out.data[static_cast<size_t>(i)] = a->value.data[static_cast<size_t>(i) * n + cols[static_cast<size_t>(i)]];
    }
    auto cols_keep = std::make_shared<std::vector<int>>(cols);
    return make_op(std::move(out), {a}, [m, n, cols_keep](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        for (int i = 0; i < m; ++i)
            p->grad.data[static_cast<size_t>(i) * n + (*cols_keep)[static_cast<size_t>(i)]] +=
                self.grad.data[static_cast<size_t>(i)];
    });
}

Var l2_normalize_rows(const Var& a, float eps) {
    int m = a->value.dim(0), n = a->value.dim(1);
    Tensor out({m, n});
    auto norms = std::make_shared<Tensor>(Tensor({m}));
    for (int i = 0; i < m; ++i) {
        double acc = 0.0;
        for (int j = 0; j < n; ++j) {
            float v = a->value.data[static_cast<size_t>(i) * n + j];
            acc += static_cast<double>(v) * v;
        }
        float nrm = std::sqrt(static_cast<float>(acc)) + eps;
        norms->data[i] = nrm;
        for (int j = 0; j < n; ++j)
            out.data[static_cast<size_t>(i) * n + j] = a->value.data[static_cast<size_t>(i) * n + j] / nrm;
    }
    return make_op(std::move(out), {a}, [m, n, norms](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        for (int i = 0; i < m; ++i) {
            double dot = 0.0;
            for (int j = 0; j < n; ++j)
                dot += static_cast<double>(self.grad.data[static_cast<size_t>(i) * n + j]) *
                       self.value.data[static_cast<size_t>(i) * n + j];
            float nrm = norms->data[i];
            for (int j = 0; j < n; ++j)
                p->grad.data[static_cast<size_t>(i) * n + j] +=
                    (self.grad.data[static_cast<size_t>(i) * n + j] -
                     self.value.data[static_cast<size_t>(i) * n + j] * static_cast<float>(dot)) /
                    nrm;
        }
    });
}

Var take_diag(const Var& a) {
    if (a->value.rank() != 2 || a->value.dim(0) != a->value.dim(1))
        throw InputError("take_diag: expected square matrix");
    int n = a->value.dim(0);
    Tensor out({n});
    for (int i = 0; i < n; ++i) out.data[i] = a->value.data[static_cast<size_t>(i) * n + i];
    return make_op(std::move(out), {a}, [n](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        for (int i = 0; i < n; ++i) p->grad.data[static_cast<size_t>(i) * n + i] += self.grad.data[i];
    });
}

Var add_rowvec(const Var& x, const Var& v) {
    int m = x->value.dim(0), n = x->value.dim(1);
    if (v->value.numel() != n) throw InputError("add_rowvec: length mismatch");
    Tensor out = x->value;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out.data[static_cast<size_t>(i) * n + j] += v->value.data[j];
    return make_op(std::move(out), {x, v}, [m, n](Node& self) {
        auto& x = self.parents[0];
        auto& v = self.parents[1];
        if (wants(x)) accumulate(x, self.grad);
        if (wants(v)) {
            v->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j) v->grad.data[j] += self.grad.data[static_cast<size_t>(i) * n + j];
        }
    });
}

Var mean_rows(const Var& x) {
    int m = x->value.dim(0), n = x->value.dim(1);
    Tensor out({n});
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out.data[j] += x->value.data[static_cast<size_t>(i) * n + j];
    for (float& v : out.data) v /= static_cast<float>(m);
    return make_op(std::move(out), {x}, [m, n](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        float inv = 1.0f / static_cast<float>(m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j)
                p->grad.data[static_cast<size_t>(i) * n + j] += inv * self.grad.data[j];
    });
}

Var scale_rows(const Var& x, const Var& s) {
    int m = x->value.dim(0), n = x->value.dim(1);
    if (s->value.numel() != m) throw InputError("scale_rows: length mismatch");
    Tensor out = x->value;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) out.data[static_cast<size_t>(i) * n + j] *= s->value.data[i];
    return make_op(std::move(out), {x, s}, [m, n](Node& self) {
        auto& x = self.parents[0];
        auto& s = self.parents[1];
        if (wants(x)) {
            x->ensure_grad();
            for (int i = 0; i < m; ++i)
                for (int j = 0; j < n; ++j)
                    x->grad.data[static_cast<size_t>(i) * n + j] +=
                        self.grad.data[static_cast<size_t>(i) * n + j] * s->value.data[i];
        }
        if (wants(s)) {
            s->ensure_grad();
            for (int i = 0; i < m; ++i) {
                double acc = 0.0;
                for (int j = 0; j < n; ++j)
                    acc += static_cast<double>(self.grad.data[static_cast<size_t>(i) * n + j]) *
                           x->value.data[static_cast<size_t>(i) * n + j];
                s->grad.data[i] += static_cast<float>(acc);
            }
        }
    });
}

// --------------------------------------------------------- row-wise nonlinear

Var softmax_rows(const Var& x, bool causal) {
    int m = x->value.dim(0), n = x->value.dim(1);
    Tensor out({m, n});
    for (int i = 0; i < m; ++i) {
        int lim = causal ? std::min(i + 1, n) : n;
        float mx = -1e30f;
        for (int j = 0; j < lim; ++j) mx = std::max(mx, x->value.data[static_cast<size_t>(i) * n + j]);
        double z = 0.0;
        for (int j = 0; j < lim; ++j) {
            float e = std::exp(x->value.data[static_cast<size_t>(i) * n + j] - mx);
            out.data[static_cast<size_t>(i) * n + j] = e;
            z += e;
        }
        for (int j = 0; j < lim; ++j) out.data[static_cast<size_t>(i) * n + j] /= static_cast<float>(z);
        for (int j = lim; j < n; ++j) out.data[static_cast<size_t>(i) * n + j] = 0.0f;
    }
    return make_op(std::move(out), {x}, [m, n](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        for (int i = 0; i < m; ++i) {
            double dot = 0.0;
            for (int j = 0; j < n; ++j)
                dot += static_cast<double>(self.grad.data[static_cast<size_t>(i) * n + j]) *
                       self.value.data[static_cast<size_t>(i) * n + j];
            for (int j = 0; j < n; ++j) {
                float y = self.value.data[static_cast<size_t>(i) * n + j];
                p->grad.data[static_cast<size_t>(i) * n + j] +=
                    y * (self.grad.data[static_cast<size_t>(i) * n + j] - static_cast<float>(dot));
            }
        }
    });
}

Var log_softmax_rows(const Var& x) {
    int m = x->value.dim(0), n = x->value.dim(1);
    Tensor out({m, n});
    for (int i = 0; i < m; ++i) {
        float mx = -1e30f;
        for (int j = 0; j < n; ++j) mx = std::max(mx, x->value.data[static_cast<size_t>(i) * n + j]);
        double z = 0.0;
        for (int j = 0; j < n; ++j) z += std::exp(x->value.data[static_cast<size_t>(i) * n + j] - mx);
        float lz = mx + static_cast<float>(std::log(z));
        for (int j = 0; j < n; ++j)
            out.data[static_cast<size_t>(i) * n + j] = x->value.data[static_cast<size_t>(i) * n + j] - lz;
    }
    return make_op(std::move(out), {x}, [m, n](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        for (int i = 0; i < m; ++i) {
            double gsum = 0.0;
            for (int j = 0; j < n; ++j) gsum += self.grad.data[static_cast<size_t>(i) * n + j];
            for (int j = 0; j < n; ++j) {
                float sm = std::exp(self.value.data[static_cast<size_t>(i) * n + j]);
                p->grad.data[static_cast<size_t>(i) * n + j] +=
                    self.grad.data[static_cast<size_t>(i) * n + j] - sm * static_cast<float>(gsum);
            }
        }
    });
}

Var layer_norm_rows(const Var& x, const Var& gamma, const Var& beta, float eps) {
    int m = x->value.dim(0), n = x->value.dim(1);
    if (gamma->value.numel() != n || beta->value.numel() != n)
        throw InputError("layer_norm_rows: affine length mismatch");
    Tensor out({m, n});
    Tensor xhat({m, n});
    Tensor inv_std({m});
    for (int i = 0; i < m; ++i) {
        double mu = 0.0;
        for (int j = 0; j < n; ++j) mu += x->value.data[static_cast<size_t>(i) * n + j];
        mu /= n;
        double var = 0.0;
        for (int j = 0; j < n; ++j) {
            double d = x->value.data[static_cast<size_t>(i) * n + j] - mu;
            var += d * d;
        }
        var /= n;
        float is = 1.0f / std::sqrt(static_cast<float>(var) + eps);
        inv_std.data[i] = is;
        for (int j = 0; j < n; ++j) {
            float xh = (x->value.data[static_cast<size_t>(i) * n + j] - static_cast<float>(mu)) * is;
            xhat.data[static_cast<size_t>(i) * n + j] = xh;
            out.data[static_cast<size_t>(i) * n + j] = gamma->value.data[j] * xh + beta->value.data[j];
        }
    }
    auto xh_keep = std::make_shared<Tensor>(std::move(xhat));
    auto is_keep = std::make_shared<Tensor>(std::move(inv_std));
    return make_op(std::move(out), {x, gamma, beta}, [m, n, xh_keep, is_keep](Node& self) {
        auto& x = self.parents[0];
        auto& gamma = self.parents[1];
        auto& beta = self.parents[2];
        for (int i = 0; i < m; ++i) {
            const float* g = self.grad.data.data() + static_cast<size_t>(i) * n;
            const float* xh = xh_keep->data.data() + static_cast<size_t>(i) * n;
            if (wants(gamma)) {
                gamma->ensure_grad();
                for (int j = 0; j < n; ++j) gamma->grad.data[j] += g[j] * xh[j];
            }
            if (wants(beta)) {
                beta->ensure_grad();
                for (int j = 0; j < n; ++j) beta->grad.data[j] += g[j];
            }
            if (wants(x)) {
                x->ensure_grad();
                double m1 = 0.0, m2 = 0.0;
                for (int j = 0; j < n; ++j) {
                    float gg = g[j] * gamma->value.data[j];
                    m1 += gg;
                    m2 += static_cast<double>(gg) * xh[j];
                }
                m1 /= n;
                m2 /= n;
                float is = is_keep->data[i];
                for (int j = 0; j < n; ++j) {
                    float gg = g[j] * gamma->value.data[j];
                    x->grad.data[static_cast<size_t>(i) * n + j] +=
                        is * (gg - static_cast<float>(m1) - xh[j] * static_cast<float>(m2));
                }
            }
        }
    });
}

// ------------------------------------------------------- embeddings / losses

Var embedding_rows(const Var& table, const std::vector<int>& ids) {
    int V = table->value.dim(0), D = table->value.dim(1);
    Tensor out({static_cast<int>(ids.size()), D});
    for (size_t t = 0; t < ids.size(); ++t) {
        if (ids[t] < 0 || ids[t] >= V) throw InputError("embedding_rows: token id out of range");
        std::copy_n(table->value.data.begin() + static_cast<size_t>(ids[t]) * D, D,
                    out.data.begin() + t * static_cast<size_t>(D));
    }
    auto ids_keep = std::make_shared<std::vector<int>>(ids);
    return make_op(std::move(out), {table}, [D, ids_keep](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        for (size_t t = 0; t < ids_keep->size(); ++t)
            for (int j = 0; j < D; ++j)
                p->grad.data[static_cast<size_t>((*ids_keep)[t]) * D + j] +=
                    self.grad.data[t * static_cast<size_t>(D) + j];
    });
}

Var cross_entropy_rows(const Var& logits, const std::vector<int>& targets, int pad_id) {
    int T = logits->value.dim(0), V = logits->value.dim(1);
    if (static_cast<int>(targets.size()) != T) throw InputError("cross_entropy_rows: target length mismatch");
    int live = 0;
    for (int t : targets)
        if (t != pad_id) ++live;
    if (live == 0) throw InputError("cross_entropy_rows: all-pad target");
    for (int t : targets)
        if (t != pad_id && (t < 0 || t >= V)) throw InputError("cross_entropy_rows: target id out of range");
    // softmax retained for backward
    auto sm = std::make_shared<Tensor>(Tensor({T, V}));
    double loss = 0.0;
    for (int i = 0; i < T; ++i) {
        float mx = -1e30f;
        for (int j = 0; j < V; ++j) mx = std::max(mx, logits->value.data[static_cast<size_t>(i) * V + j]);
        double z = 0.0;
        for (int j = 0; j < V; ++j) {
            float e = std::exp(logits->value.data[static_cast<size_t>(i) * V + j] - mx);
            sm->data[static_cast<size_t>(i) * V + j] = e;
            z += e;
        }
        for (int j = 0; j < V; ++j) sm->data[static_cast<size_t>(i) * V + j] /= static_cast<float>(z);
        if (targets[static_cast<size_t>(i)] != pad_id)
            loss -= std::log(std::max(1e-30f, sm->data[static_cast<size_t>(i) * V + targets[static_cast<size_t>(i)]]));
    }
    loss /= live;
    auto targets_keep = std::make_shared<std::vector<int>>(targets);
    return make_op(Tensor::scalar(static_cast<float>(loss)), {logits},
                   [T, V, live, pad_id, sm, targets_keep](Node& self) {
                       auto& p = self.parents[0];
                       if (!wants(p)) return;
                       p->ensure_grad();
                       float g = self.grad.data[0] / static_cast<float>(live);
                       for (int i = 0; i < T; ++i) {
                           int tgt = (*targets_keep)[static_cast<size_t>(i)];
                           if (tgt == pad_id) continue;
                           for (int j = 0; j < V; ++j) {
                               float d = sm->data[static_cast<size_t>(i) * V + j];
                               if (j == tgt) d -= 1.0f;
                               p->grad.data[static_cast<size_t>(i) * V + j] += g * d;
                           }
                       }
                   });
}

// --------------------------------------------------- convolution / feature-map

Var conv2d(const Var& x, const Var& w, const Var& b, int stride, int pad) {
    int C = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    int O = w->value.dim(0), kh = w->value.dim(2), kw = w->value.dim(3);
    if (w->value.dim(1) != C) throw InputError("conv2d: channel mismatch");
    int Ho = (H + 2 * pad - kh) / stride + 1;
    int Wo = (W + 2 * pad - kw) / stride + 1;
    Tensor out({O, Ho, Wo});
    auto xin = [&](int c, int h, int wd) -> float {
        if (h < 0 || h >= H || wd < 0 || wd >= W) return 0.0f;
        return x->value.data[(static_cast<size_t>(c) * H + h) * W + wd];
    };
    for (int o = 0; o < O; ++o)
        for (int ho = 0; ho < Ho; ++ho)
            for (int wo = 0; wo < Wo; ++wo) {
                double acc = b->value.data[o];
                for (int c = 0; c < C; ++c)
                    for (int i = 0; i < kh; ++i)
                        for (int j = 0; j < kw; ++j)
                            acc += static_cast<double>(
                                       w->value.data[((static_cast<size_t>(o) * C + c) * kh + i) * kw + j]) *
                                   xin(c, ho * stride - pad + i, wo * stride - pad + j);
                out.data[(static_cast<size_t>(o) * Ho + ho) * Wo + wo] = static_cast<float>(acc);
            }
    return make_op(std::move(out), {x, w, b}, [C, H, W, O, kh, kw, Ho, Wo, stride, pad](Node& self) {
        auto& x = self.parents[0];
        auto& w = self.parents[1];
        auto& b = self.parents[2];
        if (wants(x)) x->ensure_grad();
        if (wants(w)) w->ensure_grad();
        if (wants(b)) b->ensure_grad();
        for (int o = 0; o < O; ++o)
            for (int ho = 0; ho < Ho; ++ho)
                for (int wo = 0; wo < Wo; ++wo) {
                    float g = self.grad.data[(static_cast<size_t>(o) * Ho + ho) * Wo + wo];
                    if (g == 0.0f) continue;
                    if (wants(b)) b->grad.data[o] += g;
                    for (int c = 0; c < C; ++c)
                        for (int i = 0; i < kh; ++i)
                            for (int j = 0; j < kw; ++j) {
                                int h = ho * stride - pad + i;
                                int wd = wo * stride - pad + j;
                                if (h < 0 || h >= H || wd < 0 || wd >= W) continue;
                                size_t xi = (static_cast<size_t>(c) * H + h) * W + wd;
                                size_t wi = ((static_cast<size_t>(o) * C + c) * kh + i) * kw + j;
                                if (wants(w)) w->grad.data[wi] += g * x->value.data[xi];
                                if (wants(x)) x->grad.data[xi] += g * w->value.data[wi];
                            }
                }
    });
}

Var conv3d(const Var& x, const Var& w, const Var& b, int spatial_stride, int pad_t, int pad_s) {
    int C = x->value.dim(0), T = x->value.dim(1), H = x->value.dim(2), W = x->value.dim(3);
    int O = w->value.dim(0), kt = w->value.dim(2), kh = w->value.dim(3), kw = w->value.dim(4);
    if (w->value.dim(1) != C) throw InputError("conv3d: channel mismatch");
    int To = T + 2 * pad_t - kt + 1;  // temporal stride 1
    int Ho = (H + 2 * pad_s - kh) / spatial_stride + 1;
    int Wo = (W + 2 * pad_s - kw) / spatial_stride + 1;
    Tensor out({O, To, Ho, Wo});
    auto xin = [&](int c, int t, int h, int wd) -> float {
        if (t < 0 || t >= T || h < 0 || h >= H || wd < 0 || wd >= W) return 0.0f;
        return x->value.data[((static_cast<size_t>(c) * T + t) * H + h) * W + wd];
    };
    for (int o = 0; o < O; ++o)
        for (int to = 0; to < To; ++to)
            for (int ho = 0; ho < Ho; ++ho)
                for (int wo = 0; wo < Wo; ++wo) {
                    double acc = b->value.data[o];
                    for (int c = 0; c < C; ++c)
                        for (int ti = 0; ti < kt; ++ti)
                            for (int i = 0; i < kh; ++i)
                                for (int j = 0; j < kw; ++j)
                                    acc += static_cast<double>(
                                               w->value.data[(((static_cast<size_t>(o) * C + c) * kt + ti) * kh + i) *
                                                                 kw +
                                                             j]) *
                                           xin(c, to - pad_t + ti, ho * spatial_stride - pad_s + i,
                                               wo * spatial_stride - pad_s + j);
                    out.data[((static_cast<size_t>(o) * To + to) * Ho + ho) * Wo + wo] = static_cast<float>(acc);
                }
    return make_op(std::move(out), {x, w, b},
                   [C, T, H, W, O, kt, kh, kw, To, Ho, Wo, spatial_stride, pad_t, pad_s](Node& self) {
                       auto& x = self.parents[0];
                       auto& w = self.parents[1];
                       auto& b = self.parents[2];
                       if (wants(x)) x->ensure_grad();
                       if (wants(w)) w->ensure_grad();
                       if (wants(b)) b->ensure_grad();
                       for (int o = 0; o < O; ++o)
                           for (int to = 0; to < To; ++to)
                               for (int ho = 0; ho < Ho; ++ho)
                                   for (int wo = 0; wo < Wo; ++wo) {
                                       float g = self.grad
                                                     .data[((static_cast<size_t>(o) * To + to) * Ho + ho) * Wo + wo];
                                       if (g == 0.0f) continue;
                                       if (wants(b)) b->grad.data[o] += g;
                                       for (int c = 0; c < C; ++c)
                                           for (int ti = 0; ti < kt; ++ti)
                                               for (int i = 0; i < kh; ++i)
                                                   for (int j = 0; j < kw; ++j) {
                                                       int t = to - pad_t + ti;
                                                       int h = ho * spatial_stride - pad_s + i;
                                                       int wd = wo * spatial_stride - pad_s + j;
                                                       if (t < 0 || t >= T || h < 0 || h >= H || wd < 0 || wd >= W)
                                                           continue;
                                                       size_t xi =
                                                           ((static_cast<size_t>(c) * T + t) * H + h) * W + wd;
                                                       size_t wi =
                                                           (((static_cast<size_t>(o) * C + c) * kt + ti) * kh + i) *
                                                               kw +
                                                           j;
                                                       if (wants(w)) w->grad.data[wi] += g * x->value.data[xi];
                                                       if (wants(x)) x->grad.data[xi] += g * w->value.data[wi];
                                                   }
                                   }
                   });
}

Var slice_time(const Var& x, int t) {
    if (x->value.rank() != 4) throw InputError("slice_time: expected [C,T,H,W]");
    int C = x->value.dim(0), T = x->value.dim(1), H = x->value.dim(2), W = x->value.dim(3);
    if (t < 0 || t >= T) throw InputError("slice_time: index out of range");
    int HW = H * W;
    Tensor out({C, H, W});
    for (int c = 0; c < C; ++c)
        std::copy_n(x->value.data.begin() + (static_cast<size_t>(c) * T + t) * HW, HW,
                    out.data.begin() + static_cast<size_t>(c) * HW);
    return make_op(std::move(out), {x}, [C, T, H, W, t](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        int HW = H * W;
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < HW; ++i)
                p->grad.data[(static_cast<size_t>(c) * T + t) * HW + i] +=
                    self.grad.data[static_cast<size_t>(c) * HW + i];
    });
}

Var scale_channels(const Var& x, const Var& s) {
    int C = x->value.dim(0);
    if (s->value.numel() != C) throw InputError("scale_channels: length mismatch");
    int M = x->value.numel() / C;
    Tensor out = x->value;
    for (int c = 0; c < C; ++c)
        for (int i = 0; i < M; ++i) out.data[static_cast<size_t>(c) * M + i] *= s->value.data[c];
    return make_op(std::move(out), {x, s}, [C, M](Node& self) {
        auto& x = self.parents[0];
        auto& s = self.parents[1];
        if (wants(x)) {
            x->ensure_grad();
            for (int c = 0; c < C; ++c)
                for (int i = 0; i < M; ++i)
                    x->grad.data[static_cast<size_t>(c) * M + i] +=
                        self.grad.data[static_cast<size_t>(c) * M + i] * s->value.data[c];
        }
        if (wants(s)) {
            s->ensure_grad();
            for (int c = 0; c < C; ++c) {
                double acc = 0.0;
                for (int i = 0; i < M; ++i)
                    acc += static_cast<double>(self.grad.data[static_cast<size_t>(c) * M + i]) *
                           x->value.data[static_cast<size_t>(c) * M + i];
                s->grad.data[c] += static_cast<float>(acc);
            }
        }
    });
}

Var scale_spatial(const Var& x, const Var& m) {
    int C = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    if (m->value.numel() != H * W) throw InputError("scale_spatial: size mismatch");
    Tensor out = x->value;
    for (int c = 0; c < C; ++c)
        for (int p = 0; p < H * W; ++p)
            out.data[static_cast<size_t>(c) * H * W + p] *= m->value.data[p];
    return make_op(std::move(out), {x, m}, [C, H, W](Node& self) {
        auto& x = self.parents[0];
        auto& m = self.parents[1];
        int HW = H * W;
        if (wants(x)) {
            x->ensure_grad();
            for (int c = 0; c < C; ++c)
                for (int p = 0; p < HW; ++p)
                    x->grad.data[static_cast<size_t>(c) * HW + p] +=
                        self.grad.data[static_cast<size_t>(c) * HW + p] * m->value.data[p];
        }
        if (wants(m)) {
            m->ensure_grad();
            for (int p = 0; p < HW; ++p) {
                double acc = 0.0;
                for (int c = 0; c < C; ++c)
                    acc += static_cast<double>(self.grad.data[static_cast<size_t>(c) * HW + p]) *
                           x->value.data[static_cast<size_t>(c) * HW + p];
                m->grad.data[p] += static_cast<float>(acc);
            }
        }
    });
}

Var global_avgpool_hw(const Var& x) {
    int C = x->value.dim(0), H = x->value.dim(1), W = x->value.dim(2);
    int HW = H * W;
    Tensor out({C});
    for (int c = 0; c < C; ++c) {
        double acc = 0.0;
        for (int p = 0; p < HW; ++p) acc += x->value.data[static_cast<size_t>(c) * HW + p];
        out.data[c] = static_cast<float>(acc / HW);
    }
    return make_op(std::move(out), {x}, [C, HW](Node& self) {
        auto& p = self.parents[0];
        if (!wants(p)) return;
        p->ensure_grad();
        float inv = 1.0f / static_cast<float>(HW);
        for (int c = 0; c < C; ++c)
            for (int i = 0; i < HW; ++i)
                p->grad.data[static_cast<size_t>(c) * HW + i] += inv * self.grad.data[c];
    });
}

Var channel_norm(const Var& x, const Var& gamma, const Var& beta, Tensor& running_mean,
                 Tensor& running_var, bool training, float momentum, float eps) {
    int C = x->value.dim(0);
    int M = x->value.numel() / C;
    if (gamma->value.numel() != C || beta->value.numel() != C)
        throw InputError("channel_norm: affine length mismatch");
    Tensor out = Tensor::zeros_like(x->value);
    if (!training) {
        // affine-linear in x: y = (x - rm) / sqrt(rv+eps) * gamma + beta
        auto scale_keep = std::make_shared<Tensor>(Tensor({C}));
        for (int c = 0; c < C; ++c) {
            float is = 1.0f / std::sqrt(running_var.data[c] + eps);
            scale_keep->data[c] = is;
            for (int i = 0; i < M; ++i)
                out.data[static_cast<size_t>(c) * M + i] =
                    (x->value.data[static_cast<size_t>(c) * M + i] - running_mean.data[c]) * is *
                        gamma->value.data[c] +
                    beta->value.data[c];
        }
        auto rm = std::make_shared<Tensor>(running_mean);
        return make_op(std::move(out), {x, gamma, beta}, [C, M, scale_keep, rm](Node& self) {
            auto& x = self.parents[0];
            auto& gamma = self.parents[1];
            auto& beta = self.parents[2];
            for (int c = 0; c < C; ++c) {
                float is = scale_keep->data[c];
                for (int i = 0; i < M; ++i) {
                    float g = self.grad.data[static_cast<size_t>(c) * M + i];
                    if (wants(x)) {
                        x->ensure_grad();
                        x->grad.data[static_cast<size_t>(c) * M + i] += g * is * gamma->value.data[c];
                    }
                    if (wants(gamma)) {
                        gamma->ensure_grad();
                        gamma->grad.data[c] +=
                            g * (x->value.data[static_cast<size_t>(c) * M + i] - rm->data[c]) * is;
                    }
                    if (wants(beta)) {
                        beta->ensure_grad();
                        beta->grad.data[c] += g;
                    }
                }
            }
        });
    }
    // training: normalize with current statistics, update running buffers
    auto xhat = std::make_shared<Tensor>(Tensor::zeros_like(x->value));
    auto inv_std = std::make_shared<Tensor>(Tensor({C}));
    for (int c = 0; c < C; ++c) {
        double mu = 0.0;
        for (int i = 0; i < M; ++i) mu += x->value.data[static_cast<size_t>(c) * M + i];
        mu /= M;
        double var = 0.0;
        for (int i = 0; i < M; ++i) {
            double d = x->value.data[static_cast<size_t>(c) * M + i] - mu;
            var += d * d;
        }
        var /= M;
        running_mean.data[c] = (1.0f - momentum) * running_mean.data[c] + momentum * static_cast<float>(mu);
        running_var.data[c] = (1.0f - momentum) * running_var.data[c] + momentum * static_cast<float>(var);
        float is = 1.0f / std::sqrt(static_cast<float>(var) + eps);
        inv_std->data[c] = is;
        for (int i = 0; i < M; ++i) {
            float xh = (x->value.data[static_cast<size_t>(c) * M + i] - static_cast<float>(mu)) * is;
            xhat->data[static_cast<size_t>(c) * M + i] = xh;
            out.data[static_cast<size_t>(c) * M + i] = gamma->value.data[c] * xh + beta->value.data[c];
        }
    }
    return make_op(std::move(out), {x, gamma, beta}, [C, M, xhat, inv_std](Node& self) {
        auto& x = self.parents[0];
        auto& gamma = self.parents[1];
        auto& beta = self.parents[2];
        for (int c = 0; c < C; ++c) {
            const float* g = self.grad.data.data() + static_cast<size_t>(c) * M;
            const float* xh = xhat->data.data() + static_cast<size_t>(c) * M;
            if (wants(gamma)) {
                gamma->ensure_grad();
                double acc = 0.0;
                for (int i = 0; i < M; ++i) acc += static_cast<double>(g[i]) * xh[i];
                gamma->grad.data[c] += static_cast<float>(acc);
            }
            if (wants(beta)) {
                beta->ensure_grad();
                double acc = 0.0;
                for (int i = 0; i < M; ++i) acc += g[i];
                beta->grad.data[c] += static_cast<float>(acc);
            }
            if (wants(x)) {
                x->ensure_grad();
                double m1 = 0.0, m2 = 0.0;
                float gm = gamma->value.data[c];
                for (int i = 0; i < M; ++i) {
                    m1 += static_cast<double>(g[i]) * gm;
                    m2 += static_cast<double>(g[i]) * gm * xh[i];
                }
                m1 /= M;
                m2 /= M;
                float is = inv_std->data[c];
                for (int i = 0; i < M; ++i)
                    x->grad.data[static_cast<size_t>(c) * M + i] +=
                        is * (g[i] * gm - static_cast<float>(m1) - xh[i] * static_cast<float>(m2));
            }
        }
    });
}

}  // namespace stand::ag
