#pragma once

#include <string>
#include <vector>

#include "stand/nn.hpp"

namespace stand {

struct ScaConfig {
    int num_categories = 5;  // N: one query block per dataset category
    int heads = 4;           // n: query heads per category
    float tau = 1.0f;        // score temperature
    int num_classes = 2;     // change / no-change; index 0 = change
    void validate() const;
};

struct ScaOutput {
    ag::Var objects;       // [N, C] per-category object descriptors
    ag::Var class_logits;  // [N, K]
    ag::Var class_probs;   // [N, K] softmax rows
    ag::Var weighted;      // [N, C] objects scaled by p(change)
};

// Semantic concept anchoring: learnable per-category query heads attend over
// the HW tokens of the change-truth feature, head outputs are averaged into
// one descriptor per category, and a linear classifier scores each as
// changed or not; descriptors are re-weighted by that probability.
struct Sca {
    ScaConfig cfg;
    ag::Var queries;  // [N*heads, C]
    nn::Linear proj;        // C -> C, produces the projected truth tokens
    nn::Linear cls_hidden;  // C -> C relu bottleneck ahead of the classifier
    nn::Linear classifier;

    Sca() = default;
    Sca(nn::ParamStore& ps, const std::string& prefix, int dim, const ScaConfig& cfg, Rng& rng);

    ScaOutput forward(const ag::Var& features, std::vector<Tensor>* attn_out = nullptr) const;

    // Cross entropy summed over categories (per-sample); labels in [0,K).
    static ag::Var classification_loss(const ScaOutput& out, const std::vector<int>& labels);
};

}  // namespace stand
