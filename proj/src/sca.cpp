#include "stand/sca.hpp"

#include <cmath>

#include "stand/errors.hpp"

namespace stand {

void ScaConfig::validate() const {
    if (num_categories < 1) throw ConfigError("sca: num_categories must be >= 1");
    if (heads < 1) throw ConfigError("sca: heads must be >= 1");
    if (tau <= 0.0f) throw ConfigError("sca: tau must be > 0");
    if (num_classes < 2) throw ConfigError("sca: num_classes must be >= 2");
}

Sca::Sca(nn::ParamStore& ps, const std::string& prefix, int dim, const ScaConfig& cfg_, Rng& rng)
    : cfg(cfg_) {
    cfg.validate();
    queries = ps.add(prefix + ".queries", randn({cfg.num_categories * cfg.heads, dim}, rng, 0.5f));
    proj = nn::Linear(ps, prefix + ".proj", dim, dim, rng);
    cls_hidden = nn::Linear(ps, prefix + ".cls_hidden", dim, dim, rng);
    classifier = nn::Linear(ps, prefix + ".classifier", dim, cfg.num_classes, rng);
}

ScaOutput Sca::forward(const ag::Var& features, std::vector<Tensor>* attn_out) const {
    if (features->value.shape.size() != 3)
        throw InputError("sca: expected [C,H,W] features");
    ag::Var toks = proj.forward(ag::flatten_tokens(features));  // projected truth tokens [T,C]
    const int dim = toks->value.shape[1];
    ag::Var scores = ag::scale(ag::matmul(queries, ag::transpose(toks)),
                               1.0f / (cfg.tau * std::sqrt(static_cast<float>(dim))));
    ag::Var attn = ag::softmax_rows(scores);  // [N*heads, T]
    if (attn_out) attn_out->push_back(attn->value);
    ag::Var ctx = ag::matmul(attn, toks);  // [N*heads, C]

    std::vector<ag::Var> slots;
    slots.reserve(cfg.num_categories);
    for (int i = 0; i < cfg.num_categories; ++i)
        slots.push_back(ag::mean_rows(ag::slice_rows(ctx, i * cfg.heads, cfg.heads)));
    ScaOutput out;
    out.objects = ag::stack_rows(slots);  // [N, C]
    out.class_logits = classifier.forward(ag::relu(cls_hidden.forward(out.objects)));
    out.class_probs = ag::softmax_rows(out.class_logits);
    ag::Var p_change = ag::slice_cols(out.class_probs, 0, 1);  // [N,1]
    out.weighted = ag::scale_rows(out.objects, p_change);
    return out;
}

ag::Var Sca::classification_loss(const ScaOutput& out, const std::vector<int>& labels) {
    const int n = out.class_logits->value.shape[0];
    if (static_cast<int>(labels.size()) != n)
        throw InputError("sca: label count must match category count");
    // mean CE over rows scaled back to the per-sample sum
    return ag::scale(ag::cross_entropy_rows(out.class_logits, labels, /*pad_id=*/-1),
                     static_cast<float>(n));
}

}  // namespace stand
