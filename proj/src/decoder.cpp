#include "stand/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "stand/errors.hpp"

namespace stand {

void DecoderConfig::validate() const {
    if (layers < 1) throw ConfigError("decoder: layers must be >= 1");
    if (heads < 1) throw ConfigError("decoder: heads must be >= 1");
    if (max_len < 1) throw ConfigError("decoder: max_len must be >= 1");
}

Tensor sinusoidal_positions(int length, int dim) {
    Tensor pe = Tensor({length, dim});
    for (int pos = 0; pos < length; ++pos) {
        for (int i = 0; i < dim; i += 2) {
            double freq = std::pow(10000.0, -static_cast<double>(i) / dim);
            pe.data[pos * dim + i] = static_cast<float>(std::sin(pos * freq));
            if (i + 1 < dim) pe.data[pos * dim + i + 1] = static_cast<float>(std::cos(pos * freq));
        }
    }
    return pe;
}

Decoder::Decoder(nn::ParamStore& ps, const std::string& prefix, int dim_, int vocab_size,
                 const DecoderConfig& cfg_, Rng& rng)
    : cfg(cfg_), dim(dim_), vocab(vocab_size) {
    cfg.validate();
    if (vocab < 5) throw ConfigError("decoder: vocabulary too small");
    embedding = ps.add(prefix + ".embedding", randn({vocab, dim}, rng, 0.02f));
    stack.resize(cfg.layers);
    for (int l = 0; l < cfg.layers; ++l) {
        std::string lp = prefix + ".layer" + std::to_string(l);
        stack[l].self_attn = nn::Mha(ps, lp + ".self", dim, cfg.heads, rng);
        stack[l].cross_truth = nn::Mha(ps, lp + ".xtruth", dim, cfg.heads, rng);
        stack[l].cross_obj = nn::Mha(ps, lp + ".xobj", dim, cfg.heads, rng);
    }
    final_ln = nn::LayerNorm(ps, prefix + ".final_ln", dim);
    head = nn::Linear(ps, prefix + ".head", dim, vocab, rng);
}

ag::Var Decoder::decode_train(const std::vector<int>& input_tokens, const ag::Var& truth_tokens,
                              const ag::Var& object_tokens, std::vector<Tensor>* attn_out) const {
    if (input_tokens.empty()) throw InputError("decoder: empty input");
    for (int t : input_tokens)
        if (t < 0 || t >= vocab) throw InputError("decoder: token id out of range");
    ag::Var x = ag::embedding_rows(embedding, input_tokens);
    ag::Var pe = ag::constant(sinusoidal_positions(static_cast<int>(input_tokens.size()), dim));
    x = ag::add(x, pe);
    for (const DecoderLayer& layer : stack) {
        x = layer.self_attn.forward(x, x, /*causal=*/true, attn_out);
        x = layer.cross_truth.forward(x, truth_tokens, false, attn_out);
        x = layer.cross_obj.forward(x, object_tokens, false, attn_out);
    }
    return final_ln.forward(x);
}

ag::Var Decoder::caption_loss(const std::vector<int>& caption, const ag::Var& truth_tokens,
                              const ag::Var& object_tokens, int bos_id, int eos_id, int pad_id) const {
    std::vector<int> input{bos_id};
    input.insert(input.end(), caption.begin(), caption.end());
    std::vector<int> target(caption);
    target.push_back(eos_id);
    ag::Var h = decode_train(input, truth_tokens, object_tokens);
    return ag::cross_entropy_rows(head.forward(h), target, pad_id);
}

// Shared single-step scorer: log-probs of the next token after `tokens`,
// with specials that must never be emitted masked out.
static std::vector<float> next_log_probs(const Decoder& dec, const std::vector<int>& tokens,
                                         const ag::Var& truth_tokens, const ag::Var& object_tokens,
                                         int bos_id) {
    ag::Var h = dec.decode_train(tokens, truth_tokens, object_tokens);
    ag::Var logits = dec.head.forward(h);
    ag::Var lp = ag::log_softmax_rows(logits);
    int last = static_cast<int>(tokens.size()) - 1;
    std::vector<float> out(dec.vocab);
    for (int v = 0; v < dec.vocab; ++v) out[v] = lp->value.data[last * dec.vocab + v];
    out[bos_id] = -std::numeric_limits<float>::infinity();
    if (dec.vocab > 0) out[0] = -std::numeric_limits<float>::infinity();  // <pad>
    return out;
}

std::vector<int> Decoder::generate_greedy(const ag::Var& truth_tokens, const ag::Var& object_tokens,
                                          int bos_id, int eos_id) const {
    std::vector<int> tokens{bos_id};
    std::vector<int> out;
    for (int step = 0; step < cfg.max_len; ++step) {
        std::vector<float> lp = next_log_probs(*this, tokens, truth_tokens, object_tokens, bos_id);
        int best = static_cast<int>(std::max_element(lp.begin(), lp.end()) - lp.begin());
        if (best == eos_id) break;
        out.push_back(best);
        tokens.push_back(best);
    }
    return out;
}

std::vector<int> Decoder::generate_beam(const ag::Var& truth_tokens, const ag::Var& object_tokens,
                                        int bos_id, int eos_id, int beam_width) const {
    if (beam_width < 1) throw ConfigError("decoder: beam width must be >= 1");
    struct Beam {
        std::vector<int> tokens;  // includes leading <bos>
        float score = 0.0f;
        bool done = false;
    };
    std::vector<Beam> beams{Beam{{bos_id}, 0.0f, false}};
    for (int step = 0; step < cfg.max_len; ++step) {
        std::vector<Beam> candidates;
        bool any_open = false;
        for (const Beam& b : beams) {
            if (b.done) {
                candidates.push_back(b);
                continue;
            }
            any_open = true;
            std::vector<float> lp = next_log_probs(*this, b.tokens, truth_tokens, object_tokens, bos_id);
            std::vector<int> order(lp.size());
            for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
            std::partial_sort(order.begin(), order.begin() + std::min<size_t>(beam_width, order.size()),
                              order.end(), [&](int a, int c) { return lp[a] > lp[c]; });
            for (int k = 0; k < beam_width && k < static_cast<int>(order.size()); ++k) {
                Beam nb = b;
                nb.score += lp[order[k]];
                if (order[k] == eos_id) {
                    nb.done = true;
                } else {
                    nb.tokens.push_back(order[k]);
                }
                candidates.push_back(std::move(nb));
            }
        }
        if (!any_open) break;
        // length-normalized comparison so short finished beams do not dominate
        std::stable_sort(candidates.begin(), candidates.end(), [](const Beam& a, const Beam& b) {
            auto norm = [](const Beam& x) {
                return x.score / std::max<size_t>(1, x.tokens.size() - 1 + (x.done ? 1 : 0));
            };
            return norm(a) > norm(b);
        });
        if (static_cast<int>(candidates.size()) > beam_width) candidates.resize(beam_width);
        beams = std::move(candidates);
    }
    const Beam& best = beams.front();
    return std::vector<int>(best.tokens.begin() + 1, best.tokens.end());
}

}  // namespace stand
