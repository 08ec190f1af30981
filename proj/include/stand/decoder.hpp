#pragma once

#include <string>
#include <vector>

#include "stand/nn.hpp"

namespace stand {

struct DecoderConfig {
    int layers = 2;
    int heads = 4;
    int max_len = 24;   // generation cap, excluding <bos>
    void validate() const;
};

struct DecoderLayer {
    nn::Mha self_attn;    // causal
    nn::Mha cross_truth;  // memory: change-truth tokens
    nn::Mha cross_obj;    // memory: object slots
};

// Transformer caption decoder: token embedding + sinusoidal positions, then
// per layer a causal self-attention and two cross-attentions (change truth,
// object slots), all pre-norm with residuals. A final linear head scores the
// vocabulary.
struct Decoder {
    DecoderConfig cfg;
    int dim = 0, vocab = 0;
    ag::Var embedding;  // [V, C]
    std::vector<DecoderLayer> stack;
    nn::LayerNorm final_ln;
    nn::Linear head;  // C -> V

    Decoder() = default;
    Decoder(nn::ParamStore& ps, const std::string& prefix, int dim, int vocab_size,
            const DecoderConfig& cfg, Rng& rng);

    // Hidden states for teacher-forced input tokens [T] (starts with <bos>).
    ag::Var decode_train(const std::vector<int>& input_tokens, const ag::Var& truth_tokens,
                         const ag::Var& object_tokens, std::vector<Tensor>* attn_out = nullptr) const;

    // Mean cross entropy of next-token prediction; targets are the input
    // shifted left with <eos> appended, pad positions ignored.
    ag::Var caption_loss(const std::vector<int>& caption_no_specials, const ag::Var& truth_tokens,
                         const ag::Var& object_tokens, int bos_id, int eos_id, int pad_id) const;

    std::vector<int> generate_greedy(const ag::Var& truth_tokens, const ag::Var& object_tokens,
                                     int bos_id, int eos_id) const;
    std::vector<int> generate_beam(const ag::Var& truth_tokens, const ag::Var& object_tokens,
                                   int bos_id, int eos_id, int beam_width) const;
};

Tensor sinusoidal_positions(int length, int dim);

}  // namespace stand
