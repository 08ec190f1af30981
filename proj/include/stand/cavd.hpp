#pragma once

#include <string>
#include <vector>

#include "stand/frca.hpp"
#include "stand/nn.hpp"

namespace stand {

struct CavdConfig {
    int heads = 4;
    bool share_stage1 = true;  // Eq-level sharing of the X_c/X_bef cross-attention
    bool residual = true;      // residual + layer norm around each MHCA
};

// Macro-level context-aware viewpoint disambiguation: a two-stage change
// extractor and a gated global-context extractor over flattened feature
// tokens. Inputs/outputs are [C,H,W]; attention runs over HW tokens with
// no positional encodings (the convolutional encoder carries position).
struct Cavd {
    CavdConfig cfg;
    nn::Mha diff1;     // query X_c, memory X_bef (also C_bef extractor when shared)
    nn::Mha diff2;     // query C_diff, memory X_aft
    nn::Mha glob_bef;  // used only when !share_stage1
    nn::Mha glob_aft;
    nn::Linear gate;      // [C_bef;C_aft] -> C
    nn::Linear proj_bef;  // C -> C (untied from proj_aft)
    nn::Linear proj_aft;

    Cavd() = default;
    Cavd(nn::ParamStore& ps, const std::string& prefix, int dim, const CavdConfig& cfg, Rng& rng);

    ag::Var extract_diff(const ag::Var& x_bef, const ag::Var& x_c, const ag::Var& x_aft,
                         std::vector<Tensor>* attn_out = nullptr) const;
    ag::Var extract_global(const ag::Var& x_bef, const ag::Var& x_c, const ag::Var& x_aft,
                           std::vector<Tensor>* attn_out = nullptr) const;
};

struct Dgtd {
    Cavd cavd;
    Frca frca_diff, frca_global, frca_final;
    nn::Linear fuse;  // [C_global'; C_diff'] -> C

    Dgtd() = default;
    Dgtd(nn::ParamStore& ps, const std::string& prefix, int dim, const CavdConfig& ccfg,
         const FrcaConfig& fcfg, Rng& rng);

    ag::Var synthesize_truth(const ag::Var& c_diff, const ag::Var& c_global, bool training) const;
    ag::Var forward(const ag::Var& x_bef, const ag::Var& x_c, const ag::Var& x_aft, bool training,
                    std::vector<Tensor>* attn_out = nullptr) const;
};

}  // namespace stand
