#pragma once

#include <functional>
#include <string>

#include "stand/autograd.hpp"
#include "stand/tensor.hpp"

namespace stand {

struct GradCheckReport {
    bool pass = false;
    int checked = 0;
    float worst_rel = 0.0f;
    int worst_coord = -1;
    std::string detail;
};

// Compares reverse-mode gradients of a scalar-valued function against
// central finite differences at `ncoords` randomly chosen coordinates.
// Coordinates whose numeric gradient is negligible are resampled so the
// relative comparison stays meaningful; if a coordinate fails at the base
// epsilon it is retried at larger steps to separate truncation error from
// float32 evaluation noise.
//
// Throws HarnessError-style TrainError if two identical forwards disagree
// (the function under test must be deterministic).
GradCheckReport gradcheck(const std::function<ag::Var(const ag::Var&)>& f, const Tensor& x0, int ncoords,
                          Rng& rng, float eps = 1e-4f, float rel_tol = 1e-3f);

}  // namespace stand
