#pragma once

#include "stand/autograd.hpp"
#include "stand/tensor.hpp"

namespace stand {

// Orthonormal type-II DCT basis for length n: basis[k][i] = s_k cos(pi (2i+1) k / (2n)).
// Rows are orthonormal, so the inverse transform is the transpose.
Tensor dct_basis(int n);

// 2-D orthonormal DCT / inverse over the last two axes of [H,W] or [C,H,W].
Tensor dct2(const Tensor& x);
Tensor idct2(const Tensor& x);

// Autograd versions (linear maps; backward is the transpose transform).
ag::Var dct2(const ag::Var& x);
ag::Var idct2(const ag::Var& x);

}  // namespace stand
