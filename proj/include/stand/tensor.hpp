#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace stand {

using Rng = std::mt19937_64;

// Dense row-major float tensor. Rank and shape are dynamic; all math in
// this project runs through either this type directly or the autograd
// wrappers in autograd.hpp.
struct Tensor {
    std::vector<int> shape;
    std::vector<float> data;

    Tensor() = default;
    explicit Tensor(std::vector<int> s, float fill = 0.0f);

    int numel() const;
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }

    float& at(std::initializer_list<int> idx);
    float at(std::initializer_list<int> idx) const;

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    static Tensor zeros_like(const Tensor& t) { return Tensor(t.shape); }
    static Tensor full(std::vector<int> s, float v) { return Tensor(std::move(s), v); }
    static Tensor scalar(float v);
};

Tensor randn(std::vector<int> shape, Rng& rng, float stddev = 1.0f);
Tensor rand_uniform(std::vector<int> shape, Rng& rng, float lo = 0.0f, float hi = 1.0f);

float max_abs_diff(const Tensor& a, const Tensor& b);

// Deterministic sub-seed derivation (splitmix64 over a (seed, index) pair).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace stand
