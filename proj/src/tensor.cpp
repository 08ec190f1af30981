#include "stand/tensor.hpp"

#include <cmath>
#include <cstdlib>

#include "stand/errors.hpp"

namespace stand {

Tensor::Tensor(std::vector<int> s, float fill) : shape(std::move(s)) {
    size_t n = 1;
    for (int d : shape) {
        if (d < 0) throw InputError("Tensor: negative dimension");
        n *= static_cast<size_t>(d);
    }
    data.assign(n, fill);
}

int Tensor::numel() const {
    int n = 1;
    for (int d : shape) n *= d;
    return n;
}

static size_t flat_index(const std::vector<int>& shape, std::initializer_list<int> idx) {
    size_t off = 0;
    size_t i = 0;
    for (int v : idx) {
        off = off * static_cast<size_t>(shape[i]) + static_cast<size_t>(v);
        ++i;
    }
    return off;
}

float& Tensor::at(std::initializer_list<int> idx) { return data[flat_index(shape, idx)]; }
float Tensor::at(std::initializer_list<int> idx) const { return data[flat_index(shape, idx)]; }

Tensor Tensor::scalar(float v) {
    Tensor t({1});
    t.data[0] = v;
    return t;
}

Tensor randn(std::vector<int> shape, Rng& rng, float stddev) {
    Tensor t(std::move(shape));
    std::normal_distribution<float> dist(0.0f, stddev);
    for (float& v : t.data) v = dist(rng);
    return t;
}

Tensor rand_uniform(std::vector<int> shape, Rng& rng, float lo, float hi) {
    Tensor t(std::move(shape));
    std::uniform_real_distribution<float> dist(lo, hi);
    for (float& v : t.data) v = dist(rng);
    return t;
}

float max_abs_diff(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) throw InputError("max_abs_diff: shape mismatch");
    float m = 0.0f;
    for (size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::fabs(a.data[i] - b.data[i]));
    return m;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 finalizer over the combined pair
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace stand
