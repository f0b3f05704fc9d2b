#include "nmsparse/random_layers.hpp"

#include <algorithm>
#include <limits>

#include "nmsparse/error.hpp"

namespace nmsparse {

std::uint64_t Rng::below(std::uint64_t n) {
    if (n == 0) throw Error("empty range");
    // Rejection keeps the draw unbiased; the threshold is the largest
    // multiple of n that fits.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
    for (;;) {
        const std::uint64_t x = engine_();
        if (x < limit) return x % n;
    }
}

std::int64_t Rng::between(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw Error("empty range");
    return lo + static_cast<std::int64_t>(below(static_cast<std::uint64_t>(hi - lo) + 1));
}

std::vector<std::int8_t> random_activations(Rng& rng, std::size_t n) {
    std::vector<std::int8_t> out(n);
    for (auto& v : out) v = static_cast<std::int8_t>(rng.between(-128, 127));
    return out;
}

DenseWeights random_dense(Rng& rng, WeightShape shape) {
    DenseWeights w(shape);
    for (auto& v : w.data) v = static_cast<std::int8_t>(rng.between(-128, 127));
    return w;
}

DenseWeights random_nm_dense(Rng& rng, WeightShape shape, SparsityPattern pattern) {
    pattern.validate();
    DenseWeights w(shape);
    const int r = shape.reduction();
    const int m = pattern.m;
    for (int k = 0; k < shape.k; ++k) {
        auto row = w.row(k);
        for (int base = 0; base < r; base += m) {
            const int len = std::min(m, r - base);
            const auto pos = static_cast<std::size_t>(base + static_cast<int>(rng.below(static_cast<std::uint64_t>(len))));
            auto v = rng.between(-127, 126);
            if (v >= 0) ++v;  // skip zero
            row[pos] = static_cast<std::int8_t>(v);
        }
    }
    return w;
}

QuantParams random_quant(Rng& rng, int k, int shift) {
    QuantParams q;
    q.shift = shift;
    q.bias.resize(static_cast<std::size_t>(k));
    for (auto& b : q.bias) b = static_cast<std::int32_t>(rng.between(-4096, 4096));
    return q;
}

}  // namespace nmsparse
