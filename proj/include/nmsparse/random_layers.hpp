#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "nmsparse/format.hpp"
#include "nmsparse/kernels.hpp"

namespace nmsparse {

/// Seeded generator with a platform-independent bounded draw, so seeds give
/// the same layers everywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, n), n > 0.
    std::uint64_t below(std::uint64_t n);
    /// Uniform in [lo, hi].
    std::int64_t between(std::int64_t lo, std::int64_t hi);
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

std::vector<std::int8_t> random_activations(Rng& rng, std::size_t n);
DenseWeights random_dense(Rng& rng, WeightShape shape);
/// Exactly one non-zero per M-block of every row, at a uniform position
/// inside the real (unpadded) part of the block, value in [-127, 127] \ {0}.
DenseWeights random_nm_dense(Rng& rng, WeightShape shape, SparsityPattern pattern);
/// Bias in [-2^12, 2^12] per channel and the given shift.
QuantParams random_quant(Rng& rng, int k, int shift);

}  // namespace nmsparse
