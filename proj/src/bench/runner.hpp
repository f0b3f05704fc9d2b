#pragma once

#include <cstdint>
#include <vector>

#include "nmsparse/bench.hpp"
#include "nmsparse/kernels.hpp"

namespace nmsparse::bench::detail {

/// Seeded activations, weights (1:M-conforming when sparse) and quantization
/// of one layer.
struct LayerData {
    std::vector<std::int8_t> input;
    DenseWeights weights;
    QuantParams quant;
};

LayerData make_layer(const LayerGeometry& g, const Sparsity& sparsity, std::uint64_t seed, int shift);

/// Mixes a run seed with per-row coordinates.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// Compresses and lays out `data.weights` as the kernel needs and runs it.
KernelResult run_kernel(KernelId id, const LayerData& data, const LayerGeometry& g, const Sparsity& sparsity,
                        const RunOptions& opts);

/// Reference output computed on the dense weights.
std::vector<std::int8_t> reference_output(const LayerData& data, const LayerGeometry& g);

/// Bytes of the weights in the format the kernel consumes.
std::uint64_t weight_bytes(KernelId id, const LayerGeometry& g, const Sparsity& sparsity);

KernelId dense_baseline(LayerKind kind);
KernelId sparse_kernel(LayerKind kind, bool isa);

}  // namespace nmsparse::bench::detail
