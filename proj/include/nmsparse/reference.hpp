#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nmsparse/format.hpp"
#include "nmsparse/geometry.hpp"
#include "nmsparse/kernels.hpp"

// Host-side functional models of the kernels. They share no code with the
// emulated kernels beyond im2col and run on the dispatched SIMD routines.
namespace nmsparse::reference {

/// int32 accumulators (bias included), output-pixel-major, channel-minor.
std::vector<std::int32_t> conv_accumulators(std::span<const std::int8_t> input, const DenseWeights& w,
                                            const LayerGeometry& g, const QuantParams& q);
std::vector<std::int32_t> conv_accumulators(std::span<const std::int8_t> input, const NmSparseWeights& w,
                                            const LayerGeometry& g, const QuantParams& q);

std::vector<std::int8_t> conv(std::span<const std::int8_t> input, const DenseWeights& w, const LayerGeometry& g,
                              const QuantParams& q);
/// Any layout; the weights are converted to Plain first.
std::vector<std::int8_t> conv(std::span<const std::int8_t> input, const NmSparseWeights& w, const LayerGeometry& g,
                              const QuantParams& q);

std::vector<std::int8_t> fc(std::span<const std::int8_t> input, const DenseWeights& w, const LayerGeometry& g,
                            const QuantParams& q);
/// Any layout. Padding channels beyond g.k are dropped.
std::vector<std::int8_t> fc(std::span<const std::int8_t> input, const NmSparseWeights& w, const LayerGeometry& g,
                            const QuantParams& q);

}  // namespace nmsparse::reference
