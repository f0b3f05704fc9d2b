#include "runner.hpp"

#include "nmsparse/error.hpp"
#include "nmsparse/footprint.hpp"
#include "nmsparse/random_layers.hpp"
#include "nmsparse/reference.hpp"

namespace nmsparse::bench::detail {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    // splitmix64 finalizer over the combined words.
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (a + 1) + 0xBF58476D1CE4E5B9ull * (b + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

LayerData make_layer(const LayerGeometry& g, const Sparsity& sparsity, std::uint64_t seed, int shift) {
    Rng rng(seed);
    LayerData d;
    d.input = random_activations(rng, g.input_size());
    const WeightShape shape{g.k, g.fx, g.fy, g.c};
    d.weights = sparsity ? random_nm_dense(rng, shape, *sparsity) : random_dense(rng, shape);
    d.quant = random_quant(rng, g.k, shift);
    return d;
}

KernelResult run_kernel(KernelId id, const LayerData& data, const LayerGeometry& g, const Sparsity& sparsity,
                        const RunOptions& opts) {
    if (!is_sparse(id)) {
        switch (id) {
            case KernelId::ConvDense4x2: return conv_dense_4x2(data.input, data.weights, g, data.quant, opts);
            case KernelId::ConvDense1x2: return conv_dense_1x2(data.input, data.weights, g, data.quant, opts);
            default: return fc_dense(data.input, data.weights, g, data.quant, opts);
        }
    }
    if (!sparsity) throw KernelError(std::string(kernel_name(id)) + " needs a sparsity pattern");
    const NmSparseWeights plain = compress_nm(data.weights, *sparsity);
    switch (id) {
        case KernelId::ConvSparseSw: return conv_sparse_sw(data.input, plain, g, data.quant, opts);
        case KernelId::ConvSparseIsa: return conv_sparse_isa(data.input, replicate_offsets(plain), g, data.quant, opts);
        case KernelId::FcSparseSw: return fc_sparse_sw(data.input, plain, g, data.quant, opts);
        default: return fc_sparse_isa(data.input, interleave_offsets_fc(pad_to_even_k(plain)), g, data.quant, opts);
    }
}

std::vector<std::int8_t> reference_output(const LayerData& data, const LayerGeometry& g) {
    return g.kind == LayerKind::Conv ? reference::conv(data.input, data.weights, g, data.quant)
                                     : reference::fc(data.input, data.weights, g, data.quant);
}

std::uint64_t weight_bytes(KernelId id, const LayerGeometry& g, const Sparsity& sparsity) {
    const WeightShape shape{g.k, g.fx, g.fy, g.c};
    if (!is_sparse(id) || !sparsity) return footprint_dense(shape).total_bits / 8;
    const auto bits = footprint_nm(shape, *sparsity, required_layout(id)).total_bits;
    return (bits + 7) / 8;
}

KernelId dense_baseline(LayerKind kind) { return kind == LayerKind::Conv ? KernelId::ConvDense1x2 : KernelId::FcDense; }

KernelId sparse_kernel(LayerKind kind, bool isa) {
    if (kind == LayerKind::Conv) return isa ? KernelId::ConvSparseIsa : KernelId::ConvSparseSw;
    return isa ? KernelId::FcSparseIsa : KernelId::FcSparseSw;
}

}  // namespace nmsparse::bench::detail
