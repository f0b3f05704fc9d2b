#include "nmsparse/reference.hpp"

#include "nmsparse/error.hpp"
#include "nmsparse/simd.hpp"

namespace nmsparse::reference {
namespace {

std::vector<std::int8_t> finish(const std::vector<std::int32_t>& acc, const QuantParams& q) {
    std::vector<std::int8_t> out(acc.size());
    simd::requantize(acc, q.shift, out);
    return out;
}

// Reduction rows of `g` as patches, zero-padded to `stride` bytes each.
std::vector<std::int8_t> patches(std::span<const std::int8_t> input, const LayerGeometry& g, int stride) {
    if (input.size() != g.input_size()) throw KernelError("reference input size mismatch");
    const std::size_t pixels = g.output_pixels();
    std::vector<std::int8_t> out(pixels * static_cast<std::size_t>(stride), 0);
    if (g.kind == LayerKind::Fc) {
        std::copy(input.begin(), input.end(), out.begin());
        return out;
    }
    for (int oy = 0; oy < g.oy; ++oy) {
        for (int ox = 0; ox < g.ox; ++ox) {
            const std::size_t p = static_cast<std::size_t>(oy) * g.ox + ox;
            im2col_patch(input, g, oy, ox, std::span<std::int8_t>(out).subspan(p * stride, g.reduction()));
        }
    }
    return out;
}

std::vector<std::int32_t> dense_acc(std::span<const std::int8_t> input, const DenseWeights& w,
                                    const LayerGeometry& g, const QuantParams& q) {
    g.validate();
    q.validate(g.k);
    if (w.shape.k != g.k || w.shape.reduction() != g.reduction()) throw KernelError("reference weight mismatch");
    const int r = g.reduction();
    const auto cols = patches(input, g, r);
    std::vector<std::int32_t> acc(g.output_size());
    for (std::size_t p = 0; p < g.output_pixels(); ++p) {
        const std::span<const std::int8_t> col(cols.data() + p * r, static_cast<std::size_t>(r));
        for (int k = 0; k < g.k; ++k) acc[p * g.k + k] = q.bias_for(k) + simd::dot_i8(col, w.row(k));
    }
    return acc;
}

std::vector<std::int32_t> sparse_acc(std::span<const std::int8_t> input, const NmSparseWeights& w,
                                     const LayerGeometry& g, const QuantParams& q) {
    g.validate();
    q.validate(g.k);
    if (w.shape.k < g.k || w.shape.reduction() != g.reduction()) throw KernelError("reference weight mismatch");
    const NmSparseWeights plain = to_plain(w);
    const int m = plain.pattern.m;
    const int nz = plain.nz_per_channel();
    const int stride = nz * m;
    const auto cols = patches(input, g, stride);
    const auto fields = plain_order_fields(plain);
    std::vector<std::int8_t> gathered(static_cast<std::size_t>(nz));
    std::vector<std::int32_t> acc(g.output_size());
    for (std::size_t p = 0; p < g.output_pixels(); ++p) {
        const std::span<const std::int8_t> col(cols.data() + p * stride, static_cast<std::size_t>(stride));
        for (int k = 0; k < g.k; ++k) {
            const std::span<const std::uint8_t> offs(fields.data() + static_cast<std::size_t>(k) * nz,
                                                     static_cast<std::size_t>(nz));
            simd::decimate(col, offs, m, gathered);
            acc[p * g.k + k] = q.bias_for(k) + simd::dot_i8(gathered, plain.channel_values(k));
        }
    }
    return acc;
}

}  // namespace

std::vector<std::int32_t> conv_accumulators(std::span<const std::int8_t> input, const DenseWeights& w,
                                            const LayerGeometry& g, const QuantParams& q) {
    return dense_acc(input, w, g, q);
}

std::vector<std::int32_t> conv_accumulators(std::span<const std::int8_t> input, const NmSparseWeights& w,
                                            const LayerGeometry& g, const QuantParams& q) {
    return sparse_acc(input, w, g, q);
}

std::vector<std::int8_t> conv(std::span<const std::int8_t> input, const DenseWeights& w, const LayerGeometry& g,
                              const QuantParams& q) {
    return finish(dense_acc(input, w, g, q), q);
}

std::vector<std::int8_t> conv(std::span<const std::int8_t> input, const NmSparseWeights& w, const LayerGeometry& g,
                              const QuantParams& q) {
    return finish(sparse_acc(input, w, g, q), q);
}

std::vector<std::int8_t> fc(std::span<const std::int8_t> input, const DenseWeights& w, const LayerGeometry& g,
                            const QuantParams& q) {
    return finish(dense_acc(input, w, g, q), q);
}

std::vector<std::int8_t> fc(std::span<const std::int8_t> input, const NmSparseWeights& w, const LayerGeometry& g,
                            const QuantParams& q) {
    return finish(sparse_acc(input, w, g, q), q);
}

}  // namespace nmsparse::reference
