#pragma once

#include <cstdint>
#include <string>

namespace nmsparse {

enum class LayerKind : std::uint8_t { Conv, Fc };

/// Hyper-parameters of a convolutional or fully-connected layer.
///
/// Activations are HWC (channel innermost). An FC layer is a 1x1 conv on a
/// 1x1 input: C input features, K output features.
struct LayerGeometry {
    LayerKind kind = LayerKind::Conv;
    int ix = 1, iy = 1, c = 1;
    int ox = 1, oy = 1, k = 1;
    int fx = 1, fy = 1;
    int pad = 0, stride = 1;

    /// Builds a conv geometry and derives OX/OY from the other fields.
    static LayerGeometry conv(int ix, int iy, int c, int k, int fx, int fy, int pad, int stride);
    static LayerGeometry fc(int c, int k);

    /// FX*FY*C, the length of one filter row.
    int reduction() const { return fx * fy * c; }
    /// Reduction length rounded up to a multiple of `m`.
    int padded_reduction(int m) const { return (reduction() + m - 1) / m * m; }

    std::size_t input_size() const { return static_cast<std::size_t>(ix) * iy * c; }
    std::size_t output_size() const { return static_cast<std::size_t>(ox) * oy * k; }
    std::size_t output_pixels() const { return static_cast<std::size_t>(ox) * oy; }

    /// Throws KernelError when a dimension is non-positive or OX/OY disagree
    /// with the input, filter, padding and stride.
    void validate() const;

    std::string describe() const;

    bool operator==(const LayerGeometry&) const = default;
};

}  // namespace nmsparse
