#include <algorithm>

#include "nmsparse/error.hpp"
#include "nmsparse/kernels.hpp"

namespace nmsparse {

void im2col_patch(std::span<const std::int8_t> input, const LayerGeometry& g, int oy, int ox,
                  std::span<std::int8_t> out) {
    if (out.size() < static_cast<std::size_t>(g.reduction())) throw KernelError("im2col output too small");
    if (input.size() != g.input_size()) throw KernelError("im2col input size mismatch");
    if (oy < 0 || oy >= g.oy || ox < 0 || ox >= g.ox) throw KernelError("im2col pixel outside the output");
    auto dst = out.begin();
    for (int fy = 0; fy < g.fy; ++fy) {
        const int iy = oy * g.stride - g.pad + fy;
        for (int fx = 0; fx < g.fx; ++fx) {
            const int ix = ox * g.stride - g.pad + fx;
            if (iy < 0 || iy >= g.iy || ix < 0 || ix >= g.ix) {
                std::fill_n(dst, g.c, std::int8_t{0});
            } else {
                const auto src = input.begin() + (static_cast<std::ptrdiff_t>(iy) * g.ix + ix) * g.c;
                std::copy_n(src, g.c, dst);
            }
            dst += g.c;
        }
    }
}

Im2colBuffer im2col_partial(std::span<const std::int8_t> input, const LayerGeometry& g,
                            std::pair<int, int> first, std::pair<int, int> second) {
    Im2colBuffer buf;
    buf.patch_length = g.reduction();
    buf.patch_centers = {first, second};
    buf.data.assign(2 * static_cast<std::size_t>(buf.patch_length), 0);
    std::span<std::int8_t> all(buf.data);
    im2col_patch(input, g, first.first, first.second, all.first(buf.patch_length));
    im2col_patch(input, g, second.first, second.second, all.subspan(buf.patch_length));
    return buf;
}

}  // namespace nmsparse
