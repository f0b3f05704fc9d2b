#include <algorithm>

#include "nmsparse/error.hpp"
#include "nmsparse/kernels.hpp"

namespace nmsparse {

std::vector<WorkSplit> parallelize(KernelId kernel, const LayerGeometry& g, int n_cores) {
    if (n_cores < 1) throw KernelError("need at least one core");
    std::vector<WorkSplit> out;
    if (kernel_kind(kernel) == LayerKind::Conv) {
        const int rows = (g.oy + n_cores - 1) / n_cores;
        for (int c = 0; c < n_cores; ++c) {
            const int y0 = std::min(g.oy, c * rows);
            const int y1 = std::min(g.oy, y0 + rows);
            out.push_back({c, y0 * g.ox, y1 * g.ox});
        }
    } else {
        const bool paired = kernel == KernelId::FcDense || kernel == KernelId::FcSparseIsa;
        int chunk = (g.k + n_cores - 1) / n_cores;
        if (paired && chunk % 2 == 1) ++chunk;
        for (int c = 0; c < n_cores; ++c) {
            const int k0 = std::min(g.k, c * chunk);
            out.push_back({c, k0, std::min(g.k, k0 + chunk)});
        }
    }
    return out;
}

}  // namespace nmsparse
