#include "nmsparse/geometry.hpp"

#include <sstream>

#include "nmsparse/error.hpp"

namespace nmsparse {

LayerGeometry LayerGeometry::conv(int ix, int iy, int c, int k, int fx, int fy, int pad, int stride) {
    LayerGeometry g;
    g.kind = LayerKind::Conv;
    g.ix = ix;
    g.iy = iy;
    g.c = c;
    g.k = k;
    g.fx = fx;
    g.fy = fy;
    g.pad = pad;
    g.stride = stride;
    if (stride > 0) {
        g.ox = (ix + 2 * pad - fx) / stride + 1;
        g.oy = (iy + 2 * pad - fy) / stride + 1;
    }
    return g;
}

LayerGeometry LayerGeometry::fc(int c, int k) {
    LayerGeometry g;
    g.kind = LayerKind::Fc;
    g.c = c;
    g.k = k;
    return g;
}

void LayerGeometry::validate() const {
    if (ix < 1 || iy < 1 || c < 1 || ox < 1 || oy < 1 || k < 1 || fx < 1 || fy < 1 || stride < 1 ||
        pad < 0) {
        throw KernelError("invalid layer geometry: " + describe());
    }
    if (kind == LayerKind::Fc) {
        if (ix != 1 || iy != 1 || ox != 1 || oy != 1 || fx != 1 || fy != 1 || pad != 0) {
            throw KernelError("fc geometry must have unit spatial dims: " + describe());
        }
        return;
    }
    if (ox != (ix + 2 * pad - fx) / stride + 1 || oy != (iy + 2 * pad - fy) / stride + 1 ||
        ix + 2 * pad < fx || iy + 2 * pad < fy) {
        throw KernelError("output size inconsistent with input/filter/pad/stride: " + describe());
    }
}

std::string LayerGeometry::describe() const {
    std::ostringstream os;
    if (kind == LayerKind::Fc) {
        os << "fc C=" << c << " K=" << k;
    } else {
        os << "conv IX=" << ix << " IY=" << iy << " C=" << c << " K=" << k << " FX=" << fx
           << " FY=" << fy << " P=" << pad << " S=" << stride << " -> OX=" << ox << " OY=" << oy;
    }
    return os.str();
}

}  // namespace nmsparse
