#include <string>

#include "common.hpp"
#include "nmsparse/error.hpp"
#include "nmsparse/inner_loops.hpp"

namespace nmsparse {
namespace {

using namespace inner::reg;
using detail::requant_store;

struct ConvMap {
    std::uint32_t input = 0, values = 0, offsets = 0, bias = 0, buf1 = 0, buf2 = 0, output = 0;
    std::uint32_t value_row = 0;   // bytes of one channel's weights
    std::uint32_t offset_row = 0;  // bytes of one channel's offset fields
    int patch = 0;                 // bytes written by im2col per pixel
    int patch_stride = 0;          // patch rounded up to the block size
};

std::uint32_t out_addr(const ConvMap& map, const LayerGeometry& g, int pos, int k) {
    return map.output + static_cast<std::uint32_t>(pos) * static_cast<std::uint32_t>(g.k) + static_cast<std::uint32_t>(k);
}

void emit_im2col(emu::Emitter& e, const LayerGeometry& g, const ConvMap& map, int pos, std::uint32_t buf) {
    const int oy = pos / g.ox;
    const int ox = pos % g.ox;
    const int words = g.c / 4;
    const int bytes = g.c % 4;
    for (int fy = 0; fy < g.fy; ++fy) {
        const int iy = oy * g.stride - g.pad + fy;
        for (int fx = 0; fx < g.fx; ++fx) {
            const int ix = ox * g.stride - g.pad + fx;
            e.li(kDst, buf + static_cast<std::uint32_t>((fy * g.fx + fx) * g.c));
            if (iy < 0 || iy >= g.iy || ix < 0 || ix >= g.ix) {
                if (words > 0) e.lp_setup();
                for (int i = 0; i < words; ++i) e.sw_post(kZero, kDst, 4);
                for (int i = 0; i < bytes; ++i) e.sb_post(kZero, kDst, 1);
            } else {
                e.li(kSrc, map.input + static_cast<std::uint32_t>((iy * g.ix + ix) * g.c));
                if (words > 0) e.lp_setup();
                for (int i = 0; i < words; ++i) {
                    e.lw_post(kCopy, kSrc, 4);
                    e.sw_post(kCopy, kDst, 4);
                }
                for (int i = 0; i < bytes; ++i) {
                    e.lbu_post(kCopy, kSrc, 1);
                    e.sb_post(kCopy, kDst, 1);
                }
            }
        }
    }
}

struct ConvPlan {
    const LayerGeometry& g;
    const QuantParams& q;
    ConvMap map;
    int m = 1;
    std::uint64_t macs_per_output = 0;
    std::function<void(emu::Emitter&, int, int)> pair;  // two pixels, all channels
    std::function<void(emu::Emitter&, int)> single;     // odd trailing pixel
};

std::uint64_t emit_conv_core(emu::Emitter& e, const ConvPlan& p, const WorkSplit& s) {
    if (s.size() == 0) return 0;
    for (int i = p.map.patch; i < p.map.patch_stride; ++i) {
        e.sb(kZero, kZero, static_cast<std::int32_t>(p.map.buf1 + i));
        e.sb(kZero, kZero, static_cast<std::int32_t>(p.map.buf2 + i));
    }
    int pos = s.begin;
    for (; pos + 1 < s.end; pos += 2) {
        e.note("pixels " + std::to_string(pos) + "," + std::to_string(pos + 1));
        emit_im2col(e, p.g, p.map, pos, p.map.buf1);
        emit_im2col(e, p.g, p.map, pos + 1, p.map.buf2);
        p.pair(e, pos, pos + 1);
        e.branch();
    }
    if (pos < s.end) {
        e.note("pixel " + std::to_string(pos));
        emit_im2col(e, p.g, p.map, pos, p.map.buf1);
        p.single(e, pos);
    }
    return static_cast<std::uint64_t>(s.size()) * static_cast<std::uint64_t>(p.g.k) * p.macs_per_output;
}

/// Allocates input, weights, bias, two im2col buffers and output in L1.
std::vector<std::uint8_t> stage_conv(ConvMap& map, const LayerGeometry& g, std::span<const std::int8_t> input,
                                     std::span<const std::int8_t> values, std::span<const std::uint8_t> offsets,
                                     const QuantParams& q) {
    detail::L1Layout l1;
    map.input = l1.alloc(input.size());
    map.values = l1.alloc(values.size());
    map.offsets = l1.alloc(offsets.size());
    map.bias = l1.alloc(4 * static_cast<std::size_t>(g.k));
    map.buf1 = l1.alloc(static_cast<std::size_t>(map.patch_stride));
    map.buf2 = l1.alloc(static_cast<std::size_t>(map.patch_stride));
    map.output = l1.alloc(g.output_size());
    std::vector<std::uint8_t> mem(l1.size(), 0);
    detail::put_bytes(mem, map.input, input);
    detail::put_bytes(mem, map.values, values);
    detail::put_bytes(mem, map.offsets, offsets);
    const auto bias = detail::bias_vector(q, g.k);
    detail::put_i32(mem, map.bias, bias);
    return mem;
}

KernelResult run_conv(KernelId id, const ConvPlan& plan, const std::vector<std::uint8_t>& image,
                      const RunOptions& opts) {
    const auto& g = plan.g;
    KernelResult result;
    result.output.assign(g.output_size(), 0);
    detail::CoreProgram program;
    program.emit = [&](emu::Emitter& e, const WorkSplit& s) { return emit_conv_core(e, plan, s); };
    program.collect = [&](const emu::CoreState& core, const WorkSplit& s) {
        for (int pos = s.begin; pos < s.end; ++pos) {
            for (int k = 0; k < g.k; ++k) {
                result.output[static_cast<std::size_t>(pos) * g.k + k] =
                    static_cast<std::int8_t>(core.mem[out_addr(plan.map, g, pos, k)]);
            }
        }
    };
    const auto splits = parallelize(id, g, opts.n_cores);
    result.cost = detail::run_cores(splits, image, program, opts, plan.m);
    result.cost.im2col_bytes = 2ull * static_cast<std::uint64_t>(plan.map.patch_stride) * splits.size();
    return result;
}

// Dense ---------------------------------------------------------------------

// One channel, two pixels (or one when `two` is false), 1x2 / 1x1 loop.
void dense_channel(emu::Emitter& e, const ConvPlan& p, int k, int pos_a, int pos_b, bool two) {
    const auto& map = p.map;
    const int r = p.g.reduction();
    e.li(kPtrW0, map.values + static_cast<std::uint32_t>(k) * map.value_row);
    e.li(kPtrBuf1, map.buf1);
    if (two) {
        e.li(kPtrBuf2, map.buf2);
        detail::load_bias_pair(e, acc(0), acc(1), map.bias + 4u * k);
    } else {
        e.lw(acc(0), kZero, static_cast<std::int32_t>(map.bias + 4u * k));
    }
    const int iters = r / 8;
    if (iters > 0) e.lp_setup();
    for (int i = 0; i < iters; ++i) {
        e.begin_iteration();
        if (two) {
            inner::dense_1x2(e);
            e.end_iteration(16);
        } else {
            inner::dense_1x1(e);
            e.end_iteration(8);
        }
    }
    int rest = r % 8;
    auto step = [&](int lanes) {
        e.lw_post(w(0), kPtrW0, 4);
        if (lanes < 4) e.andi(w(0), w(0), inner::lane_mask(lanes));
        e.lw_post(kAct1, kPtrBuf1, 4);
        if (two) e.lw_post(kAct2, kPtrBuf2, 4);
        e.sdotp4(acc(0), w(0), kAct1);
        if (two) e.sdotp4(acc(1), w(0), kAct2);
    };
    if (rest >= 4) {
        step(4);
        rest -= 4;
    }
    if (rest > 0) step(rest);
    requant_store(e, acc(0), p.q, out_addr(map, p.g, pos_a, k));
    if (two) requant_store(e, acc(1), p.q, out_addr(map, p.g, pos_b, k));
    e.branch();
}

// Four channels starting at k, two pixels (or one).
void dense_quad(emu::Emitter& e, const ConvPlan& p, int k, int pos_a, int pos_b, bool two) {
    const auto& map = p.map;
    const int r = p.g.reduction();
    for (int i = 0; i < 4; ++i) e.li(ptr_w(i), map.values + static_cast<std::uint32_t>(k + i) * map.value_row);
    e.li(kPtrBuf1, map.buf1);
    if (two) e.li(kPtrBuf2, map.buf2);
    for (int i = 0; i < 4; ++i) {
        const std::uint32_t b = map.bias + 4u * static_cast<std::uint32_t>(k + i);
        if (two) {
            detail::load_bias_pair(e, acc(2 * i), acc(2 * i + 1), b);
        } else {
            e.lw(acc(2 * i), kZero, static_cast<std::int32_t>(b));
        }
    }
    const int iters = r / 4;
    if (iters > 0) e.lp_setup();
    for (int i = 0; i < iters; ++i) {
        e.begin_iteration();
        if (two) {
            inner::dense_4x2(e);
            e.end_iteration(32);
        } else {
            inner::dense_4x1(e);
            e.end_iteration(16);
        }
    }
    if (const int rest = r % 4; rest > 0) {
        for (int i = 0; i < 4; ++i) {
            e.lw_post(w(i), ptr_w(i), 4);
            e.andi(w(i), w(i), inner::lane_mask(rest));
        }
        e.lw_post(kAct1, kPtrBuf1, 4);
        if (two) e.lw_post(kAct2, kPtrBuf2, 4);
        for (int i = 0; i < 4; ++i) {
            e.sdotp4(acc(2 * i), w(i), kAct1);
            if (two) e.sdotp4(acc(2 * i + 1), w(i), kAct2);
        }
    }
    for (int i = 0; i < 4; ++i) {
        requant_store(e, acc(2 * i), p.q, out_addr(map, p.g, pos_a, k + i));
        if (two) requant_store(e, acc(2 * i + 1), p.q, out_addr(map, p.g, pos_b, k + i));
    }
    e.branch();
}

KernelResult run_dense(KernelId id, std::span<const std::int8_t> input, const DenseWeights& weights,
                       const LayerGeometry& g, const QuantParams& quant, const RunOptions& opts) {
    detail::check_input(input, g, LayerKind::Conv);
    detail::check_dense(weights, g);
    quant.validate(g.k);
    ConvPlan plan{g, quant, {}, 1, static_cast<std::uint64_t>(g.reduction()), {}, {}};
    plan.map.patch = g.reduction();
    plan.map.patch_stride = (g.reduction() + 3) / 4 * 4;
    plan.map.value_row = static_cast<std::uint32_t>(g.reduction());
    const auto image = stage_conv(plan.map, g, input, weights.data, {}, quant);
    const bool quad = id == KernelId::ConvDense4x2;
    auto channels = [&plan, quad](emu::Emitter& e, int a, int b, bool two) {
        int k = 0;
        if (quad) {
            for (; k + 4 <= plan.g.k; k += 4) dense_quad(e, plan, k, a, b, two);
        }
        for (; k < plan.g.k; ++k) dense_channel(e, plan, k, a, b, two);
    };
    plan.pair = [channels](emu::Emitter& e, int a, int b) { channels(e, a, b, true); };
    plan.single = [channels](emu::Emitter& e, int a) { channels(e, a, a, false); };
    return run_conv(id, plan, image, opts);
}

// Sparse, software offsets --------------------------------------------------

void sw_channel(emu::Emitter& e, const ConvPlan& p, int nz, int k, int pos_a, int pos_b, bool two) {
    const auto& map = p.map;
    e.li(kPtrW0, map.values + static_cast<std::uint32_t>(k) * map.value_row);
    e.li(kPtrOff, map.offsets + static_cast<std::uint32_t>(k) * map.offset_row);
    e.li(kPtrBuf1, map.buf1);
    if (two) {
        e.li(kPtrBuf2, map.buf2);
        detail::load_bias_pair(e, acc(0), acc(1), map.bias + 4u * k);
    } else {
        e.lw(acc(0), kZero, static_cast<std::int32_t>(map.bias + 4u * k));
    }
    const int groups = nz / 4;
    if (groups > 0) e.lp_setup();
    for (int i = 0; i < groups; ++i) {
        e.begin_iteration();
        if (two) {
            inner::sparse_sw_2patch(e, p.m);
            e.end_iteration(8);
        } else {
            inner::sparse_sw_1patch(e, p.m);
            e.end_iteration(4);
        }
    }
    if (const int rest = nz % 4; rest > 0) {
        inner::unpack_offsets_sw(e, p.m, rest);
        for (int l = 0; l < rest; ++l) e.lb_ins(kAct1, l, kPtrBuf1, idx(l));
        if (two) {
            for (int l = 0; l < rest; ++l) e.lb_ins(kAct2, l, kPtrBuf2, idx(l));
        }
        e.lw_post(w(0), kPtrW0, 4);
        e.andi(w(0), w(0), inner::lane_mask(rest));
        e.sdotp4(acc(0), w(0), kAct1);
        if (two) e.sdotp4(acc(1), w(0), kAct2);
    }
    requant_store(e, acc(0), p.q, out_addr(map, p.g, pos_a, k));
    if (two) requant_store(e, acc(1), p.q, out_addr(map, p.g, pos_b, k));
    e.branch();
}

// Sparse, xDecimate -----------------------------------------------------------

void isa_channel(emu::Emitter& e, const ConvPlan& p, int nz, int k, int pos_a, int pos_b, bool two) {
    const auto& map = p.map;
    e.li(kPtrW0, map.values + static_cast<std::uint32_t>(k) * map.value_row);
    e.li(kPtrOff, map.offsets + static_cast<std::uint32_t>(k) * map.offset_row);
    if (two) {
        detail::load_bias_pair(e, acc(0), acc(1), map.bias + 4u * k);
    } else {
        e.lw(acc(0), kZero, static_cast<std::int32_t>(map.bias + 4u * k));
    }
    const int groups = nz / 4;
    if (groups > 0) e.lp_setup();
    for (int i = 0; i < groups; ++i) {
        e.begin_iteration();
        if (two) {
            inner::sparse_isa_2patch(e, p.m, i);
            e.end_iteration(8);
        } else {
            inner::sparse_isa_1patch(e, p.m, i);
            e.end_iteration(4);
        }
    }
    if (const int rest = nz % 4; rest > 0) {
        e.lw_post(kOffWord, kPtrOff, 0);
        for (int l = 0; l < rest; ++l) {
            e.xdecimate(p.m, kAct1, kPtrBuf1, kOffWord);
            e.xdecimate(p.m, two ? kAct2 : kAct1, two ? kPtrBuf2 : kPtrBuf1, kOffWord);
        }
        e.lw_post(w(0), kPtrW0, 4);
        e.andi(w(0), w(0), inner::lane_mask(rest));
        e.sdotp4(acc(0), w(0), kAct1);
        if (two) e.sdotp4(acc(1), w(0), kAct2);
    }
    e.xdecimate_clear();
    requant_store(e, acc(0), p.q, out_addr(map, p.g, pos_a, k));
    if (two) requant_store(e, acc(1), p.q, out_addr(map, p.g, pos_b, k));
    e.branch();
}

KernelResult run_sparse(KernelId id, std::span<const std::int8_t> input, const NmSparseWeights& weights,
                        const LayerGeometry& g, const QuantParams& quant, const RunOptions& opts) {
    detail::check_input(input, g, LayerKind::Conv);
    detail::check_sparse(weights, g, required_layout(id), false);
    quant.validate(g.k);
    const int m = weights.pattern.m;
    const int nz = weights.nz_per_channel();
    const bool isa = id == KernelId::ConvSparseIsa;
    const int fields = isa ? 2 * nz : nz;
    const auto rows = detail::offset_rows(weights, g.k, fields);

    ConvPlan plan{g, quant, {}, m, static_cast<std::uint64_t>(nz), {}, {}};
    plan.map.patch = g.reduction();
    plan.map.patch_stride = g.padded_reduction(m);
    plan.map.value_row = static_cast<std::uint32_t>(nz);
    plan.map.offset_row = rows.row_bytes;
    const auto image = stage_conv(plan.map, g, input, weights.values, rows.bytes, quant);

    if (isa) {
        plan.pair = [&plan, nz](emu::Emitter& e, int a, int b) {
            e.li(kPtrBuf1, plan.map.buf1);
            e.li(kPtrBuf2, plan.map.buf2);
            for (int k = 0; k < plan.g.k; ++k) isa_channel(e, plan, nz, k, a, b, true);
        };
        plan.single = [&plan, nz](emu::Emitter& e, int a) {
            e.li(kPtrBuf1, plan.map.buf1);
            for (int k = 0; k < plan.g.k; ++k) isa_channel(e, plan, nz, k, a, a, false);
        };
    } else {
        plan.pair = [&plan, nz](emu::Emitter& e, int a, int b) {
            for (int k = 0; k < plan.g.k; ++k) sw_channel(e, plan, nz, k, a, b, true);
        };
        plan.single = [&plan, nz](emu::Emitter& e, int a) {
            for (int k = 0; k < plan.g.k; ++k) sw_channel(e, plan, nz, k, a, a, false);
        };
    }
    return run_conv(id, plan, image, opts);
}

}  // namespace

KernelResult conv_dense_4x2(std::span<const std::int8_t> input, const DenseWeights& weights,
                            const LayerGeometry& g, const QuantParams& quant, const RunOptions& opts) {
    return run_dense(KernelId::ConvDense4x2, input, weights, g, quant, opts);
}

KernelResult conv_dense_1x2(std::span<const std::int8_t> input, const DenseWeights& weights,
                            const LayerGeometry& g, const QuantParams& quant, const RunOptions& opts) {
    return run_dense(KernelId::ConvDense1x2, input, weights, g, quant, opts);
}

KernelResult conv_sparse_sw(std::span<const std::int8_t> input, const NmSparseWeights& weights,
                            const LayerGeometry& g, const QuantParams& quant, const RunOptions& opts) {
    return run_sparse(KernelId::ConvSparseSw, input, weights, g, quant, opts);
}

KernelResult conv_sparse_isa(std::span<const std::int8_t> input, const NmSparseWeights& weights,
                             const LayerGeometry& g, const QuantParams& quant, const RunOptions& opts) {
    return run_sparse(KernelId::ConvSparseIsa, input, weights, g, quant, opts);
}

}  // namespace nmsparse
