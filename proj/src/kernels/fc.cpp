#include "common.hpp"
#include "nmsparse/error.hpp"
#include "nmsparse/inner_loops.hpp"

namespace nmsparse {
namespace {

using namespace inner::reg;
using detail::requant_store;

struct FcMap {
    std::uint32_t input = 0, values = 0, offsets = 0, bias = 0, output = 0;
    std::uint32_t value_row = 0;
    std::uint32_t offset_row = 0;  // per channel (plain) or per channel pair (interleaved)
};

std::vector<std::uint8_t> stage_fc(FcMap& map, const LayerGeometry& g, std::span<const std::int8_t> input,
                                   int input_stride, std::span<const std::int8_t> values,
                                   std::span<const std::uint8_t> offsets, const QuantParams& q, int k_alloc) {
    detail::L1Layout l1;
    map.input = l1.alloc(static_cast<std::size_t>(input_stride));
    map.values = l1.alloc(values.size());
    map.offsets = l1.alloc(offsets.size());
    map.bias = l1.alloc(4 * static_cast<std::size_t>(k_alloc));
    map.output = l1.alloc(static_cast<std::size_t>(k_alloc));
    std::vector<std::uint8_t> mem(l1.size(), 0);
    detail::put_bytes(mem, map.input, input);
    detail::put_bytes(mem, map.values, values);
    detail::put_bytes(mem, map.offsets, offsets);
    auto bias = detail::bias_vector(q, g.k);
    bias.resize(static_cast<std::size_t>(k_alloc), 0);
    detail::put_i32(mem, map.bias, bias);
    return mem;
}

KernelResult run_fc(KernelId id, const LayerGeometry& g, const FcMap& map, const std::vector<std::uint8_t>& image,
                    int m, std::uint64_t macs_per_output,
                    const std::function<void(emu::Emitter&, const WorkSplit&)>& body, const RunOptions& opts) {
    KernelResult result;
    result.output.assign(static_cast<std::size_t>(g.k), 0);
    detail::CoreProgram program;
    program.emit = [&](emu::Emitter& e, const WorkSplit& s) -> std::uint64_t {
        if (s.size() == 0) return 0;
        body(e, s);
        return static_cast<std::uint64_t>(s.size()) * macs_per_output;
    };
    program.collect = [&](const emu::CoreState& core, const WorkSplit& s) {
        for (int k = s.begin; k < s.end; ++k) {
            result.output[static_cast<std::size_t>(k)] = static_cast<std::int8_t>(core.mem[map.output + k]);
        }
    };
    result.cost = detail::run_cores(parallelize(id, g, opts.n_cores), image, program, opts, m);
    return result;
}

void fc_dense_pair(emu::Emitter& e, const FcMap& map, const QuantParams& q, int c, int k) {
    e.li(kPtrW0, map.values + static_cast<std::uint32_t>(k) * map.value_row);
    e.li(kPtrW1, map.values + static_cast<std::uint32_t>(k + 1) * map.value_row);
    e.li(kPtrBuf1, map.input);
    e.lw(acc(0), kZero, static_cast<std::int32_t>(map.bias + 4u * k));
    e.lw(acc(1), kZero, static_cast<std::int32_t>(map.bias + 4u * (k + 1)));
    const int iters = c / 4;
    if (iters > 0) e.lp_setup();
    for (int i = 0; i < iters; ++i) {
        e.begin_iteration();
        inner::fc_dense_2channel(e);
        e.end_iteration(8);
    }
    if (const int rest = c % 4; rest > 0) {
        e.lw_post(kAct1, kPtrBuf1, 4);
        e.lw_post(w(0), kPtrW0, 4);
        e.andi(w(0), w(0), inner::lane_mask(rest));
        e.lw_post(w(1), kPtrW1, 4);
        e.andi(w(1), w(1), inner::lane_mask(rest));
        e.sdotp4(acc(0), w(0), kAct1);
        e.sdotp4(acc(1), w(1), kAct1);
    }
    requant_store(e, acc(0), q, map.output + k);
    requant_store(e, acc(1), q, map.output + k + 1);
    e.branch();
}

void fc_dense_single(emu::Emitter& e, const FcMap& map, const QuantParams& q, int c, int k) {
    e.li(kPtrW0, map.values + static_cast<std::uint32_t>(k) * map.value_row);
    e.li(kPtrBuf1, map.input);
    e.lw(acc(0), kZero, static_cast<std::int32_t>(map.bias + 4u * k));
    const int iters = c / 4;
    if (iters > 0) e.lp_setup();
    for (int i = 0; i < iters; ++i) {
        e.begin_iteration();
        inner::fc_dense_1channel(e);
        e.end_iteration(4);
    }
    if (const int rest = c % 4; rest > 0) {
        e.lw_post(kAct1, kPtrBuf1, 4);
        e.lw_post(w(0), kPtrW0, 4);
        e.andi(w(0), w(0), inner::lane_mask(rest));
        e.sdotp4(acc(0), w(0), kAct1);
    }
    requant_store(e, acc(0), q, map.output + k);
    e.branch();
}

void fc_sw_channel(emu::Emitter& e, const FcMap& map, const QuantParams& q, int m, int nz, int k) {
    e.li(kPtrW0, map.values + static_cast<std::uint32_t>(k) * map.value_row);
    e.li(kPtrOff, map.offsets + static_cast<std::uint32_t>(k) * map.offset_row);
    e.li(kPtrBuf1, map.input);
    e.lw(acc(0), kZero, static_cast<std::int32_t>(map.bias + 4u * k));
    const int groups = nz / 4;
    if (groups > 0) e.lp_setup();
    for (int i = 0; i < groups; ++i) {
        e.begin_iteration();
        inner::sparse_sw_1patch(e, m);
        e.end_iteration(4);
    }
    if (const int rest = nz % 4; rest > 0) {
        inner::unpack_offsets_sw(e, m, rest);
        for (int l = 0; l < rest; ++l) e.lb_ins(kAct1, l, kPtrBuf1, idx(l));
        e.lw_post(w(0), kPtrW0, 4);
        e.andi(w(0), w(0), inner::lane_mask(rest));
        e.sdotp4(acc(0), w(0), kAct1);
    }
    requant_store(e, acc(0), q, map.output + k);
    e.branch();
}

// Channels k and k+1; the second store is skipped for the padding channel.
void fc_isa_pair(emu::Emitter& e, const FcMap& map, const QuantParams& q, int m, int nz, int k, bool store_second) {
    e.li(kPtrW0, map.values + static_cast<std::uint32_t>(k) * map.value_row);
    e.li(kPtrW1, map.values + static_cast<std::uint32_t>(k + 1) * map.value_row);
    e.li(kPtrOff, map.offsets + static_cast<std::uint32_t>(k / 2) * map.offset_row);
    e.li(kPtrBuf1, map.input);
    e.lw(acc(0), kZero, static_cast<std::int32_t>(map.bias + 4u * k));
    e.lw(acc(1), kZero, static_cast<std::int32_t>(map.bias + 4u * (k + 1)));
    const int groups = nz / 4;
    if (groups > 0) e.lp_setup();
    for (int i = 0; i < groups; ++i) {
        e.begin_iteration();
        inner::fc_isa_2channel(e, m, i);
        e.end_iteration(8);
    }
    if (const int rest = nz % 4; rest > 0) {
        e.lw_post(kOffWord, kPtrOff, 0);
        for (int l = 0; l < rest; ++l) {
            e.xdecimate(m, kAct1, kPtrBuf1, kOffWord);
            e.xdecimate(m, kAct2, kPtrBuf1, kOffWord);
        }
        e.lw_post(w(0), kPtrW0, 4);
        e.andi(w(0), w(0), inner::lane_mask(rest));
        e.lw_post(w(1), kPtrW1, 4);
        e.andi(w(1), w(1), inner::lane_mask(rest));
        e.sdotp4(acc(0), w(0), kAct1);
        e.sdotp4(acc(1), w(1), kAct2);
    }
    e.xdecimate_clear();
    requant_store(e, acc(0), q, map.output + k);
    if (store_second) requant_store(e, acc(1), q, map.output + k + 1);
    e.branch();
}

}  // namespace

KernelResult fc_dense(std::span<const std::int8_t> input, const DenseWeights& weights, const LayerGeometry& g,
                      const QuantParams& quant, const RunOptions& opts) {
    detail::check_input(input, g, LayerKind::Fc);
    detail::check_dense(weights, g);
    quant.validate(g.k);
    FcMap map;
    map.value_row = static_cast<std::uint32_t>(g.c);
    const auto image = stage_fc(map, g, input, (g.c + 3) / 4 * 4, weights.data, {}, quant, g.k);
    auto body = [&](emu::Emitter& e, const WorkSplit& s) {
        int k = s.begin;
        for (; k + 1 < s.end; k += 2) fc_dense_pair(e, map, quant, g.c, k);
        if (k < s.end) fc_dense_single(e, map, quant, g.c, k);
    };
    return run_fc(KernelId::FcDense, g, map, image, 1, static_cast<std::uint64_t>(g.c), body, opts);
}

KernelResult fc_sparse_sw(std::span<const std::int8_t> input, const NmSparseWeights& weights,
                          const LayerGeometry& g, const QuantParams& quant, const RunOptions& opts) {
    detail::check_input(input, g, LayerKind::Fc);
    detail::check_sparse(weights, g, Layout::Plain, false);
    quant.validate(g.k);
    const int m = weights.pattern.m;
    const int nz = weights.nz_per_channel();
    const auto rows = detail::offset_rows(weights, g.k, nz);
    FcMap map;
    map.value_row = static_cast<std::uint32_t>(nz);
    map.offset_row = rows.row_bytes;
    const auto image = stage_fc(map, g, input, g.padded_reduction(m), weights.values, rows.bytes, quant, g.k);
    auto body = [&](emu::Emitter& e, const WorkSplit& s) {
        for (int k = s.begin; k < s.end; ++k) fc_sw_channel(e, map, quant, m, nz, k);
    };
    return run_fc(KernelId::FcSparseSw, g, map, image, m, static_cast<std::uint64_t>(nz), body, opts);
}

KernelResult fc_sparse_isa(std::span<const std::int8_t> input, const NmSparseWeights& weights,
                           const LayerGeometry& g, const QuantParams& quant, const RunOptions& opts) {
    detail::check_input(input, g, LayerKind::Fc);
    detail::check_sparse(weights, g, Layout::InterleavedFc, true);
    quant.validate(g.k);
    const int m = weights.pattern.m;
    const int nz = weights.nz_per_channel();
    const int k_stored = weights.shape.k;
    const auto rows = detail::offset_rows(weights, k_stored / 2, 2 * nz);
    FcMap map;
    map.value_row = static_cast<std::uint32_t>(nz);
    map.offset_row = rows.row_bytes;
    const auto image =
        stage_fc(map, g, input, g.padded_reduction(m), weights.values, rows.bytes, quant, k_stored);
    auto body = [&](emu::Emitter& e, const WorkSplit& s) {
        // Splits start on even channels; an odd end only happens at K.
        for (int k = s.begin; k < s.end; k += 2) fc_isa_pair(e, map, quant, m, nz, k, k + 1 < g.k);
    };
    return run_fc(KernelId::FcSparseIsa, g, map, image, m, static_cast<std::uint64_t>(nz), body, opts);
}

}  // namespace nmsparse
