#include <algorithm>
#include <exception>
#include <string>
#include <thread>

#include "common.hpp"
#include "nmsparse/error.hpp"

namespace nmsparse {

void QuantParams::validate(int k) const {
    if (shift < 0 || shift > 31) throw KernelError("requantization shift must be in 0..31");
    if (!bias.empty() && static_cast<int>(bias.size()) != k) {
        throw KernelError("bias has " + std::to_string(bias.size()) + " entries, expected " + std::to_string(k));
    }
}

std::string_view kernel_name(KernelId id) {
    switch (id) {
        case KernelId::ConvDense4x2: return "conv_dense_4x2";
        case KernelId::ConvDense1x2: return "conv_dense_1x2";
        case KernelId::ConvSparseSw: return "conv_sparse_sw";
        case KernelId::ConvSparseIsa: return "conv_sparse_isa";
        case KernelId::FcDense: return "fc_dense";
        case KernelId::FcSparseSw: return "fc_sparse_sw";
        case KernelId::FcSparseIsa: return "fc_sparse_isa";
    }
    return "unknown";
}

std::optional<KernelId> parse_kernel(std::string_view name) {
    for (auto id : kAllKernels) {
        if (kernel_name(id) == name) return id;
    }
    return std::nullopt;
}

bool is_sparse(KernelId id) {
    return id == KernelId::ConvSparseSw || id == KernelId::ConvSparseIsa || id == KernelId::FcSparseSw ||
           id == KernelId::FcSparseIsa;
}

bool uses_xdecimate(KernelId id) { return id == KernelId::ConvSparseIsa || id == KernelId::FcSparseIsa; }

LayerKind kernel_kind(KernelId id) {
    switch (id) {
        case KernelId::FcDense:
        case KernelId::FcSparseSw:
        case KernelId::FcSparseIsa: return LayerKind::Fc;
        default: return LayerKind::Conv;
    }
}

Layout required_layout(KernelId id) {
    switch (id) {
        case KernelId::ConvSparseIsa: return Layout::ReplicatedConv;
        case KernelId::FcSparseIsa: return Layout::InterleavedFc;
        default: return Layout::Plain;
    }
}

namespace detail {

std::uint32_t L1Layout::alloc(std::size_t bytes) {
    const std::uint32_t addr = (next_ + 3u) & ~3u;
    const std::uint64_t end = static_cast<std::uint64_t>(addr) + bytes + 8;
    if (end > 0x7FFFFFFFull) throw KernelError("emulated L1 image exceeds 2 GiB");
    next_ = static_cast<std::uint32_t>(end);
    return addr;
}

OffsetRows offset_rows(const NmSparseWeights& w, int rows, int fields_per_row) {
    const int bits = w.pattern.offset_bits();
    OffsetRows out;
    out.row_bytes = static_cast<std::uint32_t>((static_cast<std::int64_t>(fields_per_row) * bits + 7) / 8);
    out.bytes.assign(static_cast<std::size_t>(rows) * out.row_bytes, 0);
    std::size_t field = 0;
    for (int r = 0; r < rows; ++r) {
        auto* row = out.bytes.data() + static_cast<std::size_t>(r) * out.row_bytes;
        for (int f = 0; f < fields_per_row; ++f, ++field) {
            const unsigned v = extract_offset(w.offsets, field, bits);
            const std::size_t bit = static_cast<std::size_t>(f) * bits;
            row[bit / 8] = static_cast<std::uint8_t>(row[bit / 8] | (v << (bit % 8)));
        }
    }
    return out;
}

void put_bytes(std::vector<std::uint8_t>& mem, std::uint32_t addr, std::span<const std::int8_t> src) {
    std::copy(src.begin(), src.end(), reinterpret_cast<std::int8_t*>(mem.data() + addr));
}

void put_bytes(std::vector<std::uint8_t>& mem, std::uint32_t addr, std::span<const std::uint8_t> src) {
    std::copy(src.begin(), src.end(), mem.begin() + addr);
}

void put_i32(std::vector<std::uint8_t>& mem, std::uint32_t addr, std::span<const std::int32_t> src) {
    for (std::size_t i = 0; i < src.size(); ++i) {
        const auto v = static_cast<std::uint32_t>(src[i]);
        for (int b = 0; b < 4; ++b) mem[addr + 4 * i + b] = static_cast<std::uint8_t>(v >> (8 * b));
    }
}

std::vector<std::int32_t> bias_vector(const QuantParams& q, int k) {
    std::vector<std::int32_t> out(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < k && i < static_cast<int>(q.bias.size()); ++i) out[static_cast<std::size_t>(i)] = q.bias[i];
    return out;
}

void requant_store(emu::Emitter& e, unsigned acc, const QuantParams& q, std::uint32_t out_addr) {
    if (q.shift > 0) {
        e.addi(acc, acc, std::int32_t{1} << (q.shift - 1));
        e.srai(acc, acc, q.shift);
    }
    e.clip(acc, acc, 8);
    e.sb(acc, 0, static_cast<std::int32_t>(out_addr));
}

void load_bias_pair(emu::Emitter& e, unsigned acc_a, unsigned acc_b, std::uint32_t bias_addr) {
    e.lw(acc_a, 0, static_cast<std::int32_t>(bias_addr));
    e.add(acc_b, acc_a, 0);
}

CostReport run_cores(const std::vector<WorkSplit>& splits, const std::vector<std::uint8_t>& l1_image,
                     const CoreProgram& program, const RunOptions& opts, int m) {
    struct Outcome {
        std::uint64_t icount = 0;
        std::uint64_t macs = 0;
        emu::InnerLoopStats inner;
        std::array<std::uint64_t, 32> ops{};
        std::exception_ptr error;
    };
    std::vector<Outcome> outcomes(splits.size());

    auto run_one = [&](std::size_t i) {
        try {
            const WorkSplit& split = splits[i];
            emu::CoreState core;
            core.core_id = split.core;
            core.mem = l1_image;
            emu::Emitter e(core);
            if (split.core == 0 && opts.trace) e.set_trace(opts.trace, opts.trace_limit);
            outcomes[i].macs = program.emit(e, split);
            program.collect(core, split);
            outcomes[i].icount = core.icount;
            outcomes[i].inner = e.inner_stats();
            outcomes[i].ops = core.op_counts;
        } catch (...) {
            outcomes[i].error = std::current_exception();
        }
    };

    if (opts.parallel && splits.size() > 1) {
        std::vector<std::thread> threads;
        threads.reserve(splits.size());
        for (std::size_t i = 0; i < splits.size(); ++i) threads.emplace_back(run_one, i);
        for (auto& t : threads) t.join();
    } else {
        for (std::size_t i = 0; i < splits.size(); ++i) run_one(i);
    }

    CostReport cost;
    cost.m = m;
    cost.n_cores = static_cast<int>(splits.size());
    for (std::size_t i = 0; i < splits.size(); ++i) {
        const Outcome& o = outcomes[i];
        if (o.error) std::rethrow_exception(o.error);
        cost.per_core.push_back({splits[i].core, o.icount, o.macs});
        cost.instructions = std::max(cost.instructions, o.icount);
        cost.total_instructions += o.icount;
        cost.macs_effective += o.macs;
        cost.inner.merge(o.inner);
        for (int op = 0; op < emu::kOpcodeCount; ++op) cost.opcode_counts[op] += o.ops[op];
    }
    cost.macs_dense_equiv = cost.macs_effective * static_cast<std::uint64_t>(m);
    if (cost.instructions > 0) {
        // Cluster throughput: all MACs over the critical core's instructions.
        cost.macs_per_instruction = static_cast<double>(cost.macs_effective) / static_cast<double>(cost.instructions);
        cost.dense_equiv_per_instruction =
            static_cast<double>(cost.macs_dense_equiv) / static_cast<double>(cost.instructions);
        cost.macs_per_instruction_core = cost.macs_per_instruction / cost.n_cores;
        cost.dense_equiv_per_instruction_core = cost.dense_equiv_per_instruction / cost.n_cores;
    }
    return cost;
}

void check_input(std::span<const std::int8_t> input, const LayerGeometry& g, LayerKind kind) {
    g.validate();
    if (g.kind != kind) throw KernelError("kernel called with a layer of the wrong kind: " + g.describe());
    if (input.size() != g.input_size()) {
        throw KernelError("input has " + std::to_string(input.size()) + " bytes, layer expects " +
                          std::to_string(g.input_size()));
    }
}

void check_dense(const DenseWeights& w, const LayerGeometry& g) {
    if (w.shape.k != g.k || w.shape.reduction() != g.reduction()) {
        throw KernelError("dense weights do not match layer " + g.describe());
    }
    if (w.data.size() != static_cast<std::size_t>(g.k) * g.reduction()) throw KernelError("dense weight size mismatch");
}

void check_sparse(const NmSparseWeights& w, const LayerGeometry& g, Layout layout, bool allow_k_pad) {
    w.validate();
    if (w.layout != layout) {
        throw KernelError(std::string("kernel expects ") + std::string(layout_name(layout)) + " layout, got " +
                          std::string(layout_name(w.layout)));
    }
    const bool k_ok = w.shape.k == g.k || (allow_k_pad && g.k % 2 == 1 && w.shape.k == g.k + 1);
    if (!k_ok || w.shape.reduction() != g.reduction()) {
        throw KernelError("sparse weights do not match layer " + g.describe());
    }
}

}  // namespace detail
}  // namespace nmsparse
