#include <ostream>

#include "nmsparse/bench.hpp"
#include "nmsparse/error.hpp"
#include "runner.hpp"

namespace nmsparse::bench {

std::optional<Sparsity> parse_sparsity(std::string_view text) {
    if (text == "dense") return Sparsity{};
    if (auto p = SparsityPattern::parse(text)) return Sparsity{*p};
    return std::nullopt;
}

std::string sparsity_name(const Sparsity& s) { return s ? s->name() : "dense"; }

std::optional<Format> parse_format(std::string_view text) {
    if (text == "csv") return Format::Csv;
    if (text == "json") return Format::Json;
    if (text == "md") return Format::Md;
    return std::nullopt;
}

std::vector<int> SweepConfig::effective_c_list() const {
    if (!c_list.empty()) return c_list;
    if (kind == LayerKind::Conv) return {32, 64, 128, 256};
    return {256, 512, 1024, 2048};
}

LayerGeometry SweepConfig::geometry(int c) const {
    if (kind == LayerKind::Fc) return LayerGeometry::fc(c, k);
    return LayerGeometry::conv(spatial, spatial, c, k, filter, filter, pad, stride);
}

namespace {

struct Measured {
    KernelResult result;
    bool bit_exact = false;
};

Measured measure(KernelId id, const detail::LayerData& data, const std::vector<std::int8_t>& expected,
                 const LayerGeometry& g, const Sparsity& sparsity, const SweepConfig& cfg) {
    RunOptions opts;
    opts.n_cores = cfg.n_cores;
    opts.parallel = cfg.parallel;
    if (cfg.trace) {
        *cfg.trace << "# " << kernel_name(id) << ' ' << sparsity_name(sparsity) << ' ' << g.describe() << '\n';
        opts.trace = cfg.trace;
        opts.trace_limit = cfg.trace_limit;
    }
    Measured m;
    m.result = detail::run_kernel(id, data, g, sparsity, opts);
    m.bit_exact = m.result.output == expected;
    return m;
}

}  // namespace

SweepResult sweep_single_layer(const SweepConfig& cfg) {
    if (cfg.n_cores < 1) throw KernelError("need at least one core");
    SweepResult out;
    const bool conv = cfg.kind == LayerKind::Conv;
    for (const int c : cfg.effective_c_list()) {
        const LayerGeometry g = cfg.geometry(c);
        g.validate();

        // Dense baselines run on every C; their rows are emitted only when
        // "dense" is requested.
        const auto dense_data = detail::make_layer(g, std::nullopt, detail::mix_seed(cfg.seed, c, 0), cfg.shift);
        const auto dense_expected = detail::reference_output(dense_data, g);
        std::vector<std::pair<KernelId, Measured>> dense_runs;
        if (conv) {
            dense_runs.emplace_back(KernelId::ConvDense1x2,
                                    measure(KernelId::ConvDense1x2, dense_data, dense_expected, g, std::nullopt, cfg));
            dense_runs.emplace_back(KernelId::ConvDense4x2,
                                    measure(KernelId::ConvDense4x2, dense_data, dense_expected, g, std::nullopt, cfg));
        } else {
            dense_runs.emplace_back(KernelId::FcDense,
                                    measure(KernelId::FcDense, dense_data, dense_expected, g, std::nullopt, cfg));
        }
        const std::uint64_t base_instr = dense_runs[0].second.result.cost.instructions;
        const std::uint64_t alt_instr = conv ? dense_runs[1].second.result.cost.instructions : 0;

        auto make_row = [&](KernelId id, const Sparsity& sp, const Measured& mm) {
            const CostReport& cost = mm.result.cost;
            SweepRow row;
            row.kernel = std::string(kernel_name(id));
            row.sparsity = sparsity_name(sp);
            row.m = sp ? sp->m : 1;
            row.c = c;
            row.geometry = g.describe();
            row.instr = cost.instructions;
            row.macs_effective = cost.macs_effective;
            row.macs_dense_equiv = cost.macs_dense_equiv;
            row.macs_per_instr_core = cost.macs_per_instruction_core;
            row.dense_equiv_per_instr_core = cost.dense_equiv_per_instruction_core;
            row.inner_peak = cost.inner_dense_equiv_peak();
            row.baseline = std::string(kernel_name(detail::dense_baseline(cfg.kind)));
            row.speedup = static_cast<double>(base_instr) / static_cast<double>(cost.instructions);
            if (conv) {
                row.alt_baseline = std::string(kernel_name(KernelId::ConvDense4x2));
                row.alt_speedup = static_cast<double>(alt_instr) / static_cast<double>(cost.instructions);
            }
            row.weight_bytes = detail::weight_bytes(id, g, sp);
            row.bit_exact = mm.bit_exact;
            try {
                const WeightFormat fmt =
                    sp ? WeightFormat::sparse(*sp, required_layout(id)) : WeightFormat::dense();
                const TileConfig t = plan_tiles(g, fmt, cfg.tiler);
                row.tile_k = t.tile_k;
                row.tile_oy = t.tile_oy;
            } catch (const TilingError& e) {
                row.status = std::string("tiling infeasible: ") + e.what();
            }
            if (!mm.bit_exact) out.violations.push_back(row.kernel + " " + row.sparsity + " C=" + std::to_string(c) + ": output differs from the reference");
            if (!cost.inner.uniform()) out.violations.push_back(row.kernel + " C=" + std::to_string(c) + ": inner loop not uniform");
            if (!(row.dense_equiv_per_instr_core < row.inner_peak)) {
                out.violations.push_back(row.kernel + " " + row.sparsity + " C=" + std::to_string(c) +
                                         ": whole-kernel per-core ratio not below the inner-loop peak");
            }
            out.rows.push_back(std::move(row));
        };

        for (const auto& sp : cfg.sparsities) {
            if (!sp) {
                for (const auto& [id, mm] : dense_runs) make_row(id, sp, mm);
                continue;
            }
            const auto data = detail::make_layer(g, sp, detail::mix_seed(cfg.seed, c, static_cast<std::uint64_t>(sp->m)), cfg.shift);
            const auto expected = detail::reference_output(data, g);
            for (const bool isa : {false, true}) {
                if ((isa && cfg.isa == IsaMode::Off) || (!isa && cfg.isa == IsaMode::On)) continue;
                const KernelId id = detail::sparse_kernel(cfg.kind, isa);
                make_row(id, sp, measure(id, data, expected, g, sp, cfg));
            }
        }
    }
    return out;
}

}  // namespace nmsparse::bench
