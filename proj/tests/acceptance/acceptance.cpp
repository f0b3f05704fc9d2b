// Acceptance run: one PASS/FAIL line per criterion.
//
// A FAIL whose every mismatch is listed in kKnown is a documented deviation
// and does not change the exit status; any other FAIL exits 1.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "nmsparse/bench.hpp"
#include "nmsparse/error.hpp"
#include "nmsparse/footprint.hpp"
#include "nmsparse/inner_loops.hpp"
#include "nmsparse/kernels.hpp"
#include "nmsparse/random_layers.hpp"
#include "nmsparse/tiler.hpp"
#include "oracles.hpp"
#include "tiler_oracle.hpp"

using namespace nmsparse;

namespace {

struct Known {
    int criterion;
    std::string key;
    std::string reason;
};

const std::vector<Known> kKnown = {
    {2, "fc_sparse_sw 1:4",
     "2-bit offsets need one more mask per group (17 instr / 4 MACs, the same extra instruction as the 23-instr "
     "conv loop); 4/17*4 = 0.94, the quoted 1.0 assumes 16 instr for every M"},
    {3, "coo break-even",
     "counting the 8-bit value next to two 16-bit coordinates gives 40 bits per non-zero, break-even at 80%; "
     "75% follows only if the value bits are left out"},
};

struct Outcome {
    std::vector<std::string> lines;     // informative detail
    std::vector<std::string> failures;  // each mismatch, prefixed by its key
    void info(const std::string& s) { lines.push_back(s); }
    void expect(bool ok, const std::string& key, const std::string& what) {
        if (!ok) failures.push_back(key + ": " + what);
    }
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

double trunc2(double v) { return std::floor(v * 100.0 + 1e-9) / 100.0; }

bool near(double a, double b, double tol = 0.01) { return std::fabs(a - b) <= tol + 1e-12; }

struct InnerCount {
    std::uint32_t instr = 0;
    std::uint32_t macs = 0;
    bool uniform = false;
    double ratio() const { return instr == 0 ? 0.0 : static_cast<double>(macs) / instr; }
};

InnerCount inner_of(const KernelResult& r) {
    return {r.cost.inner.min_instructions, r.cost.inner.macs_per_iteration, r.cost.inner.uniform()};
}

struct Layer {
    std::vector<std::int8_t> input;
    DenseWeights dense;
    NmSparseWeights plain;
    QuantParams q;
};

Layer make_layer(const LayerGeometry& g, int m, std::uint64_t seed) {
    Rng rng(seed);
    Layer l;
    l.input = random_activations(rng, g.input_size());
    const auto p = SparsityPattern::one_of(m);
    l.dense = random_nm_dense(rng, WeightShape{g.k, g.fx, g.fy, g.c}, p);
    l.plain = compress_nm(l.dense, p);
    l.q = random_quant(rng, g.k, 10);
    return l;
}

struct ConvCounts {
    InnerCount dense4x2, dense1x2, sw[17], isa[17];
};
struct FcCounts {
    InnerCount dense, sw[17], isa[17];
};

ConvCounts conv_counts() {
    ConvCounts c;
    const auto g = LayerGeometry::conv(8, 8, 32, 16, 3, 3, 1, 1);
    for (int m : {4, 8, 16}) {
        const Layer l = make_layer(g, m, 100 + m);
        if (m == 8) {
            c.dense4x2 = inner_of(conv_dense_4x2(l.input, l.dense, g, l.q));
            c.dense1x2 = inner_of(conv_dense_1x2(l.input, l.dense, g, l.q));
        }
        c.sw[m] = inner_of(conv_sparse_sw(l.input, l.plain, g, l.q));
        c.isa[m] = inner_of(conv_sparse_isa(l.input, replicate_offsets(l.plain), g, l.q));
    }
    return c;
}

FcCounts fc_counts() {
    FcCounts c;
    const auto g = LayerGeometry::fc(256, 16);
    for (int m : {4, 8, 16}) {
        const Layer l = make_layer(g, m, 200 + m);
        if (m == 8) c.dense = inner_of(fc_dense(l.input, l.dense, g, l.q));
        c.sw[m] = inner_of(fc_sparse_sw(l.input, l.plain, g, l.q));
        c.isa[m] = inner_of(fc_sparse_isa(l.input, interleave_offsets_fc(pad_to_even_k(l.plain)), g, l.q));
    }
    return c;
}

// 1 -------------------------------------------------------------------------
Outcome criterion_inner_counts() {
    Outcome o;
    const ConvCounts c = conv_counts();
    auto check = [&](const std::string& name, const InnerCount& got, std::uint32_t instr, std::uint32_t macs,
                     double quoted) {
        o.info(name + " " + std::to_string(got.instr) + "/" + std::to_string(got.macs) + " = " + fmt(got.ratio()) +
               " (quoted " + fmt(quoted, 2) + ")");
        o.expect(got.uniform, name, "inner window not uniform");
        o.expect(got.instr == instr && got.macs == macs, name,
                 "counted " + std::to_string(got.instr) + "/" + std::to_string(got.macs) + ", want " +
                     std::to_string(instr) + "/" + std::to_string(macs));
        o.expect(near(got.ratio(), quoted), name, "ratio " + fmt(got.ratio()) + " vs " + fmt(quoted, 2));
    };
    check("conv_dense_4x2", c.dense4x2, 14, 32, 2.28);
    check("conv_dense_1x2", c.dense1x2, 10, 16, 1.6);
    check("conv_sparse_sw 1:4", c.sw[4], 23, 8, 0.35);
    check("conv_sparse_sw 1:8", c.sw[8], 22, 8, 0.36);
    check("conv_sparse_sw 1:16", c.sw[16], 22, 8, 0.36);
    for (int m : {4, 8, 16}) check("conv_sparse_isa 1:" + std::to_string(m), c.isa[m], 12, 8, 0.66);
    // The same bodies in isolation.
    const auto body = [](auto f) { return testsupport::count_body(f); };
    o.expect(body([](emu::Emitter& e) { inner::dense_4x2(e); }) == 14, "isolated 4x2", "count");
    o.expect(body([](emu::Emitter& e) { inner::sparse_sw_2patch(e, 8); }) == 22, "isolated sw", "count");
    o.expect(body([](emu::Emitter& e) { inner::sparse_sw_2patch(e, 4); }) == 23, "isolated sw m4", "count");
    o.expect(body([](emu::Emitter& e) { inner::sparse_isa_2patch(e, 16, 0); }) == 12, "isolated isa", "count");
    return o;
}

// 2 -------------------------------------------------------------------------
Outcome criterion_peaks() {
    Outcome o;
    const ConvCounts c = conv_counts();
    const FcCounts f = fc_counts();
    // A quoted figure is the effective ratio, printed to two decimals,
    // times M. Accept either the exact product or the two-decimal one.
    auto check = [&](const std::string& name, const InnerCount& got, int m, double quoted) {
        const double exact = got.ratio() * m;
        const double printed = trunc2(got.ratio()) * m;
        const bool ok = near(exact, quoted) || near(printed, quoted);
        o.info(name + ": " + std::to_string(got.macs) + "/" + std::to_string(got.instr) + "*" + std::to_string(m) +
               " = " + fmt(exact) + ", two-decimal " + fmt(printed, 2) + " (quoted " + fmt(quoted, 2) + ")");
        o.expect(ok, name, fmt(exact) + " / " + fmt(printed, 2) + " vs " + fmt(quoted, 2));
    };
    const double conv_sw[] = {1.4, 2.88, 5.76};
    const double conv_isa[] = {2.64, 5.28, 10.56};
    const double fc_sw[] = {1.0, 2.0, 4.0};
    const double fc_isa[] = {2.44, 4.88, 9.76};
    int i = 0;
    for (int m : {4, 8, 16}) {
        const std::string p = " 1:" + std::to_string(m);
        check("conv_sparse_sw" + p, c.sw[m], m, conv_sw[i]);
        check("conv_sparse_isa" + p, c.isa[m], m, conv_isa[i]);
        check("fc_sparse_sw" + p, f.sw[m], m, fc_sw[i]);
        check("fc_sparse_isa" + p, f.isa[m], m, fc_isa[i]);
        ++i;
    }
    check("fc_dense", f.dense, 1, 1.6);
    o.info("fc_sparse_isa effective ratio " + fmt(f.isa[8].ratio()) + " (quoted 0.61)");
    o.expect(near(trunc2(f.isa[8].ratio()), 0.61), "fc_sparse_isa effective", fmt(f.isa[8].ratio()));
    return o;
}

// 3 -------------------------------------------------------------------------
Outcome criterion_memory() {
    Outcome o;
    const WeightShape shape{256, 3, 3, 256};
    const double plain[] = {0.6875, 0.8125, 0.90625};
    const double rep[] = {0.625, 0.75, 0.875};
    int i = 0;
    for (int m : {4, 8, 16}) {
        const auto p = SparsityPattern::one_of(m);
        const double a = footprint_nm(shape, p, Layout::Plain).reduction;
        const double b = footprint_nm(shape, p, Layout::ReplicatedConv).reduction;
        o.info(p.name() + " plain " + fmt(100 * a, 4) + "%, replicated " + fmt(100 * b, 4) + "%");
        o.expect(a == plain[i], "plain " + p.name(), fmt(a, 6));
        o.expect(b == rep[i], "replicated " + p.name(), fmt(b, 6));
        ++i;
    }
    const double be = coo_break_even_sparsity(16);
    const auto coo75 = footprint_coo(WeightShape{512, 1, 1, 4608}, 0.75);
    o.info("COO (8-bit value + 2x16-bit coordinates) break-even " + fmt(100 * be, 2) + "%, reduction at 75% " +
           fmt(100 * coo75.reduction, 2) + "%");
    o.expect(near(be, 0.75, 1e-9), "coo break-even", fmt(100 * be, 2) + "% vs 75%");
    const auto csr = footprint_csr(WeightShape{512, 1, 1, 4608}, 0.75);
    o.info("CSR K=512 R=4608 at 75%: reduction " + fmt(100 * csr.reduction, 3) + "%");
    o.expect(csr.reduction < 0.25, "csr", fmt(100 * csr.reduction, 3) + "% not below 25%");
    return o;
}

// 4 -------------------------------------------------------------------------
Outcome criterion_equivalence() {
    Outcome o;
    Rng rng(4242);
    int cases = 0, runs = 0, per_m[17] = {};
    for (int i = 0; i < 1000; ++i) {
        const auto c = testsupport::random_case(rng);
        const auto r = testsupport::run_equivalence_case(c);
        ++cases;
        ++per_m[c.pattern.m];
        runs += r.kernels_run;
        o.expect(r.ok, "case " + std::to_string(i), r.detail);
    }
    o.info(std::to_string(cases) + " layers (m=4: " + std::to_string(per_m[4]) + ", m=8: " + std::to_string(per_m[8]) +
           ", m=16: " + std::to_string(per_m[16]) + "), " + std::to_string(runs) + " kernel runs compared");
    return o;
}

// 5 -------------------------------------------------------------------------
Outcome criterion_decimate() {
    Outcome o;
    auto core = testsupport::decimate_core(17);
    Rng rng(555);
    int n = 0;
    for (int i = 0; i < 10000; ++i) {
        const auto c = testsupport::random_decimate_case(rng);
        std::string why;
        ++n;
        o.expect(testsupport::decimate_paths_agree(core, c, &why), "case " + std::to_string(i), why);
    }
    o.info(std::to_string(n) + " random (base, offsets, m, csr phase) cases");
    return o;
}

// 6 -------------------------------------------------------------------------
Outcome criterion_trends() {
    Outcome o;
    for (auto kind : {LayerKind::Conv, LayerKind::Fc}) {
        bench::SweepConfig cfg;
        cfg.kind = kind;
        const auto r = bench::sweep_single_layer(cfg);
        for (const auto& v : r.violations) o.expect(false, "sweep", v);
        auto row = [&](const std::string& k, const std::string& s, int c) -> const bench::SweepRow* {
            for (const auto& x : r.rows) {
                if (x.kernel == k && x.sparsity == s && x.c == c) return &x;
            }
            return nullptr;
        };
        const std::string sw = kind == LayerKind::Conv ? "conv_sparse_sw" : "fc_sparse_sw";
        const std::string isa = kind == LayerKind::Conv ? "conv_sparse_isa" : "fc_sparse_isa";
        const auto cs = cfg.effective_c_list();
        for (const auto& kernel : {sw, isa}) {
            std::string speeds;
            for (int c : cs) {
                const auto* a = row(kernel, "1:4", c);
                const auto* b = row(kernel, "1:8", c);
                const auto* d = row(kernel, "1:16", c);
                if (!a || !b || !d) {
                    o.expect(false, kernel, "missing rows at C=" + std::to_string(c));
                    continue;
                }
                speeds += " C=" + std::to_string(c) + ":" + fmt(a->speedup, 2) + "/" + fmt(b->speedup, 2) + "/" +
                          fmt(d->speedup, 2);
                o.expect(a->speedup <= b->speedup && b->speedup <= d->speedup, "(a) " + kernel,
                         "speedup not monotone in M at C=" + std::to_string(c));
            }
            o.info("(a) " + kernel + " speedup 1:4/1:8/1:16 vs " + r.rows.front().baseline + ":" + speeds);
            if (kind != LayerKind::Conv) continue;
            for (const std::string s : {"1:4", "1:8", "1:16"}) {
                std::string seq;
                double prev = -1;
                for (int c : cs) {
                    const auto* x = row(kernel, s, c);
                    if (!x) continue;
                    seq += " " + fmt(x->macs_per_instr_core, 4);
                    o.expect(x->macs_per_instr_core > prev, "(c) " + kernel + " " + s,
                             "MACs/instr does not grow at C=" + std::to_string(c));
                    prev = x->macs_per_instr_core;
                }
                o.info("(c) " + kernel + " " + s + " MACs/instr/core over C:" + seq);
            }
        }
        if (kind == LayerKind::Conv) {
            for (int c : cs) {
                const auto* x = row(sw, "1:4", c);
                if (x) o.expect(x->speedup < 1.0, "(b)", "SW 1:4 speedup " + fmt(x->speedup) + " at C=" + std::to_string(c));
            }
            const auto* x = row(sw, "1:4", cs.front());
            if (x) o.info("(b) conv_sparse_sw 1:4 speedup at C=" + std::to_string(cs.front()) + ": " + fmt(x->speedup, 3));
        }
        int below = 0;
        for (const auto& x : r.rows) {
            const bool ok = x.dense_equiv_per_instr_core < x.inner_peak;
            below += ok;
            o.expect(ok, "(d) " + x.kernel + " " + x.sparsity, "whole-kernel ratio not below the inner peak");
        }
        o.info("(d) " + std::to_string(below) + "/" + std::to_string(r.rows.size()) + " " +
               (kind == LayerKind::Conv ? "conv" : "fc") + " rows strictly below their inner-loop peak");
    }
    return o;
}

// 7 -------------------------------------------------------------------------
Outcome criterion_tiler() {
    Outcome o;
    Rng rng(9001);
    int planned = 0, infeasible = 0, compared = 0, trips = 0;
    for (int i = 0; i < 100; ++i) {
        const auto c = testsupport::random_tiling_case(rng);
        const std::string key = "case " + std::to_string(i) + " " + c.g.describe() + " " + c.fmt.name();
        TileConfig t;
        try {
            t = plan_tiles(c.g, c.fmt, c.opts);
        } catch (const TilingError&) {
            ++infeasible;
            const int kmin = c.fmt.pattern && c.fmt.layout == Layout::InterleavedFc ? std::min(2, c.g.k) : 1;
            o.expect(testsupport::recompute_l1(c.g, c.fmt, kmin, 1, c.opts) > c.opts.l1_budget, key,
                     "declared infeasible but the minimal tile fits");
            continue;
        }
        ++planned;
        const auto used = testsupport::recompute_l1(c.g, c.fmt, t.tile_k, t.tile_oy, c.opts);
        o.expect(used <= c.opts.l1_budget, key, "recomputed " + std::to_string(used) + " > budget");
        o.expect(used == t.l1_bytes_used, key, "reported footprint differs from recomputation");

        if (c.fmt.pattern) {
            Rng wr(rng.next());
            const int k = c.fmt.layout == Layout::InterleavedFc ? c.g.k + c.g.k % 2 : c.g.k;
            const WeightShape shape{k, c.g.fx, c.g.fy, c.g.c};
            auto w = compress_nm(random_nm_dense(wr, shape, *c.fmt.pattern), *c.fmt.pattern);
            if (c.fmt.layout == Layout::ReplicatedConv) w = replicate_offsets(w);
            if (c.fmt.layout == Layout::InterleavedFc) w = interleave_offsets_fc(w);
            // FC weights are stored padded to even K; a whole-layer tile covers the pad too.
            const int tile_k = c.fmt.layout == Layout::InterleavedFc ? std::min(k, t.tile_k + t.tile_k % 2) : t.tile_k;
            const auto img = layout_interleaved(w, tile_k);
            const auto back = read_interleaved(img.plan, img.bytes);
            o.expect(back.values == w.values && back.offsets == w.offsets, key, "interleaved image does not round-trip");
            ++trips;
        }
        const Layout l = c.g.kind == LayerKind::Conv ? Layout::ReplicatedConv : Layout::InterleavedFc;
        try {
            const auto d = plan_tiles(c.g, WeightFormat::dense(), c.opts);
            const auto s = plan_tiles(c.g, WeightFormat::sparse(SparsityPattern::one_of(16), l), c.opts);
            ++compared;
            o.expect(s.tile_k >= d.tile_k, key, "1:16 tile_k " + std::to_string(s.tile_k) + " < dense " +
                                                    std::to_string(d.tile_k));
        } catch (const TilingError&) {
        }
    }
    o.info(std::to_string(planned) + " plans fit on recomputation, " + std::to_string(infeasible) +
           " correctly infeasible, " + std::to_string(trips) + " interleaved round-trips, " + std::to_string(compared) +
           " dense/1:16 tile_k comparisons");
    return o;
}

// 8 -------------------------------------------------------------------------
Outcome criterion_determinism() {
    Outcome o;
    auto sweep_bytes = [](LayerKind kind, std::uint64_t seed) {
        bench::SweepConfig c;
        c.kind = kind;
        c.c_list = kind == LayerKind::Conv ? std::vector<int>{16, 48} : std::vector<int>{128, 256};
        c.k = 32;
        c.seed = seed;
        const auto r = bench::sweep_single_layer(c);
        std::string out;
        for (auto f : {bench::Format::Csv, bench::Format::Json, bench::Format::Md}) out += bench::emit_sweep(r, f);
        return out;
    };
    std::size_t bytes = 0;
    for (auto kind : {LayerKind::Conv, LayerKind::Fc}) {
        for (std::uint64_t seed : {1u, 99u}) {
            const auto a = sweep_bytes(kind, seed);
            const auto b = sweep_bytes(kind, seed);
            bytes += a.size();
            o.expect(a == b, "sweep seed " + std::to_string(seed), "reports differ");
        }
    }
    const auto net = bench::parse_network(R"({"layers": [
        {"name": "a", "kind": "conv", "ix": 8, "iy": 8, "c": 16, "k": 32, "f": 3, "pad": 1, "sparsity": "1:8"},
        {"name": "b", "kind": "conv", "ix": 8, "iy": 8, "c": 32, "k": 32, "f": 3, "pad": 1, "stride": 2, "sparsity": "1:16"},
        {"name": "f", "kind": "fc", "c": 32, "k": 10, "sparsity": "1:4", "global_pool": true}]})");
    bench::NetworkOptions no;
    no.seed = 3;
    const auto n1 = bench::emit_network(bench::run_network(net, no), bench::Format::Json);
    const auto n2 = bench::emit_network(bench::run_network(net, no), bench::Format::Json);
    o.expect(n1 == n2, "network", "reports differ");
    bytes += n1.size();
    o.info(std::to_string(bytes) + " report bytes identical across repeated runs");
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        const char* title;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> all = {
        {1, "inner-loop instruction counts", criterion_inner_counts},
        {2, "peak dense-equivalent MACs/instruction", criterion_peaks},
        {3, "memory reductions", criterion_memory},
        {4, "functional equivalence (1000 random layers)", criterion_equivalence},
        {5, "xDecimate vs software decimation (10^4 cases)", criterion_decimate},
        {6, "sweep trends (a)-(d)", criterion_trends},
        {7, "tiler budgets, round-trip, 1:16 vs dense", criterion_tiler},
        {8, "determinism", criterion_determinism},
    };
    bool unexpected = false;
    for (const auto& c : all) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.failures.push_back(std::string("exception: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::vector<std::string> known_notes;
        bool all_known = true;
        for (const auto& f : o.failures) {
            bool known = false;
            for (const auto& k : kKnown) {
                if (k.criterion == c.id && f.rfind(k.key + ":", 0) == 0) {
                    known = true;
                    known_notes.push_back(f + " [known deviation: " + k.reason + "]");
                }
            }
            all_known = all_known && known;
        }
        const bool pass = o.failures.empty();
        std::cout << (pass ? "[PASS] " : "[FAIL] ") << c.id << ". " << c.title;
        if (!pass) std::cout << " (" << o.failures.size() << " mismatch" << (o.failures.size() > 1 ? "es" : "") << ")";
        std::cout << "  [" << fmt(secs, 1) << " s]\n";
        for (const auto& l : o.lines) std::cout << "       " << l << '\n';
        if (!pass && all_known) {
            for (const auto& n : known_notes) std::cout << "       FAIL " << n << '\n';
        } else if (!pass) {
            unexpected = true;
            std::size_t shown = 0;
            for (const auto& f : o.failures) {
                if (++shown > 20) break;
                std::cout << "       FAIL " << f << '\n';
            }
        }
    }
    std::cout << (unexpected ? "unexpected failures present\n" : "no unexpected failures\n");
    return unexpected ? 1 : 0;
}
