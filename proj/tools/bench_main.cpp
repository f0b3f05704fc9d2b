// bench: sweeps, layer-list runs, tiling plans and weight-file utilities
// on the instruction-count emulator.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "nmsparse/bench.hpp"
#include "nmsparse/error.hpp"
#include "nmsparse/footprint.hpp"
#include "nmsparse/random_layers.hpp"
#include "nmsparse/tiler.hpp"
#include "nmsparse/weight_file.hpp"

namespace {

using namespace nmsparse;

constexpr int kExitViolation = 2;
constexpr int kExitError = 1;

std::vector<std::string> split(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::vector<bench::Sparsity> parse_sparsity_list(const std::string& text) {
    std::vector<bench::Sparsity> out;
    for (const auto& s : split(text)) {
        const auto p = bench::parse_sparsity(s);
        if (!p) throw CLI::ValidationError("--sparsity", "unknown sparsity '" + s + "'");
        out.push_back(*p);
    }
    return out;
}

Layout parse_layout(const std::string& s) {
    if (s == "plain") return Layout::Plain;
    if (s == "replicated" || s == "replicated-conv") return Layout::ReplicatedConv;
    if (s == "interleaved" || s == "interleaved-fc") return Layout::InterleavedFc;
    throw CLI::ValidationError("--layout", "unknown layout '" + s + "'");
}

void write_output(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
}

std::vector<std::int8_t> read_raw(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return {bytes.begin(), bytes.end()};
}

void write_raw(const std::string& path, std::span<const std::int8_t> data) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
}

void print_footprint(std::ostream& os, const std::string& label, const FootprintReport& r) {
    os << label << ": total_bits=" << r.total_bits << " values_bits=" << r.values_bits
       << " index_bits=" << r.index_bits << " dense_bits=" << r.dense_bits
       << " reduction=" << bench::format_double(r.reduction) << '\n';
}

struct ShapeArgs {
    int k = 0, fx = 1, fy = 1, c = 0;
    WeightShape shape() const { return {k, fx, fy, c}; }
};

void add_shape(CLI::App* cmd, ShapeArgs& s, bool required) {
    auto* k = cmd->add_option("--k", s.k, "output channels");
    auto* c = cmd->add_option("--c", s.c, "input channels");
    cmd->add_option("--fx", s.fx, "filter width")->default_val(1);
    cmd->add_option("--fy", s.fy, "filter height")->default_val(1);
    if (required) {
        k->required();
        c->required();
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"N:M sparse kernel benchmarks on the instruction-count emulator (counts are instr, not cycles)"};
    app.require_subcommand(1);

    // sweep ------------------------------------------------------------------
    auto* sweep = app.add_subcommand("sweep", "single-layer sweep over C, sparsity and kernel flavour");
    std::string kind = "conv", sparsity_list = "dense,1:4,1:8,1:16", isa = "both", c_list, format = "csv";
    std::string out_path, trace_path;
    bench::SweepConfig cfg;
    sweep->add_option("--kind", kind, "conv or fc")->check(CLI::IsMember({"conv", "fc"}));
    sweep->add_option("--sparsity", sparsity_list, "comma list of dense,1:4,1:8,1:16");
    sweep->add_option("--isa-ext", isa, "xDecimate kernels: on, off or both")->check(CLI::IsMember({"on", "off", "both"}));
    sweep->add_option("--cores", cfg.n_cores, "emulated cores")->check(CLI::Range(1, 64));
    sweep->add_option("--c-list", c_list, "comma list of input channel counts");
    sweep->add_option("--k", cfg.k, "output channels")->check(CLI::PositiveNumber);
    sweep->add_option("--seed", cfg.seed, "generator seed");
    sweep->add_option("--budget", cfg.tiler.l1_budget, "L1 budget in bytes for the tiling columns");
    sweep->add_option("--format", format, "csv, json or md")->check(CLI::IsMember({"csv", "json", "md"}));
    sweep->add_option("--trace", trace_path, "write core-0 instruction traces to this file");
    sweep->add_option("--trace-limit", cfg.trace_limit, "trace lines per kernel run (0 = all)");
    sweep->add_option("-o,--output", out_path, "report file (default stdout)");

    // net --------------------------------------------------------------------
    auto* net = app.add_subcommand("net", "run a layer list against the dense baseline");
    std::string layers_path, net_sparsity, net_isa, net_format = "md", net_out;
    bench::NetworkOptions nopts;
    net->add_option("--layers", layers_path, "layer list JSON")->required();
    net->add_option("--sparsity", net_sparsity, "override the sparsity of prunable layers");
    net->add_option("--isa-ext", net_isa, "override xDecimate use: on or off")->check(CLI::IsMember({"on", "off"}));
    net->add_option("--cores", nopts.n_cores, "emulated cores")->check(CLI::Range(1, 64));
    net->add_option("--seed", nopts.seed, "generator seed");
    net->add_option("--format", net_format, "csv, json or md")->check(CLI::IsMember({"csv", "json", "md"}));
    net->add_option("-o,--output", net_out, "report file (default stdout)");

    // tile -------------------------------------------------------------------
    auto* tile = app.add_subcommand("tile", "print the L1 tiling plan of one layer as JSON");
    std::string tile_kind = "conv", tile_sparsity = "dense", tile_layout = "plain";
    int t_ix = 8, t_iy = 8, t_c = 64, t_k = 256, t_f = 3, t_pad = 1, t_stride = 1;
    TilerOptions topts;
    bool single_buffer = false;
    tile->add_option("--kind", tile_kind)->check(CLI::IsMember({"conv", "fc"}));
    tile->add_option("--ix", t_ix);
    tile->add_option("--iy", t_iy);
    tile->add_option("--c", t_c);
    tile->add_option("--k", t_k);
    tile->add_option("--f", t_f, "square filter size");
    tile->add_option("--pad", t_pad);
    tile->add_option("--stride", t_stride);
    tile->add_option("--sparsity", tile_sparsity);
    tile->add_option("--layout", tile_layout, "plain, replicated or interleaved");
    tile->add_option("--budget", topts.l1_budget, "L1 budget in bytes");
    tile->add_option("--cores", topts.n_cores);
    tile->add_flag("--single-buffer", single_buffer, "do not reserve a second copy of each tile");

    // fmt --------------------------------------------------------------------
    auto* fmt = app.add_subcommand("fmt", "N:M weight-file utilities");
    fmt->require_subcommand(1);
    std::string f_in, f_out, f_sparsity = "1:8", f_layout = "plain";
    ShapeArgs f_shape;
    std::uint64_t f_seed = 1;
    double f_density_sparsity = 0.75;

    auto* gen = fmt->add_subcommand("gen", "write a random 1:M-conforming dense int8 tensor (raw bytes)");
    add_shape(gen, f_shape, true);
    gen->add_option("--sparsity", f_sparsity)->required();
    gen->add_option("--seed", f_seed);
    gen->add_option("--out", f_out)->required();

    auto* pack = fmt->add_subcommand("pack", "compress a raw dense int8 tensor into an N:M weight file");
    add_shape(pack, f_shape, true);
    pack->add_option("--in", f_in, "raw dense tensor, K rows of FX*FY*C bytes")->required();
    pack->add_option("--sparsity", f_sparsity, "1:4, 1:8, 1:16 or auto");
    pack->add_option("--layout", f_layout, "plain, replicated or interleaved");
    pack->add_option("--out", f_out)->required();

    auto* unpack = fmt->add_subcommand("unpack", "expand an N:M weight file back to a raw dense tensor");
    unpack->add_option("--in", f_in)->required();
    unpack->add_option("--out", f_out)->required();

    auto* foot = fmt->add_subcommand("footprint", "storage cost of dense, N:M, COO and CSR encodings");
    foot->add_option("--in", f_in, "N:M weight file (else use --k/--c/... and --sparsity)");
    add_shape(foot, f_shape, false);
    foot->add_option("--sparsity", f_sparsity);
    foot->add_option("--layout", f_layout);
    foot->add_option("--unstructured", f_density_sparsity, "sparsity fraction for the COO/CSR rows");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sweep->parsed()) {
            cfg.kind = kind == "conv" ? LayerKind::Conv : LayerKind::Fc;
            cfg.sparsities = parse_sparsity_list(sparsity_list);
            cfg.isa = isa == "on" ? bench::IsaMode::On : isa == "off" ? bench::IsaMode::Off : bench::IsaMode::Both;
            for (const auto& c : split(c_list)) cfg.c_list.push_back(std::stoi(c));
            std::ofstream trace;
            if (!trace_path.empty()) {
                trace.open(trace_path);
                if (!trace) throw Error("cannot write " + trace_path);
                cfg.trace = &trace;
            }
            const auto result = bench::sweep_single_layer(cfg);
            write_output(out_path, bench::emit_sweep(result, *bench::parse_format(format)));
            for (const auto& v : result.violations) std::cerr << "violation: " << v << '\n';
            return result.violations.empty() ? 0 : kExitViolation;
        }
        if (net->parsed()) {
            if (!net_sparsity.empty()) {
                const auto p = bench::parse_sparsity(net_sparsity);
                if (!p) throw Error("unknown sparsity '" + net_sparsity + "'");
                nopts.sparsity_override = *p;
            }
            if (!net_isa.empty()) nopts.isa_override = net_isa == "on";
            const auto network = bench::load_network(layers_path);
            const auto result = bench::run_network(network, nopts);
            write_output(net_out, bench::emit_network(result, *bench::parse_format(net_format)));
            for (const auto& v : result.violations) std::cerr << "violation: " << v << '\n';
            return result.violations.empty() ? 0 : kExitViolation;
        }
        if (tile->parsed()) {
            const LayerGeometry g = tile_kind == "fc"
                                        ? LayerGeometry::fc(t_c, t_k)
                                        : LayerGeometry::conv(t_ix, t_iy, t_c, t_k, t_f, t_f, t_pad, t_stride);
            const auto sp = bench::parse_sparsity(tile_sparsity);
            if (!sp) throw Error("unknown sparsity '" + tile_sparsity + "'");
            const WeightFormat wf = *sp ? WeightFormat::sparse(**sp, parse_layout(tile_layout)) : WeightFormat::dense();
            topts.double_buffer = !single_buffer;
            const TileConfig t = plan_tiles(g, wf, topts);
            if (t.l1_bytes_used > topts.l1_budget) {
                std::cerr << "violation: plan exceeds the budget\n";
                return kExitViolation;
            }
            std::cout << tile_config_json(t, g, wf) << '\n';
            return 0;
        }
        if (gen->parsed()) {
            const auto p = SparsityPattern::parse(f_sparsity);
            if (!p) throw Error("unknown sparsity '" + f_sparsity + "'");
            Rng rng(f_seed);
            const auto dense = random_nm_dense(rng, f_shape.shape(), *p);
            write_raw(f_out, dense.data);
            return 0;
        }
        if (pack->parsed()) {
            DenseWeights dense(f_shape.shape());
            const auto raw = read_raw(f_in);
            if (raw.size() != dense.data.size()) {
                throw FormatError(f_in + " has " + std::to_string(raw.size()) + " bytes, shape needs " +
                                  std::to_string(dense.data.size()));
            }
            dense.data = raw;
            std::optional<SparsityPattern> p;
            if (f_sparsity == "auto") {
                p = recognize_pattern(dense);
                if (!p) throw FormatError("tensor does not conform to 1:4, 1:8 or 1:16");
            } else {
                p = SparsityPattern::parse(f_sparsity);
                if (!p) throw Error("unknown sparsity '" + f_sparsity + "'");
            }
            NmSparseWeights w = compress_nm(dense, *p);
            const Layout layout = parse_layout(f_layout);
            if (layout == Layout::ReplicatedConv) w = replicate_offsets(w);
            if (layout == Layout::InterleavedFc) w = interleave_offsets_fc(pad_to_even_k(w));
            save_weights(f_out, w);
            std::cout << "packed " << p->name() << ' ' << layout_name(layout) << " K=" << w.shape.k << '\n';
            return 0;
        }
        if (unpack->parsed()) {
            const auto w = load_weights(f_in);
            write_raw(f_out, decompress_nm(to_plain(w)).data);
            return 0;
        }
        if (foot->parsed()) {
            WeightShape shape = f_shape.shape();
            std::optional<SparsityPattern> p = SparsityPattern::parse(f_sparsity);
            Layout layout = parse_layout(f_layout);
            if (!f_in.empty()) {
                const auto w = load_weights(f_in);
                shape = w.shape;
                p = w.pattern;
                layout = w.layout;
            }
            if (shape.k <= 0 || shape.reduction() <= 0) throw Error("give --in or a positive --k/--c shape");
            if (!p) throw Error("unknown sparsity '" + f_sparsity + "'");
            print_footprint(std::cout, "dense", footprint_dense(shape));
            print_footprint(std::cout, p->name() + " " + std::string(layout_name(layout)), footprint_nm(shape, *p, layout));
            print_footprint(std::cout, "coo@" + bench::format_double(f_density_sparsity),
                            footprint_coo(shape, f_density_sparsity));
            print_footprint(std::cout, "csr@" + bench::format_double(f_density_sparsity),
                            footprint_csr(shape, f_density_sparsity));
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return 0;
}
