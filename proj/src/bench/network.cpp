#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "nmsparse/bench.hpp"
#include "nmsparse/error.hpp"
#include "runner.hpp"

namespace nmsparse::bench {
namespace {

using nlohmann::json;

int get_int(const json& j, const char* key, int fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_integer()) throw KernelError(std::string("field '") + key + "' must be an integer");
    return j.at(key).get<int>();
}

int require_int(const json& j, const char* key, const std::string& layer) {
    if (!j.contains(key)) throw KernelError("layer '" + layer + "' lacks field '" + key + "'");
    return get_int(j, key, 0);
}

NetworkLayer parse_layer(const json& j, std::size_t index) {
    NetworkLayer l;
    l.name = j.value("name", "layer" + std::to_string(index));
    const std::string kind = j.value("kind", "conv");
    if (kind == "conv") {
        const int f = get_int(j, "f", 1);
        l.geometry = LayerGeometry::conv(require_int(j, "ix", l.name), require_int(j, "iy", l.name),
                                         require_int(j, "c", l.name), require_int(j, "k", l.name),
                                         get_int(j, "fx", f), get_int(j, "fy", f), get_int(j, "pad", 0),
                                         get_int(j, "stride", 1));
    } else if (kind == "fc") {
        l.geometry = LayerGeometry::fc(require_int(j, "c", l.name), require_int(j, "k", l.name));
    } else {
        throw KernelError("layer '" + l.name + "': unknown kind '" + kind + "'");
    }
    l.geometry.validate();
    const std::string sp = j.value("sparsity", "dense");
    const auto parsed = parse_sparsity(sp);
    if (!parsed) throw KernelError("layer '" + l.name + "': bad sparsity '" + sp + "'");
    l.sparsity = *parsed;
    // Pointwise convolutions stay dense by default.
    const bool pointwise = l.geometry.kind == LayerKind::Conv && l.geometry.fx * l.geometry.fy == 1;
    l.prunable = j.value("prunable", !pointwise);
    l.isa = j.value("isa", true);
    if (j.contains("kernel")) {
        const std::string name = j.at("kernel").get<std::string>();
        l.kernel = parse_kernel(name);
        if (!l.kernel) throw KernelError("layer '" + l.name + "': unknown kernel '" + name + "'");
        if (kernel_kind(*l.kernel) != l.geometry.kind) throw KernelError("layer '" + l.name + "': kernel does not match its kind");
    }
    l.shift = get_int(j, "shift", 10);
    l.from = j.value("from", "");
    l.global_pool = j.value("global_pool", false);
    return l;
}

}  // namespace

Network parse_network(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw KernelError(std::string("layer list is not valid JSON: ") + e.what());
    }
    Network net;
    const json* layers = &doc;
    if (doc.is_object()) {
        net.name = doc.value("name", "network");
        if (!doc.contains("layers")) throw KernelError("layer list has no 'layers' array");
        layers = &doc.at("layers");
    }
    if (!layers->is_array() || layers->empty()) throw KernelError("'layers' must be a non-empty array");
    try {
        for (std::size_t i = 0; i < layers->size(); ++i) net.layers.push_back(parse_layer(layers->at(i), i));
    } catch (const json::exception& e) {
        throw KernelError(std::string("malformed layer entry: ") + e.what());
    }
    check_chaining(net);
    return net;
}

Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw KernelError("cannot open layer list " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_network(ss.str());
}

void check_chaining(const Network& net) {
    std::map<std::string, const NetworkLayer*> by_name;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const NetworkLayer& l = net.layers[i];
        if (!by_name.emplace(l.name, &l).second) throw KernelError("duplicate layer name '" + l.name + "'");
        if (i == 0 && l.from.empty()) continue;
        const NetworkLayer* src = nullptr;
        if (l.from.empty()) {
            src = &net.layers[i - 1];
        } else {
            auto it = by_name.find(l.from);
            if (it == by_name.end() || it->second == &l) {
                throw KernelError("layer '" + l.name + "' reads from unknown or later layer '" + l.from + "'");
            }
            src = it->second;
        }
        const LayerGeometry& s = src->geometry;
        const LayerGeometry& g = l.geometry;
        bool ok = false;
        if (g.kind == LayerKind::Conv) {
            ok = s.kind == LayerKind::Conv && g.ix == s.ox && g.iy == s.oy && g.c == s.k;
        } else if (l.global_pool) {
            ok = g.c == s.k;
        } else {
            ok = static_cast<std::size_t>(g.c) == s.output_size();
        }
        if (!ok) {
            throw KernelError("shape mismatch: '" + src->name + "' (" + s.describe() + ") cannot feed '" + l.name +
                              "' (" + g.describe() + ")");
        }
    }
}

NetworkResult run_network(const Network& net, const NetworkOptions& opts) {
    check_chaining(net);
    NetworkResult out;
    out.name = net.name;
    out.baseline = "conv_dense_1x2/fc_dense";
    RunOptions ro;
    ro.n_cores = opts.n_cores;
    ro.parallel = opts.parallel;
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const NetworkLayer& l = net.layers[i];
        const LayerGeometry& g = l.geometry;
        const Sparsity sp = (l.prunable && opts.sparsity_override) ? *opts.sparsity_override : l.sparsity;
        const bool isa = opts.isa_override.value_or(l.isa);
        KernelId id = detail::dense_baseline(g.kind);
        if (l.kernel) {
            id = *l.kernel;
        } else if (sp) {
            id = detail::sparse_kernel(g.kind, isa);
        }
        if (is_sparse(id) && !sp) throw KernelError("layer '" + l.name + "' uses a sparse kernel without a pattern");
        const Sparsity used = is_sparse(id) ? sp : Sparsity{};
        const auto data = detail::make_layer(g, sp, detail::mix_seed(opts.seed, i), l.shift);
        const auto expected = detail::reference_output(data, g);

        const KernelResult run = detail::run_kernel(id, data, g, used, ro);
        const KernelId base_id = detail::dense_baseline(g.kind);
        const KernelResult base = id == base_id ? run : detail::run_kernel(base_id, data, g, std::nullopt, ro);

        NetworkRow row;
        row.name = l.name;
        row.kernel = std::string(kernel_name(id));
        row.sparsity = sparsity_name(used);
        row.geometry = g.describe();
        row.instr = run.cost.instructions;
        row.baseline_instr = base.cost.instructions;
        row.speedup = static_cast<double>(row.baseline_instr) / static_cast<double>(row.instr);
        row.macs_dense_equiv = run.cost.macs_dense_equiv;
        row.dense_weight_bytes = detail::weight_bytes(base_id, g, std::nullopt);
        row.weight_bytes = detail::weight_bytes(id, g, used);
        row.bit_exact = run.output == expected && base.output == expected;
        if (!row.bit_exact) out.violations.push_back("layer '" + l.name + "': output differs from the reference");

        out.total_instr += row.instr;
        out.total_baseline_instr += row.baseline_instr;
        out.dense_weight_bytes += row.dense_weight_bytes;
        out.weight_bytes += row.weight_bytes;
        out.rows.push_back(std::move(row));
    }
    out.speedup = static_cast<double>(out.total_baseline_instr) / static_cast<double>(out.total_instr);
    return out;
}

}  // namespace nmsparse::bench
