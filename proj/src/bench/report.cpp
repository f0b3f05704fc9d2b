#include <charconv>
#include <functional>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "nmsparse/bench.hpp"
#include "nmsparse/error.hpp"

namespace nmsparse::bench {
namespace {

using nlohmann::ordered_json;

constexpr std::string_view kSweepHeader =
    "kernel,sparsity,m,c,geometry,instr,macs_effective,macs_dense_equiv,macs_per_instr_core,"
    "dense_equiv_per_instr_core,inner_peak,baseline,speedup,alt_baseline,alt_speedup,weight_bytes,"
    "tile_k,tile_oy,bit_exact,status";

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                fields.back() += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.emplace_back();
        } else {
            fields.back() += ch;
        }
    }
    return fields;
}

template <class T>
T parse_number(const std::string& s) {
    T v{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw Error("bad number '" + s + "' in report");
    return v;
}

ordered_json row_json(const SweepRow& r) {
    return ordered_json{{"kernel", r.kernel},
                        {"sparsity", r.sparsity},
                        {"m", r.m},
                        {"c", r.c},
                        {"geometry", r.geometry},
                        {"instr", r.instr},
                        {"macs_effective", r.macs_effective},
                        {"macs_dense_equiv", r.macs_dense_equiv},
                        {"macs_per_instr_core", r.macs_per_instr_core},
                        {"dense_equiv_per_instr_core", r.dense_equiv_per_instr_core},
                        {"inner_peak", r.inner_peak},
                        {"baseline", r.baseline},
                        {"speedup", r.speedup},
                        {"alt_baseline", r.alt_baseline},
                        {"alt_speedup", r.alt_speedup},
                        {"weight_bytes", r.weight_bytes},
                        {"tile_k", r.tile_k},
                        {"tile_oy", r.tile_oy},
                        {"bit_exact", r.bit_exact},
                        {"status", r.status}};
}

// Doubles go through format_double so JSON and CSV print identical text.
std::string dump_json(const ordered_json& j) {
    std::string out;
    std::function<void(const ordered_json&, int)> emit = [&](const ordered_json& v, int depth) {
        const std::string pad(static_cast<std::size_t>(2 * depth), ' ');
        const std::string inner(static_cast<std::size_t>(2 * (depth + 1)), ' ');
        if (v.is_object()) {
            if (v.empty()) {
                out += "{}";
                return;
            }
            out += "{\n";
            bool first = true;
            for (auto it = v.begin(); it != v.end(); ++it) {
                if (!first) out += ",\n";
                first = false;
                out += inner + ordered_json(it.key()).dump() + ": ";
                emit(it.value(), depth + 1);
            }
            out += "\n" + pad + "}";
        } else if (v.is_array()) {
            if (v.empty()) {
                out += "[]";
                return;
            }
            out += "[\n";
            for (std::size_t i = 0; i < v.size(); ++i) {
                if (i) out += ",\n";
                out += inner;
                emit(v[i], depth + 1);
            }
            out += "\n" + pad + "]";
        } else if (v.is_number_float()) {
            out += format_double(v.get<double>());
        } else {
            out += v.dump();
        }
    };
    emit(j, 0);
    return out + "\n";
}

}  // namespace

std::string format_double(double v) {
    if (!std::isfinite(v)) return "0";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw Error("cannot format double");
    std::string s(buf, ptr);
    // Keep JSON readers treating integral values as floats.
    if (s.find_first_of(".eE") == std::string::npos) s += ".0";
    return s;
}

std::string_view sweep_csv_header() { return kSweepHeader; }

std::string emit_sweep(const SweepResult& result, Format format) {
    std::ostringstream os;
    switch (format) {
        case Format::Csv:
            os << kSweepHeader << '\n';
            for (const auto& r : result.rows) {
                os << csv_field(r.kernel) << ',' << r.sparsity << ',' << r.m << ',' << r.c << ','
                   << csv_field(r.geometry) << ',' << r.instr << ',' << r.macs_effective << ',' << r.macs_dense_equiv
                   << ',' << format_double(r.macs_per_instr_core) << ',' << format_double(r.dense_equiv_per_instr_core) << ','
                   << format_double(r.inner_peak) << ',' << r.baseline << ',' << format_double(r.speedup) << ','
                   << r.alt_baseline << ',' << format_double(r.alt_speedup) << ',' << r.weight_bytes << ','
                   << r.tile_k << ',' << r.tile_oy << ',' << (r.bit_exact ? "true" : "false") << ','
                   << csv_field(r.status) << '\n';
            }
            break;
        case Format::Json: {
            ordered_json j;
            j["units"] = "instr";
            auto& rows = j["rows"] = ordered_json::array();
            for (const auto& r : result.rows) rows.push_back(row_json(r));
            j["violations"] = result.violations;
            os << dump_json(j);
            break;
        }
        case Format::Md:
            os << "| kernel | sparsity | C | instr | MACs/instr/core | dense-eq MACs/instr/core | inner peak | speedup | baseline "
                  "| alt speedup | weight bytes | exact |\n";
            os << "|---|---|---:|---:|---:|---:|---:|---:|---|---:|---:|---|\n";
            for (const auto& r : result.rows) {
                os << "| " << r.kernel << " | " << r.sparsity << " | " << r.c << " | " << r.instr << " | "
                   << format_double(r.macs_per_instr_core) << " | " << format_double(r.dense_equiv_per_instr_core) << " | "
                   << format_double(r.inner_peak) << " | " << format_double(r.speedup) << " | " << r.baseline
                   << " | " << (r.alt_baseline.empty() ? std::string("-") : format_double(r.alt_speedup)) << " | "
                   << r.weight_bytes << " | " << (r.bit_exact ? "yes" : "NO") << " |\n";
            }
            break;
    }
    return os.str();
}

std::vector<SweepRow> parse_sweep_csv(std::string_view text) {
    std::vector<SweepRow> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line) || line != kSweepHeader) throw Error("sweep CSV header mismatch");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 20) throw Error("sweep CSV row has " + std::to_string(f.size()) + " fields");
        SweepRow r;
        r.kernel = f[0];
        r.sparsity = f[1];
        r.m = parse_number<int>(f[2]);
        r.c = parse_number<int>(f[3]);
        r.geometry = f[4];
        r.instr = parse_number<std::uint64_t>(f[5]);
        r.macs_effective = parse_number<std::uint64_t>(f[6]);
        r.macs_dense_equiv = parse_number<std::uint64_t>(f[7]);
        r.macs_per_instr_core = parse_number<double>(f[8]);
        r.dense_equiv_per_instr_core = parse_number<double>(f[9]);
        r.inner_peak = parse_number<double>(f[10]);
        r.baseline = f[11];
        r.speedup = parse_number<double>(f[12]);
        r.alt_baseline = f[13];
        r.alt_speedup = parse_number<double>(f[14]);
        r.weight_bytes = parse_number<std::uint64_t>(f[15]);
        r.tile_k = parse_number<int>(f[16]);
        r.tile_oy = parse_number<int>(f[17]);
        r.bit_exact = f[18] == "true";
        r.status = f[19];
        rows.push_back(std::move(r));
    }
    return rows;
}

std::vector<SweepRow> parse_sweep_json(std::string_view text) {
    const auto j = nlohmann::json::parse(text);
    std::vector<SweepRow> rows;
    for (const auto& o : j.at("rows")) {
        SweepRow r;
        r.kernel = o.at("kernel").get<std::string>();
        r.sparsity = o.at("sparsity").get<std::string>();
        r.m = o.at("m").get<int>();
        r.c = o.at("c").get<int>();
        r.geometry = o.at("geometry").get<std::string>();
        r.instr = o.at("instr").get<std::uint64_t>();
        r.macs_effective = o.at("macs_effective").get<std::uint64_t>();
        r.macs_dense_equiv = o.at("macs_dense_equiv").get<std::uint64_t>();
        r.macs_per_instr_core = o.at("macs_per_instr_core").get<double>();
        r.dense_equiv_per_instr_core = o.at("dense_equiv_per_instr_core").get<double>();
        r.inner_peak = o.at("inner_peak").get<double>();
        r.baseline = o.at("baseline").get<std::string>();
        r.speedup = o.at("speedup").get<double>();
        r.alt_baseline = o.at("alt_baseline").get<std::string>();
        r.alt_speedup = o.at("alt_speedup").get<double>();
        r.weight_bytes = o.at("weight_bytes").get<std::uint64_t>();
        r.tile_k = o.at("tile_k").get<int>();
        r.tile_oy = o.at("tile_oy").get<int>();
        r.bit_exact = o.at("bit_exact").get<bool>();
        r.status = o.at("status").get<std::string>();
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string emit_network(const NetworkResult& result, Format format) {
    std::ostringstream os;
    switch (format) {
        case Format::Csv:
            os << "layer,kernel,sparsity,geometry,instr,baseline_instr,speedup,macs_dense_equiv,dense_weight_bytes,"
                  "weight_bytes,bit_exact\n";
            for (const auto& r : result.rows) {
                os << csv_field(r.name) << ',' << r.kernel << ',' << r.sparsity << ',' << csv_field(r.geometry) << ','
                   << r.instr << ',' << r.baseline_instr << ',' << format_double(r.speedup) << ','
                   << r.macs_dense_equiv << ',' << r.dense_weight_bytes << ',' << r.weight_bytes << ','
                   << (r.bit_exact ? "true" : "false") << '\n';
            }
            os << "total,,,," << result.total_instr << ',' << result.total_baseline_instr << ','
               << format_double(result.speedup) << ",," << result.dense_weight_bytes << ',' << result.weight_bytes
               << ",\n";
            break;
        case Format::Json: {
            ordered_json j;
            j["network"] = result.name;
            j["units"] = "instr";
            j["baseline"] = result.baseline;
            auto& rows = j["layers"] = ordered_json::array();
            for (const auto& r : result.rows) {
                rows.push_back({{"layer", r.name},
                                {"kernel", r.kernel},
                                {"sparsity", r.sparsity},
                                {"geometry", r.geometry},
                                {"instr", r.instr},
                                {"baseline_instr", r.baseline_instr},
                                {"speedup", r.speedup},
                                {"macs_dense_equiv", r.macs_dense_equiv},
                                {"dense_weight_bytes", r.dense_weight_bytes},
                                {"weight_bytes", r.weight_bytes},
                                {"bit_exact", r.bit_exact}});
            }
            j["total"] = {{"instr", result.total_instr},
                          {"baseline_instr", result.total_baseline_instr},
                          {"speedup", result.speedup},
                          {"dense_weight_bytes", result.dense_weight_bytes},
                          {"weight_bytes", result.weight_bytes}};
            j["violations"] = result.violations;
            os << dump_json(j);
            break;
        }
        case Format::Md:
            os << "| layer | kernel | sparsity | instr | baseline instr | speedup | weight bytes | dense weight bytes "
                  "| exact |\n";
            os << "|---|---|---|---:|---:|---:|---:|---:|---|\n";
            for (const auto& r : result.rows) {
                os << "| " << r.name << " | " << r.kernel << " | " << r.sparsity << " | " << r.instr << " | "
                   << r.baseline_instr << " | " << format_double(r.speedup) << " | " << r.weight_bytes << " | "
                   << r.dense_weight_bytes << " | " << (r.bit_exact ? "yes" : "NO") << " |\n";
            }
            os << "| **total** | | | " << result.total_instr << " | " << result.total_baseline_instr << " | "
               << format_double(result.speedup) << " | " << result.weight_bytes << " | " << result.dense_weight_bytes
               << " | |\n";
            break;
    }
    return os.str();
}

}  // namespace nmsparse::bench
