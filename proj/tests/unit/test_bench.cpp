#include <doctest.h>

#include <fstream>
#include <sstream>

#include "nmsparse/bench.hpp"
#include "nmsparse/error.hpp"

using namespace nmsparse;
using namespace nmsparse::bench;

namespace {

SweepConfig small_conv(std::uint64_t seed = 7) {
    SweepConfig c;
    c.kind = LayerKind::Conv;
    c.c_list = {16, 32};
    c.k = 16;
    c.seed = seed;
    return c;
}

SweepConfig small_fc(std::uint64_t seed = 7) {
    SweepConfig c;
    c.kind = LayerKind::Fc;
    c.c_list = {64};
    c.k = 16;
    c.seed = seed;
    return c;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE_MESSAGE(in.good(), "cannot open " << path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const SweepRow& find_row(const SweepResult& r, std::string_view kernel, std::string_view sparsity, int c) {
    for (const auto& row : r.rows) {
        if (row.kernel == kernel && row.sparsity == sparsity && row.c == c) return row;
    }
    FAIL("missing row " << kernel << " " << sparsity << " C=" << c);
    throw std::logic_error("unreachable");
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("sweep rows: coverage, exactness and invariants") {
    const auto r = sweep_single_layer(small_conv());
    CHECK(r.violations.empty());
    // Per C: two dense rows and SW/ISA for three patterns.
    CHECK(r.rows.size() == 2 * 8);
    for (const auto& row : r.rows) {
        CAPTURE(row.kernel);
        CHECK(row.bit_exact);
        CHECK(row.status == "ok");
        CHECK(row.baseline == "conv_dense_1x2");
        CHECK(row.dense_equiv_per_instr_core < row.inner_peak);
        CHECK(row.macs_dense_equiv == row.macs_effective * static_cast<std::uint64_t>(row.m));
    }
    CHECK(find_row(r, "conv_dense_1x2", "dense", 16).speedup == 1.0);
    CHECK(find_row(r, "conv_sparse_sw", "1:4", 32).speedup < 1.0);
    const double isa16 = find_row(r, "conv_sparse_isa", "1:16", 32).speedup;
    CHECK(isa16 > 1.0);
    CHECK(isa16 < 6.6);
}

TEST_CASE("sweep filters by sparsity and ISA mode") {
    auto c = small_fc();
    c.sparsities = {SparsityPattern::one_of(8)};
    c.isa = IsaMode::On;
    const auto r = sweep_single_layer(c);
    REQUIRE(r.rows.size() == 1);
    CHECK(r.rows[0].kernel == "fc_sparse_isa");
    CHECK(r.rows[0].baseline == "fc_dense");
    CHECK(r.rows[0].alt_baseline.empty());
    c.isa = IsaMode::Off;
    CHECK(sweep_single_layer(c).rows.at(0).kernel == "fc_sparse_sw");
}

TEST_CASE("infeasible tiling is reported per row") {
    auto c = small_conv();
    c.c_list = {16};
    c.tiler.l1_budget = 2048;
    const auto r = sweep_single_layer(c);
    for (const auto& row : r.rows) CHECK(row.status.rfind("tiling infeasible", 0) == 0);
}

TEST_CASE("same seed gives the same result and bytes") {
    const auto a = sweep_single_layer(small_conv(3));
    const auto b = sweep_single_layer(small_conv(3));
    CHECK(a.rows == b.rows);
    for (auto f : {Format::Csv, Format::Json, Format::Md}) CHECK(emit_sweep(a, f) == emit_sweep(b, f));
    auto seq = small_conv(3);
    seq.parallel = false;
    CHECK(sweep_single_layer(seq).rows == a.rows);
}

TEST_CASE("csv and json round-trip to the same rows") {
    auto r = sweep_single_layer(small_conv());
    const auto fc = sweep_single_layer(small_fc());
    r.rows.insert(r.rows.end(), fc.rows.begin(), fc.rows.end());
    const auto csv = emit_sweep(r, Format::Csv);
    const auto json = emit_sweep(r, Format::Json);
    CHECK(csv.rfind(std::string(sweep_csv_header()) + "\n", 0) == 0);
    const auto from_csv = parse_sweep_csv(csv);
    const auto from_json = parse_sweep_json(json);
    CHECK(from_csv == r.rows);
    CHECK(from_json == r.rows);
    CHECK(from_csv == from_json);
    CHECK(json.find("\"units\": \"instr\"") != std::string::npos);
    CHECK(csv.find("cycles") == std::string::npos);
}

TEST_CASE("markdown table has one line per row") {
    const auto r = sweep_single_layer(small_conv());
    const auto md = emit_sweep(r, Format::Md);
    std::istringstream in(md);
    std::string line;
    std::size_t table_rows = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.rfind("|---", 0) == 0) {
            header_seen = true;
            continue;
        }
        if (header_seen && line.rfind("| ", 0) == 0) ++table_rows;
    }
    CHECK(table_rows == r.rows.size());
}

TEST_CASE("seeded sweep matches the committed golden file") {
    SweepResult r = sweep_single_layer(small_conv());
    const auto fc = sweep_single_layer(small_fc());
    r.rows.insert(r.rows.end(), fc.rows.begin(), fc.rows.end());
    CHECK(emit_sweep(r, Format::Csv) == read_file(std::string(NMSPARSE_GOLDEN_DIR) + "/sweep_seed7.csv"));
}

TEST_CASE("float formatting is shortest round-trip") {
    CHECK(format_double(1.0) == "1.0");
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0 / 3.0) == "0.6666666666666666");
    CHECK(std::stod(format_double(1.0 / 7.0)) == 1.0 / 7.0);
}

TEST_CASE("report parsers reject malformed input") {
    CHECK_THROWS(parse_sweep_csv("not,a,header\n"));
    CHECK_THROWS(parse_sweep_json("{"));
}

TEST_CASE("single-layer network equals the single-layer runner") {
    const auto net = parse_network(R"({"name": "one", "layers": [
        {"name": "c", "kind": "conv", "ix": 8, "iy": 8, "c": 32, "k": 16, "f": 3, "pad": 1, "sparsity": "1:8"}]})");
    const auto nr = run_network(net);
    REQUIRE(nr.rows.size() == 1);
    CHECK(nr.violations.empty());
    auto c = small_conv();
    c.c_list = {32};
    c.sparsities = {SparsityPattern::one_of(8)};
    c.isa = IsaMode::On;
    const auto sr = sweep_single_layer(c);
    REQUIRE(sr.rows.size() == 1);
    CHECK(nr.rows[0].kernel == sr.rows[0].kernel);
    CHECK(nr.rows[0].instr == sr.rows[0].instr);
    CHECK(nr.rows[0].weight_bytes == sr.rows[0].weight_bytes);
    CHECK(nr.total_instr == sr.rows[0].instr);
    CHECK(nr.speedup == doctest::Approx(sr.rows[0].speedup));
}

TEST_CASE("reduced ResNet18 layer list") {
    const auto net = load_network(std::string(NMSPARSE_DATA_DIR) + "/resnet18_small.json");
    NetworkOptions o;
    o.sparsity_override = Sparsity{SparsityPattern::one_of(8)};
    const auto r8 = run_network(net, o);
    CHECK(r8.violations.empty());
    CHECK(3 * r8.weight_bytes < r8.dense_weight_bytes);
    for (const auto& row : r8.rows) {
        if (row.name.find("shortcut") != std::string::npos) CHECK(row.sparsity == "dense");
    }
    o.sparsity_override = Sparsity{SparsityPattern::one_of(4)};
    const auto r4 = run_network(net, o);
    o.sparsity_override = Sparsity{SparsityPattern::one_of(16)};
    const auto r16 = run_network(net, o);
    CHECK(r16.speedup > r8.speedup);
    CHECK(r8.speedup > r4.speedup);
    CHECK(r16.weight_bytes < r8.weight_bytes);
    const auto md = emit_network(r8, Format::Md);
    CHECK(md.find("**total**") != std::string::npos);
    CHECK(emit_network(r8, Format::Csv) == emit_network(run_network(net, [] {
                                                           NetworkOptions x;
                                                           x.sparsity_override = Sparsity{SparsityPattern::one_of(8)};
                                                           return x;
                                                       }()),
                                                       Format::Csv));
}

TEST_CASE("full-size layer list parses and chains") {
    const auto net = load_network(std::string(NMSPARSE_DATA_DIR) + "/resnet18.json");
    CHECK(net.layers.size() == 20);
    CHECK(net.layers.front().geometry.ix == 56);
    CHECK(net.layers.back().geometry.kind == LayerKind::Fc);
}

TEST_CASE("shape mismatches are rejected") {
    CHECK_THROWS_AS(parse_network(R"({"layers": [
        {"name": "a", "kind": "conv", "ix": 8, "iy": 8, "c": 8, "k": 16, "f": 3, "pad": 1},
        {"name": "b", "kind": "conv", "ix": 8, "iy": 8, "c": 8, "k": 16, "f": 3, "pad": 1}]})"),
                    KernelError);
    CHECK_THROWS_AS(parse_network(R"({"layers": [
        {"name": "a", "kind": "conv", "ix": 8, "iy": 8, "c": 8, "k": 16, "f": 3, "pad": 1},
        {"name": "f", "kind": "fc", "c": 100, "k": 10}]})"),
                    KernelError);
    CHECK_NOTHROW(parse_network(R"({"layers": [
        {"name": "a", "kind": "conv", "ix": 8, "iy": 8, "c": 8, "k": 16, "f": 3, "pad": 1},
        {"name": "f", "kind": "fc", "c": 1024, "k": 10}]})"));
    CHECK_THROWS_AS(parse_network(R"({"layers": [
        {"name": "a", "kind": "conv", "ix": 8, "iy": 8, "c": 8, "k": 16, "f": 3, "pad": 1},
        {"name": "b", "kind": "conv", "ix": 8, "iy": 8, "c": 16, "k": 16, "f": 3, "pad": 1, "from": "zz"}]})"),
                    KernelError);
    CHECK_THROWS_AS(parse_network(R"({"layers": []})"), KernelError);
    CHECK_THROWS_AS(parse_network("[1, 2"), KernelError);
    CHECK_THROWS_AS(parse_network(R"({"layers": [{"name": "a", "kind": "pool", "c": 3, "k": 3}]})"), KernelError);
}

}  // TEST_SUITE
