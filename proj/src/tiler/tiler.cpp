#include "nmsparse/tiler.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "nmsparse/error.hpp"
#include "nmsparse/footprint.hpp"

namespace nmsparse {
namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

bool row_conforms(std::span<const std::int8_t> row, int m) {
    for (std::size_t base = 0; base < row.size(); base += static_cast<std::size_t>(m)) {
        const std::size_t end = std::min(row.size(), base + static_cast<std::size_t>(m));
        int nz = 0;
        for (std::size_t i = base; i < end; ++i) nz += row[i] != 0;
        if (nz > 1) return false;
    }
    return true;
}

int fields_per_channel(const NmSparseWeights& w) {
    const int nz = w.nz_per_channel();
    return w.layout == Layout::ReplicatedConv ? 2 * nz : nz;
}

}  // namespace

std::optional<SparsityPattern> recognize_pattern(const DenseWeights& dense) {
    for (int m : {16, 8, 4}) {
        bool ok = true;
        for (int k = 0; k < dense.shape.k && ok; ++k) ok = row_conforms(dense.row(k), m);
        if (ok) return SparsityPattern::one_of(m);
    }
    return std::nullopt;
}

double WeightFormat::bits_per_dense_weight() const {
    if (!pattern) return 8.0;
    return nmsparse::bits_per_dense_weight(*pattern, layout);
}

std::string WeightFormat::name() const {
    if (!pattern) return "dense";
    return pattern->name() + "/" + std::string(layout_name(layout));
}

TileConfig tile_footprint(const LayerGeometry& g, const WeightFormat& fmt, int tile_k, int tile_oy,
                          const TilerOptions& opts) {
    if (tile_k < 1 || tile_k > g.k || tile_oy < 1 || tile_oy > g.oy) throw TilingError("tile outside the layer");
    TileConfig t;
    t.tile_k = tile_k;
    t.tile_oy = tile_oy;
    t.tile_ox = g.ox;
    t.tile_c = g.c;
    t.n_tiles_k = static_cast<int>(ceil_div(static_cast<std::uint64_t>(g.k), static_cast<std::uint64_t>(tile_k)));
    t.n_tiles_oy = static_cast<int>(ceil_div(static_cast<std::uint64_t>(g.oy), static_cast<std::uint64_t>(tile_oy)));
    t.n_tiles_ox = 1;
    t.n_tiles_c = 1;
    // Halo rows are fetched again by every spatial tile.
    const auto in_rows = static_cast<std::uint64_t>(std::min(g.iy, (tile_oy - 1) * g.stride + g.fy));
    const auto in_cols = static_cast<std::uint64_t>(std::min(g.ix, (g.ox - 1) * g.stride + g.fx));
    t.input_tile_bytes = in_rows * in_cols * static_cast<std::uint64_t>(g.c);
    t.output_tile_bytes = static_cast<std::uint64_t>(tile_oy) * static_cast<std::uint64_t>(g.ox) *
                          static_cast<std::uint64_t>(tile_k);
    const double weight_bits = static_cast<double>(tile_k) * g.reduction() * fmt.bits_per_dense_weight();
    t.weight_tile_bytes = static_cast<std::uint64_t>(std::ceil(weight_bits / 8.0));
    t.im2col_bytes = g.kind == LayerKind::Conv
                         ? static_cast<std::uint64_t>(g.reduction()) * 2u * static_cast<std::uint64_t>(opts.n_cores)
                         : 0;
    const std::uint64_t buffered = t.input_tile_bytes + t.output_tile_bytes + t.weight_tile_bytes;
    t.double_buffer = opts.double_buffer;
    t.l1_bytes_used = buffered * (opts.double_buffer ? 2u : 1u) + t.im2col_bytes;
    t.l1_budget = opts.l1_budget;
    return t;
}

TileConfig plan_tiles(const LayerGeometry& g, const WeightFormat& fmt, const TilerOptions& opts) {
    g.validate();
    if (opts.n_cores < 1) throw TilingError("need at least one core");
    if (fmt.pattern) fmt.pattern->validate();
    // Interleaved FC tiles must not split a channel pair.
    const int k_step = fmt.pattern && fmt.layout == Layout::InterleavedFc && g.k > 1 ? 2 : 1;
    const int k_min = std::min(g.k, k_step);
    const TileConfig minimal = tile_footprint(g, fmt, k_min, 1, opts);
    if (minimal.l1_bytes_used > opts.l1_budget) {
        throw TilingError("layer " + g.describe() + " needs at least " + std::to_string(minimal.l1_bytes_used) +
                          " bytes of L1, budget is " + std::to_string(opts.l1_budget));
    }
    auto fits = [&](int k, int oy) { return tile_footprint(g, fmt, k, oy, opts).l1_bytes_used <= opts.l1_budget; };

    // The footprint is monotone in both extents, so binary search suffices.
    auto largest = [](int lo, int hi, auto&& ok) {
        while (lo < hi) {
            const int mid = lo + (hi - lo + 1) / 2;
            if (ok(mid)) {
                lo = mid;
            } else {
                hi = mid - 1;
            }
        }
        return lo;
    };
    int tile_k = g.k;
    if (!fits(g.k, 1)) {
        const int steps = largest(k_min / k_step, g.k / k_step, [&](int s) { return fits(s * k_step, 1); });
        tile_k = steps * k_step;
    }
    const int tile_oy = largest(1, g.oy, [&](int oy) { return fits(tile_k, oy); });
    return tile_footprint(g, fmt, tile_k, tile_oy, opts);
}

InterleavedImage layout_interleaved(const NmSparseWeights& sparse, const TileConfig& tiles) {
    return layout_interleaved(sparse, tiles.tile_k);
}

InterleavedImage layout_interleaved(const NmSparseWeights& sparse, int tile_k) {
    sparse.validate();
    const int k = sparse.shape.k;
    if (tile_k < 1) throw FormatError("tile_k must be positive");
    if (sparse.layout == Layout::InterleavedFc && tile_k % 2 != 0 && tile_k < k) {
        throw FormatError("interleaved FC tiles must hold whole channel pairs");
    }
    const int bits = sparse.pattern.offset_bits();
    const int npc = sparse.nz_per_channel();
    const int fpc = fields_per_channel(sparse);

    InterleavedImage out;
    out.plan.pattern = sparse.pattern;
    out.plan.shape = sparse.shape;
    out.plan.layout = sparse.layout;
    for (int k0 = 0; k0 < k; k0 += tile_k) {
        const int k1 = std::min(k, k0 + tile_k);
        StorageSegment seg;
        seg.k_begin = k0;
        seg.k_end = k1;
        seg.values_offset = out.bytes.size();
        seg.values_bytes = static_cast<std::uint64_t>(k1 - k0) * npc;
        const auto v0 = sparse.values.begin() + static_cast<std::ptrdiff_t>(k0) * npc;
        out.bytes.insert(out.bytes.end(), reinterpret_cast<const std::uint8_t*>(&*v0),
                         reinterpret_cast<const std::uint8_t*>(&*v0) + seg.values_bytes);

        const std::size_t f0 = static_cast<std::size_t>(k0) * fpc;
        const std::size_t nf = static_cast<std::size_t>(k1 - k0) * fpc;
        std::vector<std::uint8_t> fields(nf);
        for (std::size_t i = 0; i < nf; ++i) {
            fields[i] = static_cast<std::uint8_t>(extract_offset(sparse.offsets, f0 + i, bits));
        }
        const auto packed = pack_offsets(fields, bits);
        seg.offsets_offset = out.bytes.size();
        seg.offsets_bytes = packed.size();
        out.bytes.insert(out.bytes.end(), packed.begin(), packed.end());
        out.plan.segments.push_back(seg);
    }
    out.plan.total_bytes = out.bytes.size();
    return out;
}

NmSparseWeights read_interleaved(const StoragePlan& plan, std::span<const std::uint8_t> image) {
    if (image.size() != plan.total_bytes) throw FormatError("image size does not match its storage plan");
    NmSparseWeights w;
    w.pattern = plan.pattern;
    w.shape = plan.shape;
    w.layout = plan.layout;
    const int bits = plan.pattern.offset_bits();
    const int npc = w.nz_per_channel();
    const int fpc = fields_per_channel(w);
    std::vector<std::uint8_t> fields;
    int expect_k = 0;
    for (const auto& seg : plan.segments) {
        if (seg.k_begin != expect_k || seg.k_end <= seg.k_begin) throw FormatError("storage plan segments are not contiguous");
        if (seg.end() > image.size()) throw FormatError("storage segment outside the image");
        expect_k = seg.k_end;
        const auto* v = image.data() + seg.values_offset;
        for (std::uint64_t i = 0; i < seg.values_bytes; ++i) w.values.push_back(static_cast<std::int8_t>(v[i]));
        const auto nf = static_cast<std::size_t>(seg.k_end - seg.k_begin) * fpc;
        const auto unpacked = unpack_offsets(image.subspan(seg.offsets_offset, seg.offsets_bytes), nf, bits);
        fields.insert(fields.end(), unpacked.begin(), unpacked.end());
    }
    if (expect_k != plan.shape.k) throw FormatError("storage plan does not cover every channel");
    w.offsets = pack_offsets(fields, bits);
    w.validate();
    return w;
}

std::string tile_config_json(const TileConfig& cfg, const LayerGeometry& g, const WeightFormat& fmt) {
    nlohmann::ordered_json j;
    j["layer"] = g.describe();
    j["format"] = fmt.name();
    j["bits_per_dense_weight"] = fmt.bits_per_dense_weight();
    j["tile"] = {{"k", cfg.tile_k}, {"oy", cfg.tile_oy}, {"ox", cfg.tile_ox}, {"c", cfg.tile_c}};
    j["n_tiles"] = {{"k", cfg.n_tiles_k}, {"oy", cfg.n_tiles_oy}, {"ox", cfg.n_tiles_ox}, {"c", cfg.n_tiles_c}};
    j["bytes"] = {{"input", cfg.input_tile_bytes},     {"output", cfg.output_tile_bytes},
                  {"weights", cfg.weight_tile_bytes},  {"im2col", cfg.im2col_bytes},
                  {"l1_used", cfg.l1_bytes_used},      {"l1_budget", cfg.l1_budget}};
    j["double_buffer"] = cfg.double_buffer;
    return j.dump(2);
}

std::string storage_plan_json(const StoragePlan& plan) {
    nlohmann::ordered_json j;
    j["pattern"] = plan.pattern.name();
    j["layout"] = std::string(layout_name(plan.layout));
    j["k"] = plan.shape.k;
    j["total_bytes"] = plan.total_bytes;
    auto& segs = j["segments"] = nlohmann::ordered_json::array();
    for (const auto& s : plan.segments) {
        segs.push_back({{"k_begin", s.k_begin},
                        {"k_end", s.k_end},
                        {"values", {s.values_offset, s.values_bytes}},
                        {"offsets", {s.offsets_offset, s.offsets_bytes}}});
    }
    return j.dump(2);
}

}  // namespace nmsparse
