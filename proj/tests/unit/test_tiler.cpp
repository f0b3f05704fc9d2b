#include <doctest.h>

#include <json.hpp>

#include "nmsparse/error.hpp"
#include "nmsparse/random_layers.hpp"
#include "nmsparse/tiler.hpp"
#include "tiler_oracle.hpp"

using namespace nmsparse;

TEST_SUITE("tiler") {

TEST_CASE("bits per dense weight of every format") {
    CHECK(WeightFormat::dense().bits_per_dense_weight() == 8.0);
    CHECK(WeightFormat::sparse(SparsityPattern::one_of(4), Layout::ReplicatedConv).bits_per_dense_weight() == 3.0);
    CHECK(WeightFormat::sparse(SparsityPattern::one_of(8), Layout::ReplicatedConv).bits_per_dense_weight() == 2.0);
    CHECK(WeightFormat::sparse(SparsityPattern::one_of(16), Layout::InterleavedFc).bits_per_dense_weight() == 0.75);
    CHECK(WeightFormat::sparse(SparsityPattern::one_of(8), Layout::Plain).name() == "1:8/plain");
}

TEST_CASE("random plans fit their budget on recomputation") {
    Rng rng(2024);
    int feasible = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto c = testsupport::random_tiling_case(rng);
        CAPTURE(c.g.describe());
        CAPTURE(c.fmt.name());
        try {
            const TileConfig t = plan_tiles(c.g, c.fmt, c.opts);
            ++feasible;
            const auto used = testsupport::recompute_l1(c.g, c.fmt, t.tile_k, t.tile_oy, c.opts);
            CHECK(used == t.l1_bytes_used);
            CHECK(used <= c.opts.l1_budget);
            CHECK(t.n_tiles_k * t.tile_k >= c.g.k);
            CHECK(t.n_tiles_oy * t.tile_oy >= c.g.oy);
            if (c.fmt.layout == Layout::InterleavedFc && c.fmt.pattern && t.tile_k < c.g.k) CHECK(t.tile_k % 2 == 0);
            // Greedy maximality: one more K channel (or OY row) would overflow.
            if (t.tile_k < c.g.k) {
                const int step = c.fmt.layout == Layout::InterleavedFc && c.fmt.pattern ? 2 : 1;
                const int next = std::min(c.g.k, t.tile_k + step);
                CHECK(testsupport::recompute_l1(c.g, c.fmt, next, 1, c.opts) > c.opts.l1_budget);
            }
            if (t.tile_oy < c.g.oy) {
                CHECK(testsupport::recompute_l1(c.g, c.fmt, t.tile_k, t.tile_oy + 1, c.opts) > c.opts.l1_budget);
            }
        } catch (const TilingError&) {
            const int kmin = c.fmt.layout == Layout::InterleavedFc && c.fmt.pattern ? std::min(2, c.g.k) : 1;
            CHECK(testsupport::recompute_l1(c.g, c.fmt, kmin, 1, c.opts) > c.opts.l1_budget);
        }
    }
    CHECK(feasible > 60);
}

TEST_CASE("sparser formats never get smaller K tiles") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        auto c = testsupport::random_tiling_case(rng);
        const Layout l = c.g.kind == LayerKind::Conv ? Layout::ReplicatedConv : Layout::InterleavedFc;
        const auto s16 = WeightFormat::sparse(SparsityPattern::one_of(16), l);
        TileConfig dense;
        try {
            dense = plan_tiles(c.g, WeightFormat::dense(), c.opts);
        } catch (const TilingError&) {
            continue;
        }
        const TileConfig sparse = plan_tiles(c.g, s16, c.opts);
        CHECK(sparse.tile_k >= dense.tile_k);
    }
}

TEST_CASE("double buffering doubles the tile memory") {
    const auto g = LayerGeometry::conv(16, 16, 64, 64, 3, 3, 1, 1);
    TilerOptions on, off;
    off.double_buffer = false;
    const auto a = tile_footprint(g, WeightFormat::dense(), 8, 2, on);
    const auto b = tile_footprint(g, WeightFormat::dense(), 8, 2, off);
    CHECK(a.l1_bytes_used - a.im2col_bytes == 2 * (b.l1_bytes_used - b.im2col_bytes));
    CHECK(a.im2col_bytes == 576u * 2 * 8);
    CHECK(a.input_tile_bytes == 4u * 16 * 64);  // two output rows need four input rows
    CHECK(a.weight_tile_bytes == 8u * 576);
}

TEST_CASE("infeasible layers report the minimal requirement") {
    const auto g = LayerGeometry::conv(64, 64, 256, 64, 3, 3, 1, 1);
    TilerOptions tiny;
    tiny.l1_budget = 1024;
    CHECK_THROWS_WITH_AS(plan_tiles(g, WeightFormat::dense(), tiny), doctest::Contains("needs at least"), TilingError);
}

TEST_CASE("interleaved storage round-trips under every tiling") {
    Rng rng(31);
    for (int trial = 0; trial < 60; ++trial) {
        const int m = 4 << rng.below(3);
        const auto p = SparsityPattern::one_of(m);
        const int k = static_cast<int>(rng.between(1, 24));
        const WeightShape shape{k, 3, 3, static_cast<int>(rng.between(1, 20))};
        const auto plain = compress_nm(random_nm_dense(rng, shape, p), p);
        std::vector<NmSparseWeights> variants{plain, replicate_offsets(plain)};
        if (k % 2 == 0) variants.push_back(interleave_offsets_fc(plain));
        for (const auto& w : variants) {
            for (int tile_k = 1; tile_k <= k + 1; ++tile_k) {
                if (w.layout == Layout::InterleavedFc && tile_k % 2 == 1 && tile_k < k) continue;
                const auto img = layout_interleaved(w, tile_k);
                const auto& segs = img.plan.segments;
                REQUIRE(!segs.empty());
                CHECK(segs.front().values_offset == 0);
                for (std::size_t i = 0; i < segs.size(); ++i) {
                    CHECK(segs[i].offsets_offset == segs[i].values_offset + segs[i].values_bytes);
                    if (i + 1 < segs.size()) CHECK(segs[i + 1].values_offset == segs[i].end());
                }
                CHECK(segs.back().end() == img.bytes.size());
                const auto back = read_interleaved(img.plan, img.bytes);
                REQUIRE(back.values == w.values);
                REQUIRE(back.offsets == w.offsets);
                REQUIRE(back.layout == w.layout);
            }
        }
        CHECK_THROWS_AS(layout_interleaved(plain, 0), FormatError);
    }
}

TEST_CASE("storage plan from a tile config") {
    const auto g = LayerGeometry::conv(8, 8, 64, 64, 3, 3, 1, 1);
    const auto fmt = WeightFormat::sparse(SparsityPattern::one_of(8), Layout::ReplicatedConv);
    TilerOptions opts;
    opts.l1_budget = tile_footprint(g, fmt, 32, g.oy, opts).l1_bytes_used;
    const auto t = plan_tiles(g, fmt, opts);
    CHECK(t.tile_k >= 32);
    CHECK(t.tile_k < 64);
    Rng rng(1);
    const auto p = SparsityPattern::one_of(8);
    const auto w = replicate_offsets(compress_nm(random_nm_dense(rng, WeightShape{64, 3, 3, 64}, p), p));
    const auto img = layout_interleaved(w, t);
    CHECK(static_cast<int>(img.plan.segments.size()) == t.n_tiles_k);
    const auto j = nlohmann::json::parse(storage_plan_json(img.plan));
    CHECK(j["segments"].size() == img.plan.segments.size());
    CHECK(j["total_bytes"].get<std::uint64_t>() == img.bytes.size());
    const auto tj = nlohmann::json::parse(tile_config_json(t, g, fmt));
    CHECK(tj["tile"]["k"].get<int>() == t.tile_k);
    CHECK(tj["bytes"]["l1_used"].get<std::uint64_t>() == t.l1_bytes_used);
    // A tile's segment holds its values and offsets back to back.
    const auto& s0 = img.plan.segments.front();
    CHECK(s0.values_bytes == static_cast<std::uint64_t>(t.tile_k) * w.nz_per_channel());
    CHECK(s0.offsets_bytes == static_cast<std::uint64_t>(t.tile_k) * w.nz_per_channel() * 2 * 4 / 8);
}

TEST_CASE("pattern recognition returns the coarsest block size that holds") {
    Rng rng(12);
    for (int trial = 0; trial < 60; ++trial) {
        const int m = 4 << rng.below(3);
        const auto p = SparsityPattern::one_of(m);
        const WeightShape shape{static_cast<int>(rng.between(1, 8)), 1, 1, static_cast<int>(rng.between(16, 64))};
        const auto dense = decompress_nm(compress_nm(random_nm_dense(rng, shape, p), p));
        const auto found = recognize_pattern(dense);
        REQUIRE(found);
        CHECK(found->m >= m);
    }
    DenseWeights full(WeightShape{1, 1, 1, 8});
    for (auto& v : full.data) v = 1;
    CHECK_FALSE(recognize_pattern(full));
    DenseWeights zero(WeightShape{2, 1, 1, 40});
    CHECK(recognize_pattern(zero)->m == 16);
}

}  // TEST_SUITE
