#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nmsparse/format.hpp"
#include "nmsparse/geometry.hpp"

namespace nmsparse {

/// Largest M in {16, 8, 4} such that every M-block of every row holds at
/// most one non-zero; nullopt when even 1:4 does not hold.
std::optional<SparsityPattern> recognize_pattern(const DenseWeights& dense);

/// Storage format of a layer's weights as seen by the tiler.
struct WeightFormat {
    std::optional<SparsityPattern> pattern;  ///< nullopt = dense int8
    Layout layout = Layout::Plain;

    static WeightFormat dense() { return {}; }
    static WeightFormat sparse(SparsityPattern p, Layout l) { return {p, l}; }
    double bits_per_dense_weight() const;
    std::string name() const;
};

struct TilerOptions {
    std::uint64_t l1_budget = 128 * 1024;
    int n_cores = 8;
    /// Input, output and weight tiles are held twice.
    bool double_buffer = true;
};

struct TileConfig {
    int tile_k = 0, tile_oy = 0, tile_ox = 0, tile_c = 0;
    int n_tiles_k = 0, n_tiles_oy = 0, n_tiles_ox = 0, n_tiles_c = 0;
    std::uint64_t input_tile_bytes = 0;
    std::uint64_t output_tile_bytes = 0;
    std::uint64_t weight_tile_bytes = 0;
    std::uint64_t im2col_bytes = 0;
    std::uint64_t l1_bytes_used = 0;
    std::uint64_t l1_budget = 0;
    bool double_buffer = true;
};

/// L1 bytes of a (tile_k, tile_oy) tile with full OX and C, recomputed from
/// scratch. Fills every byte field of the returned config.
TileConfig tile_footprint(const LayerGeometry& g, const WeightFormat& fmt, int tile_k, int tile_oy,
                          const TilerOptions& opts);

/// Greedy deterministic search: the largest tile_k that fits with a
/// one-row spatial tile, then the largest tile_oy for that tile_k. Throws
/// TilingError when the minimal tile does not fit.
TileConfig plan_tiles(const LayerGeometry& g, const WeightFormat& fmt, const TilerOptions& opts = {});

/// One K-tile of the L2 image: its values bytes immediately followed by its
/// offsets bytes.
struct StorageSegment {
    int k_begin = 0, k_end = 0;
    std::uint64_t values_offset = 0, values_bytes = 0;
    std::uint64_t offsets_offset = 0, offsets_bytes = 0;

    std::uint64_t end() const { return offsets_offset + offsets_bytes; }
};

struct StoragePlan {
    SparsityPattern pattern;
    WeightShape shape;
    Layout layout = Layout::Plain;
    std::vector<StorageSegment> segments;
    std::uint64_t total_bytes = 0;
};

struct InterleavedImage {
    StoragePlan plan;
    std::vector<std::uint8_t> bytes;
};

/// Splits K into tiles of `tile_k` channels (the last may be shorter). For
/// InterleavedFc, tile_k must be even. Each tile's offset fields are repacked
/// starting at bit 0 of its own range.
InterleavedImage layout_interleaved(const NmSparseWeights& sparse, int tile_k);
InterleavedImage layout_interleaved(const NmSparseWeights& sparse, const TileConfig& tiles);

/// Inverse of layout_interleaved.
NmSparseWeights read_interleaved(const StoragePlan& plan, std::span<const std::uint8_t> image);

std::string tile_config_json(const TileConfig& cfg, const LayerGeometry& g, const WeightFormat& fmt);
std::string storage_plan_json(const StoragePlan& plan);

}  // namespace nmsparse
