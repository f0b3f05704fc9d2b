#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nmsparse {

/// 1:M semi-structured sparsity. Offsets are block-relative, so M=16 still
/// fits in 4 bits.
struct SparsityPattern {
    int n = 1;
    int m = 4;

    static SparsityPattern one_of(int m);
    /// Parses "1:4", "1:8" or "1:16".
    static std::optional<SparsityPattern> parse(std::string_view text);

    int offset_bits() const { return m == 4 ? 2 : 4; }
    std::string name() const;
    void validate() const;

    bool operator==(const SparsityPattern&) const = default;
};

enum class Layout : std::uint8_t {
    Plain = 0,           ///< one offset field per NZ value
    ReplicatedConv = 1,  ///< each field stored twice, for the two-patch conv loop
    InterleavedFc = 2,   ///< fields of channels (i, i+1) alternated block by block
};

std::string_view layout_name(Layout layout);

/// K filters of FX*FY*C weights each.
struct WeightShape {
    int k = 0;
    int fx = 1, fy = 1, c = 0;

    int reduction() const { return fx * fy * c; }
    bool operator==(const WeightShape&) const = default;
};

/// Dense int8 weights, K rows of FX*FY*C, row-major.
struct DenseWeights {
    WeightShape shape;
    std::vector<std::int8_t> data;

    DenseWeights() = default;
    explicit DenseWeights(WeightShape s);

    std::span<const std::int8_t> row(int k) const;
    std::span<std::int8_t> row(int k);
};

/// Compressed 1:M weight tensor.
///
/// `values` holds ceil(R/M) entries per output channel, channel-major.
/// `offsets` is a bit-packed array of `offset_bits`-wide fields, LSB-first
/// within each byte; field order depends on `layout`.
struct NmSparseWeights {
    SparsityPattern pattern;
    WeightShape shape;
    Layout layout = Layout::Plain;
    std::vector<std::int8_t> values;
    std::vector<std::uint8_t> offsets;

    /// Non-zeros stored per output channel.
    int nz_per_channel() const;
    /// Number of stored offset fields (2x the values for ReplicatedConv).
    std::size_t field_count() const;
    std::size_t expected_offset_bytes() const;

    std::span<const std::int8_t> channel_values(int k) const;

    /// Checks array lengths, field ranges and layout-specific structure.
    void validate() const;
};

// Bit-packed offset fields ----------------------------------------------

/// Returns the `field_index`-th `bits`-wide field (LSB-first packing).
unsigned extract_offset(std::span<const std::uint8_t> packed, std::size_t field_index, int bits);

std::vector<std::uint8_t> pack_offsets(std::span<const std::uint8_t> fields, int bits);
std::vector<std::uint8_t> unpack_offsets(std::span<const std::uint8_t> packed, std::size_t count,
                                         int bits);

// Format operations --------------------------------------------------------

/// Compresses a pruned dense tensor. Throws FormatError when a block holds
/// more than one non-zero.
NmSparseWeights compress_nm(const DenseWeights& dense, SparsityPattern pattern);

/// Inverse of compress_nm. Requires Plain layout.
DenseWeights decompress_nm(const NmSparseWeights& sparse);

/// Plain -> ReplicatedConv: every field written twice in a row.
NmSparseWeights replicate_offsets(const NmSparseWeights& sparse);

/// Plain -> InterleavedFc. K must be even.
NmSparseWeights interleave_offsets_fc(const NmSparseWeights& sparse);

/// Converts any layout back to Plain.
NmSparseWeights to_plain(const NmSparseWeights& sparse);

/// Appends an all-zero output channel when K is odd.
NmSparseWeights pad_to_even_k(const NmSparseWeights& sparse);

/// Offset fields of every NZ value in plain (channel-major) order, whatever
/// the stored layout.
std::vector<std::uint8_t> plain_order_fields(const NmSparseWeights& w);

/// Plain-layout offset fields of one output channel.
std::vector<std::uint8_t> channel_offsets(const NmSparseWeights& plain, int k);

}  // namespace nmsparse
