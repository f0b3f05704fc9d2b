#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "nmsparse/format.hpp"

namespace nmsparse {

/// On-disk N:M weight file, little-endian:
///
///     "NMSW" | version u16 | layout u8 | n u8 | m u8 | K u32 | FX u8 | FY u8 |
///     C u32 | values[K * ceil(FX*FY*C / m)] | offsets[...]
///
/// The offsets length follows from the header and the layout.
inline constexpr std::uint16_t kWeightFileVersion = 1;

std::vector<std::uint8_t> serialize_weights(const NmSparseWeights& weights);
/// Parses and validates. Throws FormatError on any violation.
NmSparseWeights deserialize_weights(std::span<const std::uint8_t> bytes);

void save_weights(const std::filesystem::path& path, const NmSparseWeights& weights);
NmSparseWeights load_weights(const std::filesystem::path& path);

}  // namespace nmsparse
