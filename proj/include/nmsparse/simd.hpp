#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

// Host-side int8 arithmetic used by the functional references. Each routine
// has a portable scalar version and, where the build and CPU allow it, a
// vector version; `dispatch` picks one at runtime. All variants are
// bit-exact with the scalar one.
namespace nmsparse::simd {

enum class Isa { Scalar, Avx2, Neon };

std::string_view isa_name(Isa isa);

/// Best variant this binary was built with and the CPU supports.
Isa detect_isa();
/// Variant currently used by the dispatching entry points.
Isa active_isa();
/// Overrides the dispatch choice (tests). Throws if `isa` is unavailable.
void set_active_isa(Isa isa);
bool isa_available(Isa isa);

/// Round-to-nearest arithmetic right shift followed by a clamp to int8.
inline std::int8_t requantize_one(std::int32_t acc, int shift) {
    std::int64_t v = acc;
    if (shift > 0) v = (v + (std::int64_t{1} << (shift - 1))) >> shift;
    if (v > 127) v = 127;
    if (v < -128) v = -128;
    return static_cast<std::int8_t>(v);
}

struct KernelTable {
    std::int32_t (*dot_i8)(const std::int8_t* a, const std::int8_t* b, std::size_t n);
    /// out[i] = act[block_i * m + offset_i], block_i = i.
    void (*decimate)(const std::int8_t* act, const std::uint8_t* offsets, std::size_t count, int m,
                     std::int8_t* out);
    void (*requantize)(const std::int32_t* acc, std::size_t n, int shift, std::int8_t* out);
};

const KernelTable& table(Isa isa);

// Dispatching entry points.
std::int32_t dot_i8(std::span<const std::int8_t> a, std::span<const std::int8_t> b);
void decimate(std::span<const std::int8_t> act, std::span<const std::uint8_t> offsets, int m,
              std::span<std::int8_t> out);
void requantize(std::span<const std::int32_t> acc, int shift, std::span<std::int8_t> out);

namespace scalar {
std::int32_t dot_i8(const std::int8_t* a, const std::int8_t* b, std::size_t n);
void decimate(const std::int8_t* act, const std::uint8_t* offsets, std::size_t count, int m, std::int8_t* out);
void requantize(const std::int32_t* acc, std::size_t n, int shift, std::int8_t* out);
}  // namespace scalar

#if defined(NMSPARSE_HAVE_AVX2)
namespace avx2 {
std::int32_t dot_i8(const std::int8_t* a, const std::int8_t* b, std::size_t n);
void decimate(const std::int8_t* act, const std::uint8_t* offsets, std::size_t count, int m, std::int8_t* out);
void requantize(const std::int32_t* acc, std::size_t n, int shift, std::int8_t* out);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
std::int32_t dot_i8(const std::int8_t* a, const std::int8_t* b, std::size_t n);
void requantize(const std::int32_t* acc, std::size_t n, int shift, std::int8_t* out);
}  // namespace neon
#endif

}  // namespace nmsparse::simd
