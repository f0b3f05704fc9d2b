#include "nmsparse/simd.hpp"

namespace nmsparse::simd::scalar {

std::int32_t dot_i8(const std::int8_t* a, const std::int8_t* b, std::size_t n) {
    std::int32_t acc = 0;
    for (std::size_t i = 0; i < n; ++i) acc += static_cast<std::int32_t>(a[i]) * b[i];
    return acc;
}

void decimate(const std::int8_t* act, const std::uint8_t* offsets, std::size_t count, int m, std::int8_t* out) {
    for (std::size_t i = 0; i < count; ++i) out[i] = act[i * static_cast<std::size_t>(m) + offsets[i]];
}

void requantize(const std::int32_t* acc, std::size_t n, int shift, std::int8_t* out) {
    for (std::size_t i = 0; i < n; ++i) out[i] = requantize_one(acc[i], shift);
}

}  // namespace nmsparse::simd::scalar
