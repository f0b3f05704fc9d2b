#include <arm_neon.h>

#include "nmsparse/simd.hpp"

namespace nmsparse::simd::neon {

std::int32_t dot_i8(const std::int8_t* a, const std::int8_t* b, std::size_t n) {
    int32x4_t acc = vdupq_n_s32(0);
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const int8x16_t va = vld1q_s8(a + i);
        const int8x16_t vb = vld1q_s8(b + i);
        int16x8_t p = vmull_s8(vget_low_s8(va), vget_low_s8(vb));
        p = vmlal_s8(p, vget_high_s8(va), vget_high_s8(vb));  // |sum| <= 2 * 128 * 128
        acc = vpadalq_s16(acc, p);
    }
    std::int32_t total = vaddvq_s32(acc);
    for (; i < n; ++i) total += static_cast<std::int32_t>(a[i]) * b[i];
    return total;
}

void requantize(const std::int32_t* acc, std::size_t n, int shift, std::int8_t* out) {
    std::size_t i = 0;
    if (shift > 0) {
        // vrshlq with a negative count is a rounding shift right computed without
        // intermediate overflow, matching the 64-bit scalar path.
        const int32x4_t count = vdupq_n_s32(-shift);
        for (; i + 8 <= n; i += 8) {
            const int32x4_t lo = vrshlq_s32(vld1q_s32(acc + i), count);
            const int32x4_t hi = vrshlq_s32(vld1q_s32(acc + i + 4), count);
            const int16x8_t h = vcombine_s16(vqmovn_s32(lo), vqmovn_s32(hi));
            vst1_s8(out + i, vqmovn_s16(h));
        }
    } else {
        for (; i + 8 <= n; i += 8) {
            const int16x8_t h = vcombine_s16(vqmovn_s32(vld1q_s32(acc + i)), vqmovn_s32(vld1q_s32(acc + i + 4)));
            vst1_s8(out + i, vqmovn_s16(h));
        }
    }
    for (; i < n; ++i) out[i] = requantize_one(acc[i], shift);
}

}  // namespace nmsparse::simd::neon
