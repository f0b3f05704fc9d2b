#include <immintrin.h>

#include "nmsparse/simd.hpp"

namespace nmsparse::simd::avx2 {

std::int32_t dot_i8(const std::int8_t* a, const std::int8_t* b, std::size_t n) {
    __m256i acc = _mm256_setzero_si256();
    std::size_t i = 0;
    for (; i + 16 <= n; i += 16) {
        const __m256i va = _mm256_cvtepi8_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(a + i)));
        const __m256i vb = _mm256_cvtepi8_epi16(_mm_loadu_si128(reinterpret_cast<const __m128i*>(b + i)));
        // Pairwise i16 products summed into i32: no overflow for int8 inputs.
        acc = _mm256_add_epi32(acc, _mm256_madd_epi16(va, vb));
    }
    __m128i sum = _mm_add_epi32(_mm256_castsi256_si128(acc), _mm256_extracti128_si256(acc, 1));
    sum = _mm_add_epi32(sum, _mm_shuffle_epi32(sum, _MM_SHUFFLE(1, 0, 3, 2)));
    sum = _mm_add_epi32(sum, _mm_shuffle_epi32(sum, _MM_SHUFFLE(2, 3, 0, 1)));
    std::int32_t total = _mm_cvtsi128_si32(sum);
    for (; i < n; ++i) total += static_cast<std::int32_t>(a[i]) * b[i];
    return total;
}

void decimate(const std::int8_t* act, const std::uint8_t* offsets, std::size_t count, int m, std::int8_t* out) {
    const __m256i lane = _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);
    const __m256i stride = _mm256_set1_epi32(m);
    std::size_t i = 0;
    // A 32-bit gather reads 3 bytes past each element; stop the vector loop
    // while the furthest read stays inside the last block.
    const std::size_t safe = count >= 1 ? count - 1 : 0;
    for (; i + 8 <= safe; i += 8) {
        const __m256i off = _mm256_cvtepu8_epi32(_mm_loadl_epi64(reinterpret_cast<const __m128i*>(offsets + i)));
        const __m256i base = _mm256_mullo_epi32(_mm256_add_epi32(lane, _mm256_set1_epi32(static_cast<int>(i))), stride);
        const __m256i idx = _mm256_add_epi32(base, off);
        const __m256i words = _mm256_i32gather_epi32(reinterpret_cast<const int*>(act), idx, 1);
        const __m256i bytes = _mm256_and_si256(words, _mm256_set1_epi32(0xFF));
        const __m256i packed16 = _mm256_packus_epi32(bytes, bytes);
        const __m256i packed8 = _mm256_packus_epi16(packed16, packed16);
        const auto lo = static_cast<std::uint32_t>(_mm256_extract_epi32(packed8, 0));
        const auto hi = static_cast<std::uint32_t>(_mm256_extract_epi32(packed8, 4));
        for (int b = 0; b < 4; ++b) {
            out[i + static_cast<std::size_t>(b)] = static_cast<std::int8_t>(lo >> (8 * b));
            out[i + 4 + static_cast<std::size_t>(b)] = static_cast<std::int8_t>(hi >> (8 * b));
        }
    }
    for (; i < count; ++i) out[i] = act[i * static_cast<std::size_t>(m) + offsets[i]];
}

void requantize(const std::int32_t* acc, std::size_t n, int shift, std::int8_t* out) {
    std::size_t i = 0;
    const __m256i round = _mm256_set1_epi32(shift > 0 ? 1 << (shift - 1) : 0);
    const __m128i count = _mm_cvtsi32_si128(shift);
    for (; i + 8 <= n; i += 8) {
        __m256i v = _mm256_loadu_si256(reinterpret_cast<const __m256i*>(acc + i));
        // Same result as the 64-bit scalar path unless acc + round overflows,
        // which the scalar fallback below handles.
        const __m256i sum = _mm256_add_epi32(v, round);
        const __m256i overflow = _mm256_andnot_si256(_mm256_xor_si256(v, round), _mm256_xor_si256(v, sum));
        if (_mm256_movemask_ps(_mm256_castsi256_ps(overflow)) != 0) break;
        v = _mm256_sra_epi32(sum, count);
        v = _mm256_min_epi32(_mm256_max_epi32(v, _mm256_set1_epi32(-128)), _mm256_set1_epi32(127));
        const __m256i p16 = _mm256_packs_epi32(v, v);
        const __m256i p8 = _mm256_packs_epi16(p16, p16);
        const auto lo = static_cast<std::uint32_t>(_mm256_extract_epi32(p8, 0));
        const auto hi = static_cast<std::uint32_t>(_mm256_extract_epi32(p8, 4));
        for (int b = 0; b < 4; ++b) {
            out[i + static_cast<std::size_t>(b)] = static_cast<std::int8_t>(lo >> (8 * b));
            out[i + 4 + static_cast<std::size_t>(b)] = static_cast<std::int8_t>(hi >> (8 * b));
        }
    }
    for (; i < n; ++i) out[i] = requantize_one(acc[i], shift);
}

}  // namespace nmsparse::simd::avx2
