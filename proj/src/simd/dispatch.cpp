#include <atomic>

#include "nmsparse/error.hpp"
#include "nmsparse/simd.hpp"

namespace nmsparse::simd {
namespace {

constexpr KernelTable kScalar{&scalar::dot_i8, &scalar::decimate, &scalar::requantize};
#if defined(NMSPARSE_HAVE_AVX2)
constexpr KernelTable kAvx2{&avx2::dot_i8, &avx2::decimate, &avx2::requantize};
#endif
#if defined(__aarch64__)
constexpr KernelTable kNeon{&neon::dot_i8, &scalar::decimate, &neon::requantize};
#endif

std::atomic<Isa>& active() {
    static std::atomic<Isa> isa{detect_isa()};
    return isa;
}

}  // namespace

std::string_view isa_name(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return "scalar";
        case Isa::Avx2: return "avx2";
        case Isa::Neon: return "neon";
    }
    return "unknown";
}

bool isa_available(Isa isa) {
    switch (isa) {
        case Isa::Scalar: return true;
        case Isa::Avx2:
#if defined(NMSPARSE_HAVE_AVX2)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Isa::Neon:
#if defined(__aarch64__)
            return true;
#else
            return false;
#endif
    }
    return false;
}

Isa detect_isa() {
    if (isa_available(Isa::Avx2)) return Isa::Avx2;
    if (isa_available(Isa::Neon)) return Isa::Neon;
    return Isa::Scalar;
}

Isa active_isa() { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) {
    if (!isa_available(isa)) throw Error("SIMD variant " + std::string(isa_name(isa)) + " is not available");
    active().store(isa, std::memory_order_relaxed);
}

const KernelTable& table(Isa isa) {
    switch (isa) {
#if defined(NMSPARSE_HAVE_AVX2)
        case Isa::Avx2: return kAvx2;
#endif
#if defined(__aarch64__)
        case Isa::Neon: return kNeon;
#endif
        default: return kScalar;
    }
}

std::int32_t dot_i8(std::span<const std::int8_t> a, std::span<const std::int8_t> b) {
    if (a.size() != b.size()) throw Error("dot_i8: length mismatch");
    return table(active_isa()).dot_i8(a.data(), b.data(), a.size());
}

void decimate(std::span<const std::int8_t> act, std::span<const std::uint8_t> offsets, int m,
              std::span<std::int8_t> out) {
    if (out.size() != offsets.size() || act.size() < offsets.size() * static_cast<std::size_t>(m)) {
        throw Error("decimate: buffer sizes do not match");
    }
    for (const auto o : offsets) {
        if (o >= m) throw Error("decimate: offset outside its block");
    }
    table(active_isa()).decimate(act.data(), offsets.data(), offsets.size(), m, out.data());
}

void requantize(std::span<const std::int32_t> acc, int shift, std::span<std::int8_t> out) {
    if (acc.size() != out.size()) throw Error("requantize: length mismatch");
    table(active_isa()).requantize(acc.data(), acc.size(), shift, out.data());
}

}  // namespace nmsparse::simd
