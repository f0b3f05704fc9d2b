#include <array>
#include <cstring>
#include <fstream>
#include <iterator>

#include "nmsparse/error.hpp"
#include "nmsparse/weight_file.hpp"

namespace nmsparse {
namespace {

constexpr std::array<char, 4> kMagic{'N', 'M', 'S', 'W'};
constexpr std::size_t kHeaderBytes = 4 + 2 + 1 + 1 + 1 + 4 + 1 + 1 + 4;

void put_u8(std::vector<std::uint8_t>& out, unsigned v) { out.push_back(static_cast<std::uint8_t>(v)); }

void put_u16(std::vector<std::uint8_t>& out, unsigned v) {
    put_u8(out, v & 0xFF);
    put_u8(out, (v >> 8) & 0xFF);
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) put_u8(out, (v >> (8 * i)) & 0xFF);
}

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint32_t u8() { return take(1); }
    std::uint32_t u16() { return take(2); }
    std::uint32_t u32() { return take(4); }

    std::span<const std::uint8_t> bytes(std::size_t n) {
        if (pos_ + n > bytes_.size()) throw FormatError("weight file truncated");
        auto s = bytes_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    std::uint32_t take(int n) {
        const auto s = bytes(static_cast<std::size_t>(n));
        std::uint32_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint32_t>(s[i]) << (8 * i);
        return v;
    }

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_weights(const NmSparseWeights& w) {
    w.validate();
    if (w.shape.fx > 255 || w.shape.fy > 255) throw FormatError("FX/FY do not fit in u8");
    std::vector<std::uint8_t> out;
    out.reserve(kHeaderBytes + w.values.size() + w.offsets.size());
    out.insert(out.end(), kMagic.begin(), kMagic.end());
    put_u16(out, kWeightFileVersion);
    put_u8(out, static_cast<unsigned>(w.layout));
    put_u8(out, static_cast<unsigned>(w.pattern.n));
    put_u8(out, static_cast<unsigned>(w.pattern.m));
    put_u32(out, static_cast<std::uint32_t>(w.shape.k));
    put_u8(out, static_cast<unsigned>(w.shape.fx));
    put_u8(out, static_cast<unsigned>(w.shape.fy));
    put_u32(out, static_cast<std::uint32_t>(w.shape.c));
    for (const auto v : w.values) out.push_back(static_cast<std::uint8_t>(v));
    out.insert(out.end(), w.offsets.begin(), w.offsets.end());
    return out;
}

NmSparseWeights deserialize_weights(std::span<const std::uint8_t> bytes) {
    Reader in(bytes);
    const auto magic = in.bytes(4);
    if (std::memcmp(magic.data(), kMagic.data(), 4) != 0) throw FormatError("bad magic, not an NMSW file");
    const auto version = in.u16();
    if (version != kWeightFileVersion) {
        throw FormatError("unsupported weight file version " + std::to_string(version));
    }
    NmSparseWeights w;
    const auto layout = in.u8();
    if (layout > static_cast<unsigned>(Layout::InterleavedFc)) throw FormatError("unknown layout id");
    w.layout = static_cast<Layout>(layout);
    w.pattern.n = static_cast<int>(in.u8());
    w.pattern.m = static_cast<int>(in.u8());
    w.pattern.validate();
    const auto k = in.u32();
    w.shape.fx = static_cast<int>(in.u8());
    w.shape.fy = static_cast<int>(in.u8());
    const auto c = in.u32();
    if (k > (1u << 24) || c > (1u << 24)) throw FormatError("implausible K or C in header");
    w.shape.k = static_cast<int>(k);
    w.shape.c = static_cast<int>(c);
    if (w.shape.fx < 1 || w.shape.fy < 1) throw FormatError("FX/FY must be positive");

    const auto nz = static_cast<std::size_t>(w.shape.k) * static_cast<std::size_t>(w.nz_per_channel());
    const auto values = in.bytes(nz);
    w.values.assign(values.begin(), values.end());
    const auto offsets = in.bytes(w.expected_offset_bytes());
    w.offsets.assign(offsets.begin(), offsets.end());
    if (in.remaining() != 0) throw FormatError("trailing bytes after weight payload");
    w.validate();
    return w;
}

void save_weights(const std::filesystem::path& path, const NmSparseWeights& weights) {
    const auto bytes = serialize_weights(weights);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

NmSparseWeights load_weights(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return deserialize_weights(bytes);
}

}  // namespace nmsparse
