#include <algorithm>
#include <string>

#include "nmsparse/error.hpp"
#include "nmsparse/format.hpp"

namespace nmsparse {

SparsityPattern SparsityPattern::one_of(int m) {
    SparsityPattern p{1, m};
    p.validate();
    return p;
}

std::optional<SparsityPattern> SparsityPattern::parse(std::string_view text) {
    if (text == "1:4") return SparsityPattern{1, 4};
    if (text == "1:8") return SparsityPattern{1, 8};
    if (text == "1:16") return SparsityPattern{1, 16};
    return std::nullopt;
}

std::string SparsityPattern::name() const { return std::to_string(n) + ":" + std::to_string(m); }

void SparsityPattern::validate() const {
    if (n != 1 || (m != 4 && m != 8 && m != 16)) {
        throw FormatError("unsupported sparsity pattern " + name() + " (expected 1:4, 1:8 or 1:16)");
    }
}

std::string_view layout_name(Layout layout) {
    switch (layout) {
        case Layout::Plain: return "plain";
        case Layout::ReplicatedConv: return "replicated-conv";
        case Layout::InterleavedFc: return "interleaved-fc";
    }
    return "unknown";
}

DenseWeights::DenseWeights(WeightShape s)
    : shape(s), data(static_cast<std::size_t>(s.k) * static_cast<std::size_t>(s.reduction()), 0) {}

std::span<const std::int8_t> DenseWeights::row(int k) const {
    const auto r = static_cast<std::size_t>(shape.reduction());
    return std::span<const std::int8_t>(data).subspan(static_cast<std::size_t>(k) * r, r);
}

std::span<std::int8_t> DenseWeights::row(int k) {
    const auto r = static_cast<std::size_t>(shape.reduction());
    return std::span<std::int8_t>(data).subspan(static_cast<std::size_t>(k) * r, r);
}

int NmSparseWeights::nz_per_channel() const {
    return (shape.reduction() + pattern.m - 1) / pattern.m;
}

std::size_t NmSparseWeights::field_count() const {
    const auto nz = static_cast<std::size_t>(shape.k) * static_cast<std::size_t>(nz_per_channel());
    return layout == Layout::ReplicatedConv ? 2 * nz : nz;
}

std::size_t NmSparseWeights::expected_offset_bytes() const {
    return (field_count() * static_cast<std::size_t>(pattern.offset_bits()) + 7) / 8;
}

std::span<const std::int8_t> NmSparseWeights::channel_values(int k) const {
    const auto nz = static_cast<std::size_t>(nz_per_channel());
    return std::span<const std::int8_t>(values).subspan(static_cast<std::size_t>(k) * nz, nz);
}

void NmSparseWeights::validate() const {
    pattern.validate();
    if (shape.k < 0 || shape.fx < 1 || shape.fy < 1 || shape.c < 0) {
        throw FormatError("invalid weight shape");
    }
    const auto nz = static_cast<std::size_t>(shape.k) * static_cast<std::size_t>(nz_per_channel());
    if (values.size() != nz) {
        throw FormatError("values length " + std::to_string(values.size()) + " != expected " +
                          std::to_string(nz));
    }
    if (offsets.size() != expected_offset_bytes()) {
        throw FormatError("offsets length " + std::to_string(offsets.size()) + " != expected " +
                          std::to_string(expected_offset_bytes()));
    }
    const int bits = pattern.offset_bits();
    const auto fields = unpack_offsets(offsets, field_count(), bits);
    for (const auto f : fields) {
        if (f >= pattern.m) throw FormatError("offset field " + std::to_string(f) + " >= m");
    }
    if (layout == Layout::ReplicatedConv) {
        for (std::size_t i = 0; i < fields.size(); i += 2) {
            if (fields[i] != fields[i + 1]) {
                throw FormatError("replicated offsets differ at field " + std::to_string(i));
            }
        }
    }
    if (layout == Layout::InterleavedFc && shape.k % 2 != 0) {
        throw FormatError("interleaved fc layout requires an even K");
    }
    // A non-zero may not sit in the zero padding of the last block.
    const int r = shape.reduction();
    const int npc = nz_per_channel();
    if (r % pattern.m != 0) {
        const auto plain = plain_order_fields(*this);
        const int last = npc - 1;
        for (int k = 0; k < shape.k; ++k) {
            const auto idx = static_cast<std::size_t>(k) * npc + last;
            if (values[idx] != 0 && last * pattern.m + plain[idx] >= r) {
                throw FormatError("non-zero stored in the padding of channel " + std::to_string(k));
            }
        }
    }
}

// Bit packing ------------------------------------------------------------------

unsigned extract_offset(std::span<const std::uint8_t> packed, std::size_t field_index, int bits) {
    if (bits != 2 && bits != 4) throw FormatError("offset width must be 2 or 4 bits");
    const std::size_t bit = field_index * static_cast<std::size_t>(bits);
    if (bit >= 8 * packed.size()) {
        throw FormatError("offset field " + std::to_string(field_index) + " out of range");
    }
    const unsigned mask = (1u << bits) - 1u;
    return (packed[bit / 8] >> (bit % 8)) & mask;
}

std::vector<std::uint8_t> pack_offsets(std::span<const std::uint8_t> fields, int bits) {
    if (bits != 2 && bits != 4) throw FormatError("offset width must be 2 or 4 bits");
    const unsigned mask = (1u << bits) - 1u;
    std::vector<std::uint8_t> packed((fields.size() * static_cast<std::size_t>(bits) + 7) / 8, 0);
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] > mask) throw FormatError("offset value does not fit the field width");
        const std::size_t bit = i * static_cast<std::size_t>(bits);
        packed[bit / 8] = static_cast<std::uint8_t>(packed[bit / 8] | (fields[i] << (bit % 8)));
    }
    return packed;
}

std::vector<std::uint8_t> unpack_offsets(std::span<const std::uint8_t> packed, std::size_t count,
                                         int bits) {
    std::vector<std::uint8_t> fields(count);
    for (std::size_t i = 0; i < count; ++i) {
        fields[i] = static_cast<std::uint8_t>(extract_offset(packed, i, bits));
    }
    return fields;
}

// Layout transforms -------------------------------------------------------------

std::vector<std::uint8_t> plain_order_fields(const NmSparseWeights& w) {
    const int bits = w.pattern.offset_bits();
    const auto stored = unpack_offsets(w.offsets, w.field_count(), bits);
    const auto npc = static_cast<std::size_t>(w.nz_per_channel());
    const auto total = static_cast<std::size_t>(w.shape.k) * npc;
    std::vector<std::uint8_t> plain(total);
    switch (w.layout) {
        case Layout::Plain:
            return stored;
        case Layout::ReplicatedConv:
            for (std::size_t i = 0; i < total; ++i) plain[i] = stored[2 * i];
            return plain;
        case Layout::InterleavedFc:
            for (std::size_t k = 0; k < static_cast<std::size_t>(w.shape.k); ++k) {
                const std::size_t pair_base = (k / 2) * 2 * npc;
                for (std::size_t j = 0; j < npc; ++j) {
                    plain[k * npc + j] = stored[pair_base + 2 * j + (k % 2)];
                }
            }
            return plain;
    }
    throw FormatError("unknown layout");
}

NmSparseWeights compress_nm(const DenseWeights& dense, SparsityPattern pattern) {
    pattern.validate();
    const int r = dense.shape.reduction();
    if (dense.data.size() != static_cast<std::size_t>(dense.shape.k) * static_cast<std::size_t>(r)) {
        throw FormatError("dense tensor length does not match its shape");
    }
    NmSparseWeights out;
    out.pattern = pattern;
    out.shape = dense.shape;
    out.layout = Layout::Plain;
    const int npc = out.nz_per_channel();
    out.values.reserve(static_cast<std::size_t>(dense.shape.k) * npc);
    std::vector<std::uint8_t> fields;
    fields.reserve(out.values.capacity());
    for (int k = 0; k < dense.shape.k; ++k) {
        const auto row = dense.row(k);
        for (int b = 0; b < npc; ++b) {
            int count = 0;
            std::int8_t value = 0;
            std::uint8_t offset = 0;
            for (int o = 0; o < pattern.m; ++o) {
                const int i = b * pattern.m + o;
                if (i >= r || row[i] == 0) continue;
                ++count;
                value = row[i];
                offset = static_cast<std::uint8_t>(o);
            }
            if (count > pattern.n) {
                throw FormatError("channel " + std::to_string(k) + " block " + std::to_string(b) +
                                  " has " + std::to_string(count) + " non-zeros, pattern " +
                                  pattern.name() + " allows " + std::to_string(pattern.n));
            }
            out.values.push_back(value);
            fields.push_back(offset);
        }
    }
    out.offsets = pack_offsets(fields, pattern.offset_bits());
    return out;
}

DenseWeights decompress_nm(const NmSparseWeights& sparse) {
    if (sparse.layout != Layout::Plain) throw FormatError("decompress_nm expects the plain layout");
    sparse.validate();
    DenseWeights dense(sparse.shape);
    const int r = sparse.shape.reduction();
    const int npc = sparse.nz_per_channel();
    const int bits = sparse.pattern.offset_bits();
    for (int k = 0; k < sparse.shape.k; ++k) {
        auto row = dense.row(k);
        for (int b = 0; b < npc; ++b) {
            const auto idx = static_cast<std::size_t>(k) * npc + b;
            const int pos = b * sparse.pattern.m + static_cast<int>(extract_offset(sparse.offsets, idx, bits));
            if (pos < r) row[pos] = sparse.values[idx];
        }
    }
    return dense;
}

NmSparseWeights replicate_offsets(const NmSparseWeights& sparse) {
    if (sparse.layout != Layout::Plain) throw FormatError("replicate_offsets expects the plain layout");
    const auto fields = plain_order_fields(sparse);
    std::vector<std::uint8_t> doubled;
    doubled.reserve(2 * fields.size());
    for (const auto f : fields) {
        doubled.push_back(f);
        doubled.push_back(f);
    }
    NmSparseWeights out = sparse;
    out.layout = Layout::ReplicatedConv;
    out.offsets = pack_offsets(doubled, sparse.pattern.offset_bits());
    return out;
}

NmSparseWeights interleave_offsets_fc(const NmSparseWeights& sparse) {
    if (sparse.layout != Layout::Plain) {
        throw FormatError("interleave_offsets_fc expects the plain layout");
    }
    if (sparse.shape.k % 2 != 0) {
        throw FormatError("interleave_offsets_fc requires an even K (pad with pad_to_even_k)");
    }
    const auto fields = plain_order_fields(sparse);
    const auto npc = static_cast<std::size_t>(sparse.nz_per_channel());
    std::vector<std::uint8_t> inter(fields.size());
    for (std::size_t k = 0; k < static_cast<std::size_t>(sparse.shape.k); k += 2) {
        const std::size_t base = k * npc;
        for (std::size_t j = 0; j < npc; ++j) {
            inter[base + 2 * j] = fields[k * npc + j];
            inter[base + 2 * j + 1] = fields[(k + 1) * npc + j];
        }
    }
    NmSparseWeights out = sparse;
    out.layout = Layout::InterleavedFc;
    out.offsets = pack_offsets(inter, sparse.pattern.offset_bits());
    return out;
}

NmSparseWeights to_plain(const NmSparseWeights& sparse) {
    if (sparse.layout == Layout::Plain) return sparse;
    sparse.validate();
    NmSparseWeights out = sparse;
    out.layout = Layout::Plain;
    out.offsets = pack_offsets(plain_order_fields(sparse), sparse.pattern.offset_bits());
    return out;
}

NmSparseWeights pad_to_even_k(const NmSparseWeights& sparse) {
    if (sparse.shape.k % 2 == 0) return sparse;
    if (sparse.layout != Layout::Plain) throw FormatError("pad_to_even_k expects the plain layout");
    auto fields = plain_order_fields(sparse);
    const auto npc = static_cast<std::size_t>(sparse.nz_per_channel());
    NmSparseWeights out = sparse;
    out.shape.k += 1;
    out.values.resize(out.values.size() + npc, 0);
    fields.resize(fields.size() + npc, 0);
    out.offsets = pack_offsets(fields, sparse.pattern.offset_bits());
    return out;
}

std::vector<std::uint8_t> channel_offsets(const NmSparseWeights& plain, int k) {
    const auto npc = static_cast<std::size_t>(plain.nz_per_channel());
    const auto fields = plain_order_fields(plain);
    return {fields.begin() + static_cast<std::ptrdiff_t>(k * npc),
            fields.begin() + static_cast<std::ptrdiff_t>((k + 1) * npc)};
}

}  // namespace nmsparse
