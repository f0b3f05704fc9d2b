#include <cmath>

#include "nmsparse/error.hpp"
#include "nmsparse/footprint.hpp"

namespace nmsparse {
namespace {

FootprintReport make_report(std::uint64_t dense, std::uint64_t values, std::uint64_t index) {
    FootprintReport r;
    r.dense_bits = dense;
    r.values_bits = values;
    r.index_bits = index;
    r.total_bits = values + index;
    r.reduction = dense == 0 ? 0.0
                             : 1.0 - static_cast<double>(r.total_bits) / static_cast<double>(dense);
    return r;
}

std::uint64_t dense_elements(const WeightShape& s) {
    return static_cast<std::uint64_t>(s.k) * static_cast<std::uint64_t>(s.reduction());
}

std::uint64_t nnz_for(const WeightShape& s, double sparsity) {
    if (!(sparsity >= 0.0 && sparsity <= 1.0)) throw FormatError("sparsity must lie in [0, 1]");
    return static_cast<std::uint64_t>(std::llround((1.0 - sparsity) * static_cast<double>(dense_elements(s))));
}

}  // namespace

FootprintReport footprint_dense(const WeightShape& shape) {
    const auto bits = 8 * dense_elements(shape);
    return make_report(bits, bits, 0);
}

FootprintReport footprint_nm(const WeightShape& shape, SparsityPattern pattern, Layout layout) {
    pattern.validate();
    const auto npc = static_cast<std::uint64_t>((shape.reduction() + pattern.m - 1) / pattern.m);
    const auto nz = static_cast<std::uint64_t>(shape.k) * npc;
    const std::uint64_t fields_per_nz = layout == Layout::ReplicatedConv ? 2 : 1;
    return make_report(8 * dense_elements(shape), 8 * nz,
                       nz * fields_per_nz * static_cast<std::uint64_t>(pattern.offset_bits()));
}

FootprintReport footprint_coo(const WeightShape& shape, double sparsity, int index_bits) {
    const auto nnz = nnz_for(shape, sparsity);
    return make_report(8 * dense_elements(shape), 8 * nnz,
                       nnz * 2 * static_cast<std::uint64_t>(index_bits));
}

FootprintReport footprint_csr(const WeightShape& shape, double sparsity, int index_bits) {
    const auto nnz = nnz_for(shape, sparsity);
    const auto ib = static_cast<std::uint64_t>(index_bits);
    return make_report(8 * dense_elements(shape), 8 * nnz,
                       nnz * ib + (static_cast<std::uint64_t>(shape.k) + 1) * ib);
}

double coo_break_even_sparsity(int index_bits) { return 1.0 - 8.0 / (8.0 + 2.0 * index_bits); }

double bits_per_dense_weight(SparsityPattern pattern, Layout layout) {
    pattern.validate();
    const int fields = layout == Layout::ReplicatedConv ? 2 : 1;
    return static_cast<double>(8 + fields * pattern.offset_bits()) / pattern.m;
}

}  // namespace nmsparse
