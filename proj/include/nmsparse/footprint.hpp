#pragma once

#include <cstdint>

#include "nmsparse/format.hpp"

namespace nmsparse {

/// Storage cost of a weight tensor in bits, relative to dense int8.
struct FootprintReport {
    std::uint64_t dense_bits = 0;
    std::uint64_t values_bits = 0;
    std::uint64_t index_bits = 0;
    std::uint64_t total_bits = 0;
    /// 1 - total/dense. Negative when the format costs more than dense.
    double reduction = 0.0;
};

FootprintReport footprint_dense(const WeightShape& shape);

/// Exact N:M cost: 8-bit values plus offset fields (doubled when replicated).
FootprintReport footprint_nm(const WeightShape& shape, SparsityPattern pattern, Layout layout);

/// COO: nnz * (8 + 2 * index_bits).
FootprintReport footprint_coo(const WeightShape& shape, double sparsity, int index_bits = 16);

/// CSR with rows = K: nnz * (8 + index_bits) + (K + 1) * index_bits.
FootprintReport footprint_csr(const WeightShape& shape, double sparsity, int index_bits = 16);

/// Sparsity at which COO storage equals dense int8 storage.
double coo_break_even_sparsity(int index_bits = 16);

/// Storage bits per dense-equivalent weight, e.g. 3.0 for 1:4 replicated.
double bits_per_dense_weight(SparsityPattern pattern, Layout layout);

}  // namespace nmsparse
