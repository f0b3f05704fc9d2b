#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "nmsparse/emu.hpp"
#include "nmsparse/format.hpp"
#include "nmsparse/kernels.hpp"

namespace nmsparse::detail {

/// Bump allocator over the emulated L1. Every region gets 8 bytes of slack
/// so word loads that straddle the end stay in bounds.
class L1Layout {
public:
    std::uint32_t alloc(std::size_t bytes);
    std::uint32_t size() const { return next_; }

private:
    std::uint32_t next_ = 0;
};

/// Offset fields regrouped into `rows` rows of `fields_per_row` fields in
/// stored order, each row starting on a fresh byte.
struct OffsetRows {
    std::vector<std::uint8_t> bytes;
    std::uint32_t row_bytes = 0;
};
OffsetRows offset_rows(const NmSparseWeights& w, int rows, int fields_per_row);

void put_bytes(std::vector<std::uint8_t>& mem, std::uint32_t addr, std::span<const std::int8_t> src);
void put_bytes(std::vector<std::uint8_t>& mem, std::uint32_t addr, std::span<const std::uint8_t> src);
void put_i32(std::vector<std::uint8_t>& mem, std::uint32_t addr, std::span<const std::int32_t> src);

/// Bias of channels [0, k) in a flat vector (zeros when none is given).
std::vector<std::int32_t> bias_vector(const QuantParams& q, int k);

/// Rounds, shifts, clips and stores the accumulator register.
void requant_store(emu::Emitter& e, unsigned acc, const QuantParams& q, std::uint32_t out_addr);

/// Loads two accumulators with the channel bias.
void load_bias_pair(emu::Emitter& e, unsigned acc_a, unsigned acc_b, std::uint32_t bias_addr);

struct CoreProgram {
    /// Emits the whole program of one core and returns its effective MACs.
    std::function<std::uint64_t(emu::Emitter&, const WorkSplit&)> emit;
    /// Copies the core's part of the output out of its L1.
    std::function<void(const emu::CoreState&, const WorkSplit&)> collect;
};

/// Runs one program per split on a private copy of `l1_image` and
/// aggregates the cost.
CostReport run_cores(const std::vector<WorkSplit>& splits, const std::vector<std::uint8_t>& l1_image,
                     const CoreProgram& program, const RunOptions& opts, int m);

void check_input(std::span<const std::int8_t> input, const LayerGeometry& g, LayerKind kind);
void check_dense(const DenseWeights& w, const LayerGeometry& g);
void check_sparse(const NmSparseWeights& w, const LayerGeometry& g, Layout layout, bool allow_k_pad);

}  // namespace nmsparse::detail
