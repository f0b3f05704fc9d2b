#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "nmsparse/emu.hpp"
#include "nmsparse/format.hpp"
#include "nmsparse/geometry.hpp"

namespace nmsparse {

/// int32 -> int8 output stage shared by every kernel and reference:
/// out = clamp((acc + bias + round) >> shift, -128, 127), round = 2^(shift-1).
struct QuantParams {
    int shift = 0;
    /// Per-output-channel bias; empty means zero.
    std::vector<std::int32_t> bias;

    std::int32_t bias_for(int k) const { return bias.empty() ? 0 : bias[static_cast<std::size_t>(k)]; }
    void validate(int k) const;
};

enum class KernelId : std::uint8_t {
    ConvDense4x2,
    ConvDense1x2,
    ConvSparseSw,
    ConvSparseIsa,
    FcDense,
    FcSparseSw,
    FcSparseIsa,
};

inline constexpr std::array<KernelId, 7> kAllKernels{
    KernelId::ConvDense4x2, KernelId::ConvDense1x2, KernelId::ConvSparseSw, KernelId::ConvSparseIsa,
    KernelId::FcDense,      KernelId::FcSparseSw,   KernelId::FcSparseIsa};

std::string_view kernel_name(KernelId id);
std::optional<KernelId> parse_kernel(std::string_view name);
bool is_sparse(KernelId id);
bool uses_xdecimate(KernelId id);
LayerKind kernel_kind(KernelId id);
/// Weight layout a sparse kernel consumes.
Layout required_layout(KernelId id);

struct CoreCost {
    int core = 0;
    std::uint64_t instructions = 0;
    std::uint64_t macs = 0;
};

/// Instruction-count cost of one kernel run.
struct CostReport {
    /// Instructions of the most loaded core (the cluster finishes with it).
    std::uint64_t instructions = 0;
    /// Sum over all cores.
    std::uint64_t total_instructions = 0;
    std::uint64_t macs_effective = 0;
    /// macs_effective * M for sparse kernels, equal for dense ones.
    std::uint64_t macs_dense_equiv = 0;
    double macs_per_instruction = 0.0;
    double dense_equiv_per_instruction = 0.0;
    /// The two ratios above divided by the number of cores, comparable with
    /// the single-core inner-loop peak.
    double macs_per_instruction_core = 0.0;
    double dense_equiv_per_instruction_core = 0.0;
    int n_cores = 1;
    int m = 1;
    std::vector<CoreCost> per_core;
    /// Steady-state innermost-loop iterations, merged over cores.
    emu::InnerLoopStats inner;
    std::array<std::uint64_t, emu::kOpcodeCount> opcode_counts{};
    /// im2col buffer bytes allocated across all cores.
    std::uint64_t im2col_bytes = 0;

    std::uint64_t count(emu::Opcode op) const { return opcode_counts[static_cast<std::size_t>(op)]; }
    /// Inner-window peak in dense-equivalent MACs per instruction.
    double inner_dense_equiv_peak() const { return inner.macs_per_instruction() * m; }
};

struct RunOptions {
    int n_cores = 8;
    /// Emulate cores on separate threads.
    bool parallel = true;
    /// Instruction trace of core 0, one line per instruction.
    std::ostream* trace = nullptr;
    std::uint64_t trace_limit = 0;
};

struct KernelResult {
    std::vector<std::int8_t> output;
    CostReport cost;
};

/// Two receptive fields laid out as 1-D arrays, FX*FY*C bytes each, in
/// filter-row-major, channel-innermost order.
struct Im2colBuffer {
    std::vector<std::int8_t> data;
    std::array<std::pair<int, int>, 2> patch_centers{};  ///< (oy, ox)
    int patch_length = 0;

    std::span<const std::int8_t> patch(int i) const {
        return std::span<const std::int8_t>(data).subspan(static_cast<std::size_t>(i * patch_length),
                                                          static_cast<std::size_t>(patch_length));
    }
};

/// Copies the receptive field of output pixel (oy, ox) into `out`
/// (FX*FY*C bytes); positions outside the input read as zero.
void im2col_patch(std::span<const std::int8_t> input, const LayerGeometry& g, int oy, int ox,
                  std::span<std::int8_t> out);

Im2colBuffer im2col_partial(std::span<const std::int8_t> input, const LayerGeometry& g,
                            std::pair<int, int> first, std::pair<int, int> second);

/// A contiguous slice of work for one core: output pixels (flattened OY*OX
/// raster) for conv, output channels for FC.
struct WorkSplit {
    int core = 0;
    int begin = 0;
    int end = 0;
    int size() const { return end - begin; }
};

/// Conv: whole output rows, ceil(OY / n) per core. FC: contiguous K ranges
/// (even-sized for kernels that pair output channels). Cores without work
/// get an empty range.
std::vector<WorkSplit> parallelize(KernelId kernel, const LayerGeometry& g, int n_cores);

// Conv kernels -------------------------------------------------------------

/// 4 output channels x 2 pixels per inner iteration; K % 4 leftovers use the
/// 1x2 loop.
KernelResult conv_dense_4x2(std::span<const std::int8_t> input, const DenseWeights& weights,
                            const LayerGeometry& g, const QuantParams& quant, const RunOptions& opts = {});

KernelResult conv_dense_1x2(std::span<const std::int8_t> input, const DenseWeights& weights,
                            const LayerGeometry& g, const QuantParams& quant, const RunOptions& opts = {});

/// Decimating im2col with software offset unpacking. Plain layout.
KernelResult conv_sparse_sw(std::span<const std::int8_t> input, const NmSparseWeights& weights,
                            const LayerGeometry& g, const QuantParams& quant, const RunOptions& opts = {});

/// Decimating im2col with xDecimate. ReplicatedConv layout.
KernelResult conv_sparse_isa(std::span<const std::int8_t> input, const NmSparseWeights& weights,
                             const LayerGeometry& g, const QuantParams& quant, const RunOptions& opts = {});

// FC kernels ---------------------------------------------------------------

KernelResult fc_dense(std::span<const std::int8_t> input, const DenseWeights& weights, const LayerGeometry& g,
                      const QuantParams& quant, const RunOptions& opts = {});

/// Plain layout.
KernelResult fc_sparse_sw(std::span<const std::int8_t> input, const NmSparseWeights& weights,
                          const LayerGeometry& g, const QuantParams& quant, const RunOptions& opts = {});

/// InterleavedFc layout with an even number of channels; a geometry with odd
/// K takes weights padded by pad_to_even_k.
KernelResult fc_sparse_isa(std::span<const std::int8_t> input, const NmSparseWeights& weights,
                           const LayerGeometry& g, const QuantParams& quant, const RunOptions& opts = {});

}  // namespace nmsparse
