#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nmsparse/format.hpp"
#include "nmsparse/geometry.hpp"
#include "nmsparse/kernels.hpp"
#include "nmsparse/tiler.hpp"

namespace nmsparse::bench {

enum class IsaMode { Off, On, Both };

/// "dense" or a 1:M pattern.
using Sparsity = std::optional<SparsityPattern>;
std::optional<Sparsity> parse_sparsity(std::string_view text);
std::string sparsity_name(const Sparsity& s);

enum class Format { Csv, Json, Md };
std::optional<Format> parse_format(std::string_view text);

struct SweepConfig {
    LayerKind kind = LayerKind::Conv;
    std::vector<Sparsity> sparsities{std::nullopt, SparsityPattern::one_of(4), SparsityPattern::one_of(8),
                                     SparsityPattern::one_of(16)};
    IsaMode isa = IsaMode::Both;
    int n_cores = 8;
    /// Empty: 32..256 for conv, 256..2048 for FC.
    std::vector<int> c_list;
    std::uint64_t seed = 1;
    int k = 256;
    int spatial = 8;  ///< IX = IY = OX = OY for conv
    int filter = 3;
    int pad = 1;
    int stride = 1;
    int shift = 10;
    TilerOptions tiler;
    /// Core-0 trace of every row, each preceded by a `#` header line.
    std::ostream* trace = nullptr;
    std::uint64_t trace_limit = 2000;
    /// Emulate the cores of a kernel on threads.
    bool parallel = true;

    std::vector<int> effective_c_list() const;
    LayerGeometry geometry(int c) const;
};

struct SweepRow {
    std::string kernel;
    std::string sparsity;
    int m = 1;
    int c = 0;
    std::string geometry;
    std::uint64_t instr = 0;
    std::uint64_t macs_effective = 0;
    std::uint64_t macs_dense_equiv = 0;
    double macs_per_instr_core = 0.0;
    double dense_equiv_per_instr_core = 0.0;
    /// Steady-state inner-loop dense-equivalent MACs per instruction.
    double inner_peak = 0.0;
    std::string baseline;
    double speedup = 0.0;
    /// Second dense reference (PULP-NN style 4x2) for conv; empty for FC.
    std::string alt_baseline;
    double alt_speedup = 0.0;
    std::uint64_t weight_bytes = 0;
    int tile_k = 0;
    int tile_oy = 0;
    bool bit_exact = false;
    std::string status = "ok";

    bool operator==(const SweepRow&) const = default;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    /// Broken invariants (mismatching outputs, ratios above the peak...).
    std::vector<std::string> violations;
};

SweepResult sweep_single_layer(const SweepConfig& cfg);

// Networks -----------------------------------------------------------------

struct NetworkLayer {
    std::string name;
    LayerGeometry geometry;
    Sparsity sparsity;
    /// Whether a sparsity override applies to this layer.
    bool prunable = true;
    /// Use xDecimate kernels for sparse layers.
    bool isa = true;
    std::optional<KernelId> kernel;
    int shift = 10;
    /// Name of the layer feeding this one; empty = previous layer.
    std::string from;
    /// FC input is the global average of the source's channels (C == K).
    bool global_pool = false;
};

struct Network {
    std::string name;
    std::vector<NetworkLayer> layers;
};

/// Parses a layer-list document and checks that shapes chain. Throws
/// KernelError on a mismatch.
Network parse_network(std::string_view json_text);
Network load_network(const std::string& path);
void check_chaining(const Network& net);

struct NetworkOptions {
    /// Replaces the sparsity of every prunable layer.
    std::optional<Sparsity> sparsity_override;
    std::optional<bool> isa_override;
    int n_cores = 8;
    std::uint64_t seed = 1;
    bool parallel = true;
};

struct NetworkRow {
    std::string name;
    std::string kernel;
    std::string sparsity;
    std::string geometry;
    std::uint64_t instr = 0;
    std::uint64_t baseline_instr = 0;
    double speedup = 0.0;
    std::uint64_t macs_dense_equiv = 0;
    std::uint64_t dense_weight_bytes = 0;
    std::uint64_t weight_bytes = 0;
    bool bit_exact = false;
};

struct NetworkResult {
    std::string name;
    std::string baseline;
    std::vector<NetworkRow> rows;
    std::uint64_t total_instr = 0;
    std::uint64_t total_baseline_instr = 0;
    double speedup = 0.0;
    std::uint64_t dense_weight_bytes = 0;
    std::uint64_t weight_bytes = 0;
    std::vector<std::string> violations;
};

/// Runs every layer on seeded random activations and weights, next to the
/// dense 1x2 / fc_dense baseline on the same (decompressed) weights.
NetworkResult run_network(const Network& net, const NetworkOptions& opts = {});

// Reports ------------------------------------------------------------------

/// Fixed CSV header of sweep reports.
std::string_view sweep_csv_header();

std::string emit_sweep(const SweepResult& result, Format format);
std::string emit_network(const NetworkResult& result, Format format);

/// Parse back emit_sweep output (csv or json).
std::vector<SweepRow> parse_sweep_csv(std::string_view text);
std::vector<SweepRow> parse_sweep_json(std::string_view text);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace nmsparse::bench
