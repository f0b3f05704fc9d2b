#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nmsparse::emu {

/// The closed instruction set the kernels are written in. Every opcode costs
/// exactly one unit, so the executed-instruction counter is the whole cost
/// model.
enum class Opcode : std::uint8_t {
    // ALU
    Add,    ///< rd = rs1 + rs2
    AddI,   ///< rd = rs1 + imm
    SllI,   ///< rd = rs1 << imm
    SrlI,   ///< rd = rs1 >> imm (logical)
    SraI,   ///< rd = rs1 >> imm (arithmetic)
    And,    ///< rd = rs1 & rs2
    AndI,   ///< rd = rs1 & imm
    Or,     ///< rd = rs1 | rs2
    OrI,    ///< rd = rs1 | imm
    Clip,   ///< rd = clamp(rs1) to a signed imm-bit range
    // Loads / stores. "Post" forms access [rs1] then do rs1 += imm.
    Lb,       ///< rd = sext(mem[rs1 + imm])
    Lbu,      ///< rd = zext(mem[rs1 + imm])
    LbuPost,  ///< rd = zext(mem[rs1]); rs1 += imm
    LbuRR,    ///< rd = zext(mem[rs1 + rs2])
    LbIns,    ///< byte lane imm of rd = mem[rs1 + rs2], other lanes kept
    Lw,       ///< rd = mem32[rs1 + imm]
    LwPost,   ///< rd = mem32[rs1]; rs1 += imm
    Sb,       ///< mem[rs1 + imm] = rs2[7:0]
    SbPost,   ///< mem[rs1] = rs2[7:0]; rs1 += imm
    Sw,       ///< mem32[rs1 + imm] = rs2
    SwPost,   ///< mem32[rs1] = rs2; rs1 += imm
    // SIMD
    Sdotp4,  ///< rd += sum of the four signed byte-lane products of rs1, rs2
    // xDecimate extension
    XDecimateM4,
    XDecimateM8,
    XDecimateM16,
    XDecimateClear,
    // Loop control. No architectural effect beyond the unit cost.
    LpSetup,  ///< hardware-loop setup, once per loop entry
    Branch,   ///< software loop back-edge
};

inline constexpr int kOpcodeCount = static_cast<int>(Opcode::Branch) + 1;
static_assert(kOpcodeCount <= 32);

std::string_view opcode_name(Opcode op);

struct Instr {
    Opcode op = Opcode::Add;
    std::uint8_t rd = 0;
    std::uint8_t rs1 = 0;
    std::uint8_t rs2 = 0;
    std::int32_t imm = 0;
};

std::string format_instr(const Instr& instr);

/// Architectural state of one emulated core.
struct CoreState {
    std::array<std::uint32_t, 32> regs{};
    /// Counter read and auto-incremented by xDecimate.
    std::uint32_t deci_csr = 0;
    std::vector<std::uint8_t> mem;
    std::uint64_t icount = 0;
    /// Executed instructions per opcode (counted by execute()).
    std::array<std::uint64_t, 32> op_counts{};
    int core_id = 0;

    CoreState() = default;
    explicit CoreState(std::size_t mem_bytes, int id = 0) : mem(mem_bytes, 0), core_id(id) {}

    std::uint8_t load_u8(std::uint32_t addr) const;
    std::uint32_t load_u32(std::uint32_t addr) const;
    void store_u8(std::uint32_t addr, std::uint8_t value);
    void store_u32(std::uint32_t addr, std::uint32_t value);

    std::uint32_t reg(unsigned r) const { return regs[r]; }
    void set_reg(unsigned r, std::uint32_t value) {
        if (r != 0) regs[r] = value;
    }
};

/// The block index csr >> 1 is a 15-bit field in hardware.
inline constexpr std::uint32_t kMaxDecimateBlocks = 1u << 15;

/// Executes one instruction. Throws EmuError on illegal operands or
/// out-of-bounds memory access.
void execute(CoreState& state, const Instr& instr);

/// Runs `instrs` in order and returns the number of instructions consumed.
std::uint64_t run_trace(CoreState& state, std::span<const Instr> instrs);

void sdotp4(CoreState& state, unsigned rd, unsigned rs1, unsigned rs2);
void xdecimate_step(CoreState& state, unsigned rd, unsigned rs1, unsigned rs2, int m);
void xdecimate_clear(CoreState& state);

Opcode xdecimate_opcode(int m);

/// Signed byte lane `lane` of a packed 4x8-bit register value.
inline std::int8_t lane_of(std::uint32_t word, int lane) {
    return static_cast<std::int8_t>((word >> (8 * lane)) & 0xFF);
}

/// Counters bracketing the steady-state iterations of a kernel's innermost
/// loop.
struct InnerLoopStats {
    std::uint64_t iterations = 0;
    std::uint64_t instructions = 0;
    std::uint64_t macs = 0;
    std::uint32_t min_instructions = 0;
    std::uint32_t max_instructions = 0;
    std::uint32_t macs_per_iteration = 0;

    bool uniform() const { return iterations > 0 && min_instructions == max_instructions; }
    double macs_per_instruction() const {
        return instructions == 0 ? 0.0 : static_cast<double>(macs) / static_cast<double>(instructions);
    }
    void merge(const InnerLoopStats& other);
};

/// Emits instructions into a core: each one is executed immediately and,
/// optionally, recorded and/or written to a trace stream.
class Emitter {
public:
    explicit Emitter(CoreState& core) : core_(core) {}

    void set_recorder(std::vector<Instr>* recorder) { recorder_ = recorder; }
    /// Writes one line per instruction until `limit` lines (0 = unlimited).
    void set_trace(std::ostream* out, std::uint64_t limit = 0) {
        trace_ = out;
        trace_limit_ = limit;
    }
    /// Writes a `#`-prefixed comment line to the trace, if one is attached.
    void note(std::string_view text);

    void emit(const Instr& instr);

    void add(unsigned rd, unsigned rs1, unsigned rs2) { emit({Opcode::Add, u8(rd), u8(rs1), u8(rs2), 0}); }
    void addi(unsigned rd, unsigned rs1, std::int32_t imm) { emit({Opcode::AddI, u8(rd), u8(rs1), 0, imm}); }
    void li(unsigned rd, std::int64_t value) { addi(rd, 0, static_cast<std::int32_t>(value)); }
    void slli(unsigned rd, unsigned rs1, int sh) { emit({Opcode::SllI, u8(rd), u8(rs1), 0, sh}); }
    void srli(unsigned rd, unsigned rs1, int sh) { emit({Opcode::SrlI, u8(rd), u8(rs1), 0, sh}); }
    void srai(unsigned rd, unsigned rs1, int sh) { emit({Opcode::SraI, u8(rd), u8(rs1), 0, sh}); }
    void andi(unsigned rd, unsigned rs1, std::int32_t imm) { emit({Opcode::AndI, u8(rd), u8(rs1), 0, imm}); }
    void ori(unsigned rd, unsigned rs1, std::int32_t imm) { emit({Opcode::OrI, u8(rd), u8(rs1), 0, imm}); }
    void clip(unsigned rd, unsigned rs1, int bits) { emit({Opcode::Clip, u8(rd), u8(rs1), 0, bits}); }
    void lw(unsigned rd, unsigned base, std::int32_t imm) { emit({Opcode::Lw, u8(rd), u8(base), 0, imm}); }
    void lw_post(unsigned rd, unsigned base, std::int32_t inc) { emit({Opcode::LwPost, u8(rd), u8(base), 0, inc}); }
    void lbu(unsigned rd, unsigned base, std::int32_t imm) { emit({Opcode::Lbu, u8(rd), u8(base), 0, imm}); }
    void lbu_post(unsigned rd, unsigned base, std::int32_t inc) { emit({Opcode::LbuPost, u8(rd), u8(base), 0, inc}); }
    void lbu_rr(unsigned rd, unsigned base, unsigned index) { emit({Opcode::LbuRR, u8(rd), u8(base), u8(index), 0}); }
    void lb_ins(unsigned rd, int lane, unsigned base, unsigned index) {
        emit({Opcode::LbIns, u8(rd), u8(base), u8(index), lane});
    }
    void sb(unsigned src, unsigned base, std::int32_t imm) { emit({Opcode::Sb, 0, u8(base), u8(src), imm}); }
    void sb_post(unsigned src, unsigned base, std::int32_t inc) { emit({Opcode::SbPost, 0, u8(base), u8(src), inc}); }
    void sw(unsigned src, unsigned base, std::int32_t imm) { emit({Opcode::Sw, 0, u8(base), u8(src), imm}); }
    void sw_post(unsigned src, unsigned base, std::int32_t inc) { emit({Opcode::SwPost, 0, u8(base), u8(src), inc}); }
    void sdotp4(unsigned rd, unsigned rs1, unsigned rs2) { emit({Opcode::Sdotp4, u8(rd), u8(rs1), u8(rs2), 0}); }
    void xdecimate(int m, unsigned rd, unsigned rs1, unsigned rs2) {
        emit({xdecimate_opcode(m), u8(rd), u8(rs1), u8(rs2), 0});
    }
    void xdecimate_clear() { emit({Opcode::XDecimateClear, 0, 0, 0, 0}); }
    void lp_setup() { emit({Opcode::LpSetup, 0, 0, 0, 0}); }
    void branch() { emit({Opcode::Branch, 0, 0, 0, 0}); }

    /// Marks the start of one steady-state inner-loop iteration.
    void begin_iteration();
    /// Closes the iteration opened by begin_iteration.
    void end_iteration(std::uint32_t macs);

    const InnerLoopStats& inner_stats() const { return inner_; }
    CoreState& core() { return core_; }

private:
    static std::uint8_t u8(unsigned r) { return static_cast<std::uint8_t>(r); }

    CoreState& core_;
    std::vector<Instr>* recorder_ = nullptr;
    std::ostream* trace_ = nullptr;
    std::uint64_t trace_limit_ = 0;
    std::uint64_t traced_ = 0;
    std::uint64_t iteration_start_ = 0;
    bool in_iteration_ = false;
    InnerLoopStats inner_;
};

}  // namespace nmsparse::emu
