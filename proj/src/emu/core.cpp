#include <algorithm>
#include <sstream>
#include <string>

#include "nmsparse/emu.hpp"
#include "nmsparse/error.hpp"

namespace nmsparse::emu {
namespace {

[[noreturn]] void out_of_bounds(const CoreState& s, std::uint64_t addr, int width) {
    std::ostringstream os;
    os << "core " << s.core_id << ": " << width << "-byte access at 0x" << std::hex << addr << std::dec
       << " outside memory of " << s.mem.size() << " bytes";
    throw EmuError(os.str());
}

void check_reg(unsigned r) {
    if (r >= 32) throw EmuError("register x" + std::to_string(r) + " does not exist");
}

std::uint32_t byte_insert(std::uint32_t word, int lane, std::uint8_t value) {
    const unsigned shift = 8u * static_cast<unsigned>(lane);
    return (word & ~(0xFFu << shift)) | (static_cast<std::uint32_t>(value) << shift);
}

}  // namespace

std::uint8_t CoreState::load_u8(std::uint32_t addr) const {
    if (addr >= mem.size()) out_of_bounds(*this, addr, 1);
    return mem[addr];
}

// Misaligned word accesses are allowed: RI5CY splits them in hardware and the
// cost model counts instructions, not bus cycles.
std::uint32_t CoreState::load_u32(std::uint32_t addr) const {
    if (static_cast<std::uint64_t>(addr) + 4 > mem.size()) out_of_bounds(*this, addr, 4);
    return static_cast<std::uint32_t>(mem[addr]) | static_cast<std::uint32_t>(mem[addr + 1]) << 8 |
           static_cast<std::uint32_t>(mem[addr + 2]) << 16 | static_cast<std::uint32_t>(mem[addr + 3]) << 24;
}

void CoreState::store_u8(std::uint32_t addr, std::uint8_t value) {
    if (addr >= mem.size()) out_of_bounds(*this, addr, 1);
    mem[addr] = value;
}

void CoreState::store_u32(std::uint32_t addr, std::uint32_t value) {
    if (static_cast<std::uint64_t>(addr) + 4 > mem.size()) out_of_bounds(*this, addr, 4);
    for (int i = 0; i < 4; ++i) mem[addr + i] = static_cast<std::uint8_t>(value >> (8 * i));
}

Opcode xdecimate_opcode(int m) {
    switch (m) {
        case 4: return Opcode::XDecimateM4;
        case 8: return Opcode::XDecimateM8;
        case 16: return Opcode::XDecimateM16;
        default: throw EmuError("no xDecimate flavour for m=" + std::to_string(m));
    }
}

void sdotp4(CoreState& s, unsigned rd, unsigned rs1, unsigned rs2) {
    check_reg(rd);
    check_reg(rs1);
    check_reg(rs2);
    const std::uint32_t a = s.reg(rs1);
    const std::uint32_t b = s.reg(rs2);
    std::uint32_t acc = s.reg(rd);
    for (int l = 0; l < 4; ++l) {
        acc += static_cast<std::uint32_t>(static_cast<std::int32_t>(lane_of(a, l)) * lane_of(b, l));
    }
    s.set_reg(rd, acc);
    ++s.icount;
}

// EX stage: select the offset field with the csr LSBs (3 for 4-bit fields,
// 4 for 2-bit fields), add the block base M * (csr >> 1) to rs1.
// WB stage: write the byte into lane csr[2:1] of rd, then csr += 1.
void xdecimate_step(CoreState& s, unsigned rd, unsigned rs1, unsigned rs2, int m) {
    check_reg(rd);
    check_reg(rs1);
    check_reg(rs2);
    const std::uint32_t csr = s.deci_csr;
    unsigned offset = 0;
    if (m == 4) {
        offset = (s.reg(rs2) >> (2 * (csr & 0xF))) & 0x3;
    } else if (m == 8 || m == 16) {
        offset = (s.reg(rs2) >> (4 * (csr & 0x7))) & 0xF;
    } else {
        throw EmuError("xDecimate does not support m=" + std::to_string(m));
    }
    const std::uint32_t block = csr >> 1;
    if (block >= kMaxDecimateBlocks) {
        throw EmuError("xDecimate block index exceeds the 15-bit csr field; clear the csr per channel");
    }
    const std::uint32_t addr = s.reg(rs1) + static_cast<std::uint32_t>(m) * block + offset;
    const int lane = static_cast<int>((csr >> 1) & 0x3);
    s.set_reg(rd, byte_insert(s.reg(rd), lane, s.load_u8(addr)));
    s.deci_csr = csr + 1;
    ++s.icount;
}

void xdecimate_clear(CoreState& s) {
    s.deci_csr = 0;
    ++s.icount;
}

void execute(CoreState& s, const Instr& in) {
    check_reg(in.rd);
    check_reg(in.rs1);
    check_reg(in.rs2);
    const std::uint32_t a = s.reg(in.rs1);
    const std::uint32_t b = s.reg(in.rs2);
    const auto imm = static_cast<std::uint32_t>(in.imm);
    const auto shamt = static_cast<unsigned>(in.imm) & 31u;
    if (static_cast<int>(in.op) < kOpcodeCount) ++s.op_counts[static_cast<std::size_t>(in.op)];
    switch (in.op) {
        case Opcode::Add: s.set_reg(in.rd, a + b); break;
        case Opcode::AddI: s.set_reg(in.rd, a + imm); break;
        case Opcode::SllI: s.set_reg(in.rd, a << shamt); break;
        case Opcode::SrlI: s.set_reg(in.rd, a >> shamt); break;
        case Opcode::SraI: s.set_reg(in.rd, static_cast<std::uint32_t>(static_cast<std::int32_t>(a) >> shamt)); break;
        case Opcode::And: s.set_reg(in.rd, a & b); break;
        case Opcode::AndI: s.set_reg(in.rd, a & imm); break;
        case Opcode::Or: s.set_reg(in.rd, a | b); break;
        case Opcode::OrI: s.set_reg(in.rd, a | imm); break;
        case Opcode::Clip: {
            if (in.imm < 1 || in.imm > 31) throw EmuError("clip width must be 1..31 bits");
            const std::int32_t hi = (1 << (in.imm - 1)) - 1;
            const std::int32_t lo = -hi - 1;
            s.set_reg(in.rd, static_cast<std::uint32_t>(std::clamp(static_cast<std::int32_t>(a), lo, hi)));
            break;
        }
        case Opcode::Lb:
            s.set_reg(in.rd, static_cast<std::uint32_t>(static_cast<std::int32_t>(static_cast<std::int8_t>(s.load_u8(a + imm)))));
            break;
        case Opcode::Lbu: s.set_reg(in.rd, s.load_u8(a + imm)); break;
        case Opcode::LbuPost: {
            const std::uint8_t v = s.load_u8(a);
            s.set_reg(in.rs1, a + imm);
            s.set_reg(in.rd, v);
            break;
        }
        case Opcode::LbuRR: s.set_reg(in.rd, s.load_u8(a + b)); break;
        case Opcode::LbIns:
            if (in.imm < 0 || in.imm > 3) throw EmuError("byte lane must be 0..3");
            s.set_reg(in.rd, byte_insert(s.reg(in.rd), in.imm, s.load_u8(a + b)));
            break;
        case Opcode::Lw: s.set_reg(in.rd, s.load_u32(a + imm)); break;
        case Opcode::LwPost: {
            const std::uint32_t v = s.load_u32(a);
            s.set_reg(in.rs1, a + imm);
            s.set_reg(in.rd, v);
            break;
        }
        case Opcode::Sb: s.store_u8(a + imm, static_cast<std::uint8_t>(b)); break;
        case Opcode::SbPost:
            s.store_u8(a, static_cast<std::uint8_t>(b));
            s.set_reg(in.rs1, a + imm);
            break;
        case Opcode::Sw: s.store_u32(a + imm, b); break;
        case Opcode::SwPost:
            s.store_u32(a, b);
            s.set_reg(in.rs1, a + imm);
            break;
        case Opcode::Sdotp4: sdotp4(s, in.rd, in.rs1, in.rs2); return;
        case Opcode::XDecimateM4: xdecimate_step(s, in.rd, in.rs1, in.rs2, 4); return;
        case Opcode::XDecimateM8: xdecimate_step(s, in.rd, in.rs1, in.rs2, 8); return;
        case Opcode::XDecimateM16: xdecimate_step(s, in.rd, in.rs1, in.rs2, 16); return;
        case Opcode::XDecimateClear: xdecimate_clear(s); return;
        case Opcode::LpSetup:
        case Opcode::Branch: break;
        default: throw EmuError("illegal opcode " + std::to_string(static_cast<int>(in.op)));
    }
    ++s.icount;
}

std::uint64_t run_trace(CoreState& s, std::span<const Instr> instrs) {
    const std::uint64_t start = s.icount;
    for (const auto& in : instrs) execute(s, in);
    return s.icount - start;
}

}  // namespace nmsparse::emu
