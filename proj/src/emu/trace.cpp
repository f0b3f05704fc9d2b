#include <algorithm>
#include <ostream>
#include <sstream>

#include "nmsparse/emu.hpp"
#include "nmsparse/error.hpp"

namespace nmsparse::emu {

std::string_view opcode_name(Opcode op) {
    switch (op) {
        case Opcode::Add: return "ADD";
        case Opcode::AddI: return "ADDI";
        case Opcode::SllI: return "SLLI";
        case Opcode::SrlI: return "SRLI";
        case Opcode::SraI: return "SRAI";
        case Opcode::And: return "AND";
        case Opcode::AndI: return "ANDI";
        case Opcode::Or: return "OR";
        case Opcode::OrI: return "ORI";
        case Opcode::Clip: return "CLIP";
        case Opcode::Lb: return "LB";
        case Opcode::Lbu: return "LBU";
        case Opcode::LbuPost: return "LBU.PI";
        case Opcode::LbuRR: return "LBU.RR";
        case Opcode::LbIns: return "LB.INS";
        case Opcode::Lw: return "LW";
        case Opcode::LwPost: return "LW.PI";
        case Opcode::Sb: return "SB";
        case Opcode::SbPost: return "SB.PI";
        case Opcode::Sw: return "SW";
        case Opcode::SwPost: return "SW.PI";
        case Opcode::Sdotp4: return "SDOTP4";
        case Opcode::XDecimateM4: return "XDECIMATE.M4";
        case Opcode::XDecimateM8: return "XDECIMATE.M8";
        case Opcode::XDecimateM16: return "XDECIMATE.M16";
        case Opcode::XDecimateClear: return "XDECIMATE.CLEAR";
        case Opcode::LpSetup: return "LP.SETUP";
        case Opcode::Branch: return "BRANCH";
    }
    return "ILLEGAL";
}

std::string format_instr(const Instr& in) {
    std::ostringstream os;
    os << opcode_name(in.op);
    const auto r = [](unsigned x) { return "x" + std::to_string(x); };
    switch (in.op) {
        case Opcode::Add:
        case Opcode::And:
        case Opcode::Or:
        case Opcode::Sdotp4:
        case Opcode::XDecimateM4:
        case Opcode::XDecimateM8:
        case Opcode::XDecimateM16:
            os << ' ' << r(in.rd) << ", " << r(in.rs1) << ", " << r(in.rs2);
            break;
        case Opcode::AddI:
        case Opcode::SllI:
        case Opcode::SrlI:
        case Opcode::SraI:
        case Opcode::AndI:
        case Opcode::OrI:
        case Opcode::Clip:
            os << ' ' << r(in.rd) << ", " << r(in.rs1) << ", " << in.imm;
            break;
        case Opcode::Lb:
        case Opcode::Lbu:
        case Opcode::Lw:
            os << ' ' << r(in.rd) << ", " << in.imm << '(' << r(in.rs1) << ')';
            break;
        case Opcode::LbuPost:
        case Opcode::LwPost:
            os << ' ' << r(in.rd) << ", " << in.imm << '(' << r(in.rs1) << "!)";
            break;
        case Opcode::LbuRR:
            os << ' ' << r(in.rd) << ", " << r(in.rs2) << '(' << r(in.rs1) << ')';
            break;
        case Opcode::LbIns:
            os << ' ' << r(in.rd) << '[' << in.imm << "], " << r(in.rs2) << '(' << r(in.rs1) << ')';
            break;
        case Opcode::Sb:
        case Opcode::Sw:
            os << ' ' << r(in.rs2) << ", " << in.imm << '(' << r(in.rs1) << ')';
            break;
        case Opcode::SbPost:
        case Opcode::SwPost:
            os << ' ' << r(in.rs2) << ", " << in.imm << '(' << r(in.rs1) << "!)";
            break;
        case Opcode::XDecimateClear:
        case Opcode::LpSetup:
        case Opcode::Branch:
            break;
    }
    return os.str();
}

void InnerLoopStats::merge(const InnerLoopStats& o) {
    if (o.iterations == 0) return;
    if (iterations == 0) {
        *this = o;
        return;
    }
    iterations += o.iterations;
    instructions += o.instructions;
    macs += o.macs;
    min_instructions = std::min(min_instructions, o.min_instructions);
    max_instructions = std::max(max_instructions, o.max_instructions);
    if (macs_per_iteration != o.macs_per_iteration) macs_per_iteration = 0;
}

void Emitter::note(std::string_view text) {
    if (trace_ && (trace_limit_ == 0 || traced_ < trace_limit_)) *trace_ << "# " << text << '\n';
}

void Emitter::emit(const Instr& instr) {
    if (recorder_) recorder_->push_back(instr);
    execute(core_, instr);
    if (trace_ && (trace_limit_ == 0 || traced_ < trace_limit_)) {
        ++traced_;
        // icount after execution, so the first instruction of a run is 1.
        *trace_ << core_.icount << ' ' << format_instr(instr) << " csr=" << core_.deci_csr << '\n';
    }
}

void Emitter::begin_iteration() {
    if (in_iteration_) throw EmuError("nested inner-loop iteration markers");
    in_iteration_ = true;
    iteration_start_ = core_.icount;
}

void Emitter::end_iteration(std::uint32_t macs) {
    if (!in_iteration_) throw EmuError("end_iteration without begin_iteration");
    in_iteration_ = false;
    const auto n = static_cast<std::uint32_t>(core_.icount - iteration_start_);
    if (inner_.iterations == 0) {
        inner_.min_instructions = inner_.max_instructions = n;
        inner_.macs_per_iteration = macs;
    } else {
        inner_.min_instructions = std::min(inner_.min_instructions, n);
        inner_.max_instructions = std::max(inner_.max_instructions, n);
        if (inner_.macs_per_iteration != macs) inner_.macs_per_iteration = 0;
    }
    ++inner_.iterations;
    inner_.instructions += n;
    inner_.macs += macs;
}

}  // namespace nmsparse::emu
