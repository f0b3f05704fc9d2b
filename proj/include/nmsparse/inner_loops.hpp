#pragma once

#include <cstdint>

#include "nmsparse/emu.hpp"

// Innermost-loop bodies of the kernels, exposed so their instruction
// sequences can be checked in isolation. Each emits one iteration using the
// fixed register assignment below; pointer registers must be set up by the
// caller.
namespace nmsparse::inner {

namespace reg {
inline constexpr unsigned kZero = 0;
inline constexpr unsigned kTail0 = 1;  // spare temporaries
inline constexpr unsigned kCopy = 2;
inline constexpr unsigned kSrc = 3;
inline constexpr unsigned kDst = 4;
inline constexpr unsigned kPtrW0 = 5;
inline constexpr unsigned kPtrW1 = 6;
inline constexpr unsigned kPtrW2 = 7;
inline constexpr unsigned kPtrW3 = 8;
inline constexpr unsigned kTail1 = 9;
inline constexpr unsigned kAcc0 = 10;  // x10..x17
inline constexpr unsigned kW0 = 18;    // x18..x21
inline constexpr unsigned kAct1 = 22;
inline constexpr unsigned kAct2 = 23;
inline constexpr unsigned kPtrBuf1 = 24;
inline constexpr unsigned kPtrBuf2 = 25;
inline constexpr unsigned kPtrOff = 26;
inline constexpr unsigned kOffWord = 27;
inline constexpr unsigned kIdx0 = 28;  // x28..x31

inline constexpr unsigned acc(int i) { return kAcc0 + static_cast<unsigned>(i); }
inline constexpr unsigned w(int i) { return kW0 + static_cast<unsigned>(i); }
inline constexpr unsigned ptr_w(int i) { return kPtrW0 + static_cast<unsigned>(i); }
inline constexpr unsigned idx(int i) { return kIdx0 + static_cast<unsigned>(i); }
}  // namespace reg

/// Mask keeping the low `lanes` bytes of a word.
std::int32_t lane_mask(int lanes);

/// 4 output channels x 2 patches, 4 reduction elements: 14 instructions,
/// 32 MACs.
void dense_4x2(emu::Emitter& e);
/// 4 output channels x 1 patch: 9 instructions, 16 MACs.
void dense_4x1(emu::Emitter& e);
/// 1 output channel x 2 patches, 8 reduction elements: 10 instructions,
/// 16 MACs.
void dense_1x2(emu::Emitter& e);
/// 1 output channel x 1 patch, 8 elements: 6 instructions, 8 MACs.
void dense_1x1(emu::Emitter& e);

/// Unpacks `fields` (1..4) offsets of the plain layout read through
/// kPtrOff into the idx registers, adding the block base of each lane.
void unpack_offsets_sw(emu::Emitter& e, int m, int fields);

/// One group of 4 NZ for 2 patches with software offsets: 22 instructions
/// for M=8/16, 23 for M=4; 8 MACs.
void sparse_sw_2patch(emu::Emitter& e, int m);
/// One group of 4 NZ for one activation vector (FC, or the odd conv pixel):
/// 16 instructions for M=8/16, 17 for M=4; 4 MACs.
void sparse_sw_1patch(emu::Emitter& e, int m);

/// Post-increment of the offset-word pointer after group `group`: 4 bytes
/// hold one group of 8 fields for M=8/16, two groups of 16 for M=4.
std::int32_t isa_offset_step(int m, int group);

/// One group of 4 NZ for 2 patches with xDecimate: 12 instructions, 8 MACs.
void sparse_isa_2patch(emu::Emitter& e, int m, int group);
/// Odd conv pixel: both replicated fields read the same buffer. 11
/// instructions, 4 MACs.
void sparse_isa_1patch(emu::Emitter& e, int m, int group);
/// FC: 4 NZ of two interleaved channels on one input: 13 instructions,
/// 8 MACs.
void fc_isa_2channel(emu::Emitter& e, int m, int group);

/// FC dense, 2 output channels x 4 inputs: 5 instructions, 8 MACs.
void fc_dense_2channel(emu::Emitter& e);
/// FC dense, 1 output channel x 4 inputs: 3 instructions, 4 MACs.
void fc_dense_1channel(emu::Emitter& e);

}  // namespace nmsparse::inner
