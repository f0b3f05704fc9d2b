#include "nmsparse/inner_loops.hpp"

#include "nmsparse/error.hpp"

namespace nmsparse::inner {

using namespace reg;

std::int32_t lane_mask(int lanes) {
    switch (lanes) {
        case 1: return 0xFF;
        case 2: return 0xFFFF;
        case 3: return 0xFFFFFF;
        default: throw KernelError("lane mask needs 1..3 lanes");
    }
}

void dense_4x2(emu::Emitter& e) {
    for (int i = 0; i < 4; ++i) e.lw_post(w(i), ptr_w(i), 4);
    e.lw_post(kAct1, kPtrBuf1, 4);
    e.lw_post(kAct2, kPtrBuf2, 4);
    for (int i = 0; i < 4; ++i) {
        e.sdotp4(acc(2 * i), w(i), kAct1);
        e.sdotp4(acc(2 * i + 1), w(i), kAct2);
    }
}

void dense_4x1(emu::Emitter& e) {
    for (int i = 0; i < 4; ++i) e.lw_post(w(i), ptr_w(i), 4);
    e.lw_post(kAct1, kPtrBuf1, 4);
    for (int i = 0; i < 4; ++i) e.sdotp4(acc(2 * i), w(i), kAct1);
}

void dense_1x2(emu::Emitter& e) {
    e.lw_post(w(0), kPtrW0, 4);
    e.lw_post(kAct1, kPtrBuf1, 4);
    e.lw_post(kAct2, kPtrBuf2, 4);
    e.sdotp4(acc(0), w(0), kAct1);
    e.sdotp4(acc(1), w(0), kAct2);
    e.lw_post(w(1), kPtrW0, 4);
    e.lw_post(idx(0), kPtrBuf1, 4);
    e.lw_post(idx(1), kPtrBuf2, 4);
    e.sdotp4(acc(0), w(1), idx(0));
    e.sdotp4(acc(1), w(1), idx(1));
}

void dense_1x1(emu::Emitter& e) {
    e.lw_post(w(0), kPtrW0, 4);
    e.lw_post(kAct1, kPtrBuf1, 4);
    e.sdotp4(acc(0), w(0), kAct1);
    e.lw_post(w(1), kPtrW0, 4);
    e.lw_post(idx(0), kPtrBuf1, 4);
    e.sdotp4(acc(0), w(1), idx(0));
}

void unpack_offsets_sw(emu::Emitter& e, int m, int fields) {
    if (fields < 1 || fields > 4) throw KernelError("offset group must hold 1..4 fields");
    if (m == 4) {
        // Four 2-bit fields per byte.
        e.lbu_post(kTail0, kPtrOff, 1);
        e.andi(idx(0), kTail0, 3);
        for (int f = 1; f < fields; ++f) {
            e.srli(idx(f), kTail0, 2 * f);
            if (f < 3) e.andi(idx(f), idx(f), 3);
        }
    } else {
        // Two 4-bit fields per byte.
        e.lbu_post(kTail0, kPtrOff, 1);
        e.andi(idx(0), kTail0, 15);
        if (fields > 1) e.srli(idx(1), kTail0, 4);
        if (fields > 2) {
            e.lbu_post(kTail1, kPtrOff, 1);
            e.andi(idx(2), kTail1, 15);
        }
        if (fields > 3) e.srli(idx(3), kTail1, 4);
    }
    for (int f = 1; f < fields; ++f) e.addi(idx(f), idx(f), f * m);
}

void sparse_sw_2patch(emu::Emitter& e, int m) {
    unpack_offsets_sw(e, m, 4);
    for (int l = 0; l < 4; ++l) e.lb_ins(kAct1, l, kPtrBuf1, idx(l));
    for (int l = 0; l < 4; ++l) e.lb_ins(kAct2, l, kPtrBuf2, idx(l));
    e.addi(kPtrBuf1, kPtrBuf1, 4 * m);
    e.addi(kPtrBuf2, kPtrBuf2, 4 * m);
    e.lw_post(w(0), kPtrW0, 4);
    e.sdotp4(acc(0), w(0), kAct1);
    e.sdotp4(acc(1), w(0), kAct2);
}

void sparse_sw_1patch(emu::Emitter& e, int m) {
    unpack_offsets_sw(e, m, 4);
    for (int l = 0; l < 4; ++l) e.lb_ins(kAct1, l, kPtrBuf1, idx(l));
    e.addi(kPtrBuf1, kPtrBuf1, 4 * m);
    e.lw_post(w(0), kPtrW0, 4);
    e.sdotp4(acc(0), w(0), kAct1);
}

std::int32_t isa_offset_step(int m, int group) {
    if (m != 4) return 4;
    return group % 2 == 1 ? 4 : 0;
}

void sparse_isa_2patch(emu::Emitter& e, int m, int group) {
    e.lw_post(kOffWord, kPtrOff, isa_offset_step(m, group));
    for (int l = 0; l < 4; ++l) {
        e.xdecimate(m, kAct1, kPtrBuf1, kOffWord);
        e.xdecimate(m, kAct2, kPtrBuf2, kOffWord);
    }
    e.lw_post(w(0), kPtrW0, 4);
    e.sdotp4(acc(0), w(0), kAct1);
    e.sdotp4(acc(1), w(0), kAct2);
}

void sparse_isa_1patch(emu::Emitter& e, int m, int group) {
    e.lw_post(kOffWord, kPtrOff, isa_offset_step(m, group));
    for (int l = 0; l < 4; ++l) {
        e.xdecimate(m, kAct1, kPtrBuf1, kOffWord);
        e.xdecimate(m, kAct1, kPtrBuf1, kOffWord);
    }
    e.lw_post(w(0), kPtrW0, 4);
    e.sdotp4(acc(0), w(0), kAct1);
}

void fc_isa_2channel(emu::Emitter& e, int m, int group) {
    e.lw_post(kOffWord, kPtrOff, isa_offset_step(m, group));
    for (int l = 0; l < 4; ++l) {
        e.xdecimate(m, kAct1, kPtrBuf1, kOffWord);
        e.xdecimate(m, kAct2, kPtrBuf1, kOffWord);
    }
    e.lw_post(w(0), kPtrW0, 4);
    e.lw_post(w(1), kPtrW1, 4);
    e.sdotp4(acc(0), w(0), kAct1);
    e.sdotp4(acc(1), w(1), kAct2);
}

void fc_dense_2channel(emu::Emitter& e) {
    e.lw_post(kAct1, kPtrBuf1, 4);
    e.lw_post(w(0), kPtrW0, 4);
    e.lw_post(w(1), kPtrW1, 4);
    e.sdotp4(acc(0), w(0), kAct1);
    e.sdotp4(acc(1), w(1), kAct1);
}

void fc_dense_1channel(emu::Emitter& e) {
    e.lw_post(kAct1, kPtrBuf1, 4);
    e.lw_post(w(0), kPtrW0, 4);
    e.sdotp4(acc(0), w(0), kAct1);
}

}  // namespace nmsparse::inner
