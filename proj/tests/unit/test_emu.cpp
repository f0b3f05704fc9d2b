#include <doctest.h>

#include <sstream>

#include "nmsparse/emu.hpp"
#include "nmsparse/error.hpp"
#include "oracles.hpp"

using namespace nmsparse;
using namespace nmsparse::emu;

TEST_SUITE("emu") {

TEST_CASE("x0 stays zero and ALU ops wrap at 32 bits") {
    CoreState s(64);
    execute(s, {Opcode::AddI, 0, 0, 0, 5});
    CHECK(s.reg(0) == 0);
    execute(s, {Opcode::AddI, 1, 0, 0, -1});
    execute(s, {Opcode::AddI, 2, 1, 0, 1});
    CHECK(s.reg(1) == 0xFFFFFFFFu);
    CHECK(s.reg(2) == 0);
    execute(s, {Opcode::SraI, 3, 1, 0, 4});
    CHECK(s.reg(3) == 0xFFFFFFFFu);
    execute(s, {Opcode::SrlI, 4, 1, 0, 28});
    CHECK(s.reg(4) == 0xFu);
    execute(s, {Opcode::AddI, 5, 0, 0, 300});
    execute(s, {Opcode::Clip, 6, 5, 0, 8});
    CHECK(static_cast<std::int32_t>(s.reg(6)) == 127);
    execute(s, {Opcode::AddI, 5, 0, 0, -300});
    execute(s, {Opcode::Clip, 6, 5, 0, 8});
    CHECK(static_cast<std::int32_t>(s.reg(6)) == -128);
    CHECK(s.icount == 9);
    CHECK(s.op_counts[static_cast<int>(Opcode::AddI)] == 5);
}

TEST_CASE("sdotp4 multiplies signed lanes and accumulates") {
    CoreState s(16);
    s.set_reg(1, 0x80FF0302u);  // lanes 2, 3, -1, -128
    s.set_reg(2, 0x7F01FE05u);  // lanes 5, -2, 1, 127
    s.set_reg(3, 10);
    execute(s, {Opcode::Sdotp4, 3, 1, 2, 0});
    CHECK(static_cast<std::int32_t>(s.reg(3)) == 10 + 2 * 5 + 3 * -2 + -1 * 1 + -128 * 127);
}

TEST_CASE("loads, stores and post-increment") {
    CoreState s(64);
    s.set_reg(1, 8);
    s.set_reg(2, 0xDEADBEEFu);
    execute(s, {Opcode::Sw, 0, 1, 2, 4});
    CHECK(s.load_u32(12) == 0xDEADBEEFu);
    execute(s, {Opcode::Lb, 3, 1, 0, 4});
    CHECK(s.reg(3) == 0xFFFFFFEFu);
    execute(s, {Opcode::Lbu, 3, 1, 0, 4});
    CHECK(s.reg(3) == 0xEFu);
    s.set_reg(4, 12);
    execute(s, {Opcode::LwPost, 5, 4, 0, 4});
    CHECK(s.reg(5) == 0xDEADBEEFu);
    CHECK(s.reg(4) == 16);
    execute(s, {Opcode::SbPost, 0, 4, 2, 1});
    CHECK(s.mem[16] == 0xEF);
    CHECK(s.reg(4) == 17);
    s.set_reg(6, 3);
    execute(s, {Opcode::LbIns, 7, 1, 6, 2});  // mem[11] into lane 2
    CHECK(s.reg(7) == 0);
    s.mem[11] = 0xAB;
    execute(s, {Opcode::LbIns, 7, 1, 6, 2});
    CHECK(s.reg(7) == 0x00AB0000u);
    execute(s, {Opcode::LbuRR, 8, 1, 6, 0});
    CHECK(s.reg(8) == 0xAB);
}

TEST_CASE("illegal operands and out-of-bounds accesses throw") {
    CoreState s(16);
    CHECK_THROWS_AS(execute(s, {Opcode::Lw, 1, 0, 0, 13}), EmuError);
    CHECK_THROWS_AS(execute(s, {Opcode::Sb, 0, 0, 1, 16}), EmuError);
    CHECK_THROWS_AS(execute(s, {Opcode::Add, 32, 0, 0, 0}), EmuError);
    CHECK_THROWS_AS(execute(s, {Opcode::LbIns, 1, 0, 0, 4}), EmuError);
    CHECK_THROWS_AS(execute(s, {static_cast<Opcode>(200), 0, 0, 0, 0}), EmuError);
    CHECK_THROWS_AS(xdecimate_opcode(32), EmuError);
}

TEST_CASE("csr progression: counter, block index and destination lane") {
    for (int m : {4, 8, 16}) {
        CoreState s(4096);
        for (std::size_t i = 0; i < s.mem.size(); ++i) s.mem[i] = static_cast<std::uint8_t>(i);
        s.set_reg(2, 0);
        s.set_reg(3, 0);  // every offset field 0
        execute(s, {Opcode::XDecimateClear, 0, 0, 0, 0});
        std::uint32_t expect = 0;
        for (int j = 0; j < 8; ++j) {
            execute(s, {xdecimate_opcode(m), 1, 2, 3, 0});
            CHECK(s.deci_csr == static_cast<std::uint32_t>(j + 1));
            const int block = j >> 1;
            const int lane = block & 3;
            CHECK(lane == std::array{0, 0, 1, 1, 2, 2, 3, 3}[j]);
            expect = (expect & ~(0xFFu << (8 * lane))) | (static_cast<std::uint32_t>(block * m) << (8 * lane));
            CHECK(s.reg(1) == expect);
        }
        execute(s, {Opcode::XDecimateClear, 0, 0, 0, 0});
        CHECK(s.deci_csr == 0);
        CHECK(s.icount == 10);
    }
}

TEST_CASE("xDecimate worked example") {
    // Offsets 3,3,1,1,7,7,0,0 (4-bit, replicated), m=8: bytes 3, 9, 23, 24.
    CoreState s(256);
    for (std::size_t i = 0; i < s.mem.size(); ++i) s.mem[i] = static_cast<std::uint8_t>(i);
    s.set_reg(2, 0);
    s.set_reg(3, 0x00771133u);
    for (int j = 0; j < 8; ++j) execute(s, {Opcode::XDecimateM8, 1, 2, 3, 0});
    CHECK(s.reg(1) == 0x18170903u);
    // m=4 reads 2-bit fields with csr[3:0]: fields 1,1,2,2,0,0,3,3.
    CoreState t(256);
    for (std::size_t i = 0; i < t.mem.size(); ++i) t.mem[i] = static_cast<std::uint8_t>(i);
    t.set_reg(3, 0xF0A5u);
    for (int j = 0; j < 8; ++j) execute(t, {Opcode::XDecimateM4, 1, 0, 3, 0});
    CHECK(t.reg(1) == 0x0F080601u);
}

TEST_CASE("a later step observes the earlier write to the same register") {
    CoreState s(64);
    for (std::size_t i = 0; i < s.mem.size(); ++i) s.mem[i] = static_cast<std::uint8_t>(i + 1);
    s.set_reg(1, 0xAAAAAAAAu);
    execute(s, {Opcode::XDecimateM8, 1, 0, 0, 0});
    CHECK(s.reg(1) == 0xAAAAAA01u);
    execute(s, {Opcode::XDecimateM8, 1, 0, 0, 0});
    CHECK(s.reg(1) == 0xAAAAAA01u);
    execute(s, {Opcode::XDecimateM8, 1, 0, 0, 0});
    CHECK(s.reg(1) == 0xAAAA0901u);
}

TEST_CASE("block index beyond the 15-bit field throws") {
    CoreState s(1u << 20);
    s.deci_csr = 2 * kMaxDecimateBlocks - 1;
    CHECK_NOTHROW(execute(s, {Opcode::XDecimateM16, 1, 0, 0, 0}));
    CHECK_THROWS_AS(execute(s, {Opcode::XDecimateM16, 1, 0, 0, 0}), EmuError);
}

TEST_CASE("xDecimate matches explicit extraction on random cases") {
    auto core = testsupport::decimate_core(99);
    Rng rng(1234);
    for (int i = 0; i < 2000; ++i) {
        const auto c = testsupport::random_decimate_case(rng);
        std::string why;
        REQUIRE_MESSAGE(testsupport::decimate_paths_agree(core, c, &why), why);
    }
}

TEST_CASE("trace lines carry icount, opcode, operands and csr") {
    CoreState s(64);
    std::ostringstream os;
    Emitter e(s);
    e.set_trace(&os, 3);
    e.li(5, 7);
    e.xdecimate(8, 6, 0, 0);
    e.note("marker");
    e.lw_post(7, 5, 4);
    e.addi(1, 1, 1);
    CHECK(os.str() == "1 ADDI x5, x0, 7 csr=0\n2 XDECIMATE.M8 x6, x0, x0 csr=1\n# marker\n3 LW.PI x7, 4(x5!) csr=1\n");
    CHECK(s.icount == 4);
}

TEST_CASE("run_trace executes a recorded program") {
    CoreState a(64), b(64);
    std::vector<Instr> prog;
    Emitter e(a);
    e.set_recorder(&prog);
    e.li(1, 3);
    e.slli(2, 1, 4);
    e.sw(2, 0, 8);
    CHECK(run_trace(b, prog) == 3);
    CHECK(b.regs == a.regs);
    CHECK(b.mem == a.mem);
}

TEST_CASE("iteration markers") {
    CoreState s(64);
    Emitter e(s);
    for (int i = 0; i < 3; ++i) {
        e.begin_iteration();
        e.addi(1, 1, 1);
        e.addi(1, 1, 1);
        e.end_iteration(4);
    }
    const auto& st = e.inner_stats();
    CHECK(st.uniform());
    CHECK(st.iterations == 3);
    CHECK(st.macs_per_instruction() == 2.0);
    CHECK_THROWS_AS(e.end_iteration(1), EmuError);
    e.begin_iteration();
    CHECK_THROWS_AS(e.begin_iteration(), EmuError);
}

}  // TEST_SUITE
