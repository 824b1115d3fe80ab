#include "doctest.h"

#include <fstream>
#include <sstream>

#include "arith/cost_eval.hpp"
#include "arith/hdl_netlist.hpp"
#include "arith/rng.hpp"

using namespace arith;

namespace {

std::vector<std::vector<uint64_t>> pack_pair(int bits, uint64_t a, uint64_t b) {
    std::vector<std::vector<uint64_t>> in(2);
    for (int k = 0; k < bits; ++k) {
        in[0].push_back((a >> k) & 1);
        in[1].push_back((b >> k) & 1);
    }
    return in;
}

uint64_t unpack_bit0(const std::vector<uint64_t>& words) {
    uint64_t v = 0;
    for (size_t k = 0; k < words.size(); ++k) v |= (words[k] & 1) << k;
    return v;
}

std::string golden_path(const char* name) {
    return std::string(ARITH_TEST_DATA_DIR) + "/golden/" + name;
}

CompressorState all_fa_terminal(int width) {
    CompressorState s = CompressorState::initial(width);
    while (!s.terminal()) s.apply(CompressKind::FA);
    return s;
}

} // namespace

TEST_CASE("adder netlist: gate count ties to the proxy area") {
    PrefixTree r2 = generate_seed(AdderFamily::Ripple, 2);
    Netlist nl = build_adder_netlist(r2);
    CHECK(nl.gates().size() == 9); // 2N + 3*size + N = 4 + 3 + 2

    Rng rng(3);
    for (int width : {4, 8}) {
        PrefixTree t = generate_seed(AdderFamily::Ripple, width);
        for (int e = 0; e < 5; ++e) {
            auto actions = t.legal_actions(ActionMode::Full);
            if (!actions.empty())
                t = t.applied(actions[(size_t)rng.below(actions.size())]);
            CHECK((double)build_adder_netlist(t).gates().size() == proxy_eval_adder(t).area);
        }
    }

    PrefixTree bad(4);
    CHECK_THROWS_AS(build_adder_netlist(bad), IllegalTree);
}

TEST_CASE("adder netlist: identical trees produce identical netlists") {
    PrefixTree sk = generate_seed(AdderFamily::Sklansky, 8);
    std::string v1 = emit_verilog(build_adder_netlist(sk), "adder8");
    std::string v2 = emit_verilog(build_adder_netlist(sk), "adder8");
    CHECK(v1 == v2);
}

TEST_CASE("simulate: known adder and multiplier vectors") {
    Netlist adder = build_adder_netlist(generate_seed(AdderFamily::Sklansky, 8));
    auto out = adder.simulate(pack_pair(8, 200, 100));
    CHECK(unpack_bit0(out[0]) == 44); // 300 mod 256
    CHECK((out[1][0] & 1) == 1);
    out = adder.simulate(pack_pair(8, 0, 0));
    CHECK(unpack_bit0(out[0]) == 0);
    CHECK((out[1][0] & 1) == 0);
}

TEST_CASE("simulate: 4-bit multiplier 15*15") {
    CompressorState s = all_fa_terminal(4);
    Netlist mul = build_multiplier_netlist(s, generate_seed(AdderFamily::Sklansky, 8));
    auto out = mul.simulate(pack_pair(4, 15, 15));
    CHECK(unpack_bit0(out[0]) == 225);

    CHECK_THROWS_AS(mul.simulate({{0, 0}, {0, 0, 0, 0}}), UnboundInput);
}

TEST_CASE("multiplier netlist: exhaustive correctness at widths 2 and 4") {
    CompressorState w2 = CompressorState::initial(2); // already terminal
    PrefixTree sk4 = generate_seed(AdderFamily::Sklansky, 4);
    VerifyReport r2 = verify_multiplier(w2, sk4, VerifyMode::Exhaustive());
    CHECK(r2.pass);
    CHECK(r2.vectors == 16);

    VerifyReport r4 = verify_multiplier(all_fa_terminal(4),
                                        generate_seed(AdderFamily::Sklansky, 8),
                                        VerifyMode::Exhaustive());
    CHECK(r4.pass);
    CHECK(r4.vectors == 256);

    // half-adder-heavy episodes exercise the dropped-zero-bit path
    Rng rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        CompressorState s = CompressorState::initial(4);
        while (!s.terminal())
            s.apply(rng.below(3) == 0 ? CompressKind::FA : CompressKind::HA);
        VerifyReport r = verify_multiplier(s, generate_seed(AdderFamily::BrentKung, 8),
                                           VerifyMode::Exhaustive());
        CHECK(r.pass);
    }

    CHECK_THROWS_AS(build_multiplier_netlist(CompressorState::initial(4), sk4), NotTerminal);
    CHECK_THROWS_AS(build_multiplier_netlist(w2, generate_seed(AdderFamily::Sklansky, 8)),
                    WidthMismatch);
    // multiplier gate count equals the proxy area
    CompressorState t4 = all_fa_terminal(4);
    PrefixTree sk8 = generate_seed(AdderFamily::Sklansky, 8);
    CHECK((double)build_multiplier_netlist(t4, sk8).gates().size() ==
          proxy_eval_multiplier(t4, sk8).area);
}

TEST_CASE("verify: exhaustive pass, mutation fail, random reproducibility") {
    PrefixTree sk8 = generate_seed(AdderFamily::Sklansky, 8);
    VerifyReport pass = verify_adder(sk8, VerifyMode::Exhaustive(), 2);
    CHECK(pass.pass);
    CHECK(pass.vectors == 65536);

    // flip the top sum XOR into an AND: must produce a counterexample
    Netlist nl = build_adder_netlist(sk8);
    size_t sum_gate = nl.gates().size() - 1;
    REQUIRE(nl.gates()[sum_gate].kind == GateKind::Xor);
    nl.mutable_gates()[sum_gate].kind = GateKind::And;
    bool found = false;
    for (uint64_t a = 0; a < 256 && !found; ++a)
        for (uint64_t b = 0; b < 256 && !found; ++b) {
            auto out = nl.simulate(pack_pair(8, a, b));
            if (unpack_bit0(out[0]) != ((a + b) & 0xff)) found = true;
        }
    CHECK(found);

    VerifyReport rnd1 = verify_adder(generate_seed(AdderFamily::KoggeStone, 32),
                                     VerifyMode::Random(100000, 7), 2);
    CHECK(rnd1.pass);
    VerifyReport rnd2 = verify_adder(generate_seed(AdderFamily::KoggeStone, 32),
                                     VerifyMode::Random(100000, 7), 1);
    CHECK(rnd1.to_json() == rnd2.to_json()); // reproducible across job counts
}

TEST_CASE("verify: adders across families and random edits") {
    Rng rng(21);
    for (int width : {4, 8}) {
        PrefixTree t = generate_seed(AdderFamily::BrentKung, width);
        for (int e = 0; e < 4; ++e) {
            CHECK(verify_adder(t, VerifyMode::Exhaustive()).pass);
            auto actions = t.legal_actions(ActionMode::Full);
            if (actions.empty()) break;
            t = t.applied(actions[(size_t)rng.below(actions.size())]);
        }
    }

    // wide adders on seeded random vectors
    CHECK(verify_adder(generate_seed(AdderFamily::BrentKung, 16),
                       VerifyMode::Random(100000, 5), 2)
              .pass);
    CHECK(verify_adder(generate_seed(AdderFamily::Sklansky, 64),
                       VerifyMode::Random(100000, 5), 2)
              .pass);
}

TEST_CASE("emit_verilog: pass-through golden and module name validation") {
    Netlist nl;
    nl.add_input("a", 2);
    nl.bind_output("y", {nl.input_wire(0, 0), nl.input_wire(0, 1)});
    std::string expect = "module passthrough(\n"
                         "  input [1:0] a,\n"
                         "  output [1:0] y\n"
                         ");\n"
                         "  assign y[0] = a[0];\n"
                         "  assign y[1] = a[1];\n"
                         "endmodule\n";
    CHECK(emit_verilog(nl, "passthrough") == expect);

    CHECK_THROWS_AS(emit_verilog(nl, ""), InvalidModuleName);
    CHECK_THROWS_AS(emit_verilog(nl, "1bad"), InvalidModuleName);
    CHECK_THROWS_AS(emit_verilog(nl, "bad name"), InvalidModuleName);
}

TEST_CASE("emit_verilog: sklansky8 golden snapshot") {
    std::string text =
        emit_verilog(build_adder_netlist(generate_seed(AdderFamily::Sklansky, 8)), "adder8");
    std::ifstream in(golden_path("sklansky8_adder.v"));
    REQUIRE(in.good());
    std::ostringstream want;
    want << in.rdbuf();
    CHECK(text == want.str());
}
