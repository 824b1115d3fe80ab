#include "doctest.h"

#include <functional>

#include "arith/compressor_tree.hpp"
#include "arith/rng.hpp"

using namespace arith;

namespace {

std::vector<int> column_counts(const CompressorState& s) {
    std::vector<int> out;
    for (int c = 0; c < s.column_count(); ++c) out.push_back((int)s.column(c).size());
    return out;
}

CompressorState random_episode(int width, Rng& rng,
                               const std::function<void(const CompressorState&, const CompressPick&)>&
                                   step_check = nullptr) {
    CompressorState s = CompressorState::initial(width);
    while (!s.terminal()) {
        CompressKind kind = rng.below(2) == 0 ? CompressKind::FA : CompressKind::HA;
        CompressPick pick = s.plan(kind);
        if (step_check) step_check(s, pick);
        s.apply(pick);
    }
    return s;
}

} // namespace

TEST_CASE("init_state: column counts and totals") {
    CHECK(column_counts(CompressorState::initial(4)) == std::vector<int>{1, 2, 3, 4, 3, 2, 1});
    CHECK(CompressorState::initial(4).total_bits() == 16);
    CHECK(column_counts(CompressorState::initial(2)) == std::vector<int>{1, 2, 1});
    CHECK(CompressorState::initial(8).total_bits() == 64);
    CHECK_THROWS_AS(CompressorState::initial(1), UnsupportedWidth);
}

TEST_CASE("action_digit: lowest column above two bits") {
    CHECK(CompressorState::initial(4).action_digit() == 2);
    CHECK(CompressorState::initial(8).action_digit() == 2);
    CHECK_FALSE(CompressorState::initial(2).action_digit().has_value()); // already terminal
    CHECK(CompressorState::initial(2).terminal());
}

TEST_CASE("apply_compress: delay propagation") {
    // FA over three delay-1 bits: max(1+3, 1+3, 1+2) = 4 on both outputs
    CompressorState s = CompressorState::initial(4);
    CompressPick pick = s.plan(CompressKind::FA);
    CHECK(pick.digit == 2);
    CHECK(pick.out_delay == 4);
    s.apply(pick);
    CHECK(s.column(2).back() == 4);
    CHECK(s.column(3).back() == 4);
    CHECK(s.total_bits() == 15);

    // HA over {1, 2}: max + 1 = 3
    CHECK(ha_output_delay(1, 2) == 3);
    // FA assigns the largest delay to the carry input: {1,1,3} -> max(4,4,5)
    CHECK(fa_output_delay(1, 1, 3) == 5);

    CompressorState t = CompressorState::initial(2);
    CHECK_THROWS_AS(t.plan(CompressKind::FA), TerminalState);
    CHECK_THROWS_AS(t.features(), TerminalState);
}

TEST_CASE("apply_compress: lowest-delay bits selected first") {
    CompressorState s = CompressorState::initial(4);
    s.apply(CompressKind::FA); // column 3 now {1,1,1,1,4}
    CompressPick pick = s.plan(CompressKind::FA);
    CHECK(pick.digit == 3);
    for (int p = 0; p < 3; ++p)
        CHECK(s.column(3)[(size_t)pick.indices[p]] == 1);
    CHECK(pick.out_delay == 4);
}

TEST_CASE("features: normalized values at width 4") {
    const double dhat = delay_ceiling(4); // 3*ceil(log1.5 4) + 4 = 16
    CHECK(dhat == doctest::Approx(16.0));
    CompressorState s = CompressorState::initial(4);
    FeatureVector f = s.features();
    CHECK(f[0] == doctest::Approx(2.0 / 6.0));
    CHECK(f[1] == doctest::Approx(1.0 / dhat));
    CHECK(f[2] == 0.0);
    CHECK(f[3] == 1.0);
    CHECK(f[4] == 1.0);
    CHECK(f[5] == doctest::Approx(1.0 / dhat));
    CHECK(f[6] == doctest::Approx(1.0 / dhat));
    CHECK(f[7] == doctest::Approx(1.0 / dhat));

    s.apply(CompressKind::FA);
    FeatureVector g = s.features();
    CHECK(g[1] == doctest::Approx(4.0 / dhat)); // new max delay
    CHECK(g[2] == 0.0);                         // still no half adders

    CompressorState h = CompressorState::initial(4);
    h.apply(CompressKind::HA);
    CHECK(h.ha_count(2) == 1);
}

TEST_CASE("finalize_operands: bindings and errors") {
    CompressorState w2 = CompressorState::initial(2); // [1,2,1], terminal
    auto ops = w2.finalize_operands();
    CHECK(ops.x_present == std::vector<uint8_t>{1, 1, 1, 0});
    CHECK(ops.y_present == std::vector<uint8_t>{0, 1, 0, 0});
    CHECK(ops.dropped_zero_bits == 0);

    CHECK_THROWS_AS(CompressorState::initial(4).finalize_operands(), NotTerminal);

    Rng rng(7);
    CompressorState t = random_episode(4, rng);
    CHECK(t.total_bits() == 16 - t.fa_total()); // bit conservation
}

TEST_CASE("episodes: conservation, termination, strictly increasing delays") {
    Rng rng(99);
    for (int trial = 0; trial < 300; ++trial) {
        int width = trial % 2 == 0 ? 4 : 8;
        int applied = 0;
        CompressorState final = random_episode(
            width, rng, [&](const CompressorState& s, const CompressPick& pick) {
                for (int p = 0; p < pick.arity; ++p)
                    CHECK(pick.out_delay > s.column(pick.digit)[(size_t)pick.indices[p]]);
                ++applied;
            });
        CHECK(final.terminal());
        CHECK(final.total_bits() == width * width - final.fa_total());
        CHECK(applied == final.fa_total() + final.ha_total());
        CHECK((int)final.actions().size() == applied);
    }
}

TEST_CASE("columns grow past the initial 2N-1 under half-adder-heavy play") {
    CompressorState s = CompressorState::initial(4);
    while (!s.terminal()) s.apply(CompressKind::HA);
    CHECK(s.column_count() > 7);
    auto ops = s.finalize_operands();
    CHECK(ops.dropped_zero_bits >= 0);
    CHECK(s.total_bits() == 16); // HA keeps the bit count
}

TEST_CASE("serialization: format and replay fidelity") {
    Rng rng(5);
    CompressorState s = random_episode(4, rng);
    std::string text = s.serialize();
    CHECK(text.rfind("compressor v1 width=4 actions=", 0) == 0);
    CompressorState back = CompressorState::deserialize(text);
    CHECK(back == s);

    CompressorState replayed = CompressorState::replay(4, s.actions());
    CHECK(replayed == s);

    CHECK_THROWS_AS(CompressorState::deserialize("compressor v2 width=4 actions=F"), ParseError);
    CHECK_THROWS_AS(CompressorState::deserialize("compressor v1 width=4 actions=FX"), ParseError);
    CHECK_THROWS_AS(CompressorState::deserialize("compressor v1 width=4\n"), ParseError);
}
