#include "doctest.h"

#include "arith/codesign.hpp"
#include "arith/hdl_netlist.hpp"

using namespace arith;

TEST_CASE("wallace baseline: terminal, verified, width-2 trivial") {
    CHECK(wallace_actions(2).empty()); // already terminal

    MultiplierDesign w4 = baseline_wallace(4);
    CompressorState t4 = CompressorState::replay(4, w4.actions);
    CHECK(t4.terminal());
    CHECK(t4.ha_total() > 0); // Wallace style uses half adders
    CHECK(verify_multiplier(t4, w4.prefix, VerifyMode::Exhaustive()).pass);

    MultiplierDesign w8 = baseline_wallace(8);
    CompressorState t8 = CompressorState::replay(8, w8.actions);
    CHECK(t8.terminal());
    CHECK(verify_multiplier(t8, w8.prefix, VerifyMode::Exhaustive()).pass);
}

TEST_CASE("design bundle JSON round trip") {
    MultiplierDesign d = baseline_wallace(4);
    d.found_round = 2;
    d.rng_seed = 99;
    MultiplierDesign back = MultiplierDesign::from_json(d.to_json());
    CHECK(back.width == d.width);
    CHECK(back.actions == d.actions);
    CHECK(back.prefix == d.prefix);
    CHECK(back.eval.same_value(d.eval));
    CHECK(back.found_round == 2);
    CHECK(back.rng_seed == 99);
}

TEST_CASE("ppo-only codesign equals standalone ppo") {
    CodesignConfig cfg;
    cfg.width = 4;
    cfg.rounds = 1;
    cfg.compressor_steps = 150;
    cfg.prefix_steps = 0;
    cfg.rng_seed = 21;
    CodesignResult ppo_only = run_codesign(cfg);

    // standalone run with the codesign seed derivations
    PrefixTree sk8 = generate_seed(AdderFamily::Sklansky, 8);
    MultEvaluator eval = [&](const CompressorState& s) { return proxy_eval_multiplier(s, sk8); };
    AgentParams init = init_params(Rng::derive(21, 0xA6E7));
    Rng rng(Rng::derive(21, 0));
    PPOConfig ppo;
    TrainResult tr = train(4, 150, ppo, eval, rng, &init);

    double best = 0.0;
    bool have = false;
    for (const auto& ep : tr.episodes) {
        double s = -ep.eval.delay - cfg.alpha * ep.eval.area;
        if (!have || s > best) {
            best = s;
            have = true;
        }
    }
    REQUIRE(have);
    CHECK(ppo_only.best.score == doctest::Approx(best));
    CHECK(ppo_only.compressor_steps_logged == 150);
    CHECK(ppo_only.prefix_steps_logged == 0);
}

TEST_CASE("codesign: dominance, accounting, incumbent monotonicity") {
    CodesignConfig ppo_cfg;
    ppo_cfg.width = 4;
    ppo_cfg.rounds = 1;
    ppo_cfg.compressor_steps = 150;
    ppo_cfg.prefix_steps = 0;
    ppo_cfg.rng_seed = 5;
    CodesignResult ppo_only = run_codesign(ppo_cfg);

    CodesignConfig cfg = ppo_cfg;
    cfg.rounds = 2;
    cfg.prefix_steps = 40;
    CodesignResult co = run_codesign(cfg);

    CHECK(co.best.score >= ppo_only.best.score); // co-design never loses
    CHECK(co.compressor_steps_logged == 2 * 150);
    CHECK(co.prefix_steps_logged == 2 * 40);

    double prev = -1e300;
    for (double s : co.round_scores) {
        CHECK(s >= prev);
        prev = s;
    }

    // the returned design is functional and replayable
    CompressorState terminal = CompressorState::replay(co.best.width, co.best.actions);
    CHECK(terminal.terminal());
    CHECK(verify_multiplier(terminal, co.best.prefix, VerifyMode::Exhaustive()).pass);
}

TEST_CASE("codesign: deterministic per seed") {
    CodesignConfig cfg;
    cfg.width = 4;
    cfg.rounds = 2;
    cfg.compressor_steps = 100;
    cfg.prefix_steps = 25;
    cfg.rng_seed = 31;
    CodesignResult a = run_codesign(cfg);
    CodesignResult b = run_codesign(cfg);
    CHECK(a.best.to_json() == b.best.to_json());
    CHECK(a.round_scores == b.round_scores);
}
