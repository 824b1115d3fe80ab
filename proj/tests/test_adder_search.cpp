#include "doctest.h"

#include <cmath>
#include <set>

#include "arith/adder_search.hpp"

using namespace arith;

namespace {

SearchNode node_with(double score_sum, double score_max, int evals, int visits) {
    SearchNode n(PrefixTree(2));
    n.score_sum = score_sum;
    n.score_max = score_max;
    n.descendant_evals = evals;
    n.visit_count = visits;
    return n;
}

// exhaustive 4-bit oracle: every subset of {(2,3),(2,4),(3,4)} on top of the
// mandatory cells, keeping the legal ones within the level bound
int min_size_width4(int level_bound) {
    const std::pair<int, int> extras[] = {{2, 3}, {2, 4}, {3, 4}};
    int best = 1 << 20;
    for (int mask = 0; mask < 8; ++mask) {
        PrefixTree t(4);
        for (int j = 2; j <= 4; ++j) t.add(1, j);
        for (int b = 0; b < 3; ++b)
            if (mask & (1 << b)) t.add(extras[b].first, extras[b].second);
        if (!t.is_legal()) continue;
        PrefixMetrics m = t.metrics();
        if (m.level <= level_bound) best = std::min(best, m.size);
    }
    return best;
}

} // namespace

TEST_CASE("action_value: weighted best/average") {
    SearchNode two = node_with(-18.0, -8.0, 2, 2); // R set {-10, -8}
    CHECK(action_value(two, 0.01) == doctest::Approx(-8.99));
    CHECK(action_value(two, 0.0) == doctest::Approx(-9.0));

    SearchNode one = node_with(-5.0, -5.0, 1, 1);
    CHECK(action_value(one, 0.37) == doctest::Approx(-5.0));

    SearchNode empty = node_with(0, 0, 0, 1);
    CHECK_THROWS_AS(action_value(empty, 0.01), NoEvaluations);
}

TEST_CASE("node_score: UCT arithmetic") {
    SearchNode zero = node_with(0.0, 0.0, 1, 1);
    CHECK(node_score(zero, 1.0, 10.0 * M_SQRT2, 0.01) == doctest::Approx(0.0));
    CHECK(node_score(zero, std::exp(1.0), 123.0, 0.01) == doctest::Approx(1.0));

    SearchNode neg = node_with(-2.0, -2.0, 1, 1);
    CHECK(node_score(neg, 1.0, 10.0 * M_SQRT2, 0.01) == doctest::Approx(-20.0 * M_SQRT2));

    SearchNode unvisited = node_with(0, 0, 0, 0);
    CHECK_THROWS_AS(node_score(unvisited, 1.0, 1.0, 0.0), UnvisitedNode);
}

TEST_CASE("performance_score: both objectives") {
    SearchConfig theo;
    theo.mode = SearchMode::Theoretical;
    CHECK(performance_score({6.0, 192.0, EvalSource::Theoretical}, theo) == -192.0);

    SearchConfig prac;
    prac.mode = SearchMode::Practical;
    prac.alpha = 0.001;
    CHECK(performance_score({0.7, 500.0, EvalSource::FastProxy}, prac) ==
          doctest::Approx(-1.2));
    prac.alpha = 0.0;
    CHECK(performance_score({0.7, 500.0, EvalSource::FastProxy}, prac) == doctest::Approx(-0.7));
}

TEST_CASE("run_search: ripple seed has an empty action space") {
    SearchConfig cfg;
    cfg.mode = SearchMode::Theoretical;
    cfg.level_bound = 7;
    cfg.step_budget = 50;
    cfg.rng_seed = 1;
    SearchResult res = run_search(generate_seed(AdderFamily::Ripple, 8), cfg, theoretical_eval);
    CHECK(res.empty_action_space);
    CHECK(res.best.metrics().size == 7);
    CHECK(res.best_score == -7.0);
}

TEST_CASE("run_search: width-4 exhaustive oracle") {
    CHECK(min_size_width4(2) == 4);
    CHECK(min_size_width4(3) == 3);

    SearchConfig cfg;
    cfg.mode = SearchMode::Theoretical;
    cfg.level_bound = 3;
    cfg.step_budget = 100;
    cfg.rng_seed = 7;
    SearchResult res = run_search(generate_seed(AdderFamily::Sklansky, 4), cfg, theoretical_eval);
    CHECK(res.best.metrics().size == min_size_width4(3));
    CHECK(res.best.metrics().size >= theory_size_bound(4, 3));
}

TEST_CASE("run_search: 16-bit quality, bounds, invariants") {
    SearchConfig cfg;
    cfg.mode = SearchMode::Theoretical;
    cfg.level_bound = 4;
    cfg.step_budget = 10000;
    cfg.rng_seed = 3;
    SearchResult res = run_search(generate_seed(AdderFamily::Sklansky, 16), cfg, theoretical_eval);

    int best_size = res.best.metrics().size;
    CHECK(best_size < 32);                       // below Sklansky
    CHECK(best_size >= theory_size_bound(16, 4)); // Snir bound: 26

    // trace is monotone, evaluated states respect the level bound
    for (size_t i = 1; i < res.best_trace.size(); ++i)
        CHECK(res.best_trace[i] >= res.best_trace[i - 1]);
    for (const auto& e : res.evaluations) {
        CHECK(e.level <= 4);
        PrefixTree t = PrefixTree::deserialize(e.design);
        CHECK(t.is_legal());
    }
}

TEST_CASE("run_search: deterministic per seed") {
    SearchConfig cfg;
    cfg.mode = SearchMode::Theoretical;
    cfg.level_bound = 3;
    cfg.step_budget = 400;
    cfg.rng_seed = 5;
    PrefixTree seed = generate_seed(AdderFamily::Sklansky, 8);
    SearchResult a = run_search(seed, cfg, theoretical_eval);
    SearchResult b = run_search(seed, cfg, theoretical_eval);
    CHECK(a.best.serialize() == b.best.serialize());
    REQUIRE(a.evaluations.size() == b.evaluations.size());
    for (size_t i = 0; i < a.evaluations.size(); ++i)
        CHECK(a.evaluations[i].design == b.evaluations[i].design);
    CHECK(a.pareto == b.pareto);
}

TEST_CASE("run_search: practical mode explores the full action set") {
    SearchConfig cfg;
    cfg.mode = SearchMode::Practical;
    cfg.alpha = 0.001;
    cfg.step_budget = 300;
    cfg.rng_seed = 11;
    cfg.max_sim_steps = 5;
    SearchResult res =
        run_search(generate_seed(AdderFamily::Sklansky, 8), cfg, proxy_eval_adder);
    CHECK(res.steps_executed == 300);
    CHECK(res.evaluations.size() >= 300);
    CHECK(!res.pareto.empty());
    // every pareto member is an evaluation index
    for (int idx : res.pareto) CHECK((size_t)idx < res.evaluations.size());

    // seed exceeding a theoretical level bound is rejected
    SearchConfig bad;
    bad.mode = SearchMode::Theoretical;
    bad.level_bound = 2;
    CHECK_THROWS_AS(run_search(generate_seed(AdderFamily::Ripple, 8), bad, theoretical_eval),
                    IllegalAction);
}

TEST_CASE("run_search: practical mode improves a ripple seed's delay") {
    SearchConfig cfg;
    cfg.mode = SearchMode::Practical;
    cfg.alpha = 0.0; // pure delay objective
    cfg.step_budget = 2000;
    cfg.rng_seed = 2;
    cfg.max_sim_steps = 10;
    PrefixTree seed = generate_seed(AdderFamily::Ripple, 8);
    SearchResult res = run_search(seed, cfg, proxy_eval_adder);
    // ripple delay is 16; add-cell moves must cut the level substantially
    CHECK(proxy_eval_adder(seed).delay == 16.0);
    CHECK(res.best_eval.delay <= 10.0);
    CHECK(res.best.is_legal());
}

TEST_CASE("optimize_levels: width 4 and 8 against oracles") {
    auto table4 = optimize_levels(4, 500, 1, 17);
    REQUIRE(table4.size() == 2);
    CHECK(table4[0].level == 2);
    CHECK(table4[0].best_size == 4);
    CHECK(table4[1].level == 3);
    CHECK(table4[1].best_size == 3);

    auto table8 = optimize_levels(8, 2000, 3, 17);
    REQUIRE(table8.size() == 4);
    int prev = 1 << 20;
    for (const auto& row : table8) {
        CHECK(row.best_size <= prev);
        CHECK(row.best_size >= theory_size_bound(8, row.level)); // 14 - L
        prev = row.best_size;
    }
}
