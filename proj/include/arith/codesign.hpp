#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "arith/adder_search.hpp"
#include "arith/compressor_tree.hpp"
#include "arith/cost_eval.hpp"
#include "arith/ppo_agent.hpp"
#include "arith/prefix_tree.hpp"

namespace arith {

// Evaluates a complete multiplier: terminal compressor state + 2N-bit tree.
using MultiplierEvaluator =
    std::function<EvalResult(const CompressorState&, const PrefixTree&)>;

struct CodesignConfig {
    int width = 8;
    int rounds = 3;
    int compressor_steps = 900; // PPO environment steps per round
    int prefix_steps = 100;     // MCTS iterations per round
    double alpha = 0.01;        // area weight in the score
    uint64_t rng_seed = 0;
    PPOConfig ppo;
    MultiplierEvaluator evaluator;   // default: unit-gate proxy
    bool verify_incumbents = true;   // functional check before acceptance
    uint64_t verify_random_count = 100000;
};

struct MultiplierDesign {
    int width = 0;
    std::vector<CompressKind> actions;
    PrefixTree prefix;
    EvalResult eval;
    double score = 0.0;
    int found_round = -1; // -1 marks the baseline/none
    uint64_t rng_seed = 0;

    MultiplierDesign() : prefix(1) {}
    std::string to_json() const;
    static MultiplierDesign from_json(const std::string& text);
};

struct CodesignResult {
    MultiplierDesign best;
    AgentParams params;
    int compressor_steps_logged = 0;
    int prefix_steps_logged = 0;
    std::vector<double> round_scores; // incumbent score after each round
};

// Alternates PPO over the compressor tree (prefix fixed inside the evaluator)
// with MCTS over the 2N-bit prefix tree (compressor fixed), keeping the
// incumbent design whenever a round fails to improve it. Round 1 starts from
// Sklansky(2N); PPO parameters persist across rounds. With prefix_steps = 0
// and rounds = 1 this degenerates to plain PPO.
CodesignResult run_codesign(const CodesignConfig& config);

// Wallace-style deterministic schedule: at each action digit with k bits use
// a half adder when k mod 3 == 2, otherwise a full adder.
std::vector<CompressKind> wallace_actions(int width);

MultiplierDesign baseline_wallace(int width);

} // namespace arith
