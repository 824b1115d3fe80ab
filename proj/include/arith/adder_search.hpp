#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "arith/cost_eval.hpp"
#include "arith/errors.hpp"
#include "arith/prefix_tree.hpp"

namespace arith {

enum class SearchMode { Theoretical, Practical };

struct SearchConfig {
    SearchMode mode = SearchMode::Theoretical;
    double beta = 0.01;           // best-vs-average weight in the action value
    double c = 10.0 * M_SQRT2;    // node-score weight
    double alpha = 0.0;           // area weight in the practical score
    std::optional<int> level_bound; // L, theoretical mode
    int max_sim_steps = 10;       // practical-mode rollout cap
    int step_budget = 1000;
    uint64_t rng_seed = 0;
};

struct SearchNode {
    PrefixTree state;
    int visit_count = 0;
    double score_sum = 0.0;
    double score_max = -std::numeric_limits<double>::infinity();
    int descendant_evals = 0;
    int terminus_count = 0; // backprop paths that ended at this node
    bool untried_init = false;
    std::vector<TreeAction> untried;
    std::vector<std::pair<TreeAction, std::unique_ptr<SearchNode>>> children;

    explicit SearchNode(PrefixTree s) : state(std::move(s)) {}
};

// (1-beta) * avg + beta * max over evaluated descendants.
double action_value(const SearchNode& node, double beta); // NoEvaluations

// sqrt(ln(parent_visits) / visit_count) + c * action_value.
double node_score(const SearchNode& node, double parent_visits, double c,
                  double beta); // UnvisitedNode

// Theoretical: -size. Practical: -delay - alpha * area.
double performance_score(const EvalResult& eval, const SearchConfig& config);

using AdderEvaluator = std::function<EvalResult(const PrefixTree&)>;

// Metrics packaged as an EvalResult (delay <- level, area <- size).
EvalResult theoretical_eval(const PrefixTree& tree);

struct EvaluatedDesign {
    std::string design; // canonical serialization
    int level = 0;
    int size = 0;
    double delay = 0.0;
    double area = 0.0;
    double score = 0.0;
    int step = 0;
    EvalSource source = EvalSource::FastProxy;
};

struct SearchResult {
    PrefixTree best;
    double best_score = 0.0;
    EvalResult best_eval;
    std::vector<EvaluatedDesign> evaluations; // run log, one per step
    std::vector<int> pareto;                  // indices into evaluations
    std::vector<double> best_trace;           // per-step best score, non-decreasing
    int steps_executed = 0;
    bool empty_action_space = false;

    SearchResult() : best(1) {}
};

// UCT search over prefix-tree edits. Theoretical mode restricts the move set
// to deletes whose result stays within the level bound and rolls out random
// improving deletes to exhaustion; practical mode uses the full move set with
// bounded random rollouts. Deterministic per seed; evaluations are
// deduplicated by canonical serialization.
SearchResult run_search(const PrefixTree& seed, const SearchConfig& config,
                        const AdderEvaluator& evaluator);

struct LevelTableEntry {
    int level = 0;
    int best_size = 0;
    std::string design;
    double best_score = 0.0;
};

// Level-staged size optimization: starts from Sklansky at L = log2(width),
// raises L one level per stage, reseeding each stage from the previous
// stage's minimum-size tree.
std::vector<LevelTableEntry> optimize_levels(
    int width, int per_level_budget, int max_extra_levels, uint64_t rng_seed,
    const std::function<void(int level, const SearchResult&)>& stage_sink = nullptr);

// Verifies visit-count bookkeeping over the whole search tree:
// visits == terminus_count + sum(child visits) for every node.
bool audit_visit_counts(const SearchNode& root);

} // namespace arith
