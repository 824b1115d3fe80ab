#include "arith/adder_search.hpp"

#include <algorithm>
#include <unordered_map>

#include "arith/rng.hpp"

namespace arith {

double action_value(const SearchNode& node, double beta) {
    if (node.descendant_evals <= 0) throw NoEvaluations("node has no evaluated descendants");
    double avg = node.score_sum / node.descendant_evals;
    return (1.0 - beta) * avg + beta * node.score_max;
}

double node_score(const SearchNode& node, double parent_visits, double c, double beta) {
    if (node.visit_count < 1) throw UnvisitedNode("node score needs visit_count >= 1");
    if (parent_visits < 1) throw UnvisitedNode("node score needs parent visits >= 1");
    return std::sqrt(std::log(parent_visits) / node.visit_count) + c * action_value(node, beta);
}

double performance_score(const EvalResult& eval, const SearchConfig& config) {
    if (config.mode == SearchMode::Theoretical) return -eval.area; // area holds size
    return -eval.delay - config.alpha * eval.area;
}

EvalResult theoretical_eval(const PrefixTree& tree) {
    PrefixMetrics m = tree.metrics();
    return EvalResult{(double)m.level, (double)m.size, EvalSource::Theoretical};
}

namespace {

struct Searcher {
    const SearchConfig& config;
    const AdderEvaluator& evaluator;
    Rng rng;
    std::unordered_map<std::string, EvalResult> eval_cache;
    SearchResult result;
    int step = 0;

    Searcher(const SearchConfig& cfg, const AdderEvaluator& ev)
        : config(cfg), evaluator(ev), rng(cfg.rng_seed) {}

    bool within_bound(const PrefixTree& t) const {
        if (config.mode != SearchMode::Theoretical || !config.level_bound) return true;
        return t.metrics().level <= *config.level_bound;
    }

    std::vector<TreeAction> node_actions(const PrefixTree& state) {
        ActionMode mode =
            config.mode == SearchMode::Theoretical ? ActionMode::DeleteOnly : ActionMode::Full;
        std::vector<TreeAction> actions = state.legal_actions(mode);
        if (config.mode == SearchMode::Theoretical && config.level_bound) {
            std::vector<TreeAction> kept;
            kept.reserve(actions.size());
            for (TreeAction a : actions)
                if (state.applied(a).metrics().level <= *config.level_bound) kept.push_back(a);
            return kept;
        }
        return actions;
    }

    // cached evaluation; records one log entry per step
    std::pair<EvalResult, double> evaluate(const PrefixTree& state) {
        std::string key = state.serialize();
        EvalResult eval;
        auto it = eval_cache.find(key);
        if (it != eval_cache.end()) {
            eval = it->second;
            eval.source = EvalSource::Cache;
        } else {
            eval = evaluator(state);
            eval_cache.emplace(key, eval);
        }
        double score = performance_score(eval, config);
        PrefixMetrics m = state.metrics();
        EvaluatedDesign record;
        record.design = std::move(key);
        record.level = m.level;
        record.size = m.size;
        record.delay = eval.delay;
        record.area = eval.area;
        record.score = score;
        record.step = step;
        record.source = eval.source;
        result.evaluations.push_back(std::move(record));
        if (result.evaluations.size() == 1 || score > result.best_score) {
            result.best = state;
            result.best_score = score;
            result.best_eval = eval;
        }
        return {eval, score};
    }

    PrefixTree simulate(PrefixTree state) {
        if (config.mode == SearchMode::Theoretical) {
            // random improving deletes until none stays within the bound;
            // shuffled first-success equals a uniform draw over legal moves
            while (true) {
                std::vector<TreeAction> candidates = state.legal_actions(ActionMode::DeleteOnly);
                rng.shuffle(candidates);
                bool advanced = false;
                for (TreeAction a : candidates) {
                    PrefixTree next = state.applied(a);
                    if (!config.level_bound ||
                        next.metrics().level <= *config.level_bound) {
                        state = std::move(next);
                        advanced = true;
                        break;
                    }
                }
                if (!advanced) return state;
            }
        }
        for (int s = 0; s < config.max_sim_steps; ++s) {
            std::vector<TreeAction> actions = state.legal_actions(ActionMode::Full);
            if (actions.empty()) break;
            state = state.applied(actions[(size_t)rng.below(actions.size())]);
        }
        return state;
    }

    void backprop(std::vector<SearchNode*>& path, double score) {
        for (SearchNode* n : path) {
            n->visit_count += 1;
            n->descendant_evals += 1;
            n->score_sum += score;
            n->score_max = std::max(n->score_max, score);
        }
        path.back()->terminus_count += 1;
    }

    SearchResult run(const PrefixTree& seed) {
        if (!within_bound(seed))
            throw IllegalAction("seed exceeds the level bound");
        auto root = std::make_unique<SearchNode>(seed);

        // the seed itself is the first evaluated design
        std::vector<SearchNode*> path{root.get()};
        backprop(path, evaluate(seed).second);
        result.best_trace.push_back(result.best_score);

        root->untried = node_actions(root->state);
        root->untried_init = true;
        if (root->untried.empty()) result.empty_action_space = true;

        while (step < config.step_budget) {
            ++step;
            path.assign(1, root.get());
            SearchNode* node = root.get();

            // selection: descend fully expanded nodes by node score
            while (true) {
                if (!node->untried_init) {
                    node->untried = node_actions(node->state);
                    node->untried_init = true;
                }
                if (!node->untried.empty() || node->children.empty()) break;
                SearchNode* best_child = nullptr;
                TreeAction best_action{};
                double best = 0.0;
                for (auto& [action, child] : node->children) {
                    double s = node_score(*child, (double)node->visit_count, config.c,
                                          config.beta);
                    if (!best_child || s > best || (s == best && action < best_action)) {
                        best_child = child.get();
                        best_action = action;
                        best = s;
                    }
                }
                node = best_child;
                path.push_back(node);
            }

            if (node->untried.empty()) {
                // exhausted leaf: re-propagate its own cached evaluation
                backprop(path, evaluate(node->state).second);
                result.best_trace.push_back(result.best_score);
                continue;
            }

            // expansion: uniformly random untried action
            size_t pick = (size_t)rng.below(node->untried.size());
            TreeAction action = node->untried[pick];
            node->untried.erase(node->untried.begin() + (std::ptrdiff_t)pick);
            auto child = std::make_unique<SearchNode>(node->state.applied(action));
            SearchNode* leaf = child.get();
            node->children.emplace_back(action, std::move(child));
            path.push_back(leaf);

            // simulation + backpropagation
            PrefixTree end_state = simulate(leaf->state);
            backprop(path, evaluate(end_state).second);
            result.best_trace.push_back(result.best_score);
        }

        result.steps_executed = step;
        if (!audit_visit_counts(*root))
            throw std::logic_error("search tree visit accounting is inconsistent");

        std::vector<CostPoint> pts;
        pts.reserve(result.evaluations.size());
        for (const auto& e : result.evaluations) pts.push_back({e.area, e.delay});
        if (!pts.empty()) result.pareto = pareto_front(pts);
        return std::move(result);
    }
};

} // namespace

SearchResult run_search(const PrefixTree& seed, const SearchConfig& config,
                        const AdderEvaluator& evaluator) {
    Searcher searcher(config, evaluator);
    return searcher.run(seed);
}

bool audit_visit_counts(const SearchNode& root) {
    int child_sum = 0;
    for (const auto& [action, child] : root.children) {
        if (!audit_visit_counts(*child)) return false;
        child_sum += child->visit_count;
    }
    return root.visit_count == root.terminus_count + child_sum;
}

std::vector<LevelTableEntry> optimize_levels(
    int width, int per_level_budget, int max_extra_levels, uint64_t rng_seed,
    const std::function<void(int level, const SearchResult&)>& stage_sink) {
    PrefixTree current = generate_seed(AdderFamily::Sklansky, width);
    std::vector<LevelTableEntry> table;
    int base = min_level(width);
    for (int stage = 0; stage <= max_extra_levels; ++stage) {
        SearchConfig cfg;
        cfg.mode = SearchMode::Theoretical;
        cfg.level_bound = base + stage;
        cfg.step_budget = per_level_budget;
        cfg.rng_seed = Rng::derive(rng_seed, (uint64_t)stage);
        SearchResult res = run_search(current, cfg, theoretical_eval);
        LevelTableEntry entry;
        entry.level = base + stage;
        entry.best_size = res.best.metrics().size;
        entry.design = res.best.serialize();
        entry.best_score = res.best_score;
        table.push_back(entry);
        if (stage_sink) stage_sink(base + stage, res);
        current = res.best;
    }
    return table;
}

} // namespace arith
