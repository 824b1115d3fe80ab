#include "arith/codesign.hpp"

#include <cmath>

#include "arith/hdl_netlist.hpp"
#include "arith/rng.hpp"
#include "json.hpp"

namespace arith {

std::string MultiplierDesign::to_json() const {
    nlohmann::json j{{"width", width},
                     {"actions", actions_to_string(actions)},
                     {"prefixtree", prefix.serialize()},
                     {"eval",
                      {{"delay", eval.delay},
                       {"area", eval.area},
                       {"source", eval_source_name(eval.source)}}},
                     {"provenance", {{"round", found_round}, {"seed", rng_seed}}}};
    return j.dump(2) + "\n";
}

MultiplierDesign MultiplierDesign::from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    MultiplierDesign d;
    d.width = j.at("width").get<int>();
    d.actions = actions_from_string(j.at("actions").get<std::string>());
    d.prefix = PrefixTree::deserialize(j.at("prefixtree").get<std::string>());
    d.eval.delay = j.at("eval").at("delay").get<double>();
    d.eval.area = j.at("eval").at("area").get<double>();
    d.eval.source = eval_source_from_name(j.at("eval").at("source").get<std::string>());
    if (j.contains("provenance")) {
        d.found_round = j["provenance"].value("round", -1);
        d.rng_seed = j["provenance"].value("seed", (uint64_t)0);
    }
    return d;
}

std::vector<CompressKind> wallace_actions(int width) {
    CompressorState s = CompressorState::initial(width);
    while (auto digit = s.action_digit()) {
        size_t k = s.column(*digit).size();
        CompressKind kind = (k % 3 == 2) ? CompressKind::HA : CompressKind::FA;
        s.apply(kind);
    }
    return s.actions();
}

MultiplierDesign baseline_wallace(int width) {
    MultiplierDesign d;
    d.width = width;
    d.actions = wallace_actions(width);
    d.prefix = generate_seed(AdderFamily::Sklansky, 2 * width);
    CompressorState terminal = CompressorState::replay(width, d.actions);
    d.eval = proxy_eval_multiplier(terminal, d.prefix);
    d.score = -d.eval.delay - 0.01 * d.eval.area;
    return d;
}

namespace {

void verify_design(const MultiplierDesign& d, const CodesignConfig& config) {
    if (!config.verify_incumbents) return;
    CompressorState terminal = CompressorState::replay(d.width, d.actions);
    VerifyMode mode = (2 * d.width <= 26)
                          ? VerifyMode::Exhaustive()
                          : VerifyMode::Random(config.verify_random_count,
                                               Rng::derive(config.rng_seed, 0xF1CA));
    VerifyReport report = verify_multiplier(terminal, d.prefix, mode);
    if (!report.pass)
        throw std::logic_error("candidate multiplier failed functional verification: " +
                               report.to_json());
}

} // namespace

CodesignResult run_codesign(const CodesignConfig& config) {
    if (config.rounds < 1) throw std::invalid_argument("codesign needs at least one round");
    MultiplierEvaluator evaluate = config.evaluator;
    if (!evaluate)
        evaluate = [](const CompressorState& s, const PrefixTree& t) {
            return proxy_eval_multiplier(s, t);
        };
    auto score_of = [&](const EvalResult& e) { return -e.delay - config.alpha * e.area; };

    CodesignResult result;
    PrefixTree prefix = generate_seed(AdderFamily::Sklansky, 2 * config.width);
    result.params = init_params(Rng::derive(config.rng_seed, 0xA6E7));
    MultiplierDesign incumbent;
    bool have_incumbent = false;

    for (int round = 0; round < config.rounds; ++round) {
        // compressor phase: PPO against the current prefix tree
        if (config.compressor_steps > 0) {
            PrefixTree fixed = prefix;
            MultEvaluator ppo_eval = [&evaluate, fixed](const CompressorState& s) {
                return evaluate(s, fixed);
            };
            Rng rng(Rng::derive(config.rng_seed, 2 * (uint64_t)round));
            TrainResult tr = train(config.width, config.compressor_steps, config.ppo,
                                   ppo_eval, rng, &result.params);
            result.params = tr.params;
            result.compressor_steps_logged += tr.env_steps;
            // candidate: best episode by the combined score
            const EpisodeRecord* cand = nullptr;
            double cand_score = 0.0;
            for (const EpisodeRecord& ep : tr.episodes) {
                double s = score_of(ep.eval);
                if (!cand || s > cand_score) {
                    cand = &ep;
                    cand_score = s;
                }
            }
            if (cand && (!have_incumbent || cand_score > incumbent.score)) {
                MultiplierDesign d;
                d.width = config.width;
                d.actions = cand->actions;
                d.prefix = prefix;
                d.eval = cand->eval;
                d.score = cand_score;
                d.found_round = round;
                d.rng_seed = config.rng_seed;
                verify_design(d, config);
                incumbent = std::move(d);
                have_incumbent = true;
            }
        }

        // prefix phase: MCTS against the incumbent compressor
        if (config.prefix_steps > 0 && have_incumbent) {
            CompressorState terminal =
                CompressorState::replay(config.width, incumbent.actions);
            AdderEvaluator tree_eval = [&evaluate, &terminal](const PrefixTree& t) {
                return evaluate(terminal, t);
            };
            SearchConfig scfg;
            scfg.mode = SearchMode::Practical;
            scfg.alpha = config.alpha;
            scfg.step_budget = config.prefix_steps;
            scfg.rng_seed = Rng::derive(config.rng_seed, 2 * (uint64_t)round + 1);
            SearchResult sr = run_search(prefix, scfg, tree_eval);
            result.prefix_steps_logged += sr.steps_executed;
            double s = score_of(sr.best_eval);
            if (s > incumbent.score) {
                MultiplierDesign d = incumbent;
                d.prefix = sr.best;
                d.eval = sr.best_eval;
                d.score = s;
                d.found_round = round;
                verify_design(d, config);
                incumbent = std::move(d);
                prefix = incumbent.prefix;
            }
        }
        result.round_scores.push_back(have_incumbent
                                          ? incumbent.score
                                          : -std::numeric_limits<double>::infinity());
    }

    if (!have_incumbent) throw std::logic_error("codesign produced no complete episode");
    result.best = incumbent;
    return result;
}

} // namespace arith
