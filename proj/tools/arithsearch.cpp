// arithsearch -- prefix-adder and compressor-tree multiplier design search

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "arith/adder_search.hpp"
#include "arith/codesign.hpp"
#include "arith/compressor_tree.hpp"
#include "arith/cost_eval.hpp"
#include "arith/hdl_netlist.hpp"
#include "arith/ppo_agent.hpp"
#include "arith/prefix_tree.hpp"

namespace {

constexpr const char* kVersion = "arithsearch 0.1.0";

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << content;
}

arith::AdderFamily parse_family(const std::string& name) {
    if (name == "sklansky") return arith::AdderFamily::Sklansky;
    if (name == "brent-kung") return arith::AdderFamily::BrentKung;
    if (name == "kogge-stone") return arith::AdderFamily::KoggeStone;
    if (name == "ripple") return arith::AdderFamily::Ripple;
    throw CLI::ValidationError("--family", "unknown family: " + name);
}

// A design file is either a prefix-tree text file or a multiplier bundle
// (JSON object with width/actions/prefixtree).
struct Design {
    bool is_multiplier = false;
    arith::PrefixTree tree;
    std::vector<arith::CompressKind> actions;
    Design() : tree(1) {}

    int operand_width() const { return is_multiplier ? tree.width() / 2 : tree.width(); }
    arith::CompressorState terminal() const {
        return arith::CompressorState::replay(tree.width() / 2, actions);
    }
};

Design load_design(const std::string& path) {
    std::string text = read_file(path);
    Design d;
    size_t first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        arith::MultiplierDesign m = arith::MultiplierDesign::from_json(text);
        d.is_multiplier = true;
        d.tree = m.prefix;
        d.actions = m.actions;
        if (d.tree.width() != 2 * m.width)
            throw arith::WidthMismatch("bundle prefix tree must be 2N bits wide");
    } else {
        d.tree = arith::PrefixTree::deserialize(text);
    }
    return d;
}

nlohmann::json config_record(const nlohmann::json& options) {
    return nlohmann::json{{"type", "config"}, {"version", kVersion}, {"options", options}};
}

int run_gen(const std::string& family, int bits, const std::string& out) {
    arith::PrefixTree tree = arith::generate_seed(parse_family(family), bits);
    std::string text = tree.serialize();
    if (out.empty()) std::cout << text;
    else write_file(out, text);
    arith::PrefixMetrics m = tree.metrics();
    std::cerr << family << " " << bits << "-bit: level " << m.level << ", size " << m.size
              << "\n";
    return 0;
}

struct OptimizeAdderOpts {
    int bits = 64;
    std::string objective = "size";
    int steps = 400000;
    int levels = 4;
    uint64_t seed = 0;
    double alpha = 0.001;
    double beta = 0.01;
    double c = 10.0 * M_SQRT2;
    int max_sim_steps = 10;
    double fraction = 0.1;
    std::string family = "sklansky";
    std::string out;
    std::string log;
    std::string best_dir;
    std::string fast_cmd;
    std::string full_cmd;
    double timeout = 300.0;
};

void append_log_records(std::ostream& log, const arith::SearchResult& res,
                        const std::string& stage) {
    for (const auto& e : res.evaluations) {
        nlohmann::json j{{"type", "eval"},        {"stage", stage},
                         {"step", e.step},        {"design", e.design},
                         {"level", e.level},      {"size", e.size},
                         {"delay", e.delay},      {"area", e.area},
                         {"score", e.score},      {"source", arith::eval_source_name(e.source)}};
        log << j.dump() << "\n";
    }
}

arith::EvalResult eval_tree_external(const arith::PrefixTree& tree, const std::string& cmd,
                                     double timeout, arith::CacheStore& cache,
                                     const std::string& workdir) {
    std::string key = tree.serialize();
    if (auto hit = cache.get(key)) {
        arith::EvalResult r = *hit;
        r.source = arith::EvalSource::Cache;
        return r;
    }
    std::string path = workdir + "/design_" +
                       std::to_string(arith::CacheStore::key_hash(key)) + ".v";
    write_file(path, emit_verilog(arith::build_adder_netlist(tree), "adder"));
    arith::EvalResult r = arith::external_eval(path, cmd, timeout);
    cache.put(key, r);
    return r;
}

int run_optimize_adder(const OptimizeAdderOpts& o) {
    nlohmann::json opts{{"bits", o.bits},     {"objective", o.objective}, {"steps", o.steps},
                        {"levels", o.levels}, {"seed", o.seed},           {"alpha", o.alpha},
                        {"beta", o.beta},     {"c", o.c},                 {"family", o.family},
                        {"fraction", o.fraction}};
    std::ofstream log;
    if (!o.log.empty()) {
        log.open(o.log);
        log << config_record(opts).dump() << "\n";
    }

    if (o.objective == "size") {
        auto table = arith::optimize_levels(
            o.bits, o.steps, o.levels, o.seed,
            [&](int level, const arith::SearchResult& res) {
                if (log.is_open()) append_log_records(log, res, "level-" + std::to_string(level));
                std::cerr << "L=" << level << " best size " << res.best.metrics().size << "\n";
            });
        std::ostringstream csv;
        csv << "# " << config_record(opts).dump() << "\n";
        csv << "level,best_size,theory_bound,design\n";
        for (const auto& row : table) {
            std::string design = row.design;
            design.erase(std::remove(design.begin(), design.end(), '\n'), design.end());
            csv << row.level << "," << row.best_size << ","
                << arith::theory_size_bound(o.bits, row.level) << "," << design << "\n";
        }
        if (o.out.empty()) std::cout << csv.str();
        else write_file(o.out, csv.str());
        if (!o.best_dir.empty()) {
            std::filesystem::create_directories(o.best_dir);
            for (const auto& row : table)
                write_file(o.best_dir + "/L" + std::to_string(row.level) + ".pt",
                           row.design);
        }
        return 0;
    }

    if (o.objective != "practical")
        throw CLI::ValidationError("--objective", "must be 'size' or 'practical'");

    // practical flow: search with the fast evaluator, then full evaluation of
    // the top fraction nearest the Pareto boundary
    std::string workdir = o.best_dir.empty() ? std::filesystem::temp_directory_path().string()
                                             : o.best_dir;
    if (!o.best_dir.empty()) std::filesystem::create_directories(o.best_dir);
    arith::CacheStore fast_cache, full_cache;
    arith::AdderEvaluator fast_eval = [&](const arith::PrefixTree& t) {
        if (o.fast_cmd.empty()) return arith::proxy_eval_adder(t);
        return eval_tree_external(t, o.fast_cmd, o.timeout, fast_cache, workdir);
    };
    arith::SearchConfig cfg;
    cfg.mode = arith::SearchMode::Practical;
    cfg.alpha = o.alpha;
    cfg.beta = o.beta;
    cfg.c = o.c;
    cfg.max_sim_steps = o.max_sim_steps;
    cfg.step_budget = o.steps;
    cfg.rng_seed = o.seed;
    arith::PrefixTree seed = arith::generate_seed(parse_family(o.family), o.bits);
    arith::SearchResult res = arith::run_search(seed, cfg, fast_eval);
    if (log.is_open()) append_log_records(log, res, "search");

    std::vector<arith::PrefixTree> designs;
    designs.reserve(res.evaluations.size());
    for (const auto& e : res.evaluations)
        designs.push_back(arith::PrefixTree::deserialize(e.design));
    auto records = arith::two_level_retrieval(
        designs.size(),
        [&](size_t i) {
            return arith::EvalResult{res.evaluations[i].delay, res.evaluations[i].area,
                                     res.evaluations[i].source};
        },
        [&](size_t i) {
            if (o.full_cmd.empty()) return arith::proxy_eval_adder(designs[i]);
            return eval_tree_external(designs[i], o.full_cmd, o.timeout, full_cache, workdir);
        },
        o.fraction);

    int best = -1;
    double best_score = 0.0;
    for (const auto& rec : records) {
        if (!rec.full_ok) continue;
        double score = -rec.full.delay - o.alpha * rec.full.area;
        if (best < 0 || score > best_score) {
            best = (int)rec.index;
            best_score = score;
        }
        if (log.is_open()) {
            nlohmann::json j{{"type", "eval"},
                             {"stage", "full"},
                             {"step", res.evaluations[rec.index].step},
                             {"design", res.evaluations[rec.index].design},
                             {"level", res.evaluations[rec.index].level},
                             {"size", res.evaluations[rec.index].size},
                             {"delay", rec.full.delay},
                             {"area", rec.full.area},
                             {"score", score},
                             {"source", arith::eval_source_name(rec.full.source)}};
            log << j.dump() << "\n";
        }
    }
    if (best < 0) throw std::runtime_error("no candidate survived full evaluation");
    std::string best_text = res.evaluations[(size_t)best].design;
    if (o.out.empty()) std::cout << best_text;
    else write_file(o.out, best_text);
    std::cerr << "best design: delay " << records[(size_t)best].full.delay << ", area "
              << records[(size_t)best].full.area << "\n";
    return 0;
}

struct OptimizeMultOpts {
    int bits = 8;
    int rounds = 3;
    int compressor_steps = 900;
    int prefix_steps = 100;
    uint64_t seed = 0;
    double alpha = 0.01;
    bool ppo_only = false;
    std::string out;
    std::string log;
};

int run_optimize_multiplier(const OptimizeMultOpts& o) {
    arith::CodesignConfig cfg;
    cfg.width = o.bits;
    cfg.rounds = o.ppo_only ? 1 : o.rounds;
    cfg.compressor_steps = o.compressor_steps;
    cfg.prefix_steps = o.ppo_only ? 0 : o.prefix_steps;
    cfg.alpha = o.alpha;
    cfg.rng_seed = o.seed;
    arith::CodesignResult res = arith::run_codesign(cfg);

    nlohmann::json opts{{"bits", o.bits},
                        {"rounds", cfg.rounds},
                        {"compressor_steps", cfg.compressor_steps},
                        {"prefix_steps", cfg.prefix_steps},
                        {"alpha", o.alpha},
                        {"seed", o.seed},
                        {"ppo_only", o.ppo_only}};
    if (!o.log.empty()) {
        std::ofstream log(o.log);
        log << config_record(opts).dump() << "\n";
        nlohmann::json j{{"type", "result"},
                         {"score", res.best.score},
                         {"delay", res.best.eval.delay},
                         {"area", res.best.eval.area},
                         {"compressor_steps", res.compressor_steps_logged},
                         {"prefix_steps", res.prefix_steps_logged},
                         {"round_scores", res.round_scores}};
        log << j.dump() << "\n";
    }
    std::string bundle = res.best.to_json();
    if (o.out.empty()) std::cout << bundle;
    else write_file(o.out, bundle);
    std::cerr << "best multiplier: delay " << res.best.eval.delay << ", area "
              << res.best.eval.area << " (steps: " << res.compressor_steps_logged << "+"
              << res.prefix_steps_logged << ")\n";
    return 0;
}

int run_emit_verilog(const std::string& design_path, const std::string& out,
                     std::string module_name) {
    Design d = load_design(design_path);
    arith::Netlist nl;
    if (d.is_multiplier) {
        if (module_name.empty())
            module_name = "multiplier" + std::to_string(d.operand_width());
        nl = arith::build_multiplier_netlist(d.terminal(), d.tree);
    } else {
        if (module_name.empty()) module_name = "adder" + std::to_string(d.tree.width());
        nl = arith::build_adder_netlist(d.tree);
    }
    std::string text = arith::emit_verilog(nl, module_name);
    if (out.empty()) std::cout << text;
    else write_file(out, text);
    return 0;
}

int run_verify(const std::string& design_path, bool exhaustive, uint64_t random_count,
               uint64_t seed, const std::string& out, int jobs) {
    Design d = load_design(design_path);
    arith::VerifyMode mode =
        exhaustive ? arith::VerifyMode::Exhaustive() : arith::VerifyMode::Random(random_count, seed);
    arith::VerifyReport report =
        d.is_multiplier ? arith::verify_multiplier(d.terminal(), d.tree, mode, jobs)
                        : arith::verify_adder(d.tree, mode, jobs);
    std::string text = report.to_json() + "\n";
    if (out.empty()) std::cout << text;
    else write_file(out, text);
    std::cerr << (report.pass ? "PASS" : "FAIL") << " (" << report.vectors << " vectors)\n";
    return report.pass ? 0 : 1;
}

int run_eval(const std::string& design_path, const std::string& external_cmd,
             const std::string& cache_path, double timeout) {
    Design d = load_design(design_path);
    arith::EvalResult r;
    if (external_cmd.empty()) {
        r = d.is_multiplier ? arith::proxy_eval_multiplier(d.terminal(), d.tree)
                            : arith::proxy_eval_adder(d.tree);
    } else {
        arith::CacheStore cache =
            cache_path.empty() ? arith::CacheStore() : arith::CacheStore(cache_path);
        std::string key = d.is_multiplier ? d.terminal().serialize() + d.tree.serialize()
                                          : d.tree.serialize();
        if (auto hit = cache.get(key)) {
            r = *hit;
            r.source = arith::EvalSource::Cache;
        } else {
            std::string vpath = std::filesystem::temp_directory_path().string() + "/eval_" +
                                std::to_string(arith::CacheStore::key_hash(key)) + ".v";
            arith::Netlist nl = d.is_multiplier
                                    ? arith::build_multiplier_netlist(d.terminal(), d.tree)
                                    : arith::build_adder_netlist(d.tree);
            write_file(vpath, arith::emit_verilog(nl, d.is_multiplier ? "multiplier" : "adder"));
            r = arith::external_eval(vpath, external_cmd, timeout);
            cache.put(key, r);
        }
    }
    nlohmann::json j{{"delay", r.delay}, {"area", r.area}, {"source", arith::eval_source_name(r.source)}};
    std::cout << j.dump() << "\n";
    return 0;
}

int run_pareto(const std::string& log_path, const std::string& out) {
    std::ifstream in(log_path);
    if (!in) throw std::runtime_error("cannot open " + log_path);
    struct Row {
        nlohmann::json j;
    };
    std::vector<Row> rows;
    std::vector<arith::CostPoint> pts;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        if (j.value("type", "") != "eval") continue;
        rows.push_back({j});
        pts.push_back({j.at("area").get<double>(), j.at("delay").get<double>()});
    }
    std::vector<char> on_front(rows.size(), 0);
    if (!pts.empty())
        for (int idx : arith::pareto_front(pts)) on_front[(size_t)idx] = 1;

    std::ostringstream csv;
    csv << "section,area,delay,level,size,step,design\n";
    auto emit = [&](size_t i, const char* section) {
        const auto& j = rows[i].j;
        std::string design = j.value("design", "");
        design.erase(std::remove(design.begin(), design.end(), '\n'), design.end());
        csv << section << "," << j.at("area").get<double>() << ","
            << j.at("delay").get<double>() << "," << j.value("level", 0) << ","
            << j.value("size", 0) << "," << j.value("step", 0) << "," << design << "\n";
    };
    for (size_t i = 0; i < rows.size(); ++i)
        if (on_front[i]) emit(i, "front");
    for (size_t i = 0; i < rows.size(); ++i) emit(i, "all");
    if (out.empty()) std::cout << csv.str();
    else write_file(out, csv.str());
    std::cerr << rows.size() << " points, front size "
              << std::count(on_front.begin(), on_front.end(), (char)1) << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{std::string(kVersion) +
                 " -- prefix adder and compressor-tree multiplier design search"};
    app.set_config("--config");
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a classic seed adder design");
    std::string gen_family = "sklansky", gen_out;
    int gen_bits = 64;
    gen->add_option("--family", gen_family, "sklansky|brent-kung|kogge-stone|ripple");
    gen->add_option("--bits", gen_bits, "operand width")->required();
    gen->add_option("--out", gen_out, "output design file (stdout when absent)");

    // optimize-adder
    auto* oa = app.add_subcommand("optimize-adder", "search prefix-tree adder designs");
    OptimizeAdderOpts oao;
    oa->add_option("--bits", oao.bits)->required();
    oa->add_option("--objective", oao.objective, "size|practical");
    oa->add_option("--steps", oao.steps, "search steps per level (size) or total (practical)");
    oa->add_option("--levels", oao.levels, "extra levels beyond log2(bits)");
    oa->add_option("--seed", oao.seed);
    oa->add_option("--alpha", oao.alpha, "area weight (practical)");
    oa->add_option("--beta", oao.beta);
    oa->add_option("--c", oao.c);
    oa->add_option("--max-sim-steps", oao.max_sim_steps);
    oa->add_option("--fraction", oao.fraction, "full-evaluation fraction");
    oa->add_option("--family", oao.family, "practical-mode seed family");
    oa->add_option("--out", oao.out, "table CSV (size) or best design (practical)");
    oa->add_option("--log", oao.log, "JSONL evaluation log");
    oa->add_option("--best-dir", oao.best_dir, "directory for per-level best designs");
    oa->add_option("--fast-cmd", oao.fast_cmd, "external fast evaluator template");
    oa->add_option("--full-cmd", oao.full_cmd, "external full evaluator template");
    oa->add_option("--timeout", oao.timeout, "external evaluator timeout (s)");

    // optimize-multiplier
    auto* om = app.add_subcommand("optimize-multiplier", "co-design a multiplier");
    OptimizeMultOpts omo;
    om->add_option("--bits", omo.bits)->required();
    om->add_option("--rounds", omo.rounds);
    om->add_option("--compressor-steps", omo.compressor_steps);
    om->add_option("--prefix-steps", omo.prefix_steps);
    om->add_option("--seed", omo.seed);
    om->add_option("--alpha", omo.alpha);
    om->add_flag("--ppo-only", omo.ppo_only, "compressor tree only, prefix fixed to Sklansky");
    om->add_option("--out", omo.out, "design bundle JSON");
    om->add_option("--log", omo.log, "JSONL run log");

    // emit-verilog
    auto* ev = app.add_subcommand("emit-verilog", "lower a design to structural Verilog");
    std::string ev_design, ev_out, ev_module;
    ev->add_option("--design", ev_design)->required();
    ev->add_option("--out", ev_out);
    ev->add_option("--module", ev_module);

    // verify
    auto* vf = app.add_subcommand("verify", "check a design against integer arithmetic");
    std::string vf_design, vf_out;
    bool vf_exhaustive = false;
    uint64_t vf_random = 100000, vf_seed = 0;
    int vf_jobs = 1;
    vf->add_option("--design", vf_design)->required();
    vf->add_flag("--exhaustive", vf_exhaustive);
    vf->add_option("--random", vf_random, "random vector count");
    vf->add_option("--seed", vf_seed);
    vf->add_option("--out", vf_out, "report JSON path");
    vf->add_option("--jobs", vf_jobs);

    // eval
    auto* el = app.add_subcommand("eval", "score a design (proxy or external command)");
    std::string el_design, el_cmd, el_cache;
    double el_timeout = 300.0;
    el->add_option("--design", el_design)->required();
    el->add_option("--external-cmd", el_cmd, "command template with {design}");
    el->add_option("--cache", el_cache, "evaluation cache journal");
    el->add_option("--timeout", el_timeout);

    // pareto
    auto* pf = app.add_subcommand("pareto", "export Pareto front + all points as CSV");
    std::string pf_log, pf_out;
    pf->add_option("--log", pf_log)->required();
    pf->add_option("--out", pf_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) return run_gen(gen_family, gen_bits, gen_out);
        if (oa->parsed()) return run_optimize_adder(oao);
        if (om->parsed()) return run_optimize_multiplier(omo);
        if (ev->parsed()) return run_emit_verilog(ev_design, ev_out, ev_module);
        if (vf->parsed()) return run_verify(vf_design, vf_exhaustive, vf_random, vf_seed, vf_out, vf_jobs);
        if (el->parsed()) return run_eval(el_design, el_cmd, el_cache, el_timeout);
        if (pf->parsed()) return run_pareto(pf_log, pf_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
