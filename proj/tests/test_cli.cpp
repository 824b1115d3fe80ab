#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace {

namespace fs = std::filesystem;

std::string cli_bin() {
    const char* bin = std::getenv("ARITH_CLI_BIN");
    return bin ? bin : "";
}

int run(const std::string& args) {
    std::string cmd = cli_bin() + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("arith_cli_" + std::to_string(::getpid()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("cli: gen, verify, emit-verilog, eval round trip") {
    if (cli_bin().empty()) return; // driven by ctest environment
    TempDir tmp;
    fs::path design = tmp.path / "sk8.pt";

    CHECK(run("gen --family sklansky --bits 8 --out " + design.string()) == 0);
    std::string text = slurp(design);
    CHECK(text.rfind("prefixtree v1 width=8\n", 0) == 0);

    fs::path report = tmp.path / "verify.json";
    CHECK(run("verify --design " + design.string() + " --exhaustive --out " +
              report.string()) == 0);
    auto j = nlohmann::json::parse(slurp(report));
    CHECK(j["pass"] == true);
    CHECK(j["vectors"] == 65536);

    fs::path verilog = tmp.path / "sk8.v";
    CHECK(run("emit-verilog --design " + design.string() + " --out " + verilog.string()) == 0);
    CHECK(slurp(verilog).rfind("module adder8(", 0) == 0);

    CHECK(run("eval --design " + design.string()) == 0);
    CHECK(run("eval --design " + design.string() +
              " --external-cmd \"echo 'delay=1.5 area=300' # {design}\"") == 0);
}

TEST_CASE("cli: exit codes for usage and module errors") {
    if (cli_bin().empty()) return;
    CHECK(run("no-such-command") == 2);
    CHECK(run("gen --family sklansky") == 2);           // missing --bits
    CHECK(run("gen --family sklansky --bits 48") == 1); // UnsupportedWidth
    CHECK(run("verify --design /nonexistent.pt --exhaustive") == 1);
}

TEST_CASE("cli: pareto export carries the whole front") {
    if (cli_bin().empty()) return;
    TempDir tmp;
    fs::path log = tmp.path / "run.jsonl";
    {
        std::ofstream out(log);
        out << R"({"type":"config","version":"x","options":{}})" << "\n";
        out << R"({"type":"eval","step":0,"design":"d0","level":1,"size":1,"area":1,"delay":3,"score":0,"source":"fast-proxy"})"
            << "\n";
        out << R"({"type":"eval","step":1,"design":"d1","level":1,"size":1,"area":2,"delay":2,"score":0,"source":"fast-proxy"})"
            << "\n";
        out << R"({"type":"eval","step":2,"design":"d2","level":1,"size":1,"area":3,"delay":1,"score":0,"source":"fast-proxy"})"
            << "\n";
    }
    fs::path csv = tmp.path / "front.csv";
    CHECK(run("pareto --log " + log.string() + " --out " + csv.string()) == 0);
    std::istringstream in(slurp(csv));
    std::string line;
    std::getline(in, line);
    CHECK(line == "section,area,delay,level,size,step,design");
    int front_rows = 0, all_rows = 0;
    while (std::getline(in, line)) {
        if (line.rfind("front,", 0) == 0) ++front_rows;
        if (line.rfind("all,", 0) == 0) ++all_rows;
    }
    CHECK(front_rows == 3); // mutually non-dominated
    CHECK(all_rows == 3);
}

TEST_CASE("cli: eval cache journal short-circuits the second run") {
    if (cli_bin().empty()) return;
    TempDir tmp;
    fs::path design = tmp.path / "sk8.pt";
    fs::path journal = tmp.path / "cache.jsonl";
    fs::path out1 = tmp.path / "o1.json";
    fs::path out2 = tmp.path / "o2.json";
    REQUIRE(run("gen --family sklansky --bits 8 --out " + design.string()) == 0);
    std::string eval_cmd = "eval --design " + design.string() +
                           " --external-cmd \"echo 'delay=2.5 area=99' # {design}\" --cache " +
                           journal.string();
    CHECK(std::system((cli_bin() + " " + eval_cmd + " > " + out1.string() + " 2>/dev/null").c_str()) == 0);
    CHECK(std::system((cli_bin() + " " + eval_cmd + " > " + out2.string() + " 2>/dev/null").c_str()) == 0);
    auto j1 = nlohmann::json::parse(slurp(out1));
    auto j2 = nlohmann::json::parse(slurp(out2));
    CHECK(j1["delay"] == 2.5);
    CHECK(j1["source"] == "external");
    CHECK(j2["delay"] == 2.5);
    CHECK(j2["source"] == "cache"); // replayed from the journal
}

TEST_CASE("cli: practical objective with an external fast evaluator") {
    if (cli_bin().empty()) return;
    TempDir tmp;
    fs::path best = tmp.path / "best.pt";
    fs::path log = tmp.path / "run.jsonl";
    // stub evaluator: every design gets the same fixed cost
    CHECK(run("optimize-adder --bits 8 --objective practical --steps 40 --seed 2 "
              "--fast-cmd \"cat {design} >/dev/null && echo 'delay=1.0 area=2.0'\" --out " +
              best.string() + " --log " + log.string()) == 0);
    CHECK(slurp(best).rfind("prefixtree v1 width=8\n", 0) == 0);
    std::istringstream in(slurp(log));
    std::string line;
    int full_records = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line);
        if (j.value("stage", "") == "full") ++full_records;
    }
    CHECK(full_records >= 1);
}

TEST_CASE("cli: reruns with one seed produce byte-identical design files") {
    if (cli_bin().empty()) return;
    TempDir tmp;
    fs::path d1 = tmp.path / "a";
    fs::path d2 = tmp.path / "b";
    std::string args = "optimize-adder --bits 8 --objective size --steps 150 --levels 1 "
                       "--seed 42 --out ";
    CHECK(run(args + (tmp.path / "t1.csv").string() + " --best-dir " + d1.string()) == 0);
    CHECK(run(args + (tmp.path / "t2.csv").string() + " --best-dir " + d2.string()) == 0);
    CHECK(slurp(d1 / "L3.pt") == slurp(d2 / "L3.pt"));
    CHECK(slurp(d1 / "L4.pt") == slurp(d2 / "L4.pt"));
    CHECK(slurp(tmp.path / "t1.csv") == slurp(tmp.path / "t2.csv"));

    fs::path m1 = tmp.path / "m1.json";
    fs::path m2 = tmp.path / "m2.json";
    std::string margs = "optimize-multiplier --bits 4 --rounds 1 --compressor-steps 120 "
                        "--prefix-steps 20 --seed 9 --out ";
    CHECK(run(margs + m1.string()) == 0);
    CHECK(run(margs + m2.string()) == 0);
    CHECK(slurp(m1) == slurp(m2));
}
