#pragma once

#include <cstdint>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "arith/compressor_tree.hpp"
#include "arith/errors.hpp"
#include "arith/prefix_tree.hpp"

namespace arith {

enum class EvalSource { Theoretical, FastProxy, External, Cache };

struct EvalResult {
    double delay = 0.0;
    double area = 0.0;
    EvalSource source = EvalSource::FastProxy;

    bool same_value(const EvalResult& o) const { return delay == o.delay && area == o.area; }
};

std::string eval_source_name(EvalSource s);
EvalSource eval_source_from_name(const std::string& s);

// Unit-gate cost model. Delay: one preprocessing level, two gate levels per
// prefix level, one sum XOR. Area: 2N p/g gates + 3 gates per merge cell +
// N sum XORs; equals the adder netlist gate count exactly.
EvalResult proxy_eval_adder(const PrefixTree& tree); // throws IllegalTree

// delay = max remaining bit delay + proxy adder delay;
// area  = 5 per FA + 2 per HA + N^2 partial products + proxy adder area.
EvalResult proxy_eval_multiplier(const CompressorState& state,
                                 const PrefixTree& adder); // NotTerminal, WidthMismatch

// Runs `command_template` with "{design}" replaced by the given path and
// parses a "delay=<float> area=<float>" line from stdout.
EvalResult external_eval(const std::string& design_path,
                         const std::string& command_template,
                         double timeout_seconds = 60.0);

struct CostPoint {
    double area = 0.0;
    double delay = 0.0;
};

// Indices of non-dominated points (both axes minimized, duplicates kept),
// ascending index order.
std::vector<int> pareto_front(const std::vector<CostPoint>& points);

// Normalizes both axes to [0, 1], measures each point's Euclidean distance
// to the Pareto frontier polyline and keeps the ceil(fraction*n) closest.
// Frontier points sit at distance zero and are always selected first.
std::vector<int> select_top_fraction(const std::vector<CostPoint>& points, double fraction);

// Keyed by the design's canonical serialization; the stored serialization is
// kept alongside the 64-bit hash so a hash collision cannot corrupt results.
// Safe for concurrent use. With a journal path, entries are replayed at load
// and appended as JSON lines on every new put.
class CacheStore {
public:
    CacheStore() = default;
    explicit CacheStore(const std::string& journal_path);

    std::optional<EvalResult> get(const std::string& serialization);
    void put(const std::string& serialization, const EvalResult& value); // ConflictingValue

    uint64_t hits() const { return hits_; }
    uint64_t misses() const { return misses_; }
    size_t size() const;

    static uint64_t key_hash(const std::string& serialization); // FNV-1a 64

private:
    struct Entry {
        std::string serialization;
        EvalResult value;
    };
    void append_journal(uint64_t key, const Entry& e);

    mutable std::mutex mutex_;
    std::unordered_map<uint64_t, std::vector<Entry>> map_;
    uint64_t hits_ = 0;
    uint64_t misses_ = 0;
    std::string journal_path_;
};

// Wraps an evaluator with a cache; hits are returned with source Cache and
// never invoke the inner function.
class CachingEvaluator {
public:
    using Fn = std::function<EvalResult(const std::string& serialization)>;
    CachingEvaluator(CacheStore& store, Fn fn) : store_(store), fn_(std::move(fn)) {}
    EvalResult operator()(const std::string& serialization);
    uint64_t invocations() const { return invocations_; }

private:
    CacheStore& store_;
    Fn fn_;
    uint64_t invocations_ = 0;
};

struct RetrievalRecord {
    size_t index = 0;
    bool fast_ok = false;
    EvalResult fast;
    bool selected = false;
    bool full_ok = false;
    EvalResult full;
    std::string error;
};

// Stage 1 fast-evaluates every candidate; the top fraction nearest the Pareto
// boundary goes through the full evaluator. Per-candidate failures are
// recorded without aborting the batch.
std::vector<RetrievalRecord> two_level_retrieval(
    size_t candidate_count,
    const std::function<EvalResult(size_t)>& fast_eval,
    const std::function<EvalResult(size_t)>& full_eval,
    double fraction = 0.1);

} // namespace arith
