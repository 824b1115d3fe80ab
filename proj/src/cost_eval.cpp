#include "arith/cost_eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "json.hpp"

namespace arith {

std::string eval_source_name(EvalSource s) {
    switch (s) {
    case EvalSource::Theoretical: return "theoretical";
    case EvalSource::FastProxy: return "fast-proxy";
    case EvalSource::External: return "external";
    case EvalSource::Cache: return "cache";
    }
    return "?";
}

EvalSource eval_source_from_name(const std::string& s) {
    if (s == "theoretical") return EvalSource::Theoretical;
    if (s == "fast-proxy") return EvalSource::FastProxy;
    if (s == "external") return EvalSource::External;
    if (s == "cache") return EvalSource::Cache;
    throw ParseError("unknown eval source: " + s);
}

EvalResult proxy_eval_adder(const PrefixTree& tree) {
    PrefixMetrics m = tree.metrics();
    EvalResult r;
    r.delay = 1.0 + 2.0 * m.level + 1.0;
    r.area = 2.0 * tree.width() + 3.0 * m.size + tree.width();
    r.source = EvalSource::FastProxy;
    return r;
}

EvalResult proxy_eval_multiplier(const CompressorState& state, const PrefixTree& adder) {
    if (!state.terminal()) throw NotTerminal("proxy multiplier eval needs a terminal state");
    if (adder.width() != 2 * state.width())
        throw WidthMismatch("multiplier adder must be 2N bits wide");
    EvalResult add = proxy_eval_adder(adder);
    EvalResult r;
    r.delay = state.max_delay() + add.delay;
    r.area = 5.0 * state.fa_total() + 2.0 * state.ha_total() +
             (double)state.width() * state.width() + add.area;
    r.source = EvalSource::FastProxy;
    return r;
}

namespace {

std::string substitute_design(const std::string& tmpl, const std::string& path) {
    static const char tag[] = "{design}";
    std::string out;
    size_t pos = 0;
    bool found = false;
    while (true) {
        size_t hit = tmpl.find(tag, pos);
        if (hit == std::string::npos) {
            out += tmpl.substr(pos);
            break;
        }
        out += tmpl.substr(pos, hit - pos);
        out += path;
        pos = hit + sizeof(tag) - 1;
        found = true;
    }
    if (!found) throw CommandFailed("command template lacks a {design} placeholder");
    return out;
}

} // namespace

EvalResult external_eval(const std::string& design_path, const std::string& command_template,
                         double timeout_seconds) {
    std::string cmd = substitute_design(command_template, design_path);

    int pipefd[2];
    if (pipe(pipefd) != 0) throw CommandFailed("pipe() failed");
    pid_t pid = fork();
    if (pid < 0) {
        close(pipefd[0]);
        close(pipefd[1]);
        throw CommandFailed("fork() failed");
    }
    if (pid == 0) {
        dup2(pipefd[1], STDOUT_FILENO);
        close(pipefd[0]);
        close(pipefd[1]);
        execl("/bin/sh", "sh", "-c", cmd.c_str(), (char*)nullptr);
        _exit(127);
    }
    close(pipefd[1]);

    std::string output;
    char buf[4096];
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds((long)(timeout_seconds * 1000.0));
    bool timed_out = false;
    while (true) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                        deadline - std::chrono::steady_clock::now())
                        .count();
        if (left <= 0) {
            timed_out = true;
            kill(pid, SIGKILL);
            break;
        }
        struct pollfd pfd{pipefd[0], POLLIN, 0};
        int rc = poll(&pfd, 1, (int)std::min<long>(left, 100));
        if (rc > 0) {
            ssize_t n = read(pipefd[0], buf, sizeof(buf));
            if (n <= 0) break;
            output.append(buf, (size_t)n);
        }
    }
    close(pipefd[0]);
    int status = 0;
    waitpid(pid, &status, 0);
    if (timed_out) throw Timeout("external evaluator exceeded its time budget");
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
        throw CommandFailed("external evaluator exited with status " +
                            std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));

    // find a "delay=<float> area=<float>" line
    size_t start = 0;
    while (start <= output.size()) {
        size_t end = output.find('\n', start);
        std::string line = output.substr(start, end == std::string::npos ? end : end - start);
        double d = 0, a = 0;
        if (sscanf(line.c_str(), "delay=%lf area=%lf", &d, &a) == 2) {
            if (!(std::isfinite(d) && std::isfinite(a) && d >= 0 && a >= 0))
                throw ParseError("external evaluator produced non-finite or negative costs");
            return EvalResult{d, a, EvalSource::External};
        }
        if (end == std::string::npos) break;
        start = end + 1;
    }
    throw ParseError("external evaluator output lacks a 'delay=<x> area=<y>' line");
}

std::vector<int> pareto_front(const std::vector<CostPoint>& points) {
    const int n = (int)points.size();
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (points[a].area != points[b].area) return points[a].area < points[b].area;
        if (points[a].delay != points[b].delay) return points[a].delay < points[b].delay;
        return a < b;
    });
    std::vector<int> front;
    double best_delay = std::numeric_limits<double>::infinity();
    int i = 0;
    while (i < n) {
        int j = i;
        double area = points[order[i]].area;
        double group_min = points[order[i]].delay;
        while (j < n && points[order[j]].area == area) ++j;
        // survivors: group-minimum delay, not dominated by a smaller-area point
        if (group_min < best_delay) {
            for (int k = i; k < j && points[order[k]].delay == group_min; ++k)
                front.push_back(order[k]);
            best_delay = group_min;
        }
        i = j;
    }
    std::sort(front.begin(), front.end());
    return front;
}

namespace {

double point_segment_dist(double px, double py, double ax, double ay, double bx, double by) {
    double dx = bx - ax, dy = by - ay;
    double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    double qx = ax + t * dx - px, qy = ay + t * dy - py;
    return std::sqrt(qx * qx + qy * qy);
}

} // namespace

std::vector<int> select_top_fraction(const std::vector<CostPoint>& points, double fraction) {
    if (points.empty()) return {};
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw std::invalid_argument("fraction must be in (0, 1]");
    const int n = (int)points.size();

    double amin = points[0].area, amax = points[0].area;
    double dmin = points[0].delay, dmax = points[0].delay;
    for (const auto& p : points) {
        amin = std::min(amin, p.area);
        amax = std::max(amax, p.area);
        dmin = std::min(dmin, p.delay);
        dmax = std::max(dmax, p.delay);
    }
    double arange = amax - amin, drange = dmax - dmin;
    auto norm = [&](const CostPoint& p) {
        return std::pair<double, double>{arange > 0 ? (p.area - amin) / arange : 0.0,
                                         drange > 0 ? (p.delay - dmin) / drange : 0.0};
    };

    std::vector<int> front = pareto_front(points);
    std::vector<std::pair<double, double>> poly;
    poly.reserve(front.size());
    for (int idx : front) poly.push_back(norm(points[idx]));
    std::sort(poly.begin(), poly.end()); // area ascending, delay descends along the front

    std::vector<std::pair<double, int>> dist(n);
    for (int i = 0; i < n; ++i) {
        auto [px, py] = norm(points[i]);
        double best = std::numeric_limits<double>::infinity();
        if (poly.size() == 1) {
            best = point_segment_dist(px, py, poly[0].first, poly[0].second, poly[0].first,
                                      poly[0].second);
        } else {
            for (size_t s = 0; s + 1 < poly.size(); ++s)
                best = std::min(best, point_segment_dist(px, py, poly[s].first, poly[s].second,
                                                         poly[s + 1].first, poly[s + 1].second));
        }
        dist[i] = {best, i};
    }
    std::stable_sort(dist.begin(), dist.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    int keep = (int)std::ceil(fraction * n - 1e-12);
    keep = std::clamp(keep, 1, n);
    std::vector<int> out;
    out.reserve(keep);
    for (int i = 0; i < keep; ++i) out.push_back(dist[i].second);
    std::sort(out.begin(), out.end());
    return out;
}

uint64_t CacheStore::key_hash(const std::string& s) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

CacheStore::CacheStore(const std::string& journal_path) : journal_path_(journal_path) {
    std::ifstream in(journal_path);
    if (!in) return;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line);
        Entry e;
        e.serialization = j.at("serialization").get<std::string>();
        e.value.delay = j.at("delay").get<double>();
        e.value.area = j.at("area").get<double>();
        e.value.source = eval_source_from_name(j.at("source").get<std::string>());
        map_[key_hash(e.serialization)].push_back(std::move(e));
    }
}

void CacheStore::append_journal(uint64_t key, const Entry& e) {
    if (journal_path_.empty()) return;
    char keyhex[17];
    snprintf(keyhex, sizeof(keyhex), "%016llx", (unsigned long long)key);
    nlohmann::json j{{"key", keyhex},
                     {"serialization", e.serialization},
                     {"delay", e.value.delay},
                     {"area", e.value.area},
                     {"source", eval_source_name(e.value.source)}};
    std::ofstream out(journal_path_, std::ios::app);
    out << j.dump() << "\n";
}

std::optional<EvalResult> CacheStore::get(const std::string& serialization) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = map_.find(key_hash(serialization));
    if (it != map_.end())
        for (const Entry& e : it->second)
            if (e.serialization == serialization) {
                ++hits_;
                return e.value;
            }
    ++misses_;
    return std::nullopt;
}

void CacheStore::put(const std::string& serialization, const EvalResult& value) {
    std::lock_guard<std::mutex> lock(mutex_);
    uint64_t key = key_hash(serialization);
    auto& bucket = map_[key];
    for (const Entry& e : bucket)
        if (e.serialization == serialization) {
            if (!e.value.same_value(value))
                throw ConflictingValue("cache key already holds a different result");
            return; // idempotent
        }
    bucket.push_back(Entry{serialization, value});
    append_journal(key, bucket.back());
}

size_t CacheStore::size() const {
    std::lock_guard<std::mutex> lock(mutex_);
    size_t n = 0;
    for (const auto& [k, v] : map_) n += v.size();
    return n;
}

EvalResult CachingEvaluator::operator()(const std::string& serialization) {
    if (auto hit = store_.get(serialization)) {
        EvalResult r = *hit;
        r.source = EvalSource::Cache;
        return r;
    }
    ++invocations_;
    EvalResult r = fn_(serialization);
    store_.put(serialization, r);
    return r;
}

std::vector<RetrievalRecord> two_level_retrieval(
    size_t candidate_count, const std::function<EvalResult(size_t)>& fast_eval,
    const std::function<EvalResult(size_t)>& full_eval, double fraction) {
    std::vector<RetrievalRecord> records(candidate_count);
    std::vector<CostPoint> pts;
    std::vector<size_t> ok; // candidate index per point
    for (size_t i = 0; i < candidate_count; ++i) {
        records[i].index = i;
        try {
            records[i].fast = fast_eval(i);
            records[i].fast_ok = true;
            pts.push_back({records[i].fast.area, records[i].fast.delay});
            ok.push_back(i);
        } catch (const std::exception& e) {
            records[i].error = e.what();
        }
    }
    if (pts.empty()) return records;
    for (int sel : select_top_fraction(pts, fraction)) {
        RetrievalRecord& rec = records[ok[sel]];
        rec.selected = true;
        try {
            rec.full = full_eval(rec.index);
            rec.full_ok = true;
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
    }
    return records;
}

} // namespace arith
