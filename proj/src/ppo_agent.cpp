#include "arith/ppo_agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace arith {

namespace {

void xavier_fill(std::vector<double>& w, int fan_in, int fan_out, size_t count, Rng& rng) {
    double bound = std::sqrt(6.0 / (fan_in + fan_out));
    w.resize(count);
    for (double& x : w) x = (2.0 * rng.uniform01() - 1.0) * bound;
}

void affine(const std::vector<double>& w, const std::vector<double>& b, const double* x, int in,
            int out, double* y) {
    for (int o = 0; o < out; ++o) {
        double acc = b[(size_t)o];
        const double* row = &w[(size_t)o * in];
        for (int i = 0; i < in; ++i) acc += row[(size_t)i] * x[i];
        y[o] = acc;
    }
}

void relu(double* x, int n) {
    for (int i = 0; i < n; ++i)
        if (x[i] < 0) x[i] = 0;
}

struct Forward {
    std::vector<double> z1, z2, z3; // post-activation h1, h2 and raw output
};

Forward mlp_forward(const Mlp& m, const double* x) {
    Forward f;
    f.z1.resize((size_t)m.h1);
    f.z2.resize((size_t)m.h2);
    f.z3.resize((size_t)m.out);
    affine(m.w1, m.b1, x, m.in, m.h1, f.z1.data());
    relu(f.z1.data(), m.h1);
    affine(m.w2, m.b2, f.z1.data(), m.h1, m.h2, f.z2.data());
    relu(f.z2.data(), m.h2);
    affine(m.w3, m.b3, f.z2.data(), m.h2, m.out, f.z3.data());
    return f;
}

// Accumulates parameter gradients for one sample given dL/d(raw output).
void mlp_backward(const Mlp& m, const double* x, const Forward& f, const double* dz3,
                  MlpGrads& g) {
    std::vector<double> dz2((size_t)m.h2, 0.0), dz1((size_t)m.h1, 0.0);
    for (int o = 0; o < m.out; ++o) {
        for (int i = 0; i < m.h2; ++i) {
            g.w3[(size_t)o * m.h2 + i] += dz3[o] * f.z2[(size_t)i];
            dz2[(size_t)i] += dz3[o] * m.w3[(size_t)o * m.h2 + i];
        }
        g.b3[(size_t)o] += dz3[o];
    }
    for (int i = 0; i < m.h2; ++i)
        if (f.z2[(size_t)i] <= 0) dz2[(size_t)i] = 0;
    for (int o = 0; o < m.h2; ++o) {
        for (int i = 0; i < m.h1; ++i) {
            g.w2[(size_t)o * m.h1 + i] += dz2[(size_t)o] * f.z1[(size_t)i];
            dz1[(size_t)i] += dz2[(size_t)o] * m.w2[(size_t)o * m.h1 + i];
        }
        g.b2[(size_t)o] += dz2[(size_t)o];
    }
    for (int i = 0; i < m.h1; ++i)
        if (f.z1[(size_t)i] <= 0) dz1[(size_t)i] = 0;
    for (int o = 0; o < m.h1; ++o) {
        for (int i = 0; i < m.in; ++i)
            g.w1[(size_t)o * m.in + i] += dz1[(size_t)o] * x[i];
        g.b1[(size_t)o] += dz1[(size_t)o];
    }
}

std::array<double, 2> softmax2(double a, double b) {
    double m = std::max(a, b);
    double ea = std::exp(a - m), eb = std::exp(b - m);
    double s = ea + eb;
    return {ea / s, eb / s};
}

void check_features(const FeatureVector& f) {
    for (double x : f)
        if (!std::isfinite(x)) throw NonFiniteInput("non-finite feature value");
}

} // namespace

void Mlp::init(int in_, int h1_, int h2_, int out_, Rng& rng) {
    in = in_;
    h1 = h1_;
    h2 = h2_;
    out = out_;
    xavier_fill(w1, in, h1, (size_t)h1 * in, rng);
    xavier_fill(w2, h1, h2, (size_t)h2 * h1, rng);
    xavier_fill(w3, h2, out, (size_t)out * h2, rng);
    b1.assign((size_t)h1, 0.0);
    b2.assign((size_t)h2, 0.0);
    b3.assign((size_t)out, 0.0);
}

size_t Mlp::param_count() const {
    return w1.size() + b1.size() + w2.size() + b2.size() + w3.size() + b3.size();
}

double* Mlp::param(size_t i) {
    for (auto* blk : {&w1, &b1, &w2, &b2, &w3, &b3}) {
        if (i < blk->size()) return &(*blk)[i];
        i -= blk->size();
    }
    return nullptr;
}

const double* Mlp::param(size_t i) const { return const_cast<Mlp*>(this)->param(i); }

void MlpGrads::zero_like(const Mlp& m) {
    w1.assign(m.w1.size(), 0.0);
    b1.assign(m.b1.size(), 0.0);
    w2.assign(m.w2.size(), 0.0);
    b2.assign(m.b2.size(), 0.0);
    w3.assign(m.w3.size(), 0.0);
    b3.assign(m.b3.size(), 0.0);
}

double* MlpGrads::param(const Mlp&, size_t i) {
    for (auto* blk : {&w1, &b1, &w2, &b2, &w3, &b3}) {
        if (i < blk->size()) return &(*blk)[i];
        i -= blk->size();
    }
    return nullptr;
}

AgentParams init_params(uint64_t seed) {
    AgentParams p;
    Rng rng(Rng::derive(seed, 0x9010));
    p.policy.init(8, 64, 16, 2, rng);
    p.value.init(8, 64, 8, 1, rng);
    return p;
}

std::array<double, 2> policy_forward(const AgentParams& p, const FeatureVector& f) {
    check_features(f);
    Forward fwd = mlp_forward(p.policy, f.data());
    return softmax2(fwd.z3[0], fwd.z3[1]);
}

double value_forward(const AgentParams& p, const FeatureVector& f) {
    check_features(f);
    return mlp_forward(p.value, f.data()).z3[0];
}

std::vector<double> compute_returns(const Trajectory& traj, double gamma) {
    const size_t t_len = traj.steps.size();
    std::vector<double> g(t_len, 0.0);
    double acc = 0.0;
    for (size_t k = t_len; k-- > 0;) {
        double r = traj.steps[k].reward + (k + 1 == t_len ? traj.terminal_reward : 0.0);
        acc = r + gamma * acc;
        g[k] = acc;
    }
    return g;
}

Trajectory collect_episode(int width, const AgentParams& params, Rng& rng,
                           const MultEvaluator& evaluator, double ha_penalty) {
    Trajectory traj;
    CompressorState state = CompressorState::initial(width);
    while (!state.terminal()) {
        TrajStep step;
        step.features = state.features();
        auto probs = policy_forward(params, step.features);
        step.action = (rng.uniform01() < probs[0]) ? 0 : 1;
        step.logp = std::log(probs[(size_t)step.action]);
        step.value = value_forward(params, step.features);
        if (step.action == 1) step.reward = -ha_penalty;
        CompressKind kind = step.action == 0 ? CompressKind::FA : CompressKind::HA;
        state.apply(kind);
        traj.steps.push_back(step);
        traj.actions.push_back(kind);
    }
    try {
        traj.eval = evaluator(state);
    } catch (const std::exception& e) {
        throw EpisodeAborted(std::string("terminal evaluation failed: ") + e.what());
    }
    traj.terminal_reward = -traj.eval.delay;
    return traj;
}

double clipped_surrogate(double ratio, double advantage, double eps) {
    double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps);
    return std::min(ratio * advantage, clipped * advantage);
}

double policy_objective(const AgentParams& p, const std::vector<Sample>& batch, double eps) {
    double total = 0.0;
    for (const Sample& s : batch) {
        auto probs = policy_forward(p, s.features);
        double ratio = std::exp(std::log(probs[(size_t)s.action]) - s.old_logp);
        total += clipped_surrogate(ratio, s.ret - s.value, eps);
    }
    return total / (double)batch.size();
}

double value_objective(const AgentParams& p, const std::vector<Sample>& batch) {
    double total = 0.0;
    for (const Sample& s : batch) {
        double e = value_forward(p, s.features) - s.ret;
        double ae = std::fabs(e);
        total += ae < 1.0 ? 0.5 * e * e : ae - 0.5;
    }
    return total / (double)batch.size();
}

MlpGrads policy_gradient(const AgentParams& p, const std::vector<Sample>& batch, double eps) {
    MlpGrads g;
    g.zero_like(p.policy);
    const double inv_n = 1.0 / (double)batch.size();
    for (const Sample& s : batch) {
        check_features(s.features);
        Forward fwd = mlp_forward(p.policy, s.features.data());
        auto probs = softmax2(fwd.z3[0], fwd.z3[1]);
        double logp = std::log(probs[(size_t)s.action]);
        double ratio = std::exp(logp - s.old_logp);
        double adv = s.ret - s.value;
        double u1 = ratio * adv;
        double u2 = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * adv;
        // gradient of min(u1, u2) wrt logp; the saturated clip branch is flat
        double dlogp;
        if (u1 <= u2) dlogp = adv * ratio;
        else dlogp = (ratio > 1.0 - eps && ratio < 1.0 + eps) ? adv * ratio : 0.0;
        // ascend the surrogate: accumulate -d(mean surrogate)/d(theta)
        double scale = -dlogp * inv_n;
        double dz3[2];
        for (int k = 0; k < 2; ++k)
            dz3[k] = scale * ((k == s.action ? 1.0 : 0.0) - probs[(size_t)k]);
        mlp_backward(p.policy, s.features.data(), fwd, dz3, g);
    }
    return g;
}

MlpGrads value_gradient(const AgentParams& p, const std::vector<Sample>& batch) {
    MlpGrads g;
    g.zero_like(p.value);
    const double inv_n = 1.0 / (double)batch.size();
    for (const Sample& s : batch) {
        check_features(s.features);
        Forward fwd = mlp_forward(p.value, s.features.data());
        double e = fwd.z3[0] - s.ret;
        double de = std::fabs(e) < 1.0 ? e : (e > 0 ? 1.0 : -1.0);
        double dz3 = de * inv_n;
        mlp_backward(p.value, s.features.data(), fwd, &dz3, g);
    }
    return g;
}

namespace {

bool finite_all(const MlpGrads& g) {
    for (const auto* blk : {&g.w1, &g.b1, &g.w2, &g.b2, &g.w3, &g.b3})
        for (double x : *blk)
            if (!std::isfinite(x)) return false;
    return true;
}

void adam_step(Mlp& m, MlpGrads& g, AdamState& st, double lr) {
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    size_t n = m.param_count();
    if (st.m.size() != n) {
        st.m.assign(n, 0.0);
        st.v.assign(n, 0.0);
        st.step = 0;
    }
    ++st.step;
    double c1 = 1.0 - std::pow(b1, (double)st.step);
    double c2 = 1.0 - std::pow(b2, (double)st.step);
    for (size_t i = 0; i < n; ++i) {
        double grad = *g.param(m, i);
        st.m[i] = b1 * st.m[i] + (1.0 - b1) * grad;
        st.v[i] = b2 * st.v[i] + (1.0 - b2) * grad * grad;
        *m.param(i) -= lr * (st.m[i] / c1) / (std::sqrt(st.v[i] / c2) + eps);
    }
}

} // namespace

bool ppo_update(AgentParams& params, const std::vector<Sample>& batch, const PPOConfig& config,
                AdamState& policy_adam, AdamState& value_adam) {
    if (batch.empty()) return false;
    AgentParams trial = params;
    AdamState pa = policy_adam, va = value_adam;
    for (int epoch = 0; epoch < config.update_epochs; ++epoch) {
        MlpGrads pg = policy_gradient(trial, batch, config.clip_eps);
        MlpGrads vg = value_gradient(trial, batch);
        if (!finite_all(pg) || !finite_all(vg)) return false; // keep params
        adam_step(trial.policy, pg, pa, config.learning_rate);
        adam_step(trial.value, vg, va, config.learning_rate);
    }
    params = std::move(trial);
    params.version++;
    policy_adam = std::move(pa);
    value_adam = std::move(va);
    return true;
}

void ReplayBuffer::push(const Sample& s) {
    items_.push_back(s);
    while (items_.size() > capacity_) items_.pop_front();
}

std::vector<Sample> ReplayBuffer::sample(size_t count, Rng& rng) const {
    count = std::min(count, items_.size());
    std::vector<size_t> idx(items_.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    // partial Fisher-Yates: first `count` entries are a uniform sample
    for (size_t i = 0; i < count; ++i) {
        size_t j = i + (size_t)rng.below(idx.size() - i);
        std::swap(idx[i], idx[j]);
    }
    std::vector<Sample> out;
    out.reserve(count);
    for (size_t i = 0; i < count; ++i) out.push_back(items_[idx[i]]);
    return out;
}

TrainResult train(int width, int steps, const PPOConfig& config, const MultEvaluator& evaluator,
                  Rng& rng, const AgentParams* warm_start) {
    TrainResult result;
    result.params = warm_start ? *warm_start : init_params(rng.next());
    if (steps <= 0) return result;

    size_t capacity =
        config.buffer_capacity > 0 ? (size_t)config.buffer_capacity : 6ULL * width * width;
    ReplayBuffer buffer(capacity);
    AdamState policy_adam, value_adam;

    while (result.env_steps < steps) {
        // run one episode, truncated if the step budget runs out mid-way
        CompressorState state = CompressorState::initial(width);
        Trajectory traj;
        bool truncated = false;
        while (!state.terminal()) {
            if (result.env_steps >= steps) {
                truncated = true;
                break;
            }
            TrajStep step;
            step.features = state.features();
            auto probs = policy_forward(result.params, step.features);
            step.action = (rng.uniform01() < probs[0]) ? 0 : 1;
            step.logp = std::log(probs[(size_t)step.action]);
            step.value = value_forward(result.params, step.features);
            if (step.action == 1) step.reward = -config.ha_penalty;
            CompressKind kind = step.action == 0 ? CompressKind::FA : CompressKind::HA;
            state.apply(kind);
            traj.steps.push_back(step);
            traj.actions.push_back(kind);
            ++result.env_steps;
        }
        if (truncated) break; // abandoned episode; its steps stay counted

        try {
            traj.eval = evaluator(state);
        } catch (const std::exception& e) {
            throw EpisodeAborted(std::string("terminal evaluation failed: ") + e.what());
        }
        traj.terminal_reward = -traj.eval.delay;

        std::vector<double> returns = compute_returns(traj, config.gamma);
        for (size_t t = 0; t < traj.steps.size(); ++t) {
            Sample s;
            s.features = traj.steps[t].features;
            s.action = traj.steps[t].action;
            s.old_logp = traj.steps[t].logp;
            s.ret = returns[t];
            s.value = traj.steps[t].value;
            buffer.push(s);
        }

        EpisodeRecord rec;
        rec.actions = traj.actions;
        rec.eval = traj.eval;
        rec.episode_return = returns.empty() ? traj.terminal_reward : returns[0];
        result.episodes.push_back(rec);
        if (!result.has_best || traj.eval.delay < result.best_eval.delay) {
            result.has_best = true;
            result.best_eval = traj.eval;
            result.best_actions = traj.actions;
        }

        if (buffer.size() >= (size_t)config.batch_size) {
            std::vector<Sample> batch = buffer.sample((size_t)config.batch_size, rng);
            ppo_update(result.params, batch, config, policy_adam, value_adam);
        }
    }
    return result;
}

CompressorState all_fa_rollout(int width) {
    CompressorState s = CompressorState::initial(width);
    while (!s.terminal()) s.apply(CompressKind::FA);
    return s;
}

namespace {

void write_block(std::ofstream& out, const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()), (std::streamsize)(v.size() * sizeof(double)));
}

void read_block(std::ifstream& in, std::vector<double>& v, size_t count) {
    v.resize(count);
    in.read(reinterpret_cast<char*>(v.data()), (std::streamsize)(count * sizeof(double)));
    if (!in) throw ParseError("checkpoint truncated");
}

void write_mlp(std::ofstream& out, const Mlp& m) {
    int32_t dims[4] = {m.in, m.h1, m.h2, m.out};
    out.write(reinterpret_cast<const char*>(dims), sizeof dims);
    for (const auto* blk : {&m.w1, &m.b1, &m.w2, &m.b2, &m.w3, &m.b3}) write_block(out, *blk);
}

Mlp read_mlp(std::ifstream& in) {
    int32_t dims[4];
    in.read(reinterpret_cast<char*>(dims), sizeof dims);
    if (!in) throw ParseError("checkpoint truncated");
    Mlp m;
    m.in = dims[0];
    m.h1 = dims[1];
    m.h2 = dims[2];
    m.out = dims[3];
    if (m.in < 1 || m.h1 < 1 || m.h2 < 1 || m.out < 1) throw ParseError("bad checkpoint shape");
    read_block(in, m.w1, (size_t)m.h1 * m.in);
    read_block(in, m.b1, (size_t)m.h1);
    read_block(in, m.w2, (size_t)m.h2 * m.h1);
    read_block(in, m.b2, (size_t)m.h2);
    read_block(in, m.w3, (size_t)m.out * m.h2);
    read_block(in, m.b3, (size_t)m.out);
    return m;
}

} // namespace

void AgentParams::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    static const char magic[8] = {'a', 'r', 'p', 'p', 'o', ' ', 'v', '1'};
    out.write(magic, sizeof magic);
    out.write(reinterpret_cast<const char*>(&version), sizeof version);
    write_mlp(out, policy);
    write_mlp(out, value);
}

AgentParams AgentParams::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, "arppo v1", 8) != 0) throw ParseError("bad checkpoint magic");
    AgentParams p;
    in.read(reinterpret_cast<char*>(&p.version), sizeof p.version);
    if (!in) throw ParseError("checkpoint truncated");
    p.policy = read_mlp(in);
    p.value = read_mlp(in);
    return p;
}

} // namespace arith
