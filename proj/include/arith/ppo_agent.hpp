#pragma once

#include <array>
#include <cstdint>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "arith/compressor_tree.hpp"
#include "arith/cost_eval.hpp"
#include "arith/errors.hpp"
#include "arith/rng.hpp"

namespace arith {

// Three-layer MLP with rectified-linear hidden activations, stored as flat
// row-major weight blocks. Sizes are fixed per network role.
struct Mlp {
    int in = 0, h1 = 0, h2 = 0, out = 0;
    std::vector<double> w1, b1, w2, b2, w3, b3;

    void init(int in_, int h1_, int h2_, int out_, Rng& rng);
    size_t param_count() const;
    double* param(size_t flat_index);
    const double* param(size_t flat_index) const;

    friend bool operator==(const Mlp&, const Mlp&) = default;
};

// Policy (8->64->16->2, softmax head) and value (8->64->8->1) networks.
struct AgentParams {
    Mlp policy;
    Mlp value;
    uint64_t version = 0;

    void save(const std::string& path) const; // bit-exact round trip
    static AgentParams load(const std::string& path);
    bool operator==(const AgentParams&) const = default;
};

AgentParams init_params(uint64_t seed);

std::array<double, 2> policy_forward(const AgentParams& p, const FeatureVector& f);
double value_forward(const AgentParams& p, const FeatureVector& f);

struct TrajStep {
    FeatureVector features{};
    int action = 0; // 0 = FA, 1 = HA
    double logp = 0.0;
    double reward = 0.0; // penalty share only; the terminal reward is separate
    double value = 0.0;
};

struct Trajectory {
    std::vector<TrajStep> steps;
    double terminal_reward = 0.0; // -delay
    EvalResult eval;
    std::vector<CompressKind> actions;
};

// G_t = r_t + gamma * G_{t+1}; the last step's reward includes r_T.
std::vector<double> compute_returns(const Trajectory& traj, double gamma);

struct PPOConfig {
    double gamma = 0.8;
    double clip_eps = 0.2;
    double ha_penalty = 0.1;
    int batch_size = 64;
    int buffer_capacity = 0; // 0 -> 6 * width^2
    double learning_rate = 0.001;
    int update_epochs = 4;
};

using MultEvaluator = std::function<EvalResult(const CompressorState&)>;

// Samples actions from the policy until the state is terminal; a penalty is
// attached to the reward following each half-adder action and the terminal
// reward is -delay. Evaluator failures surface as EpisodeAborted.
Trajectory collect_episode(int width, const AgentParams& params, Rng& rng,
                           const MultEvaluator& evaluator, double ha_penalty = 0.1);

struct Sample {
    FeatureVector features{};
    int action = 0;
    double old_logp = 0.0;
    double ret = 0.0;   // G_t
    double value = 0.0; // V estimate at collection time
};

// min(r*A, clip(r, 1-eps, 1+eps)*A)
double clipped_surrogate(double ratio, double advantage, double eps);

// Mean clipped surrogate over the batch (ascended by the update).
double policy_objective(const AgentParams& p, const std::vector<Sample>& batch, double eps);
// Mean smooth-L1(G, V) over the batch (descended by the update).
double value_objective(const AgentParams& p, const std::vector<Sample>& batch);

struct MlpGrads {
    std::vector<double> w1, b1, w2, b2, w3, b3;
    void zero_like(const Mlp& m);
    double* param(const Mlp& m, size_t flat_index);
};

// Exact layer-wise backpropagation of both objectives.
MlpGrads policy_gradient(const AgentParams& p, const std::vector<Sample>& batch, double eps);
MlpGrads value_gradient(const AgentParams& p, const std::vector<Sample>& batch);

struct AdamState {
    std::vector<double> m, v;
    uint64_t step = 0;
};

// One update: update_epochs Adam epochs over the batch, ratios taken against
// the stored collection-time log-probs. A non-finite gradient aborts the
// whole update and leaves the parameters untouched (returns false).
bool ppo_update(AgentParams& params, const std::vector<Sample>& batch, const PPOConfig& config,
                AdamState& policy_adam, AdamState& value_adam);

// Oldest-first eviction at fixed capacity.
class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity) : capacity_(capacity) {}
    void push(const Sample& s);
    size_t size() const { return items_.size(); }
    size_t capacity() const { return capacity_; }
    const Sample& at(size_t i) const { return items_[i]; }
    std::vector<Sample> sample(size_t count, Rng& rng) const; // without replacement

private:
    size_t capacity_;
    std::deque<Sample> items_;
};

struct EpisodeRecord {
    std::vector<CompressKind> actions;
    EvalResult eval;
    double episode_return = 0.0; // G_0
};

struct TrainResult {
    AgentParams params;
    std::vector<EpisodeRecord> episodes;
    int env_steps = 0;
    std::vector<CompressKind> best_actions; // lowest evaluator delay seen
    EvalResult best_eval;
    bool has_best = false;
};

// Runs episodes until the environment-step budget is exhausted; an episode
// cut off by the budget is abandoned but its steps still count. One sampled
// batch update per completed episode once the buffer holds a full batch.
TrainResult train(int width, int steps, const PPOConfig& config, const MultEvaluator& evaluator,
                  Rng& rng, const AgentParams* warm_start = nullptr);

// Deterministic all-full-adder rollout, the natural greedy baseline.
CompressorState all_fa_rollout(int width);

} // namespace arith
