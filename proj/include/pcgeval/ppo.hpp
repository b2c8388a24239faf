#pragma once

#include "pcgeval/nn.hpp"
#include "pcgeval/rng.hpp"

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace pcgeval {

struct PpoHyperparams {
    int n_steps = 128;
    int batch_size = 4;
    int n_epochs = 10;
    double vf_coef = 0.5;
    double clip_range = 0.2;
    double gamma = 0.99;
    double gae_lambda = 0.95;
    double learning_rate = 3e-4;
    double entropy_coef = 0.0;
    double max_grad_norm = 0.5;

    void validate() const;
    bool operator==(const PpoHyperparams&) const = default;
};

// Minimal episodic surface the rollout collector drives. Implementations
// advance to the next episode's start state themselves when a step
// terminates, so the collector sees an uninterrupted stream of decisions.
class TrainEnv {
public:
    virtual ~TrainEnv() = default;
    virtual int observation_dim() const = 0;
    virtual int action_dim() const = 0;
    virtual std::span<const double> current_observation() = 0;
    virtual std::pair<double, bool> step(int action) = 0; // (reward, terminated)
};

struct RolloutBuffer {
    int n_steps = 0;
    int obs_dim = 0;
    std::vector<double> observations; // n_steps x obs_dim
    std::vector<int> actions;
    std::vector<double> log_probs;
    std::vector<double> values;
    std::vector<double> rewards;
    std::vector<std::uint8_t> terminated;
    double bootstrap_value = 0.0; // V of the observation after the last step
    std::vector<double> advantages;
    std::vector<double> returns;
};

// GAE(gamma, lambda) with episode truncation at terminal steps; fills
// advantages and returns (= advantages + values).
void compute_gae(RolloutBuffer& buffer, double gamma, double gae_lambda);

// A gathered minibatch. Advantages are expected already normalized.
struct Minibatch {
    std::span<const double> observations; // size x obs_dim
    std::span<const int> actions;
    std::span<const double> old_log_probs;
    std::span<const double> advantages;
    std::span<const double> returns;
    int size = 0;
    int obs_dim = 0;
};

struct LossTerms {
    double total = 0.0;
    double policy = 0.0;
    double value = 0.0;
    double entropy = 0.0;
};

// Clipped-surrogate PPO loss over one minibatch:
//   policy  = -mean(min(ratio * A, clip(ratio, 1-eps, 1+eps) * A))
//   value   = mean((V - return)^2)
//   total   = policy + vf_coef * value - entropy_coef * entropy
// Parameter layout: policy network block followed by value network block.
// Gradients are accumulated into param_grad when it is non-empty, which must
// then match params in size.
LossTerms ppo_loss_and_grad(const Mlp& policy_net, const Mlp& value_net,
                            std::span<const double> params, const Minibatch& mb,
                            const PpoHyperparams& hp, std::span<double> param_grad);

// Normalizes to mean 0 / std 1 in place (population std, floored at 1e-8).
void normalize_advantages(std::span<double> advantages);

struct UpdateStats {
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    double grad_norm = 0.0; // pre-clip, averaged
    int minibatches = 0;
};

// Policy and value networks over a single flat parameter vector plus Adam
// state. One instance per training run, single-threaded.
class PpoAgent {
public:
    PpoAgent(int obs_dim, int action_dim, std::vector<int> hidden, PpoHyperparams hp,
             std::uint64_t seed);

    const PpoHyperparams& hyper() const { return hp_; }
    const Mlp& policy_net() const { return policy_; }
    const Mlp& value_net() const { return value_; }
    int obs_dim() const { return policy_.shape().input; }
    int action_dim() const { return policy_.shape().output; }

    struct ActResult {
        int action = 0;
        double log_prob = 0.0;
        double value = 0.0;
    };

    // Samples from the softmax policy. Throws on non-finite activations.
    ActResult act(std::span<const double> obs, Rng& rng) const;
    int greedy_action(std::span<const double> obs) const; // argmax, ties to lowest index
    double state_value(std::span<const double> obs) const;
    void policy_probs(std::span<const double> obs, std::span<double> out) const;

    // n_epochs of shuffled minibatch updates over the buffer.
    UpdateStats update(const RolloutBuffer& buffer, Rng& rng);

    std::span<const double> params() const { return params_; }
    std::span<double> mutable_params() { return params_; }
    const AdamState& adam() const { return adam_; }
    AdamState& mutable_adam() { return adam_; }

private:
    PpoHyperparams hp_;
    Mlp policy_;
    Mlp value_;
    std::vector<double> params_; // policy block then value block
    AdamState adam_;
    mutable MlpWorkspace policy_ws_;
    mutable MlpWorkspace value_ws_;
};

// Runs exactly n_steps agent/environment interactions and fills a buffer,
// including the bootstrap value of the trailing observation.
RolloutBuffer collect_rollout(const PpoAgent& agent, TrainEnv& env, int n_steps, Rng& rng);

} // namespace pcgeval
