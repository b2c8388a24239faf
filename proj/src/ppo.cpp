#include "pcgeval/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace pcgeval {

void PpoHyperparams::validate() const {
    if (n_steps <= 0 || batch_size <= 0 || n_steps % batch_size != 0) {
        throw std::invalid_argument("PpoHyperparams: n_steps must be a positive multiple of batch_size");
    }
    if (n_epochs <= 0) {
        throw std::invalid_argument("PpoHyperparams: n_epochs must be positive");
    }
    if (gamma <= 0.0 || gamma > 1.0 || gae_lambda < 0.0 || gae_lambda > 1.0) {
        throw std::invalid_argument("PpoHyperparams: gamma in (0,1], lambda in [0,1]");
    }
    if (!(clip_range > 0.0) || !(learning_rate > 0.0) || !(max_grad_norm > 0.0)) {
        throw std::invalid_argument("PpoHyperparams: clip_range, learning_rate, max_grad_norm must be positive");
    }
}

void compute_gae(RolloutBuffer& buffer, double gamma, double gae_lambda) {
    const int n = buffer.n_steps;
    buffer.advantages.assign(static_cast<std::size_t>(n), 0.0);
    buffer.returns.assign(static_cast<std::size_t>(n), 0.0);

    double next_advantage = 0.0;
    for (int t = n - 1; t >= 0; --t) {
        const double not_done = buffer.terminated[t] != 0 ? 0.0 : 1.0;
        const double next_value = t + 1 < n ? buffer.values[t + 1] : buffer.bootstrap_value;
        const double delta =
            buffer.rewards[t] + gamma * next_value * not_done - buffer.values[t];
        next_advantage = delta + gamma * gae_lambda * not_done * next_advantage;
        buffer.advantages[t] = next_advantage;
        buffer.returns[t] = next_advantage + buffer.values[t];
    }
}

void normalize_advantages(std::span<double> advantages) {
    const double n = static_cast<double>(advantages.size());
    double mean = 0.0;
    for (double a : advantages) mean += a;
    mean /= n;
    double var = 0.0;
    for (double a : advantages) var += (a - mean) * (a - mean);
    var /= n;
    const double denom = std::max(std::sqrt(var), 1e-8);
    for (double& a : advantages) {
        a = (a - mean) / denom;
    }
}

LossTerms ppo_loss_and_grad(const Mlp& policy_net, const Mlp& value_net,
                            std::span<const double> params, const Minibatch& mb,
                            const PpoHyperparams& hp, std::span<double> param_grad) {
    const bool want_grad = !param_grad.empty();
    if (want_grad && param_grad.size() != params.size()) {
        throw std::invalid_argument("ppo_loss_and_grad: gradient size mismatch");
    }
    const auto policy_count = static_cast<std::size_t>(policy_net.param_count());
    const std::span<const double> policy_params = params.subspan(0, policy_count);
    const std::span<const double> value_params = params.subspan(policy_count);

    const int action_dim = policy_net.shape().output;
    const double inv_size = 1.0 / mb.size;
    const double eps = hp.clip_range;

    LossTerms terms;
    MlpWorkspace policy_ws;
    MlpWorkspace value_ws;
    std::vector<double> probs(static_cast<std::size_t>(action_dim));
    std::vector<double> logit_grad(static_cast<std::size_t>(action_dim));

    for (int i = 0; i < mb.size; ++i) {
        const std::span<const double> obs =
            mb.observations.subspan(static_cast<std::size_t>(i) * mb.obs_dim,
                                    static_cast<std::size_t>(mb.obs_dim));
        const std::span<const double> logits = policy_net.forward(policy_params, obs, policy_ws);
        for (double v : logits) {
            if (!std::isfinite(v)) {
                throw std::runtime_error("ppo_loss_and_grad: non-finite policy activation");
            }
        }
        const int action = mb.actions[i];
        const double log_prob_new = log_softmax_at(logits, action);
        std::copy(logits.begin(), logits.end(), probs.begin());
        softmax_inplace(probs);

        double entropy = 0.0;
        for (double p : probs) {
            if (p > 0.0) entropy -= p * std::log(p);
        }

        const double advantage = mb.advantages[i];
        const double ratio = std::exp(log_prob_new - mb.old_log_probs[i]);
        const double unclipped = ratio * advantage;
        const double clipped = std::clamp(ratio, 1.0 - eps, 1.0 + eps) * advantage;
        const double surrogate = std::min(unclipped, clipped);

        terms.policy += -surrogate * inv_size;
        terms.entropy += entropy * inv_size;

        const double value =
            value_net.forward(value_params, obs, value_ws)[0];
        const double value_err = value - mb.returns[i];
        terms.value += value_err * value_err * inv_size;

        if (want_grad) {
            // d(-min)/dratio is -A on the unclipped branch and 0 when the
            // clipped branch is strictly smaller (the clamp is saturated).
            double g_logp = 0.0;
            if (unclipped <= clipped) {
                g_logp = -advantage * ratio * inv_size;
            }
            for (int a = 0; a < action_dim; ++a) {
                const double indicator = a == action ? 1.0 : 0.0;
                logit_grad[a] = g_logp * (indicator - probs[a]);
                // Entropy enters the total as -entropy_coef * H.
                if (hp.entropy_coef != 0.0 && probs[a] > 0.0) {
                    logit_grad[a] +=
                        hp.entropy_coef * probs[a] * (std::log(probs[a]) + entropy) * inv_size;
                }
            }
            policy_net.backward(policy_params, policy_ws, logit_grad,
                                param_grad.subspan(0, policy_count));

            const double g_value[1] = {hp.vf_coef * 2.0 * value_err * inv_size};
            value_net.backward(value_params, value_ws, g_value, param_grad.subspan(policy_count));
        }
    }

    terms.total = terms.policy + hp.vf_coef * terms.value - hp.entropy_coef * terms.entropy;
    if (!std::isfinite(terms.total)) {
        throw std::runtime_error("ppo_loss_and_grad: non-finite loss");
    }
    return terms;
}

PpoAgent::PpoAgent(int obs_dim, int action_dim, std::vector<int> hidden, PpoHyperparams hp,
                   std::uint64_t seed)
    : hp_(hp), policy_(MlpShape{obs_dim, hidden, action_dim}),
      value_(MlpShape{obs_dim, std::move(hidden), 1}),
      params_(static_cast<std::size_t>(policy_.param_count() + value_.param_count()), 0.0),
      adam_(params_.size()) {
    hp_.validate();
    Rng rng(seed);
    const auto policy_count = static_cast<std::size_t>(policy_.param_count());
    policy_.init_params(std::span<double>(params_).subspan(0, policy_count), rng,
                        std::sqrt(2.0), 0.01);
    value_.init_params(std::span<double>(params_).subspan(policy_count), rng, std::sqrt(2.0),
                       1.0);
}

PpoAgent::ActResult PpoAgent::act(std::span<const double> obs, Rng& rng) const {
    if (obs.size() != static_cast<std::size_t>(obs_dim())) {
        throw std::invalid_argument("PpoAgent::act: observation dimension mismatch");
    }
    const auto policy_count = static_cast<std::size_t>(policy_.param_count());
    const std::span<const double> logits =
        policy_.forward(std::span<const double>(params_).subspan(0, policy_count), obs,
                        policy_ws_);
    std::vector<double> probs(logits.begin(), logits.end());
    for (double v : probs) {
        if (!std::isfinite(v)) {
            throw std::runtime_error("PpoAgent::act: non-finite activation");
        }
    }
    softmax_inplace(probs);

    const double u = rng.uniform();
    double cdf = 0.0;
    int action = action_dim() - 1;
    for (int a = 0; a < action_dim(); ++a) {
        cdf += probs[a];
        if (u < cdf) {
            action = a;
            break;
        }
    }

    ActResult result;
    result.action = action;
    result.log_prob = log_softmax_at(logits, action);
    result.value = state_value(obs);
    return result;
}

int PpoAgent::greedy_action(std::span<const double> obs) const {
    const auto policy_count = static_cast<std::size_t>(policy_.param_count());
    const std::span<const double> logits =
        policy_.forward(std::span<const double>(params_).subspan(0, policy_count), obs,
                        policy_ws_);
    int best = 0;
    for (int a = 1; a < action_dim(); ++a) {
        if (logits[a] > logits[best]) {
            best = a;
        }
    }
    return best;
}

double PpoAgent::state_value(std::span<const double> obs) const {
    const auto policy_count = static_cast<std::size_t>(policy_.param_count());
    return value_.forward(std::span<const double>(params_).subspan(policy_count), obs,
                          value_ws_)[0];
}

void PpoAgent::policy_probs(std::span<const double> obs, std::span<double> out) const {
    const auto policy_count = static_cast<std::size_t>(policy_.param_count());
    const std::span<const double> logits =
        policy_.forward(std::span<const double>(params_).subspan(0, policy_count), obs,
                        policy_ws_);
    std::copy(logits.begin(), logits.end(), out.begin());
    softmax_inplace(out);
}

UpdateStats PpoAgent::update(const RolloutBuffer& buffer, Rng& rng) {
    if (buffer.n_steps % hp_.batch_size != 0) {
        throw std::invalid_argument("PpoAgent::update: buffer not divisible into minibatches");
    }
    if (buffer.advantages.empty()) {
        throw std::logic_error("PpoAgent::update: compute_gae must run first");
    }

    const int n = buffer.n_steps;
    const int mb_size = hp_.batch_size;
    std::vector<int> indices(static_cast<std::size_t>(n));
    std::iota(indices.begin(), indices.end(), 0);

    std::vector<double> mb_obs(static_cast<std::size_t>(mb_size) * buffer.obs_dim);
    std::vector<int> mb_actions(static_cast<std::size_t>(mb_size));
    std::vector<double> mb_log_probs(static_cast<std::size_t>(mb_size));
    std::vector<double> mb_advantages(static_cast<std::size_t>(mb_size));
    std::vector<double> mb_returns(static_cast<std::size_t>(mb_size));
    std::vector<double> grad(params_.size());

    UpdateStats stats;
    for (int epoch = 0; epoch < hp_.n_epochs; ++epoch) {
        rng.shuffle(indices);
        for (int start = 0; start < n; start += mb_size) {
            for (int i = 0; i < mb_size; ++i) {
                const int src = indices[static_cast<std::size_t>(start + i)];
                std::copy_n(buffer.observations.begin() +
                                static_cast<std::ptrdiff_t>(src) * buffer.obs_dim,
                            buffer.obs_dim,
                            mb_obs.begin() + static_cast<std::ptrdiff_t>(i) * buffer.obs_dim);
                mb_actions[static_cast<std::size_t>(i)] = buffer.actions[static_cast<std::size_t>(src)];
                mb_log_probs[static_cast<std::size_t>(i)] = buffer.log_probs[static_cast<std::size_t>(src)];
                mb_advantages[static_cast<std::size_t>(i)] = buffer.advantages[static_cast<std::size_t>(src)];
                mb_returns[static_cast<std::size_t>(i)] = buffer.returns[static_cast<std::size_t>(src)];
            }
            normalize_advantages(mb_advantages);

            Minibatch mb;
            mb.observations = mb_obs;
            mb.actions = mb_actions;
            mb.old_log_probs = mb_log_probs;
            mb.advantages = mb_advantages;
            mb.returns = mb_returns;
            mb.size = mb_size;
            mb.obs_dim = buffer.obs_dim;

            std::fill(grad.begin(), grad.end(), 0.0);
            const LossTerms terms =
                ppo_loss_and_grad(policy_, value_, params_, mb, hp_, grad);
            stats.grad_norm += clip_global_norm(grad, hp_.max_grad_norm);
            adam_update(params_, grad, adam_, hp_.learning_rate);

            stats.policy_loss += terms.policy;
            stats.value_loss += terms.value;
            stats.entropy += terms.entropy;
            ++stats.minibatches;
        }
    }

    const double inv = 1.0 / stats.minibatches;
    stats.policy_loss *= inv;
    stats.value_loss *= inv;
    stats.entropy *= inv;
    stats.grad_norm *= inv;
    return stats;
}

RolloutBuffer collect_rollout(const PpoAgent& agent, TrainEnv& env, int n_steps, Rng& rng) {
    RolloutBuffer buffer;
    buffer.n_steps = n_steps;
    buffer.obs_dim = env.observation_dim();
    buffer.observations.reserve(static_cast<std::size_t>(n_steps) * buffer.obs_dim);
    buffer.actions.reserve(static_cast<std::size_t>(n_steps));
    buffer.log_probs.reserve(static_cast<std::size_t>(n_steps));
    buffer.values.reserve(static_cast<std::size_t>(n_steps));
    buffer.rewards.reserve(static_cast<std::size_t>(n_steps));
    buffer.terminated.reserve(static_cast<std::size_t>(n_steps));

    for (int step = 0; step < n_steps; ++step) {
        const std::span<const double> obs = env.current_observation();
        buffer.observations.insert(buffer.observations.end(), obs.begin(), obs.end());

        const PpoAgent::ActResult act = agent.act(obs, rng);
        const auto [reward, terminated] = env.step(act.action);

        buffer.actions.push_back(act.action);
        buffer.log_probs.push_back(act.log_prob);
        buffer.values.push_back(act.value);
        buffer.rewards.push_back(reward);
        buffer.terminated.push_back(terminated ? 1 : 0);
    }
    buffer.bootstrap_value = agent.state_value(env.current_observation());
    return buffer;
}

} // namespace pcgeval
