#include "pcgeval/env.hpp"

#include <stdexcept>

namespace pcgeval {

Observation encode_observation(const DuelState& state) {
    const DuelConfig& config = state.config();
    Observation obs{};

    const int front = state.terminal() ? -1 : state.front_attr();
    if (front >= 0) {
        obs[front] = 1.0;
    }
    for (int attr = 0; attr < kNumAttrs; ++attr) {
        obs[7 + attr] = static_cast<double>(state.queue_count(attr)) / config.args_per_attribute;
        obs[14 + attr] =
            static_cast<double>(state.hand_count(attr)) / config.copies_per_attribute_in_deck;
    }
    obs[21] = static_cast<double>(state.deck_remaining()) / config.deck_size();
    obs[22] = static_cast<double>(config.turn_limit - state.turns_used()) / config.turn_limit;
    return obs;
}

DuelEnv::DuelEnv(PcgVersion version, const GaParams& ga, const DuelConfig& duel,
                 const RewardConfig& reward, std::uint64_t seed)
    : duel_config_(duel), reward_(reward), rng_(seed), pcg_(version, ga, rng_),
      duel_(make_duel()) {
    duel_config_.validate();
}

DuelState DuelEnv::make_duel() {
    const NpcProfile profile = pcg_.sample_opponent(rng_);
    return DuelState::start(profile, duel_config_, rng_.next_u64());
}

Observation DuelEnv::state() const { return encode_observation(duel_); }

StepOutcome DuelEnv::perform_action(int action_index) {
    if (action_index < 0 || action_index >= kActionDim) {
        throw std::out_of_range("DuelEnv: action index out of range");
    }
    return duel_.apply(DuelAction{action_index});
}

StepResult DuelEnv::step(int action_index) {
    if (duel_.terminal()) {
        throw std::logic_error("DuelEnv::step: duel finished, reset required");
    }
    const StepOutcome outcome = perform_action(action_index);
    fresh_duel_ = false;
    ++sga_count_;

    double reward = 0.0;
    if (outcome.classification == ActionClass::Correct) {
        reward += reward_.impactful_reward;
        if (outcome.terminal == DuelOutcome::Win) {
            reward += reward_.win_reward;
        }
    } else {
        reward += reward_.step_penalty;
    }

    StepResult result;
    result.observation = state();
    result.reward = reward;
    result.terminated = outcome.terminal.has_value();
    result.info.classification = outcome.classification;
    result.info.impactful = outcome.impactful;
    result.info.outcome = outcome.terminal;
    result.info.sga = sga_count_;
    if (result.terminated) {
        result.info.report = duel_.report();
    }
    return result;
}

Observation DuelEnv::reset() {
    if (fresh_duel_) {
        // First call after construction: the opening duel is already live.
        return state();
    }
    if (!duel_.terminal()) {
        throw std::logic_error("DuelEnv::reset: duel still in progress");
    }
    pcg_.on_duel_end(duel_.report(), rng_);
    duel_ = make_duel();
    fresh_duel_ = true;
    return state();
}

DuelEnv::Snapshot DuelEnv::snapshot() const {
    return Snapshot{duel_.raw(), pcg_.state(), rng_.state(), sga_count_, fresh_duel_};
}

void DuelEnv::restore(const Snapshot& snap) {
    duel_ = DuelState::from_raw(snap.duel);
    pcg_.restore(snap.pcg_state);
    rng_.set_state(snap.rng_state);
    sga_count_ = snap.sga_count;
    fresh_duel_ = snap.fresh_duel;
}

} // namespace pcgeval
