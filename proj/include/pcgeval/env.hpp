#pragma once

#include "pcgeval/duel.hpp"
#include "pcgeval/pcg.hpp"
#include "pcgeval/rng.hpp"

#include <array>
#include <cstdint>
#include <optional>

namespace pcgeval {

inline constexpr int kActionDim = kNumAttrs + 1; // 7 plays + pass
inline constexpr int kObservationDim = 23;

// Fixed 23-component encoding, every component in [0, 1]:
//   [0..6]   one-hot of the front queue attribute (all zero when terminal)
//   [7..13]  remaining queue count per attribute / args_per_attribute
//   [14..20] hand count per attribute / copies_per_attribute_in_deck
//   [21]     deck_remaining / deck_size
//   [22]     turns_remaining / turn_limit
using Observation = std::array<double, kObservationDim>;

Observation encode_observation(const DuelState& state);

struct SpaceDescriptor {
    int action_dim = kActionDim;
    int observation_dim = kObservationDim;
};

struct RewardConfig {
    double impactful_reward = 100.0;
    double win_reward = 100.0;
    double step_penalty = -2.0;
    bool operator==(const RewardConfig&) const = default;
};

struct StepInfo {
    ActionClass classification = ActionClass::Noop;
    bool impactful = false;
    std::optional<DuelOutcome> outcome;
    std::optional<DuelReport> report; // present on the terminating step
    std::uint64_t sga = 0;
};

struct StepResult {
    Observation observation{};
    double reward = 0.0;
    bool terminated = false;
    StepInfo info;
};

// Episodic environment over the duel: standardizes game access (action
// coercion, vector observations) and drives the PCG between duels. One
// owner, one thread; parallel training uses independent instances.
class DuelEnv {
public:
    DuelEnv(PcgVersion version, const GaParams& ga, const DuelConfig& duel,
            const RewardConfig& reward, std::uint64_t seed);

    SpaceDescriptor representations() const { return {}; }

    // Observation of the current duel state (also defined on terminal states).
    Observation state() const;

    // Maps an action index onto the duel; plays of cards not held fall
    // through to a pass inside the state machine. Throws on out-of-range
    // indices and on terminal duels.
    StepOutcome perform_action(int action_index);

    // perform_action plus reward shaping, SGA accounting and termination
    // bookkeeping. A terminated env requires reset() before the next step.
    StepResult step(int action_index);

    // Feeds the finished duel's report to the PCG (V2/V3 evolve), spawns the
    // next opponent and returns its first observation. Calling reset before
    // the duel has ended (except right after construction) throws.
    Observation reset();

    bool terminated() const { return duel_.terminal(); }
    std::uint64_t sga_count() const { return sga_count_; }
    const NpcProfile& current_profile() const { return duel_.profile(); }
    const DuelState& duel() const { return duel_; }
    const PcgSystem& pcg() const { return pcg_; }
    const RewardConfig& reward_config() const { return reward_; }
    const DuelConfig& duel_config() const { return duel_config_; }

    bool operator==(const DuelEnv&) const = default;

    // Checkpoint support.
    struct Snapshot {
        DuelState::Raw duel;
        GaState pcg_state;
        std::array<std::uint64_t, 4> rng_state;
        std::uint64_t sga_count;
        bool fresh_duel;
    };
    Snapshot snapshot() const;
    void restore(const Snapshot& snap);

private:
    DuelState make_duel();

    DuelConfig duel_config_;
    RewardConfig reward_;
    Rng rng_;
    PcgSystem pcg_;
    DuelState duel_;
    std::uint64_t sga_count_ = 0;
    bool fresh_duel_ = true; // set right after construction/reset
};

} // namespace pcgeval
