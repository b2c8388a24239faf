#pragma once

#include "pcgeval/rng.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

namespace pcgeval {

inline constexpr int kNumAttrs = 7;

// Ordered triple of distinct attribute indices. The order fixes the NPC's
// argument queue, so two profiles with the same attribute set but different
// orderings play differently.
struct NpcProfile {
    std::array<int, 3> attrs{};

    bool valid() const;
    bool contains(int attr) const;
    bool operator==(const NpcProfile&) const = default;
};

struct DuelConfig {
    int args_per_attribute = 2;
    int copies_per_attribute_in_deck = 2;
    int initial_hand_size = 4;
    int turn_limit = 20;

    int deck_size() const { return kNumAttrs * copies_per_attribute_in_deck; }
    void validate() const; // throws std::invalid_argument
    bool operator==(const DuelConfig&) const = default;
};

enum class DuelOutcome : std::uint8_t { Win, Loss };

enum class ActionClass : std::uint8_t { Correct, Incorrect, Noop };

// Discrete action space: indices 0..6 play a card of that attribute,
// index 7 passes.
struct DuelAction {
    static constexpr int kPass = kNumAttrs;
    int index = kPass;

    static DuelAction play(int attr) { return {attr}; }
    static DuelAction pass() { return {kPass}; }
    bool is_pass() const { return index == kPass; }
    bool operator==(const DuelAction&) const = default;
};

struct StepOutcome {
    ActionClass classification = ActionClass::Noop;
    bool impactful = false;
    std::optional<DuelOutcome> terminal;
};

struct DuelReport {
    DuelOutcome outcome = DuelOutcome::Loss;
    std::array<int, kNumAttrs> npc_args_not_destroyed{};
    std::array<int, kNumAttrs> played_correctly{};
    std::array<int, kNumAttrs> played_incorrectly{};
    std::array<int, kNumAttrs> unplayed{};
    bool operator==(const DuelReport&) const = default;
};

// State machine for one card duel. The player contests the front of the
// NPC's argument queue; a duel is won when the queue empties and lost when
// the turn limit passes or the player runs out of cards first.
class DuelState {
public:
    static DuelState start(const NpcProfile& profile, const DuelConfig& config,
                           std::uint64_t seed);

    bool terminal() const { return outcome_.has_value(); }
    std::optional<DuelOutcome> outcome() const { return outcome_; }

    // Empty on terminal states; Pass is always present otherwise.
    std::vector<DuelAction> legal_actions() const;

    // Advances the duel by one turn. Playing an attribute not held and Pass
    // are both no-ops (the card rules coerce any agent vector to something
    // valid). Throws std::logic_error on terminal states.
    StepOutcome apply(DuelAction action);

    // Final tallies; throws std::logic_error unless terminal.
    DuelReport report() const;

    const NpcProfile& profile() const { return profile_; }
    const DuelConfig& config() const { return config_; }
    int front_attr() const { return queue_.empty() ? -1 : queue_.front(); }
    int queue_count(int attr) const;
    int queue_size() const { return static_cast<int>(queue_.size()); }
    int hand_count(int attr) const { return hand_[attr]; }
    int hand_size() const;
    int deck_remaining() const { return static_cast<int>(deck_.size()); }
    int turns_used() const { return turns_used_; }
    const std::array<int, kNumAttrs>& played_correctly() const { return played_correctly_; }
    const std::array<int, kNumAttrs>& played_incorrectly() const { return played_incorrectly_; }
    const std::array<int, kNumAttrs>& args_destroyed() const { return args_destroyed_; }

    bool operator==(const DuelState&) const = default;

    // Checkpoint support: raw field access used by the serializer only.
    struct Raw;
    Raw raw() const;
    static DuelState from_raw(const Raw& raw);

private:
    DuelState() = default;
    void draw_card();

    NpcProfile profile_{};
    DuelConfig config_{};
    std::vector<int> queue_;
    std::array<int, kNumAttrs> hand_{};
    std::vector<int> deck_; // back is the next card drawn
    int turns_used_ = 0;
    std::array<int, kNumAttrs> played_correctly_{};
    std::array<int, kNumAttrs> played_incorrectly_{};
    std::array<int, kNumAttrs> args_destroyed_{};
    std::optional<DuelOutcome> outcome_;
    Rng rng_;
};

struct DuelState::Raw {
    NpcProfile profile;
    DuelConfig config;
    std::vector<int> queue;
    std::array<int, kNumAttrs> hand;
    std::vector<int> deck;
    int turns_used;
    std::array<int, kNumAttrs> played_correctly;
    std::array<int, kNumAttrs> played_incorrectly;
    std::array<int, kNumAttrs> args_destroyed;
    std::optional<DuelOutcome> outcome;
    std::array<std::uint64_t, 4> rng_state;
};

} // namespace pcgeval
