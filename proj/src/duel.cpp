#include "pcgeval/duel.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace pcgeval {

bool NpcProfile::valid() const {
    for (int attr : attrs) {
        if (attr < 0 || attr >= kNumAttrs) {
            return false;
        }
    }
    return attrs[0] != attrs[1] && attrs[0] != attrs[2] && attrs[1] != attrs[2];
}

bool NpcProfile::contains(int attr) const {
    return attrs[0] == attr || attrs[1] == attr || attrs[2] == attr;
}

void DuelConfig::validate() const {
    if (args_per_attribute < 1 || copies_per_attribute_in_deck < 1 || initial_hand_size < 1 ||
        turn_limit < 1) {
        throw std::invalid_argument("DuelConfig: all fields must be >= 1");
    }
    if (initial_hand_size > deck_size()) {
        throw std::invalid_argument("DuelConfig: initial hand exceeds deck size");
    }
}

DuelState DuelState::start(const NpcProfile& profile, const DuelConfig& config,
                           std::uint64_t seed) {
    if (!profile.valid()) {
        throw std::invalid_argument("DuelState: invalid NPC profile");
    }
    config.validate();

    DuelState state;
    state.profile_ = profile;
    state.config_ = config;
    state.rng_ = Rng(seed);

    state.queue_.reserve(static_cast<std::size_t>(3 * config.args_per_attribute));
    for (int rep = 0; rep < config.args_per_attribute; ++rep) {
        for (int attr : profile.attrs) {
            state.queue_.push_back(attr);
        }
    }

    state.deck_.reserve(static_cast<std::size_t>(config.deck_size()));
    for (int attr = 0; attr < kNumAttrs; ++attr) {
        for (int copy = 0; copy < config.copies_per_attribute_in_deck; ++copy) {
            state.deck_.push_back(attr);
        }
    }
    state.rng_.shuffle(state.deck_);

    for (int i = 0; i < config.initial_hand_size; ++i) {
        state.draw_card();
    }
    return state;
}

void DuelState::draw_card() {
    if (!deck_.empty()) {
        ++hand_[deck_.back()];
        deck_.pop_back();
    }
}

int DuelState::queue_count(int attr) const {
    return static_cast<int>(std::count(queue_.begin(), queue_.end(), attr));
}

int DuelState::hand_size() const {
    return std::accumulate(hand_.begin(), hand_.end(), 0);
}

std::vector<DuelAction> DuelState::legal_actions() const {
    std::vector<DuelAction> actions;
    if (terminal()) {
        return actions;
    }
    for (int attr = 0; attr < kNumAttrs; ++attr) {
        if (hand_[attr] > 0) {
            actions.push_back(DuelAction::play(attr));
        }
    }
    actions.push_back(DuelAction::pass());
    return actions;
}

StepOutcome DuelState::apply(DuelAction action) {
    if (terminal()) {
        throw std::logic_error("DuelState::apply: duel already finished");
    }
    if (action.index < 0 || action.index > DuelAction::kPass) {
        throw std::invalid_argument("DuelState::apply: action index out of range");
    }

    StepOutcome result;
    if (!action.is_pass() && hand_[action.index] > 0) {
        const int attr = action.index;
        --hand_[attr];
        if (!queue_.empty() && queue_.front() == attr) {
            queue_.erase(queue_.begin());
            ++args_destroyed_[attr];
            ++played_correctly_[attr];
            result.classification = ActionClass::Correct;
        } else {
            ++played_incorrectly_[attr];
            result.classification = ActionClass::Incorrect;
        }
    }

    ++turns_used_;
    draw_card();

    if (queue_.empty()) {
        outcome_ = DuelOutcome::Win;
    } else if (turns_used_ >= config_.turn_limit) {
        outcome_ = DuelOutcome::Loss;
    } else if (deck_.empty() && hand_size() == 0) {
        outcome_ = DuelOutcome::Loss;
    }

    result.terminal = outcome_;
    result.impactful =
        result.classification == ActionClass::Correct || outcome_ == DuelOutcome::Win;
    return result;
}

DuelReport DuelState::report() const {
    if (!terminal()) {
        throw std::logic_error("DuelState::report: duel still in progress");
    }
    DuelReport rep;
    rep.outcome = *outcome_;
    for (int attr = 0; attr < kNumAttrs; ++attr) {
        if (profile_.contains(attr)) {
            rep.npc_args_not_destroyed[attr] = config_.args_per_attribute - args_destroyed_[attr];
        }
        rep.played_correctly[attr] = played_correctly_[attr];
        rep.played_incorrectly[attr] = played_incorrectly_[attr];
        rep.unplayed[attr] =
            hand_[attr] + static_cast<int>(std::count(deck_.begin(), deck_.end(), attr));
    }
    return rep;
}

DuelState::Raw DuelState::raw() const {
    return Raw{profile_, config_,        queue_,           hand_,
               deck_,    turns_used_,    played_correctly_, played_incorrectly_,
               args_destroyed_, outcome_, rng_.state()};
}

DuelState DuelState::from_raw(const Raw& raw) {
    DuelState state;
    state.profile_ = raw.profile;
    state.config_ = raw.config;
    state.queue_ = raw.queue;
    state.hand_ = raw.hand;
    state.deck_ = raw.deck;
    state.turns_used_ = raw.turns_used;
    state.played_correctly_ = raw.played_correctly;
    state.played_incorrectly_ = raw.played_incorrectly;
    state.args_destroyed_ = raw.args_destroyed;
    state.outcome_ = raw.outcome;
    state.rng_.set_state(raw.rng_state);
    return state;
}

} // namespace pcgeval
