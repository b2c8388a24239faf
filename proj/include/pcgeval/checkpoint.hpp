#pragma once

#include "pcgeval/duel.hpp"
#include "pcgeval/env.hpp"
#include "pcgeval/nn.hpp"
#include "pcgeval/pcg.hpp"
#include "pcgeval/ppo.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace pcgeval {

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Metrics-logger counters carried across a save/resume boundary.
struct LoggerState {
    double cumulative_reward = 0.0;
    std::uint64_t games_total = 0;
    std::uint64_t wins_total = 0;
    std::uint64_t window_games = 0;
    std::uint64_t window_wins = 0;
    std::uint64_t npcs_seen = 0;
    std::vector<std::array<std::uint8_t, 3>> npc_history; // most recent last

    bool operator==(const LoggerState&) const = default;
};

// Versioned training snapshot: network architecture, hyperparameters,
// SGA clock, rng states, the flat little-endian float64 parameter block
// (checksummed), optimizer moments, and the PCG state (weights, population
// genes, generation index). The resume section additionally captures the
// live duel and logger so training can continue bit-exactly.
struct Checkpoint {
    static constexpr std::uint32_t kFormatVersion = 1;

    int obs_dim = 0;
    int action_dim = 0;
    std::vector<int> hidden;
    PpoHyperparams hyper;
    DuelConfig duel_config;
    RewardConfig reward_config;
    PcgVersion version = PcgVersion::V1Random;
    GaParams ga;
    std::uint64_t run_seed = 0;
    std::uint64_t sga_count = 0;
    std::array<std::uint64_t, 4> agent_rng_state{};

    std::vector<double> params;
    AdamState adam;

    GaState pcg_state;

    bool has_resume = false;
    DuelState::Raw duel{};
    std::array<std::uint64_t, 4> env_rng_state{};
    bool fresh_duel = false;
    LoggerState logger;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& checkpoint);
Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes);
std::uint64_t hash_file(const std::filesystem::path& path);

} // namespace pcgeval
