#pragma once

#include "pcgeval/harness.hpp"

#include <filesystem>
#include <string>

namespace pcgeval {

struct TestParams {
    int comprehensive_repeats = 5;
    int scenario_duels = 1000;
    bool operator==(const TestParams&) const = default;
};

// Full run configuration; every default equals the framework's documented
// value so an empty config file is a valid desk-scale setup.
struct RunConfig {
    DuelConfig duel;
    GaParams ga;
    PpoHyperparams ppo;
    RewardConfig reward;

    int seeds = 5;
    std::vector<PcgVersion> versions = {PcgVersion::V1Random, PcgVersion::V2Raw,
                                        PcgVersion::V3Normalized};
    std::uint64_t total_sgas = 50'000;
    std::uint64_t checkpoint_every = 10'000;
    std::uint64_t metrics_every = 500;
    int attr_freq_window = 200;

    TestParams test;
    std::string output_root; // empty: resolved from PCGEVAL_OUT or "out"

    TrainingPlan to_plan() const;
    bool operator==(const RunConfig&) const = default;
};

// Parses a JSON config file. Unknown keys anywhere are rejected.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& json_text);

// Flag > config > PCGEVAL_OUT > "out".
std::filesystem::path resolve_output_root(const std::string& flag_value,
                                          const RunConfig& config);

} // namespace pcgeval
