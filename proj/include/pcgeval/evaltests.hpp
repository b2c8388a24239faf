#pragma once

#include "pcgeval/checkpoint.hpp"
#include "pcgeval/env.hpp"
#include "pcgeval/ppo.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace pcgeval {

// All C(7,3) = 35 attribute subsets in lexicographic order.
std::vector<std::array<int, 3>> enumerate_combos();

// Acting rule over the standard observation encoding.
using PolicyFn = std::function<int(const Observation&)>;

PolicyFn greedy_policy(const PpoAgent& agent);
PolicyFn matching_oracle_policy();         // play the front attribute when held
PolicyFn uniform_random_policy(Rng& rng);  // uniform over all 8 actions

// Rebuilds an agent (architecture, hyperparameters, parameters) from a
// checkpoint; optimizer state is carried along for completeness.
PpoAgent agent_from_checkpoint(const Checkpoint& checkpoint);

struct InstanceScore {
    std::uint64_t seed = 0;
    PcgVersion version = PcgVersion::V1Random;
    std::uint64_t checkpoint_sga = 0;
    int duels_played = 0;
    int wins = 0;
    double win_rate = 0.0;

    bool operator==(const InstanceScore&) const = default;
};

// Plays `repeats` duels against each of the 35 combinations with the
// permutation drawn uniformly per duel; the PCG is inert. 35 x repeats
// duels total.
InstanceScore comprehensive_test(const Checkpoint& checkpoint, int repeats, std::uint64_t seed);

// Same protocol for an arbitrary acting rule (oracle and baseline policies).
InstanceScore comprehensive_test_policy(const PolicyFn& policy, const DuelConfig& config,
                                        int repeats, std::uint64_t seed);

// P(at least k distinct of the 6 permutations show up in `repeats` uniform
// draws), exact via the distinct-count recurrence.
double permutation_coverage_probability(int repeats, int k);

// Best checkpoint per (seed, version): highest win rate, ties to the larger
// sga, then to the lower checkpoint index.
std::vector<InstanceScore> select_best_instances(const std::vector<InstanceScore>& scores);

// Column value of the opponent_source field ("v1", "v2", "v3").
std::string source_label(PcgVersion version);

struct ScenarioResult {
    std::string instance_id; // e.g. "v2_seed3@50000"
    std::uint64_t seed = 0;
    PcgVersion version = PcgVersion::V1Random;
    std::uint64_t checkpoint_sga = 0;
    std::string opponent_source; // "v1"/"v2" for scenario runs, "comprehensive" for scores
    int duels = 0;
    int wins = 0;
    double win_rate = 0.0;
    bool retained = true;

    bool operator==(const ScenarioResult&) const = default;
};

// Pits each best instance against `duels` consecutive NPCs generated live by
// the opponent source (V2 evolves between duels from the instance's own
// reports); the agent acts greedily.
std::vector<ScenarioResult> scenario_test(const std::vector<Checkpoint>& instances,
                                          PcgVersion opponent_source, int duels,
                                          std::uint64_t seed);

// Results-schema row for a comprehensive score.
ScenarioResult to_result_row(const InstanceScore& score, const std::string& source);

// Counts wins of a policy over exactly n_sgas environment steps; the
// trailing incomplete duel is not counted.
struct PlayStats {
    std::uint64_t games = 0;
    std::uint64_t wins = 0;
    double win_rate() const {
        return games == 0 ? 0.0 : static_cast<double>(wins) / static_cast<double>(games);
    }
};
PlayStats play_for_sgas(const PolicyFn& policy, DuelEnv& env, std::uint64_t n_sgas);
PlayStats play_duels(const PolicyFn& policy, DuelEnv& env, int duels);

struct IqrOutcome {
    std::vector<ScenarioResult> results; // retained flags set
    std::vector<std::uint64_t> removed_seeds;
};

// Tukey fences (type-7 quartiles) per (version, opponent_source) group, then
// removal of every result sharing a removed result's seed across all groups.
// Groups must hold at least 4 results.
IqrOutcome iqr_filter(std::vector<ScenarioResult> results);

inline constexpr char kResultsHeader[] =
    "instance_id,seed,version,checkpoint_sga,opponent_source,duels,wins,win_rate,retained";

void write_results_csv(const std::filesystem::path& path,
                       const std::vector<ScenarioResult>& results);
std::vector<ScenarioResult> read_results_csv(const std::filesystem::path& path);

} // namespace pcgeval
