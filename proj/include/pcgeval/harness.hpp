#pragma once

#include "pcgeval/checkpoint.hpp"
#include "pcgeval/env.hpp"
#include "pcgeval/ppo.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace pcgeval {

struct TrainingPlan {
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
    std::vector<PcgVersion> versions = {PcgVersion::V1Random, PcgVersion::V2Raw,
                                        PcgVersion::V3Normalized};
    std::uint64_t total_sgas = 50'000;
    std::uint64_t checkpoint_every = 10'000;
    std::uint64_t metrics_every = 500;
    int attr_freq_window = 200;
    std::filesystem::path output_dir = "out";

    DuelConfig duel;
    GaParams ga;
    PpoHyperparams ppo;
    RewardConfig reward;
    std::vector<int> hidden = {64, 64};

    void validate() const;

    std::uint64_t checkpoints_per_run() const { return total_sgas / checkpoint_every; }
    std::uint64_t metrics_rows_per_run() const { return total_sgas / metrics_every; }

    // Seeds 1..n.
    static std::vector<std::uint64_t> default_seeds(int count);
};

struct MetricsRecord {
    std::uint64_t sga = 0;
    std::uint64_t games_window = 0;
    std::uint64_t wins_window = 0;
    std::optional<double> win_rate_window; // absent when no game ended in the window
    double cumulative_reward = 0.0;
    std::uint64_t games_total = 0;
    std::uint64_t wins_total = 0;
    std::array<double, kNumAttrs> attr_freq{}; // share of recent NPCs carrying each attribute

    bool operator==(const MetricsRecord&) const = default;
};

// Accumulates per-step and per-NPC events between metric ticks.
class MetricsLogger {
public:
    explicit MetricsLogger(int attr_window = 200);

    void on_step(double reward, bool episode_end, bool won);
    void on_npc(const NpcProfile& profile);
    MetricsRecord tick(std::uint64_t sga);

    LoggerState state() const;
    void restore(const LoggerState& state);

private:
    int attr_window_;
    LoggerState s_;
};

inline constexpr char kMetricsHeader[] =
    "sga,games_window,wins_window,win_rate_window,cum_reward,games_total,wins_total,"
    "attr0,attr1,attr2,attr3,attr4,attr5,attr6";

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricsRecord>& rows);
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

struct RunId {
    std::uint64_t seed = 0;
    PcgVersion version = PcgVersion::V1Random;

    std::string name() const; // e.g. "v2_seed3"
    bool operator==(const RunId&) const = default;
};

struct RunArtifacts {
    RunId id;
    std::filesystem::path metrics_path;
    std::vector<std::pair<std::uint64_t, std::filesystem::path>> checkpoints; // (sga, path)
    std::vector<MetricsRecord> metrics;
};

// Adapts DuelEnv to the rollout interface: auto-resets finished duels and
// reports every transition / fresh opponent to the supplied hooks.
class DuelRolloutAdapter final : public TrainEnv {
public:
    using StepHook = std::function<void(const StepResult&)>;
    using EpisodeHook = std::function<void(const NpcProfile&)>;

    explicit DuelRolloutAdapter(DuelEnv& env, StepHook on_step = nullptr,
                                EpisodeHook on_episode_start = nullptr);

    int observation_dim() const override { return kObservationDim; }
    int action_dim() const override { return kActionDim; }
    std::span<const double> current_observation() override;
    std::pair<double, bool> step(int action) override;

private:
    DuelEnv& env_;
    StepHook on_step_;
    EpisodeHook on_episode_start_;
    Observation obs_{};
};

// One full training run; writes metrics and checkpoint files under
// plan.output_dir/<run>/ and returns their paths. Fully deterministic in
// (seed, version, plan).
RunArtifacts train_one(std::uint64_t seed, PcgVersion version, const TrainingPlan& plan);

// Continues a run from a resume-capable checkpoint up to plan.total_sgas.
// Artifacts cover only the resumed stretch.
RunArtifacts resume_training(const Checkpoint& checkpoint, const TrainingPlan& plan);

struct RunOutcome {
    RunArtifacts artifacts;
    std::optional<std::string> error; // set when the run aborted
};

struct ManifestEntry {
    RunId run;
    std::string kind; // "metrics" or "checkpoint"
    std::uint64_t sga = 0;
    std::filesystem::path path; // relative to the manifest directory
    std::uint64_t content_hash = 0;

    bool operator==(const ManifestEntry&) const = default;
};

struct RunManifest {
    std::vector<ManifestEntry> entries;
    std::vector<std::string> errors;

    bool operator==(const RunManifest&) const = default;
};

// Executes every (seed, version) pair, optionally across threads. Failed
// runs are recorded and do not disturb completed ones.
RunManifest train_all(const TrainingPlan& plan, int parallelism = 1);

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path);
RunManifest parse_manifest(const std::filesystem::path& path);

struct CurvePoint {
    std::uint64_t sga = 0;
    std::optional<double> min;
    std::optional<double> median;
    std::optional<double> max;
};

struct VersionSummary {
    PcgVersion version = PcgVersion::V1Random;
    int runs = 0;
    std::uint64_t total_games = 0;
    std::uint64_t total_wins = 0;
    double avg_reward_per_game_mean = 0.0; // pooled per run, then mean/std across seeds
    double avg_reward_per_game_std = 0.0;
    double avg_win_rate_mean = 0.0;
    double avg_win_rate_std = 0.0;
    std::vector<CurvePoint> win_rate_curve;
    std::vector<CurvePoint> cumulative_reward_curve;
};

struct RunMetrics {
    RunId id;
    std::vector<MetricsRecord> rows;
};

// Aggregates runs per version; all runs must share the same tick grid.
std::vector<VersionSummary> summarize_training(const std::vector<RunMetrics>& runs);

} // namespace pcgeval
