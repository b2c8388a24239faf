#include <doctest.h>

#include "pcgeval/harness.hpp"

#include <filesystem>
#include <fstream>

using namespace pcgeval;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

TrainingPlan tiny_plan(const fs::path& out) {
    TrainingPlan plan;
    plan.seeds = {1};
    plan.versions = {PcgVersion::V2Raw};
    plan.total_sgas = 512;
    plan.checkpoint_every = 256;
    plan.metrics_every = 128;
    plan.output_dir = out;
    return plan;
}

} // namespace

TEST_CASE("plan validation") {
    TrainingPlan plan;
    CHECK_NOTHROW(plan.validate());

    plan.total_sgas = 50'001; // not divisible by either interval
    CHECK_THROWS(plan.validate());

    plan = TrainingPlan{};
    plan.seeds = {1, 1};
    CHECK_THROWS(plan.validate());

    plan = TrainingPlan{};
    plan.checkpoint_every = 10'002; // not a batch multiple and does not divide
    CHECK_THROWS(plan.validate());

    plan = TrainingPlan{};
    CHECK(plan.checkpoints_per_run() == 5);
    CHECK(plan.metrics_rows_per_run() == 100);

    // Full-scale arithmetic.
    plan.total_sgas = 1'000'000;
    plan.seeds = TrainingPlan::default_seeds(20);
    CHECK(plan.checkpoints_per_run() == 100);
    CHECK(plan.metrics_rows_per_run() == 2000);
    CHECK_NOTHROW(plan.validate());
}

TEST_CASE("metrics logger windows, totals and attribute frequencies") {
    MetricsLogger logger(3); // tiny attr window for the test

    logger.on_npc(NpcProfile{{0, 1, 2}});
    logger.on_step(100.0, false, false);
    logger.on_step(-2.0, true, true); // win
    logger.on_step(-2.0, true, false);

    MetricsRecord row = logger.tick(500);
    CHECK(row.sga == 500);
    CHECK(row.games_window == 2);
    CHECK(row.wins_window == 1);
    REQUIRE(row.win_rate_window.has_value());
    CHECK(*row.win_rate_window == doctest::Approx(0.5));
    CHECK(row.cumulative_reward == doctest::Approx(96.0));
    CHECK(row.games_total == 2);
    CHECK(row.wins_total == 1);
    CHECK(row.attr_freq[0] == doctest::Approx(1.0));
    CHECK(row.attr_freq[3] == doctest::Approx(0.0));

    // Empty window carries no rate but keeps totals.
    row = logger.tick(1000);
    CHECK(row.games_window == 0);
    CHECK_FALSE(row.win_rate_window.has_value());
    CHECK(row.games_total == 2);
    CHECK(row.cumulative_reward == doctest::Approx(96.0));

    // Attribute window holds only the last 3 NPCs.
    logger.on_npc(NpcProfile{{3, 4, 5}});
    logger.on_npc(NpcProfile{{3, 4, 6}});
    logger.on_npc(NpcProfile{{3, 4, 5}});
    row = logger.tick(1500);
    CHECK(row.attr_freq[3] == doctest::Approx(1.0));
    CHECK(row.attr_freq[0] == doctest::Approx(0.0));
    CHECK(row.attr_freq[6] == doctest::Approx(1.0 / 3.0));

    // Cumulative reward equals an independent accumulator.
    MetricsLogger logger2(5);
    Rng rng(12);
    double independent = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double r = rng.uniform(-2, 100);
        independent += r;
        logger2.on_step(r, false, false);
    }
    CHECK(logger2.tick(1).cumulative_reward == doctest::Approx(independent).epsilon(1e-12));
}

TEST_CASE("logger attribute frequency converges to 3/7 under V1 sampling") {
    MetricsLogger logger(200);
    Rng rng(5);
    PcgSystem v1(PcgVersion::V1Random, GaParams{}, rng);
    for (int i = 0; i < 300; ++i) {
        logger.on_npc(v1.sample_opponent(rng));
    }
    const MetricsRecord row = logger.tick(1);
    for (int attr = 0; attr < kNumAttrs; ++attr) {
        CHECK(row.attr_freq[attr] == doctest::Approx(3.0 / 7.0).epsilon(0.2));
        CHECK(row.attr_freq[attr] >= 0.0);
        CHECK(row.attr_freq[attr] <= 1.0);
    }
}

TEST_CASE("rollout adapter advances the SGA clock by exactly n_steps") {
    DuelEnv env(PcgVersion::V1Random, GaParams{}, DuelConfig{}, RewardConfig{}, 77);
    int episode_starts = 0;
    int steps_seen = 0;
    DuelRolloutAdapter adapter(
        env, [&](const StepResult&) { ++steps_seen; },
        [&](const NpcProfile& profile) {
            ++episode_starts;
            CHECK(profile.valid());
        });

    PpoAgent agent(kObservationDim, kActionDim, {64, 64}, PpoHyperparams{}, 4);
    Rng rng(9);
    const RolloutBuffer buffer = collect_rollout(agent, adapter, 128, rng);
    CHECK(env.sga_count() == 128);
    CHECK(steps_seen == 128);
    CHECK(buffer.actions.size() == 128);

    // Terminated flags partition the stream: one episode start per flag.
    int flags = 0;
    for (std::uint8_t t : buffer.terminated) flags += t;
    CHECK(episode_starts == flags);
}

TEST_CASE("metrics CSV round-trips including absent win rates") {
    MetricsLogger logger(2);
    logger.on_npc(NpcProfile{{1, 2, 3}});
    logger.on_step(50.0, true, true);
    std::vector<MetricsRecord> rows;
    rows.push_back(logger.tick(128));
    rows.push_back(logger.tick(256)); // empty window -> absent rate

    const fs::path path = fs::temp_directory_path() / "pcgeval_metrics_test.csv";
    write_metrics_csv(path, rows);
    const auto back = read_metrics_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0] == rows[0]);
    CHECK(back[1] == rows[1]);
    CHECK_FALSE(back[1].win_rate_window.has_value());
    fs::remove(path);
}

TEST_CASE("train_one produces the scheduled artifacts deterministically") {
    const fs::path out1 = fresh_dir("pcgeval_train_a");
    const fs::path out2 = fresh_dir("pcgeval_train_b");
    TrainingPlan plan = tiny_plan(out1);

    const RunArtifacts a = train_one(1, PcgVersion::V2Raw, plan);
    CHECK(a.checkpoints.size() == 2);
    CHECK(a.metrics.size() == 4);
    CHECK(a.checkpoints[0].first == 256);
    CHECK(a.checkpoints[1].first == 512);
    CHECK(a.metrics.back().sga == 512);

    // Window sums equal totals.
    std::uint64_t window_sum = 0;
    for (const MetricsRecord& row : a.metrics) window_sum += row.games_window;
    CHECK(window_sum == a.metrics.back().games_total);

    // Byte-identical on a rerun.
    plan.output_dir = out2;
    const RunArtifacts b = train_one(1, PcgVersion::V2Raw, plan);
    CHECK(hash_file(a.metrics_path) == hash_file(b.metrics_path));
    for (std::size_t i = 0; i < a.checkpoints.size(); ++i) {
        CHECK(hash_file(a.checkpoints[i].second) == hash_file(b.checkpoints[i].second));
    }

    // The checkpoint at SGA 256 reloads with that clock.
    const Checkpoint ck = load_checkpoint(a.checkpoints[0].second);
    CHECK(ck.sga_count == 256);
    CHECK(ck.run_seed == 1);
    CHECK(ck.version == PcgVersion::V2Raw);
    CHECK(ck.has_resume);

    fs::remove_all(out1);
    fs::remove_all(out2);
}

TEST_CASE("checkpoint-resume equals straight-through training") {
    const fs::path straight_dir = fresh_dir("pcgeval_straight");
    const fs::path resumed_dir = fresh_dir("pcgeval_resumed");

    TrainingPlan plan = tiny_plan(straight_dir);
    const RunArtifacts straight = train_one(1, PcgVersion::V2Raw, plan);

    // Stop at 256, reload, continue to 512.
    TrainingPlan half = plan;
    half.output_dir = resumed_dir;
    half.total_sgas = 256;
    const RunArtifacts first_half = train_one(1, PcgVersion::V2Raw, half);
    const Checkpoint mid = load_checkpoint(first_half.checkpoints.back().second);
    CHECK(mid.sga_count == 256);

    TrainingPlan full = plan;
    full.output_dir = resumed_dir;

    // A plan that disagrees with the checkpoint is rejected.
    TrainingPlan mismatched = full;
    mismatched.ppo.learning_rate = 1e-3;
    CHECK_THROWS(resume_training(mid, mismatched));

    const RunArtifacts second_half = resume_training(mid, full);

    // Final checkpoints agree byte for byte.
    CHECK(hash_file(straight.checkpoints.back().second) ==
          hash_file(second_half.checkpoints.back().second));

    // The resumed metrics rows equal the straight run's later rows.
    REQUIRE(second_half.metrics.size() == 2);
    CHECK(second_half.metrics[0] == straight.metrics[2]);
    CHECK(second_half.metrics[1] == straight.metrics[3]);

    fs::remove_all(straight_dir);
    fs::remove_all(resumed_dir);
}

TEST_CASE("train_all: parallel equals serial, manifest round-trips") {
    const fs::path serial_dir = fresh_dir("pcgeval_serial");
    const fs::path parallel_dir = fresh_dir("pcgeval_parallel");

    TrainingPlan plan = tiny_plan(serial_dir);
    plan.seeds = {1, 2};
    plan.versions = {PcgVersion::V1Random, PcgVersion::V3Normalized};

    const RunManifest serial = train_all(plan, 1);
    plan.output_dir = parallel_dir;
    const RunManifest parallel = train_all(plan, 4);

    CHECK(serial.errors.empty());
    REQUIRE(serial.entries.size() == parallel.entries.size());
    CHECK(serial.entries.size() == 4 * 3); // 4 runs x (metrics + 2 checkpoints)
    for (std::size_t i = 0; i < serial.entries.size(); ++i) {
        CHECK(serial.entries[i].run == parallel.entries[i].run);
        CHECK(serial.entries[i].kind == parallel.entries[i].kind);
        CHECK(serial.entries[i].content_hash == parallel.entries[i].content_hash);
    }

    const RunManifest parsed = parse_manifest(serial_dir / "manifest.txt");
    CHECK(parsed == serial);

    fs::remove_all(serial_dir);
    fs::remove_all(parallel_dir);
}

TEST_CASE("summarize_training aggregates and guards the tick grid") {
    const auto make_row = [](std::uint64_t sga, std::uint64_t games, std::uint64_t wins,
                             double reward) {
        MetricsRecord row;
        row.sga = sga;
        row.games_window = games;
        row.wins_window = wins;
        if (games > 0) row.win_rate_window = static_cast<double>(wins) / games;
        row.cumulative_reward = reward;
        row.games_total = games;
        row.wins_total = wins;
        return row;
    };

    RunMetrics run1{RunId{1, PcgVersion::V1Random},
                    {make_row(500, 10, 5, 100.0), make_row(1000, 10, 5, 180.0)}};
    RunMetrics run2{RunId{2, PcgVersion::V1Random},
                    {make_row(500, 10, 7, 140.0), make_row(1000, 10, 7, 260.0)}};
    RunMetrics run3{RunId{3, PcgVersion::V1Random},
                    {make_row(500, 10, 3, 60.0), make_row(1000, 10, 3, 100.0)}};

    auto summaries = summarize_training({run1, run2, run3});
    REQUIRE(summaries.size() == 1);
    const VersionSummary& s = summaries.front();
    CHECK(s.runs == 3);
    CHECK(s.total_games == 30);
    CHECK(s.total_wins == 15);
    CHECK(s.avg_win_rate_mean == doctest::Approx(0.5));
    REQUIRE(s.win_rate_curve.size() == 2);
    CHECK(*s.win_rate_curve[0].min == doctest::Approx(0.3));
    CHECK(*s.win_rate_curve[0].median == doctest::Approx(0.5));
    CHECK(*s.win_rate_curve[0].max == doctest::Approx(0.7));
    CHECK(*s.cumulative_reward_curve[1].median == doctest::Approx(180.0));

    // Identical runs: the median curve equals each run's curve.
    auto identical = summarize_training({run1, run1, run1});
    CHECK(*identical.front().win_rate_curve[0].median ==
          doctest::Approx(*run1.rows[0].win_rate_window));
    CHECK(*identical.front().win_rate_curve[0].min ==
          doctest::Approx(*identical.front().win_rate_curve[0].max));

    // All losses -> zero win rate.
    RunMetrics losses{RunId{4, PcgVersion::V2Raw},
                      {make_row(500, 8, 0, -16.0), make_row(1000, 9, 0, -18.0)}};
    auto loss_summary = summarize_training({losses});
    CHECK(loss_summary.front().avg_win_rate_mean == doctest::Approx(0.0));

    // Mismatched grids are rejected.
    RunMetrics short_run{RunId{5, PcgVersion::V1Random}, {make_row(500, 1, 1, 98.0)}};
    CHECK_THROWS(summarize_training({run1, short_run}));
    RunMetrics shifted{RunId{6, PcgVersion::V1Random},
                       {make_row(400, 1, 1, 98.0), make_row(1000, 1, 1, 98.0)}};
    CHECK_THROWS(summarize_training({run1, shifted}));
}
