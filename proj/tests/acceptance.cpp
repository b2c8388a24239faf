// Acceptance suite: one check per criterion, each printing a PASS/FAIL line.
// Run all criteria with no arguments or a single one with --criterion N.

#include "pcgeval/checkpoint.hpp"
#include "pcgeval/duel.hpp"
#include "pcgeval/env.hpp"
#include "pcgeval/evaltests.hpp"
#include "pcgeval/harness.hpp"
#include "pcgeval/pcg.hpp"
#include "pcgeval/ppo.hpp"
#include "pcgeval/stats.hpp"

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace {

using namespace pcgeval;
namespace fs = std::filesystem;

struct Outcome {
    bool pass = true;
    std::string detail;
};

struct Check {
    std::string fail;
    void require(bool ok, const std::string& message) {
        if (!ok && fail.empty()) {
            fail = message;
        }
    }
};

fs::path scratch_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

NpcProfile random_valid_profile(Rng& rng) { return random_profile(rng); }

DuelReport random_report(Rng& rng) {
    // Half the reports come from genuinely played-out duels, half are
    // synthetic tallies over the full field ranges.
    if (rng.bernoulli(0.5)) {
        DuelState duel = DuelState::start(random_valid_profile(rng), DuelConfig{}, rng.next_u64());
        while (!duel.terminal()) {
            duel.apply(DuelAction{rng.uniform_int(0, 7)});
        }
        return duel.report();
    }
    DuelReport report;
    report.outcome = rng.bernoulli(0.5) ? DuelOutcome::Win : DuelOutcome::Loss;
    for (int attr = 0; attr < kNumAttrs; ++attr) {
        report.npc_args_not_destroyed[attr] = rng.uniform_int(0, 2);
        report.played_correctly[attr] = rng.uniform_int(0, 2);
        report.played_incorrectly[attr] = rng.uniform_int(0, 2);
        report.unplayed[attr] = rng.uniform_int(0, 2);
    }
    return report;
}

// ---------------------------------------------------------------------------
// 1. Attribute-frequency baseline under Version 1.
Outcome criterion_attribute_frequency() {
    Check check;
    Rng rng(101);
    PcgSystem v1(PcgVersion::V1Random, GaParams{}, rng);
    std::array<int, kNumAttrs> hits{};
    const int draws = 10'000;
    for (int i = 0; i < draws; ++i) {
        for (int attr : v1.sample_opponent(rng).attrs) {
            ++hits[attr];
        }
    }
    std::ostringstream detail;
    detail.precision(4);
    for (int attr = 0; attr < kNumAttrs; ++attr) {
        const double freq = static_cast<double>(hits[attr]) / draws;
        check.require(std::fabs(freq - 3.0 / 7.0) < 0.02,
                      "attribute " + std::to_string(attr) + " frequency " +
                          std::to_string(freq) + " outside 3/7 +- 0.02");
        detail << (attr == 0 ? "freqs " : " ") << std::fixed << freq;
    }
    return {check.fail.empty(), check.fail.empty() ? detail.str() : check.fail};
}

// ---------------------------------------------------------------------------
// 2. Permutation coverage: exact enumeration and Monte Carlo.
Outcome criterion_permutation_coverage() {
    Check check;
    const double exact = permutation_coverage_probability(5, 4);
    check.require(std::fabs(exact - 4320.0 / 7776.0) < 1e-12, "exact value != 4320/7776");
    check.require(std::fabs(exact - 0.555) < 0.001, "exact value does not match quoted 55.5%");

    Rng rng(7);
    int hits = 0;
    const int samples = 1'000'000;
    for (int i = 0; i < samples; ++i) {
        unsigned mask = 0;
        for (int draw = 0; draw < 5; ++draw) {
            mask |= 1u << rng.uniform_below(6);
        }
        hits += std::popcount(mask) >= 4 ? 1 : 0;
    }
    const double mc = static_cast<double>(hits) / samples;
    check.require(std::fabs(mc - exact) <= 0.005, "Monte Carlo deviates more than 0.005");

    char buf[96];
    std::snprintf(buf, sizeof(buf), "exact=%.6f mc=%.6f", exact, mc);
    return {check.fail.empty(), check.fail.empty() ? buf : check.fail};
}

// ---------------------------------------------------------------------------
// 3. GA invariant suite over 10,000 evolutions.
Outcome criterion_ga_invariants() {
    Check check;
    Rng rng(31);
    const GaParams params;
    GaState state = init_population(params, rng);
    // Weights follow the real V2 trajectory: zero-initialized, integer deltas.
    WeightVector weights{};

    for (int evolution = 0; evolution < 10'000 && check.fail.empty(); ++evolution) {
        // Selection equals the exhaustive-sort oracle.
        const std::vector<int> selected = select_parent_indices(state.population, weights, params);
        std::set<int> oracle;
        for (int i = 0; i < params.population_size; ++i) {
            int beaten = 0;
            const double fi = fitness(state.population.members[i], weights);
            for (int j = 0; j < params.population_size; ++j) {
                if (j == i) continue;
                const double fj = fitness(state.population.members[j], weights);
                if (fj > fi || (fj == fi && j < i)) ++beaten;
            }
            if (beaten < params.population_size / 2) oracle.insert(i);
        }
        check.require(std::set<int>(selected.begin(), selected.end()) == oracle,
                      "parent selection disagrees with the exhaustive oracle");

        state.population = next_generation(state.population, weights, params, rng);
        check.require(static_cast<int>(state.population.members.size()) ==
                          params.population_size,
                      "population size changed");
        for (const Chromosome& c : state.population.members) {
            check.require(c.active_count() == 3, "chromosome without exactly 3 active genes");
        }

        // V2 linearity is exact along this trajectory (integer-valued sums).
        const DeltaVector d1 = weight_deltas(random_report(rng), params);
        const DeltaVector d2 = weight_deltas(random_report(rng), params);
        DeltaVector d_sum{};
        for (int i = 0; i < kNumAttrs; ++i) d_sum[i] = d1[i] + d2[i];
        const WeightVector two_steps = apply_update(
            apply_update(weights, d1, PcgVersion::V2Raw, params), d2, PcgVersion::V2Raw, params);
        const WeightVector one_step = apply_update(weights, d_sum, PcgVersion::V2Raw, params);
        check.require(two_steps == one_step, "V2 update linearity violated");

        // The applied V3 update sums to zero when the deltas vary.
        double spread = 0.0;
        for (int i = 0; i < kNumAttrs; ++i) spread += std::fabs(d1[i] - d1[0]);
        if (spread > 0.0) {
            const WeightVector update = apply_update({}, d1, PcgVersion::V3Normalized, params);
            double sum = 0.0;
            for (int i = 0; i < kNumAttrs; ++i) sum += update[i];
            check.require(std::fabs(sum) < 1e-12, "V3 update component sum exceeds 1e-12");
        }

        weights = two_steps; // advance the trajectory
    }
    return {check.fail.empty(),
            check.fail.empty() ? "10000 evolutions, all invariants held" : check.fail};
}

// ---------------------------------------------------------------------------
// 4. Weight-update oracle on 50 scripted reports.
Outcome criterion_weight_update_oracle() {
    Check check;
    Rng rng(47);
    const GaParams params;
    for (int trial = 0; trial < 50; ++trial) {
        const DuelReport report = random_report(rng);
        // Brute-force tally: one delta-step per card event.
        DeltaVector expected{};
        for (int attr = 0; attr < kNumAttrs; ++attr) {
            if (report.outcome == DuelOutcome::Win) {
                for (int i = 0; i < report.npc_args_not_destroyed[attr]; ++i)
                    expected[attr] += params.delta;
                for (int i = 0; i < report.played_correctly[attr]; ++i)
                    expected[attr] -= params.delta;
                for (int i = 0; i < report.played_incorrectly[attr]; ++i)
                    expected[attr] += params.delta;
                for (int i = 0; i < report.unplayed[attr]; ++i) expected[attr] += params.delta;
            } else {
                for (int i = 0; i < report.npc_args_not_destroyed[attr]; ++i)
                    expected[attr] -= params.delta;
                for (int i = 0; i < report.unplayed[attr]; ++i) expected[attr] += params.delta;
            }
        }
        check.require(weight_deltas(report, params) == expected,
                      "delta mismatch on report " + std::to_string(trial));
    }
    return {check.fail.empty(), check.fail.empty() ? "50 reports matched exactly" : check.fail};
}

// ---------------------------------------------------------------------------
// 5. PPO gradient check against central finite differences.
Outcome criterion_gradient_check() {
    Check check;
    Rng rng(77);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        PpoHyperparams hp;
        hp.n_steps = 16;
        hp.batch_size = 4;
        hp.entropy_coef = trial % 3 == 0 ? 0.01 : 0.0;
        const int obs_dim = rng.uniform_int(2, 5);
        const int action_dim = rng.uniform_int(2, 6);
        const int hidden = rng.uniform_int(3, 8);
        PpoAgent agent(obs_dim, action_dim, {hidden}, hp,
                       1000 + static_cast<std::uint64_t>(trial));

        const int size = 4;
        std::vector<double> obs(static_cast<std::size_t>(size) * obs_dim);
        for (double& x : obs) x = rng.uniform(-1, 1);
        std::vector<int> actions(size);
        std::vector<double> old_log_probs(size);
        std::vector<double> advantages(size);
        std::vector<double> returns(size);
        for (int i = 0; i < size; ++i) {
            actions[i] = rng.uniform_int(0, action_dim - 1);
            old_log_probs[i] = std::log(rng.uniform(0.05, 0.95));
            advantages[i] = rng.uniform(-2, 2);
            returns[i] = rng.uniform(-1, 1);
        }
        const Minibatch mb{obs, actions, old_log_probs, advantages, returns, size, obs_dim};

        std::vector<double> params(agent.params().begin(), agent.params().end());
        std::vector<double> grad(params.size(), 0.0);
        ppo_loss_and_grad(agent.policy_net(), agent.value_net(), params, mb, hp, grad);

        const double h = 1e-5;
        for (std::size_t i = 0; i < params.size(); ++i) {
            std::vector<double> shifted = params;
            shifted[i] += h;
            const double up =
                ppo_loss_and_grad(agent.policy_net(), agent.value_net(), shifted, mb, hp, {})
                    .total;
            shifted[i] -= 2 * h;
            const double down =
                ppo_loss_and_grad(agent.policy_net(), agent.value_net(), shifted, mb, hp, {})
                    .total;
            const double fd = (up - down) / (2 * h);
            const double scale = std::max({std::fabs(fd), std::fabs(grad[i]), 1e-6});
            worst = std::max(worst, std::fabs(grad[i] - fd) / scale);
        }
    }
    check.require(worst < 1e-4, "max relative error " + std::to_string(worst));
    char buf[64];
    std::snprintf(buf, sizeof(buf), "max relative error %.2e over 20 networks", worst);
    return {check.fail.empty(), check.fail.empty() ? buf : check.fail};
}

// ---------------------------------------------------------------------------
// 6. Learning smoke test: one agent, Version 1, 50k SGAs, desk defaults.
Outcome criterion_learning_smoke() {
    Check check;
    const fs::path out = scratch_dir("pcgeval_accept6");
    TrainingPlan plan;
    plan.seeds = {1};
    plan.versions = {PcgVersion::V1Random};
    plan.output_dir = out;
    const RunArtifacts artifacts = train_one(1, PcgVersion::V1Random, plan);

    const Checkpoint final_ck = load_checkpoint(artifacts.checkpoints.back().second);
    const PpoAgent agent = agent_from_checkpoint(final_ck);

    DuelEnv greedy_env(PcgVersion::V1Random, plan.ga, plan.duel, plan.reward, 4242);
    const PlayStats trained = play_for_sgas(greedy_policy(agent), greedy_env, 2000);

    Rng baseline_rng(9);
    DuelEnv random_env(PcgVersion::V1Random, plan.ga, plan.duel, plan.reward, 4242);
    const PlayStats baseline = play_for_sgas(uniform_random_policy(baseline_rng), random_env, 2000);

    const double lift = trained.win_rate() - baseline.win_rate();
    check.require(lift >= 0.15, "win-rate lift " + std::to_string(lift) + " below 15pp");

    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "greedy %.3f (%llu/%llu) vs random %.3f (%llu/%llu), lift %.1fpp",
                  trained.win_rate(), static_cast<unsigned long long>(trained.wins),
                  static_cast<unsigned long long>(trained.games), baseline.win_rate(),
                  static_cast<unsigned long long>(baseline.wins),
                  static_cast<unsigned long long>(baseline.games), lift * 100.0);
    fs::remove_all(out);
    return {check.fail.empty(), check.fail.empty() ? buf : check.fail + " (" + buf + ")"};
}

// ---------------------------------------------------------------------------
// 7. Direction trend across versions (reported, not gating).
Outcome criterion_direction_trend() {
    const fs::path out = scratch_dir("pcgeval_accept7");
    TrainingPlan plan;
    plan.output_dir = out; // desk defaults: 5 seeds x 3 versions x 50k
    const int threads = std::max(2u, std::thread::hardware_concurrency());
    train_all(plan, threads);

    std::map<PcgVersion, std::vector<double>> final_rates;
    for (PcgVersion version : plan.versions) {
        for (std::uint64_t seed : plan.seeds) {
            const fs::path metrics =
                out / (RunId{seed, version}.name()) / "metrics.csv";
            const auto rows = read_metrics_csv(metrics);
            // Win rate over the last 2000 SGAs = last 4 windows of 500.
            std::uint64_t games = 0;
            std::uint64_t wins = 0;
            for (std::size_t i = rows.size() - 4; i < rows.size(); ++i) {
                games += rows[i].games_window;
                wins += rows[i].wins_window;
            }
            final_rates[version].push_back(
                games == 0 ? 0.0 : static_cast<double>(wins) / static_cast<double>(games));
        }
    }

    std::vector<std::vector<double>> groups;
    std::ostringstream detail;
    detail.precision(3);
    detail << std::fixed << "median final win rates:";
    for (const auto& [version, rates] : final_rates) {
        groups.push_back(rates);
        detail << " " << source_label(version) << "=" << stats::median(rates);
    }
    const stats::TestResult kw = stats::kruskal_wallis(groups);
    detail << "; kruskal-wallis H=" << kw.statistic << " p=" << kw.p_value
           << " (reported, not gating)";
    fs::remove_all(out);
    return {true, detail.str()};
}

// ---------------------------------------------------------------------------
// 8. Statistics oracle suite.
Outcome criterion_statistics_oracles() {
    Check check;

    const stats::TestResult mw = stats::mann_whitney_u(std::vector<double>{1, 2, 3},
                                                       std::vector<double>{4, 5, 6});
    check.require(std::fabs(mw.p_value - 0.1) < 1e-12, "Mann-Whitney exact p != 0.1");
    check.require(mw.statistic == 0.0, "Mann-Whitney U != 0");

    const stats::TestResult kw =
        stats::kruskal_wallis({{1, 2, 3}, {4, 5, 6}, {7, 8, 9}});
    check.require(std::fabs(kw.statistic - 7.2) < 1e-12, "Kruskal-Wallis H != 7.2");
    check.require(std::fabs(kw.p_value - std::exp(-3.6)) < 1e-10,
                  "Kruskal-Wallis p != exp(-3.6)");

    check.require(std::fabs(stats::chi2_sf(7.2, 2) - std::exp(-3.6)) < 1e-10,
                  "chi2_sf(7.2,2) != exp(-3.6)");

    // Reference-oracle fixture (scipy.stats.shapiro).
    const std::vector<double> v12{2.1, 3.4, 1.9, 5.6, 3.3, 4.8, 2.2, 7.1, 0.4, 3.9, 4.4, 2.8};
    const stats::TestResult sw = stats::shapiro_wilk(v12);
    check.require(std::fabs(sw.statistic - 0.9846238391) < 1e-4, "Shapiro-Wilk W off oracle");
    check.require(std::fabs(sw.p_value - 0.9959518296) < 1e-4, "Shapiro-Wilk p off oracle");

    // IQR fence fixture.
    std::vector<ScenarioResult> results;
    const std::array<double, 5> rates{0.50, 0.60, 0.62, 0.63, 0.90};
    for (std::size_t i = 0; i < rates.size(); ++i) {
        ScenarioResult r;
        r.seed = i + 1;
        r.version = PcgVersion::V1Random;
        r.opponent_source = "v1";
        r.win_rate = rates[i];
        results.push_back(r);
    }
    const IqrOutcome iqr = iqr_filter(results);
    check.require(iqr.removed_seeds == std::vector<std::uint64_t>{1, 5},
                  "IQR filter removed the wrong seeds");

    return {check.fail.empty(),
            check.fail.empty() ? "MW, KW, chi2, SW and IQR fixtures all matched" : check.fail};
}

// ---------------------------------------------------------------------------
// 9. Protocol arithmetic.
Outcome criterion_protocol_arithmetic() {
    Check check;

    // 35 x 5 duels per comprehensive evaluation.
    const InstanceScore oracle_score =
        comprehensive_test_policy(matching_oracle_policy(), DuelConfig{}, 5, 3);
    check.require(oracle_score.duels_played == 175, "comprehensive duel count != 175");

    // Full-scale schedule.
    TrainingPlan full_scale;
    full_scale.seeds = TrainingPlan::default_seeds(20);
    full_scale.total_sgas = 1'000'000;
    full_scale.validate();
    check.require(full_scale.checkpoints_per_run() == 100, "full-scale plan != 100 checkpoints");
    check.require(full_scale.metrics_rows_per_run() == 2000,
                  "full-scale plan != 2000 metrics rows");

    // 20 seeds x 3 versions -> 60 best instances.
    std::vector<InstanceScore> scores;
    Rng rng(17);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        for (PcgVersion version :
             {PcgVersion::V1Random, PcgVersion::V2Raw, PcgVersion::V3Normalized}) {
            for (std::uint64_t sga = 10'000; sga <= 100'000; sga += 10'000) {
                InstanceScore s;
                s.seed = seed;
                s.version = version;
                s.checkpoint_sga = sga;
                s.duels_played = 175;
                s.wins = rng.uniform_int(0, 175);
                s.win_rate = s.wins / 175.0;
                scores.push_back(s);
            }
        }
    }
    check.require(select_best_instances(scores).size() == 60, "best-instance count != 60");

    return {check.fail.empty(),
            check.fail.empty() ? "175 duels; 100 checkpoints / 2000 rows; 60 instances"
                               : check.fail};
}

// ---------------------------------------------------------------------------
// 10. Determinism and checkpoint-resume equivalence.
Outcome criterion_determinism() {
    Check check;
    const fs::path out_a = scratch_dir("pcgeval_accept10a");
    const fs::path out_b = scratch_dir("pcgeval_accept10b");
    const fs::path out_c = scratch_dir("pcgeval_accept10c");

    TrainingPlan plan;
    plan.seeds = {2};
    plan.versions = {PcgVersion::V3Normalized};
    plan.total_sgas = 1024;
    plan.checkpoint_every = 512;
    plan.metrics_every = 256;

    plan.output_dir = out_a;
    const RunArtifacts a = train_one(2, PcgVersion::V3Normalized, plan);
    plan.output_dir = out_b;
    const RunArtifacts b = train_one(2, PcgVersion::V3Normalized, plan);

    check.require(hash_file(a.metrics_path) == hash_file(b.metrics_path),
                  "metrics CSVs differ between identical runs");
    for (std::size_t i = 0; i < a.checkpoints.size(); ++i) {
        check.require(hash_file(a.checkpoints[i].second) == hash_file(b.checkpoints[i].second),
                      "checkpoint bytes differ between identical runs");
    }

    // Resume from the midpoint.
    TrainingPlan half = plan;
    half.output_dir = out_c;
    half.total_sgas = 512;
    const RunArtifacts first = train_one(2, PcgVersion::V3Normalized, half);
    const Checkpoint mid = load_checkpoint(first.checkpoints.back().second);
    TrainingPlan full = plan;
    full.output_dir = out_c;
    const RunArtifacts resumed = resume_training(mid, full);
    check.require(hash_file(resumed.checkpoints.back().second) ==
                      hash_file(a.checkpoints.back().second),
                  "resumed final checkpoint differs from straight-through");

    fs::remove_all(out_a);
    fs::remove_all(out_b);
    fs::remove_all(out_c);
    return {check.fail.empty(),
            check.fail.empty() ? "reruns byte-identical; resume equals straight-through"
                               : check.fail};
}

struct Criterion {
    int number;
    const char* title;
    std::function<Outcome()> run;
    double time_limit_s; // 0 = no limit
};

} // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            only = std::atoi(argv[i + 1]);
            ++i;
        }
    }

    const std::vector<Criterion> criteria = {
        {1, "attribute-frequency baseline (V1, 10k NPCs, 3/7 +- 0.02)",
         criterion_attribute_frequency, 5.0},
        {2, "permutation coverage (exact 4320/7776, Monte Carlo +-0.005)",
         criterion_permutation_coverage, 10.0},
        {3, "GA invariant suite (10k evolutions)", criterion_ga_invariants, 30.0},
        {4, "weight-update oracle (50 scripted reports)", criterion_weight_update_oracle, 5.0},
        {5, "PPO gradient check (20 networks, FD h=1e-5, rel err < 1e-4)",
         criterion_gradient_check, 60.0},
        {6, "learning smoke test (V1, 50k SGAs, lift >= 15pp over random)",
         criterion_learning_smoke, 600.0},
        {7, "direction trend 5x3x50k (reported, non-gating)", criterion_direction_trend, 0.0},
        {8, "statistics oracle suite", criterion_statistics_oracles, 5.0},
        {9, "protocol arithmetic (175 duels; 100/2000 schedule; 60 instances)",
         criterion_protocol_arithmetic, 30.0},
        {10, "determinism and checkpoint-resume equivalence", criterion_determinism, 120.0},
    };

    bool all_pass = true;
    for (const Criterion& criterion : criteria) {
        if (only != 0 && criterion.number != only) {
            continue;
        }
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criterion.run();
        } catch (const std::exception& e) {
            outcome.pass = false;
            outcome.detail = std::string("exception: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (criterion.time_limit_s > 0.0 && elapsed > criterion.time_limit_s) {
            outcome.pass = false;
            outcome.detail += " [exceeded " + std::to_string(criterion.time_limit_s) + "s limit]";
        }
        std::printf("[%s] criterion %2d: %s :: %s (%.1fs)\n", outcome.pass ? "PASS" : "FAIL",
                    criterion.number, criterion.title, outcome.detail.c_str(), elapsed);
        std::fflush(stdout);
        all_pass = all_pass && outcome.pass;
    }
    return all_pass ? 0 : 1;
}
