#include <doctest.h>

#include "pcgeval/config.hpp"

#include <cstdlib>

using namespace pcgeval;

TEST_CASE("defaults match the documented values") {
    const RunConfig config;
    CHECK(config.duel.args_per_attribute == 2);
    CHECK(config.duel.copies_per_attribute_in_deck == 2);
    CHECK(config.duel.initial_hand_size == 4);
    CHECK(config.duel.turn_limit == 20);
    CHECK(config.ga.population_size == 10);
    CHECK(config.ga.mutation_prob == 0.05);
    CHECK(config.ga.delta == 1.0);
    CHECK(config.ga.v3_step == 0.5);
    CHECK(config.ppo.n_steps == 128);
    CHECK(config.ppo.batch_size == 4);
    CHECK(config.ppo.vf_coef == 0.5);
    CHECK(config.ppo.clip_range == 0.2);
    CHECK(config.ppo.gamma == 0.99);
    CHECK(config.ppo.gae_lambda == 0.95);
    CHECK(config.ppo.n_epochs == 10);
    CHECK(config.ppo.learning_rate == 3e-4);
    CHECK(config.ppo.entropy_coef == 0.0);
    CHECK(config.ppo.max_grad_norm == 0.5);
    CHECK(config.reward.impactful_reward == 100.0);
    CHECK(config.reward.win_reward == 100.0);
    CHECK(config.reward.step_penalty == -2.0);
    CHECK(config.seeds == 5);
    CHECK(config.total_sgas == 50'000);
    CHECK(config.checkpoint_every == 10'000);
    CHECK(config.metrics_every == 500);
    CHECK(config.attr_freq_window == 200);
    CHECK(config.test.comprehensive_repeats == 5);
    CHECK(config.test.scenario_duels == 1000);
}

TEST_CASE("config values override defaults") {
    const RunConfig config = parse_config(R"({
        "duel": {"turn_limit": 30},
        "ppo": {"learning_rate": 0.001, "n_steps": 64},
        "training": {"seeds": 20, "total_sgas": 1000000, "versions": [2, 3]},
        "test": {"scenario_duels": 250},
        "output_root": "results"
    })");
    CHECK(config.duel.turn_limit == 30);
    CHECK(config.duel.initial_hand_size == 4); // untouched default
    CHECK(config.ppo.learning_rate == 0.001);
    CHECK(config.ppo.n_steps == 64);
    CHECK(config.seeds == 20);
    CHECK(config.total_sgas == 1'000'000);
    CHECK(config.versions ==
          std::vector<PcgVersion>{PcgVersion::V2Raw, PcgVersion::V3Normalized});
    CHECK(config.test.scenario_duels == 250);
    CHECK(config.output_root == "results");

    const TrainingPlan plan = config.to_plan();
    CHECK(plan.seeds.size() == 20);
    CHECK(plan.seeds.front() == 1);
    CHECK(plan.total_sgas == 1'000'000);
    CHECK(plan.checkpoints_per_run() == 100);
    CHECK(plan.metrics_rows_per_run() == 2000);
    CHECK(plan.duel.turn_limit == 30);
}

TEST_CASE("unknown keys are rejected at every level") {
    CHECK_THROWS(parse_config(R"({"duelz": {}})"));
    CHECK_THROWS(parse_config(R"({"duel": {"turn_limitz": 5}})"));
    CHECK_THROWS(parse_config(R"({"ppo": {"lr": 0.1}})"));
    CHECK_THROWS(parse_config(R"({"training": {"seed_list": [1]}})"));
    CHECK_THROWS(parse_config(R"({"training": {"versions": [4]}})"));
    CHECK_THROWS(parse_config(R"(not json)"));
}

TEST_CASE("output root precedence: flag, config, environment, default") {
    RunConfig config;
    ::unsetenv("PCGEVAL_OUT");
    CHECK(resolve_output_root("", config) == "out");

    ::setenv("PCGEVAL_OUT", "/tmp/env_out", 1);
    CHECK(resolve_output_root("", config) == "/tmp/env_out");

    config.output_root = "config_out";
    CHECK(resolve_output_root("", config) == "config_out");

    CHECK(resolve_output_root("flag_out", config) == "flag_out");
    ::unsetenv("PCGEVAL_OUT");
}
