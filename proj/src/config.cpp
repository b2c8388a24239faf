#include "pcgeval/config.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <stdexcept>

namespace pcgeval {

namespace {

using nlohmann::json;

[[noreturn]] void unknown_key(const std::string& section, const std::string& key) {
    throw std::invalid_argument("config: unknown key \"" + key + "\" in section \"" + section +
                                "\"");
}

void parse_duel(const json& j, DuelConfig& duel) {
    for (const auto& [key, value] : j.items()) {
        if (key == "args_per_attribute") duel.args_per_attribute = value.get<int>();
        else if (key == "copies_per_attribute_in_deck") duel.copies_per_attribute_in_deck = value.get<int>();
        else if (key == "initial_hand_size") duel.initial_hand_size = value.get<int>();
        else if (key == "turn_limit") duel.turn_limit = value.get<int>();
        else unknown_key("duel", key);
    }
}

void parse_ga(const json& j, GaParams& ga) {
    for (const auto& [key, value] : j.items()) {
        if (key == "population_size") ga.population_size = value.get<int>();
        else if (key == "mutation_prob") ga.mutation_prob = value.get<double>();
        else if (key == "delta") ga.delta = value.get<double>();
        else if (key == "v3_step") ga.v3_step = value.get<double>();
        else unknown_key("ga", key);
    }
}

void parse_ppo(const json& j, PpoHyperparams& ppo) {
    for (const auto& [key, value] : j.items()) {
        if (key == "n_steps") ppo.n_steps = value.get<int>();
        else if (key == "batch_size") ppo.batch_size = value.get<int>();
        else if (key == "n_epochs") ppo.n_epochs = value.get<int>();
        else if (key == "vf_coef") ppo.vf_coef = value.get<double>();
        else if (key == "clip_range") ppo.clip_range = value.get<double>();
        else if (key == "gamma") ppo.gamma = value.get<double>();
        else if (key == "gae_lambda") ppo.gae_lambda = value.get<double>();
        else if (key == "learning_rate") ppo.learning_rate = value.get<double>();
        else if (key == "entropy_coef") ppo.entropy_coef = value.get<double>();
        else if (key == "max_grad_norm") ppo.max_grad_norm = value.get<double>();
        else unknown_key("ppo", key);
    }
}

void parse_reward(const json& j, RewardConfig& reward) {
    for (const auto& [key, value] : j.items()) {
        if (key == "impactful_reward") reward.impactful_reward = value.get<double>();
        else if (key == "win_reward") reward.win_reward = value.get<double>();
        else if (key == "step_penalty") reward.step_penalty = value.get<double>();
        else unknown_key("reward", key);
    }
}

std::vector<PcgVersion> parse_versions(const json& value) {
    std::vector<PcgVersion> versions;
    for (const auto& v : value) {
        const int tag = v.get<int>();
        if (tag < 1 || tag > 3) {
            throw std::invalid_argument("config: version must be 1, 2 or 3");
        }
        versions.push_back(static_cast<PcgVersion>(tag));
    }
    return versions;
}

void parse_training(const json& j, RunConfig& config) {
    for (const auto& [key, value] : j.items()) {
        if (key == "seeds") config.seeds = value.get<int>();
        else if (key == "versions") config.versions = parse_versions(value);
        else if (key == "total_sgas") config.total_sgas = value.get<std::uint64_t>();
        else if (key == "checkpoint_every") config.checkpoint_every = value.get<std::uint64_t>();
        else if (key == "metrics_every") config.metrics_every = value.get<std::uint64_t>();
        else if (key == "attr_freq_window") config.attr_freq_window = value.get<int>();
        else unknown_key("training", key);
    }
}

void parse_test(const json& j, TestParams& test) {
    for (const auto& [key, value] : j.items()) {
        if (key == "comprehensive_repeats") test.comprehensive_repeats = value.get<int>();
        else if (key == "scenario_duels") test.scenario_duels = value.get<int>();
        else unknown_key("test", key);
    }
}

} // namespace

TrainingPlan RunConfig::to_plan() const {
    TrainingPlan plan;
    plan.seeds = TrainingPlan::default_seeds(seeds);
    plan.versions = versions;
    plan.total_sgas = total_sgas;
    plan.checkpoint_every = checkpoint_every;
    plan.metrics_every = metrics_every;
    plan.attr_freq_window = attr_freq_window;
    plan.duel = duel;
    plan.ga = ga;
    plan.ppo = ppo;
    plan.reward = reward;
    return plan;
}

RunConfig parse_config(const std::string& json_text) {
    const json j = json::parse(json_text);
    if (!j.is_object()) {
        throw std::invalid_argument("config: top level must be an object");
    }
    RunConfig config;
    for (const auto& [key, value] : j.items()) {
        if (key == "duel") parse_duel(value, config.duel);
        else if (key == "ga") parse_ga(value, config.ga);
        else if (key == "ppo") parse_ppo(value, config.ppo);
        else if (key == "reward") parse_reward(value, config.reward);
        else if (key == "training") parse_training(value, config);
        else if (key == "test") parse_test(value, config.test);
        else if (key == "output_root") config.output_root = value.get<std::string>();
        else unknown_key("(top level)", key);
    }
    return config;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open config file: " + path.string());
    }
    const std::string text((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    return parse_config(text);
}

std::filesystem::path resolve_output_root(const std::string& flag_value,
                                          const RunConfig& config) {
    if (!flag_value.empty()) {
        return flag_value;
    }
    if (!config.output_root.empty()) {
        return config.output_root;
    }
    if (const char* env = std::getenv("PCGEVAL_OUT"); env != nullptr && *env != '\0') {
        return env;
    }
    return "out";
}

} // namespace pcgeval
