#include "pcgeval/evaltests.hpp"

#include "pcgeval/csv.hpp"
#include "pcgeval/stats.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>

namespace pcgeval {

std::vector<std::array<int, 3>> enumerate_combos() {
    std::vector<std::array<int, 3>> combos;
    combos.reserve(35);
    for (int a = 0; a < kNumAttrs; ++a) {
        for (int b = a + 1; b < kNumAttrs; ++b) {
            for (int c = b + 1; c < kNumAttrs; ++c) {
                combos.push_back({a, b, c});
            }
        }
    }
    return combos;
}

PolicyFn greedy_policy(const PpoAgent& agent) {
    return [&agent](const Observation& obs) { return agent.greedy_action(obs); };
}

PolicyFn matching_oracle_policy() {
    return [](const Observation& obs) {
        for (int attr = 0; attr < kNumAttrs; ++attr) {
            if (obs[attr] > 0.5) {
                return obs[14 + attr] > 0.0 ? attr : DuelAction::kPass;
            }
        }
        return DuelAction::kPass;
    };
}

PolicyFn uniform_random_policy(Rng& rng) {
    return [&rng](const Observation&) { return rng.uniform_int(0, kActionDim - 1); };
}

PpoAgent agent_from_checkpoint(const Checkpoint& ck) {
    PpoAgent agent(ck.obs_dim, ck.action_dim, ck.hidden, ck.hyper, 0);
    if (ck.params.size() != agent.params().size()) {
        throw CheckpointError("checkpoint parameter count does not match architecture");
    }
    std::copy(ck.params.begin(), ck.params.end(), agent.mutable_params().begin());
    agent.mutable_adam() = ck.adam;
    return agent;
}

namespace {

bool play_single_duel(const PolicyFn& policy, DuelState& duel) {
    while (!duel.terminal()) {
        const Observation obs = encode_observation(duel);
        duel.apply(DuelAction{policy(obs)});
    }
    return duel.outcome() == DuelOutcome::Win;
}

} // namespace

InstanceScore comprehensive_test_policy(const PolicyFn& policy, const DuelConfig& config,
                                        int repeats, std::uint64_t seed) {
    if (repeats < 1) {
        throw std::invalid_argument("comprehensive_test: repeats must be >= 1");
    }
    Rng rng(seed);
    InstanceScore score;
    for (const auto& combo : enumerate_combos()) {
        for (int rep = 0; rep < repeats; ++rep) {
            // The permutation is the SG's choice; drawn uniformly per duel.
            std::array<int, 3> perm = combo;
            for (int i = 0; i < 2; ++i) {
                const int j =
                    i + static_cast<int>(rng.uniform_below(static_cast<std::uint64_t>(3 - i)));
                std::swap(perm[i], perm[j]);
            }
            DuelState duel = DuelState::start(NpcProfile{perm}, config, rng.next_u64());
            score.wins += play_single_duel(policy, duel) ? 1 : 0;
            ++score.duels_played;
        }
    }
    score.win_rate = static_cast<double>(score.wins) / score.duels_played;
    return score;
}

InstanceScore comprehensive_test(const Checkpoint& ck, int repeats, std::uint64_t seed) {
    const PpoAgent agent = agent_from_checkpoint(ck);
    InstanceScore score =
        comprehensive_test_policy(greedy_policy(agent), ck.duel_config, repeats, seed);
    score.seed = ck.run_seed;
    score.version = ck.version;
    score.checkpoint_sga = ck.sga_count;
    return score;
}

double permutation_coverage_probability(int repeats, int k) {
    if (repeats < 1 || k < 1 || k > 6) {
        throw std::invalid_argument("permutation_coverage_probability: bad arguments");
    }
    constexpr int kPerms = 6;
    // ways[m] = sequences of the given length with exactly m distinct values;
    // exact in 64-bit integers up to 6^24 draws.
    if (repeats <= 24) {
        std::array<std::uint64_t, kPerms + 1> ways{};
        ways[0] = 1;
        for (int step = 0; step < repeats; ++step) {
            std::array<std::uint64_t, kPerms + 1> next{};
            for (int m = 0; m <= kPerms; ++m) {
                if (ways[m] == 0) {
                    continue;
                }
                next[m] += ways[m] * static_cast<std::uint64_t>(m);
                if (m < kPerms) {
                    next[m + 1] += ways[m] * static_cast<std::uint64_t>(kPerms - m);
                }
            }
            ways = next;
        }
        std::uint64_t favorable = 0;
        std::uint64_t total = 0;
        for (int m = 0; m <= kPerms; ++m) {
            total += ways[m];
            if (m >= k) {
                favorable += ways[m];
            }
        }
        return static_cast<double>(favorable) / static_cast<double>(total);
    }
    std::array<double, kPerms + 1> prob{};
    prob[0] = 1.0;
    for (int step = 0; step < repeats; ++step) {
        std::array<double, kPerms + 1> next{};
        for (int m = 0; m <= kPerms; ++m) {
            next[m] += prob[m] * (static_cast<double>(m) / kPerms);
            if (m < kPerms) {
                next[m + 1] += prob[m] * (static_cast<double>(kPerms - m) / kPerms);
            }
        }
        prob = next;
    }
    double p = 0.0;
    for (int m = k; m <= kPerms; ++m) {
        p += prob[m];
    }
    return p;
}

std::vector<InstanceScore> select_best_instances(const std::vector<InstanceScore>& scores) {
    if (scores.empty()) {
        throw std::invalid_argument("select_best_instances: empty score set");
    }
    std::map<std::pair<std::uint64_t, PcgVersion>, InstanceScore> best;
    for (const InstanceScore& score : scores) {
        const auto key = std::make_pair(score.seed, score.version);
        const auto it = best.find(key);
        if (it == best.end()) {
            best.emplace(key, score);
            continue;
        }
        const InstanceScore& cur = it->second;
        if (score.win_rate > cur.win_rate ||
            (score.win_rate == cur.win_rate && score.checkpoint_sga > cur.checkpoint_sga)) {
            it->second = score;
        }
    }
    std::vector<InstanceScore> selected;
    selected.reserve(best.size());
    for (const auto& [key, score] : best) {
        selected.push_back(score);
    }
    std::sort(selected.begin(), selected.end(), [](const InstanceScore& a, const InstanceScore& b) {
        return std::tie(a.version, a.seed) < std::tie(b.version, b.seed);
    });
    return selected;
}

PlayStats play_for_sgas(const PolicyFn& policy, DuelEnv& env, std::uint64_t n_sgas) {
    PlayStats stats;
    for (std::uint64_t step = 0; step < n_sgas; ++step) {
        if (env.terminated()) {
            env.reset();
        }
        const StepResult r = env.step(policy(env.state()));
        if (r.terminated) {
            ++stats.games;
            if (r.info.outcome == DuelOutcome::Win) {
                ++stats.wins;
            }
        }
    }
    return stats;
}

PlayStats play_duels(const PolicyFn& policy, DuelEnv& env, int duels) {
    PlayStats stats;
    for (int duel = 0; duel < duels; ++duel) {
        if (env.terminated()) {
            env.reset();
        }
        while (!env.terminated()) {
            const StepResult r = env.step(policy(env.state()));
            if (r.terminated) {
                ++stats.games;
                if (r.info.outcome == DuelOutcome::Win) {
                    ++stats.wins;
                }
            }
        }
    }
    return stats;
}

std::vector<ScenarioResult> scenario_test(const std::vector<Checkpoint>& instances,
                                          PcgVersion opponent_source, int duels,
                                          std::uint64_t seed) {
    if (duels < 1) {
        throw std::invalid_argument("scenario_test: duels must be >= 1");
    }
    std::vector<ScenarioResult> results;
    results.reserve(instances.size());
    for (const Checkpoint& ck : instances) {
        const PpoAgent agent = agent_from_checkpoint(ck);
        const std::uint64_t env_seed = Rng::derive_seed(
            seed ^ (ck.run_seed * 0x9e3779b97f4a7c15ULL) ^ ck.sga_count,
            static_cast<std::uint64_t>(opponent_source) * 131 +
                static_cast<std::uint64_t>(ck.version));
        DuelEnv env(opponent_source, ck.ga, ck.duel_config, ck.reward_config, env_seed);
        const PlayStats stats = play_duels(greedy_policy(agent), env, duels);

        ScenarioResult result;
        result.instance_id = "v" + std::to_string(static_cast<int>(ck.version)) + "_seed" +
                             std::to_string(ck.run_seed) + "@" + std::to_string(ck.sga_count);
        result.seed = ck.run_seed;
        result.version = ck.version;
        result.checkpoint_sga = ck.sga_count;
        result.opponent_source = source_label(opponent_source);
        result.duels = static_cast<int>(stats.games);
        result.wins = static_cast<int>(stats.wins);
        result.win_rate = stats.win_rate();
        results.push_back(std::move(result));
    }
    return results;
}

std::string source_label(PcgVersion version) {
    return "v" + std::to_string(static_cast<int>(version));
}

ScenarioResult to_result_row(const InstanceScore& score, const std::string& source) {
    ScenarioResult row;
    row.instance_id = "v" + std::to_string(static_cast<int>(score.version)) + "_seed" +
                      std::to_string(score.seed) + "@" + std::to_string(score.checkpoint_sga);
    row.seed = score.seed;
    row.version = score.version;
    row.checkpoint_sga = score.checkpoint_sga;
    row.opponent_source = source;
    row.duels = score.duels_played;
    row.wins = score.wins;
    row.win_rate = score.win_rate;
    return row;
}

IqrOutcome iqr_filter(std::vector<ScenarioResult> results) {
    std::map<std::pair<PcgVersion, std::string>, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < results.size(); ++i) {
        results[i].retained = true;
        groups[{results[i].version, results[i].opponent_source}].push_back(i);
    }

    std::set<std::uint64_t> removed_seeds;
    for (const auto& [key, indices] : groups) {
        if (indices.size() < 4) {
            throw std::invalid_argument("iqr_filter: groups need at least 4 results");
        }
        std::vector<double> values;
        values.reserve(indices.size());
        for (std::size_t i : indices) {
            values.push_back(results[i].win_rate);
        }
        const double q1 = stats::quantile(values, 0.25);
        const double q3 = stats::quantile(values, 0.75);
        const double iqr = q3 - q1;
        const double lo = q1 - 1.5 * iqr;
        const double hi = q3 + 1.5 * iqr;
        for (std::size_t i : indices) {
            if (results[i].win_rate < lo || results[i].win_rate > hi) {
                results[i].retained = false;
                removed_seeds.insert(results[i].seed);
            }
        }
    }

    // Outlier agents take their seed-mates with them.
    for (ScenarioResult& result : results) {
        if (removed_seeds.count(result.seed) != 0) {
            result.retained = false;
        }
    }

    IqrOutcome outcome;
    outcome.results = std::move(results);
    outcome.removed_seeds.assign(removed_seeds.begin(), removed_seeds.end());
    return outcome;
}

void write_results_csv(const std::filesystem::path& path,
                       const std::vector<ScenarioResult>& results) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open results file for writing: " + path.string());
    }
    out << kResultsHeader << '\n';
    for (const ScenarioResult& r : results) {
        out << r.instance_id << ',' << r.seed << ',' << static_cast<int>(r.version) << ','
            << r.checkpoint_sga << ',' << r.opponent_source << ',' << r.duels << ',' << r.wins
            << ',' << format_double(r.win_rate) << ',' << (r.retained ? 1 : 0) << '\n';
    }
}

std::vector<ScenarioResult> read_results_csv(const std::filesystem::path& path) {
    const auto raw = read_csv(path);
    if (raw.empty() || raw.front() != split(kResultsHeader, ',')) {
        throw std::runtime_error("bad results header in " + path.string());
    }
    std::vector<ScenarioResult> results;
    for (std::size_t i = 1; i < raw.size(); ++i) {
        const auto& f = raw[i];
        if (f.size() != 9) {
            throw std::runtime_error("bad results row in " + path.string());
        }
        ScenarioResult r;
        r.instance_id = f[0];
        r.seed = std::stoull(f[1]);
        r.version = static_cast<PcgVersion>(std::stoi(f[2]));
        r.checkpoint_sga = std::stoull(f[3]);
        r.opponent_source = f[4];
        r.duels = std::stoi(f[5]);
        r.wins = std::stoi(f[6]);
        r.win_rate = std::stod(f[7]);
        r.retained = f[8] == "1";
        results.push_back(std::move(r));
    }
    return results;
}

} // namespace pcgeval
