#include "pcgeval/harness.hpp"

#include "pcgeval/csv.hpp"
#include "pcgeval/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <stdexcept>
#include <thread>

namespace pcgeval {

namespace {

// Stream tags for deriving independent generators from one run seed.
constexpr std::uint64_t kSampleStream = 0x5a11;
constexpr std::uint64_t kEnvStream = 0xe27;

std::string checkpoint_filename(std::uint64_t sga) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "checkpoint_%09llu.ckpt",
                  static_cast<unsigned long long>(sga));
    return buf;
}

} // namespace

void TrainingPlan::validate() const {
    if (seeds.empty() || versions.empty()) {
        throw std::invalid_argument("TrainingPlan: need at least one seed and one version");
    }
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
        throw std::invalid_argument("TrainingPlan: seeds must be distinct");
    }
    if (std::set<PcgVersion>(versions.begin(), versions.end()).size() != versions.size()) {
        throw std::invalid_argument("TrainingPlan: versions must be distinct");
    }
    if (total_sgas == 0 || checkpoint_every == 0 || metrics_every == 0) {
        throw std::invalid_argument("TrainingPlan: totals and intervals must be positive");
    }
    if (total_sgas % checkpoint_every != 0 || total_sgas % metrics_every != 0) {
        throw std::invalid_argument(
            "TrainingPlan: checkpoint_every and metrics_every must divide total_sgas");
    }
    if (checkpoint_every % static_cast<std::uint64_t>(ppo.batch_size) != 0) {
        throw std::invalid_argument(
            "TrainingPlan: checkpoint_every must be a multiple of the PPO batch size");
    }
    if (attr_freq_window <= 0) {
        throw std::invalid_argument("TrainingPlan: attr_freq_window must be positive");
    }
    duel.validate();
    ga.validate();
    ppo.validate();
}

std::vector<std::uint64_t> TrainingPlan::default_seeds(int count) {
    std::vector<std::uint64_t> seeds;
    for (int i = 1; i <= count; ++i) {
        seeds.push_back(static_cast<std::uint64_t>(i));
    }
    return seeds;
}

MetricsLogger::MetricsLogger(int attr_window) : attr_window_(attr_window) {}

void MetricsLogger::on_step(double reward, bool episode_end, bool won) {
    s_.cumulative_reward += reward;
    if (episode_end) {
        ++s_.games_total;
        ++s_.window_games;
        if (won) {
            ++s_.wins_total;
            ++s_.window_wins;
        }
    }
}

void MetricsLogger::on_npc(const NpcProfile& profile) {
    std::array<std::uint8_t, 3> attrs{};
    for (int i = 0; i < 3; ++i) {
        attrs[i] = static_cast<std::uint8_t>(profile.attrs[i]);
    }
    s_.npc_history.push_back(attrs);
    ++s_.npcs_seen;
    if (s_.npc_history.size() > static_cast<std::size_t>(attr_window_)) {
        s_.npc_history.erase(s_.npc_history.begin());
    }
}

MetricsRecord MetricsLogger::tick(std::uint64_t sga) {
    MetricsRecord row;
    row.sga = sga;
    row.games_window = s_.window_games;
    row.wins_window = s_.window_wins;
    if (s_.window_games > 0) {
        row.win_rate_window =
            static_cast<double>(s_.window_wins) / static_cast<double>(s_.window_games);
    }
    row.cumulative_reward = s_.cumulative_reward;
    row.games_total = s_.games_total;
    row.wins_total = s_.wins_total;
    if (!s_.npc_history.empty()) {
        for (const auto& attrs : s_.npc_history) {
            for (std::uint8_t attr : attrs) {
                row.attr_freq[attr] += 1.0;
            }
        }
        for (double& f : row.attr_freq) {
            f /= static_cast<double>(s_.npc_history.size());
        }
    }
    s_.window_games = 0;
    s_.window_wins = 0;
    return row;
}

LoggerState MetricsLogger::state() const { return s_; }

void MetricsLogger::restore(const LoggerState& state) { s_ = state; }

void write_metrics_csv(const std::filesystem::path& path,
                       const std::vector<MetricsRecord>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open metrics file for writing: " + path.string());
    }
    out << kMetricsHeader << '\n';
    for (const MetricsRecord& row : rows) {
        out << row.sga << ',' << row.games_window << ',' << row.wins_window << ',';
        if (row.win_rate_window) {
            out << format_double(*row.win_rate_window);
        }
        out << ',' << format_double(row.cumulative_reward) << ',' << row.games_total << ','
            << row.wins_total;
        for (double f : row.attr_freq) {
            out << ',' << format_double(f);
        }
        out << '\n';
    }
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
    const auto raw = read_csv(path);
    if (raw.empty() || raw.front() != split(kMetricsHeader, ',')) {
        throw std::runtime_error("bad metrics header in " + path.string());
    }
    std::vector<MetricsRecord> rows;
    for (std::size_t i = 1; i < raw.size(); ++i) {
        const auto& fields = raw[i];
        if (fields.size() != 14) {
            throw std::runtime_error("bad metrics row in " + path.string());
        }
        MetricsRecord row;
        row.sga = std::stoull(fields[0]);
        row.games_window = std::stoull(fields[1]);
        row.wins_window = std::stoull(fields[2]);
        if (!fields[3].empty()) {
            row.win_rate_window = std::stod(fields[3]);
        }
        row.cumulative_reward = std::stod(fields[4]);
        row.games_total = std::stoull(fields[5]);
        row.wins_total = std::stoull(fields[6]);
        for (int a = 0; a < kNumAttrs; ++a) {
            row.attr_freq[a] = std::stod(fields[7 + a]);
        }
        rows.push_back(row);
    }
    return rows;
}

std::string RunId::name() const {
    return "v" + std::to_string(static_cast<int>(version)) + "_seed" + std::to_string(seed);
}

DuelRolloutAdapter::DuelRolloutAdapter(DuelEnv& env, StepHook on_step,
                                       EpisodeHook on_episode_start)
    : env_(env), on_step_(std::move(on_step)), on_episode_start_(std::move(on_episode_start)) {}

std::span<const double> DuelRolloutAdapter::current_observation() {
    obs_ = env_.state();
    return obs_;
}

std::pair<double, bool> DuelRolloutAdapter::step(int action) {
    const StepResult result = env_.step(action);
    if (on_step_) {
        on_step_(result);
    }
    if (result.terminated) {
        env_.reset();
        if (on_episode_start_) {
            on_episode_start_(env_.current_profile());
        }
    }
    return {result.reward, result.terminated};
}

namespace {

class Trainer {
public:
    Trainer(std::uint64_t seed, PcgVersion version, const TrainingPlan& plan)
        : plan_(plan), id_{seed, version},
          agent_(kObservationDim, kActionDim, plan.hidden, plan.ppo, seed),
          sample_rng_(Rng::derive_seed(seed, kSampleStream)),
          env_(version, plan.ga, plan.duel, plan.reward,
               Rng::derive_seed(seed, kEnvStream + static_cast<std::uint64_t>(version))),
          logger_(plan.attr_freq_window) {
        logger_.on_npc(env_.current_profile());
    }

    Trainer(const Checkpoint& ck, const TrainingPlan& plan)
        : plan_(plan), id_{ck.run_seed, ck.version},
          agent_(ck.obs_dim, ck.action_dim, ck.hidden, ck.hyper, 0),
          sample_rng_(0),
          env_(ck.version, ck.ga, ck.duel_config, ck.reward_config, 0),
          logger_(plan.attr_freq_window) {
        if (!ck.has_resume) {
            throw CheckpointError("checkpoint has no resume section");
        }
        if (ck.hyper != plan.ppo || ck.duel_config != plan.duel || ck.ga != plan.ga ||
            ck.reward_config != plan.reward) {
            throw std::invalid_argument(
                "resume_training: plan parameters differ from the checkpoint's");
        }
        std::copy(ck.params.begin(), ck.params.end(), agent_.mutable_params().begin());
        agent_.mutable_adam() = ck.adam;
        sample_rng_.set_state(ck.agent_rng_state);
        env_.restore(DuelEnv::Snapshot{ck.duel, ck.pcg_state, ck.env_rng_state, ck.sga_count,
                                       ck.fresh_duel});
        logger_.restore(ck.logger);
    }

    Checkpoint make_checkpoint() const {
        Checkpoint ck;
        ck.obs_dim = agent_.obs_dim();
        ck.action_dim = agent_.action_dim();
        ck.hidden = agent_.policy_net().shape().hidden;
        ck.hyper = agent_.hyper();
        ck.duel_config = plan_.duel;
        ck.reward_config = plan_.reward;
        ck.version = id_.version;
        ck.ga = plan_.ga;
        ck.run_seed = id_.seed;
        ck.sga_count = env_.sga_count();
        ck.agent_rng_state = sample_rng_.state();
        ck.params.assign(agent_.params().begin(), agent_.params().end());
        ck.adam = agent_.adam();

        const DuelEnv::Snapshot snap = env_.snapshot();
        ck.pcg_state = snap.pcg_state;
        ck.has_resume = true;
        ck.duel = snap.duel;
        ck.env_rng_state = snap.rng_state;
        ck.fresh_duel = snap.fresh_duel;
        ck.logger = logger_.state();
        return ck;
    }

    RunArtifacts run() {
        const std::filesystem::path run_dir = plan_.output_dir / id_.name();
        std::filesystem::create_directories(run_dir);

        RunArtifacts artifacts;
        artifacts.id = id_;
        artifacts.metrics_path = run_dir / "metrics.csv";

        DuelRolloutAdapter adapter(
            env_,
            [&](const StepResult& r) {
                logger_.on_step(r.reward, r.terminated, r.info.outcome == DuelOutcome::Win);
                if (env_.sga_count() % plan_.metrics_every == 0) {
                    artifacts.metrics.push_back(logger_.tick(env_.sga_count()));
                }
            },
            [&](const NpcProfile& profile) { logger_.on_npc(profile); });

        while (env_.sga_count() < plan_.total_sgas) {
            const std::uint64_t sga = env_.sga_count();
            const std::uint64_t to_boundary =
                plan_.checkpoint_every - sga % plan_.checkpoint_every;
            const std::uint64_t to_end = plan_.total_sgas - sga;
            const int steps = static_cast<int>(std::min(
                {static_cast<std::uint64_t>(plan_.ppo.n_steps), to_boundary, to_end}));

            RolloutBuffer buffer = collect_rollout(agent_, adapter, steps, sample_rng_);
            compute_gae(buffer, plan_.ppo.gamma, plan_.ppo.gae_lambda);
            agent_.update(buffer, sample_rng_);

            if (env_.sga_count() % plan_.checkpoint_every == 0) {
                const std::filesystem::path path =
                    run_dir / checkpoint_filename(env_.sga_count());
                save_checkpoint(make_checkpoint(), path);
                artifacts.checkpoints.emplace_back(env_.sga_count(), path);
            }
        }

        write_metrics_csv(artifacts.metrics_path, artifacts.metrics);
        return artifacts;
    }

private:
    TrainingPlan plan_;
    RunId id_;
    PpoAgent agent_;
    Rng sample_rng_;
    DuelEnv env_;
    MetricsLogger logger_;
};

} // namespace

RunArtifacts train_one(std::uint64_t seed, PcgVersion version, const TrainingPlan& plan) {
    plan.validate();
    Trainer trainer(seed, version, plan);
    return trainer.run();
}

RunArtifacts resume_training(const Checkpoint& checkpoint, const TrainingPlan& plan) {
    plan.validate();
    Trainer trainer(checkpoint, plan);
    return trainer.run();
}

RunManifest train_all(const TrainingPlan& plan, int parallelism) {
    plan.validate();
    std::filesystem::create_directories(plan.output_dir);

    std::vector<RunId> jobs;
    for (PcgVersion version : plan.versions) {
        for (std::uint64_t seed : plan.seeds) {
            jobs.push_back(RunId{seed, version});
        }
    }

    std::vector<RunOutcome> outcomes(jobs.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) {
                return;
            }
            try {
                outcomes[i].artifacts = train_one(jobs[i].seed, jobs[i].version, plan);
            } catch (const std::exception& e) {
                outcomes[i].artifacts.id = jobs[i];
                outcomes[i].error = e.what();
            }
        }
    };

    const int threads = std::max(1, std::min<int>(parallelism, static_cast<int>(jobs.size())));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(threads));
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }

    RunManifest manifest;
    for (const RunOutcome& outcome : outcomes) {
        if (outcome.error) {
            manifest.errors.push_back(outcome.artifacts.id.name() + ": " + *outcome.error);
            continue;
        }
        const RunArtifacts& a = outcome.artifacts;
        ManifestEntry metrics;
        metrics.run = a.id;
        metrics.kind = "metrics";
        metrics.path = std::filesystem::relative(a.metrics_path, plan.output_dir);
        metrics.content_hash = hash_file(a.metrics_path);
        manifest.entries.push_back(metrics);
        for (const auto& [sga, path] : a.checkpoints) {
            ManifestEntry entry;
            entry.run = a.id;
            entry.kind = "checkpoint";
            entry.sga = sga;
            entry.path = std::filesystem::relative(path, plan.output_dir);
            entry.content_hash = hash_file(path);
            manifest.entries.push_back(entry);
        }
    }
    std::sort(manifest.entries.begin(), manifest.entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) {
                  return std::tie(a.run.version, a.run.seed, a.kind, a.sga) <
                         std::tie(b.run.version, b.run.seed, b.kind, b.sga);
              });
    std::sort(manifest.errors.begin(), manifest.errors.end());

    write_manifest(manifest, plan.output_dir / "manifest.txt");
    return manifest;
}

void write_manifest(const RunManifest& manifest, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open manifest for writing: " + path.string());
    }
    out << "# pcgeval manifest v1\n";
    for (const ManifestEntry& e : manifest.entries) {
        char hash[17];
        std::snprintf(hash, sizeof(hash), "%016llx",
                      static_cast<unsigned long long>(e.content_hash));
        out << "artifact seed=" << e.run.seed << " version=" << static_cast<int>(e.run.version)
            << " kind=" << e.kind << " sga=" << e.sga << " fnv1a=" << hash
            << " path=" << e.path.generic_string() << '\n';
    }
    for (const std::string& err : manifest.errors) {
        out << "error " << err << '\n';
    }
}

RunManifest parse_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open manifest: " + path.string());
    }
    RunManifest manifest;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') {
            continue;
        }
        if (line.rfind("error ", 0) == 0) {
            manifest.errors.push_back(line.substr(6));
            continue;
        }
        if (line.rfind("artifact ", 0) != 0) {
            throw std::runtime_error("bad manifest line: " + line);
        }
        ManifestEntry entry;
        for (const std::string& token : split(line.substr(9), ' ')) {
            const std::size_t eq = token.find('=');
            if (eq == std::string::npos) {
                throw std::runtime_error("bad manifest token: " + token);
            }
            const std::string key = token.substr(0, eq);
            const std::string value = token.substr(eq + 1);
            if (key == "seed") {
                entry.run.seed = std::stoull(value);
            } else if (key == "version") {
                entry.run.version = static_cast<PcgVersion>(std::stoi(value));
            } else if (key == "kind") {
                entry.kind = value;
            } else if (key == "sga") {
                entry.sga = std::stoull(value);
            } else if (key == "fnv1a") {
                entry.content_hash = std::stoull(value, nullptr, 16);
            } else if (key == "path") {
                entry.path = value;
            } else {
                throw std::runtime_error("unknown manifest key: " + key);
            }
        }
        manifest.entries.push_back(entry);
    }
    return manifest;
}

std::vector<VersionSummary> summarize_training(const std::vector<RunMetrics>& runs) {
    if (runs.empty()) {
        throw std::invalid_argument("summarize_training: no runs");
    }
    std::map<PcgVersion, std::vector<const RunMetrics*>> by_version;
    for (const RunMetrics& run : runs) {
        by_version[run.id.version].push_back(&run);
    }

    std::vector<VersionSummary> summaries;
    for (const auto& [version, group] : by_version) {
        VersionSummary summary;
        summary.version = version;
        summary.runs = static_cast<int>(group.size());

        const std::vector<MetricsRecord>& grid = group.front()->rows;
        for (const RunMetrics* run : group) {
            if (run->rows.size() != grid.size()) {
                throw std::invalid_argument("summarize_training: mismatched tick grids");
            }
            for (std::size_t i = 0; i < grid.size(); ++i) {
                if (run->rows[i].sga != grid[i].sga) {
                    throw std::invalid_argument("summarize_training: mismatched tick grids");
                }
            }
        }

        std::vector<double> rewards_per_game;
        std::vector<double> win_rates;
        for (const RunMetrics* run : group) {
            const MetricsRecord& last = run->rows.back();
            summary.total_games += last.games_total;
            summary.total_wins += last.wins_total;
            if (last.games_total > 0) {
                rewards_per_game.push_back(last.cumulative_reward /
                                           static_cast<double>(last.games_total));
                win_rates.push_back(static_cast<double>(last.wins_total) /
                                    static_cast<double>(last.games_total));
            } else {
                rewards_per_game.push_back(0.0);
                win_rates.push_back(0.0);
            }
        }
        const auto mean_std = [](const std::vector<double>& xs) {
            double mean = 0.0;
            for (double x : xs) mean += x;
            mean /= static_cast<double>(xs.size());
            double var = 0.0;
            for (double x : xs) var += (x - mean) * (x - mean);
            const double std_dev =
                xs.size() > 1 ? std::sqrt(var / static_cast<double>(xs.size() - 1)) : 0.0;
            return std::pair{mean, std_dev};
        };
        std::tie(summary.avg_reward_per_game_mean, summary.avg_reward_per_game_std) =
            mean_std(rewards_per_game);
        std::tie(summary.avg_win_rate_mean, summary.avg_win_rate_std) = mean_std(win_rates);

        for (std::size_t i = 0; i < grid.size(); ++i) {
            CurvePoint win_point;
            CurvePoint reward_point;
            win_point.sga = grid[i].sga;
            reward_point.sga = grid[i].sga;

            std::vector<double> wr;
            std::vector<double> cr;
            for (const RunMetrics* run : group) {
                if (run->rows[i].win_rate_window) {
                    wr.push_back(*run->rows[i].win_rate_window);
                }
                cr.push_back(run->rows[i].cumulative_reward);
            }
            if (!wr.empty()) {
                win_point.min = *std::min_element(wr.begin(), wr.end());
                win_point.max = *std::max_element(wr.begin(), wr.end());
                win_point.median = stats::median(wr);
            }
            reward_point.min = *std::min_element(cr.begin(), cr.end());
            reward_point.max = *std::max_element(cr.begin(), cr.end());
            reward_point.median = stats::median(cr);
            summary.win_rate_curve.push_back(win_point);
            summary.cumulative_reward_curve.push_back(reward_point);
        }
        summaries.push_back(std::move(summary));
    }
    return summaries;
}

} // namespace pcgeval
