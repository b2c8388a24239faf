// Command-line front end: train agents against the PCG versions, run the
// comprehensive and scenario tests, compare result groups statistically and
// emit plot-ready report files.

#include "pcgeval/config.hpp"
#include "pcgeval/csv.hpp"
#include "pcgeval/evaltests.hpp"
#include "pcgeval/harness.hpp"
#include "pcgeval/report.hpp"
#include "pcgeval/stats.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <iostream>
#include <map>
#include <regex>
#include <set>
#include <thread>

namespace {

using namespace pcgeval;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

std::vector<PcgVersion> parse_version_list(const std::string& csv) {
    std::vector<PcgVersion> versions;
    for (const std::string& token : split(csv, ',')) {
        if (token == "1" || token == "v1") versions.push_back(PcgVersion::V1Random);
        else if (token == "2" || token == "v2") versions.push_back(PcgVersion::V2Raw);
        else if (token == "3" || token == "v3") versions.push_back(PcgVersion::V3Normalized);
        else throw std::invalid_argument("bad version token: " + token);
    }
    return versions;
}

struct TrainFlags {
    std::string config_path;
    std::string versions = "1,2,3";
    int seeds = 5;
    std::uint64_t sgas = 0;
    std::uint64_t checkpoint_every = 0;
    std::uint64_t metrics_every = 0;
    std::string out;
    int parallel = 0;
};

RunConfig load_config_or_default(const std::string& path) {
    return path.empty() ? RunConfig{} : load_config(path);
}

int cmd_train(const TrainFlags& flags) {
    RunConfig config = load_config_or_default(flags.config_path);
    TrainingPlan plan = config.to_plan();
    plan.versions = parse_version_list(flags.versions);
    plan.seeds = TrainingPlan::default_seeds(flags.seeds);
    if (flags.sgas != 0) plan.total_sgas = flags.sgas;
    if (flags.checkpoint_every != 0) plan.checkpoint_every = flags.checkpoint_every;
    if (flags.metrics_every != 0) plan.metrics_every = flags.metrics_every;
    plan.output_dir = resolve_output_root(flags.out, config) / "training";

    const int parallel = flags.parallel > 0
                             ? flags.parallel
                             : std::max(1u, std::thread::hardware_concurrency());
    const RunManifest manifest = train_all(plan, parallel);

    std::cout << "runs completed: " << manifest.entries.size() << " artifacts, "
              << manifest.errors.size() << " failed run(s)\n";
    std::cout << "manifest: " << (plan.output_dir / "manifest.txt").string() << "\n";
    for (const std::string& err : manifest.errors) {
        std::cerr << "run failed: " << err << "\n";
    }
    return manifest.errors.empty() ? kExitOk : kExitRuntime;
}

std::vector<std::filesystem::path> find_checkpoints(const std::filesystem::path& training_dir) {
    const std::regex run_pattern("^v[123]_seed[0-9]+$");
    std::vector<std::filesystem::path> paths;
    if (!std::filesystem::is_directory(training_dir)) {
        throw std::runtime_error("training directory not found: " + training_dir.string());
    }
    for (const auto& run_dir : std::filesystem::directory_iterator(training_dir)) {
        if (!run_dir.is_directory()) continue;
        const std::string name = run_dir.path().filename().string();
        if (!std::regex_match(name, run_pattern)) continue;
        for (const auto& file : std::filesystem::directory_iterator(run_dir.path())) {
            if (file.path().extension() == ".ckpt") {
                paths.push_back(file.path());
            }
        }
    }
    std::sort(paths.begin(), paths.end());
    if (paths.empty()) {
        throw std::runtime_error("no checkpoints under " + training_dir.string());
    }
    return paths;
}

int cmd_comprehensive(const std::string& runs_dir, int repeats, std::uint64_t seed,
                      const std::string& out) {
    const std::filesystem::path out_dir = out.empty() ? "out" : out;
    std::filesystem::create_directories(out_dir);

    std::vector<ScenarioResult> rows;
    for (const std::filesystem::path& path : find_checkpoints(runs_dir)) {
        const Checkpoint ck = load_checkpoint(path);
        const InstanceScore score = comprehensive_test(ck, repeats, seed);
        rows.push_back(to_result_row(score, "comprehensive"));
        std::cout << rows.back().instance_id << " win_rate=" << format_double(score.win_rate)
                  << " (" << score.wins << "/" << score.duels_played << ")\n";
    }
    const std::filesystem::path csv_path = out_dir / "comprehensive.csv";
    write_results_csv(csv_path, rows);
    std::cout << "wrote " << csv_path.string() << " (" << rows.size() << " instances)\n";
    return kExitOk;
}

int cmd_scenario(const std::string& runs_dir, const std::string& comprehensive_csv,
                 const std::string& source, int duels, std::uint64_t seed,
                 const std::string& out) {
    std::vector<PcgVersion> sources;
    if (source == "both") {
        sources = {PcgVersion::V1Random, PcgVersion::V2Raw};
    } else if (source == "v1") {
        sources = {PcgVersion::V1Random};
    } else if (source == "v2") {
        sources = {PcgVersion::V2Raw};
    } else {
        throw std::invalid_argument("scenario --source must be v1, v2 or both");
    }

    const std::filesystem::path out_dir = out.empty() ? "out" : out;
    std::filesystem::create_directories(out_dir);

    // Pick the best instance per (seed, version) from the comprehensive scores.
    std::vector<InstanceScore> scores;
    for (const ScenarioResult& row : read_results_csv(comprehensive_csv)) {
        InstanceScore score;
        score.seed = row.seed;
        score.version = row.version;
        score.checkpoint_sga = row.checkpoint_sga;
        score.duels_played = row.duels;
        score.wins = row.wins;
        score.win_rate = row.win_rate;
        scores.push_back(score);
    }
    const std::vector<InstanceScore> best = select_best_instances(scores);
    std::cout << "selected " << best.size() << " best instances\n";

    std::vector<Checkpoint> instances;
    for (const InstanceScore& score : best) {
        char file[40];
        std::snprintf(file, sizeof(file), "checkpoint_%09llu.ckpt",
                      static_cast<unsigned long long>(score.checkpoint_sga));
        const std::filesystem::path path =
            std::filesystem::path(runs_dir) /
            (source_label(score.version) + "_seed" + std::to_string(score.seed)) / file;
        instances.push_back(load_checkpoint(path));
    }

    std::vector<ScenarioResult> raw;
    for (PcgVersion opponent : sources) {
        const auto results = scenario_test(instances, opponent, duels, seed);
        raw.insert(raw.end(), results.begin(), results.end());
    }
    write_results_csv(out_dir / "scenario_raw.csv", raw);

    const IqrOutcome filtered = iqr_filter(raw);
    write_results_csv(out_dir / "scenario_filtered.csv", filtered.results);

    std::cout << "outlier-removed seeds:";
    if (filtered.removed_seeds.empty()) {
        std::cout << " none";
    }
    for (std::uint64_t s : filtered.removed_seeds) {
        std::cout << ' ' << s;
    }
    std::cout << "\nwrote " << (out_dir / "scenario_raw.csv").string() << " and "
              << (out_dir / "scenario_filtered.csv").string() << "\n";
    return kExitOk;
}

std::map<PcgVersion, std::vector<double>> group_win_rates(const std::vector<std::string>& inputs,
                                                          const std::set<int>& versions) {
    std::map<PcgVersion, std::vector<double>> groups;
    for (const std::string& input : inputs) {
        for (const ScenarioResult& row : read_results_csv(input)) {
            if (!row.retained) continue;
            if (!versions.empty() && versions.count(static_cast<int>(row.version)) == 0) continue;
            groups[row.version].push_back(row.win_rate);
        }
    }
    if (groups.empty()) {
        throw std::runtime_error("no retained rows in the given inputs");
    }
    return groups;
}

int cmd_stats(const std::vector<std::string>& inputs, const std::string& test,
              const std::string& groups_csv, const std::string& format) {
    std::set<int> wanted;
    if (!groups_csv.empty()) {
        for (const std::string& token : split(groups_csv, ',')) {
            wanted.insert(std::stoi(token));
        }
    }
    const auto groups = group_win_rates(inputs, wanted);
    nlohmann::json out = nlohmann::json::array();

    const auto emit = [&](const std::string& name, const stats::TestResult& r) {
        if (format == "json") {
            out.push_back({{"comparison", name},
                           {"statistic", r.statistic},
                           {"p_value", r.p_value},
                           {"method", r.method}});
        } else {
            std::cout << name << ": statistic=" << format_double(r.statistic)
                      << " p=" << format_double(r.p_value) << " (" << r.method << ")\n";
        }
    };

    if (test == "kw") {
        std::vector<std::vector<double>> samples;
        std::string name = "kruskal-wallis[";
        for (const auto& [version, values] : groups) {
            samples.push_back(values);
            name += source_label(version) + " ";
        }
        name.back() = ']';
        emit(name, stats::kruskal_wallis(samples));
    } else if (test == "mwu") {
        for (auto a = groups.begin(); a != groups.end(); ++a) {
            for (auto b = std::next(a); b != groups.end(); ++b) {
                emit("mann-whitney[" + source_label(a->first) + " vs " + source_label(b->first) +
                         "]",
                     stats::mann_whitney_u(a->second, b->second));
            }
        }
    } else if (test == "sw") {
        for (const auto& [version, values] : groups) {
            emit("shapiro-wilk[" + source_label(version) + "]", stats::shapiro_wilk(values));
        }
    } else {
        throw std::invalid_argument("stats --test must be mwu, kw or sw");
    }

    if (format == "json") {
        std::cout << out.dump(2) << "\n";
    }
    return kExitOk;
}

int cmd_report(const std::string& in, const std::string& out, bool svg) {
    const std::filesystem::path in_dir = in;
    ReportOptions options;
    options.output_dir = out.empty() ? (in_dir / "report") : std::filesystem::path(out);
    options.svg = svg;

    bool produced = false;
    if (std::filesystem::is_directory(in_dir / "training")) {
        emit_training_report(load_run_metrics(in_dir / "training"), options);
        produced = true;
    }
    if (std::filesystem::exists(in_dir / "comprehensive.csv")) {
        std::vector<InstanceScore> scores;
        for (const ScenarioResult& row : read_results_csv(in_dir / "comprehensive.csv")) {
            InstanceScore score;
            score.seed = row.seed;
            score.version = row.version;
            score.checkpoint_sga = row.checkpoint_sga;
            score.duels_played = row.duels;
            score.wins = row.wins;
            score.win_rate = row.win_rate;
            scores.push_back(score);
        }
        emit_comprehensive_report(scores, options);
        produced = true;
    }
    if (std::filesystem::exists(in_dir / "scenario_filtered.csv")) {
        emit_scenario_report(read_results_csv(in_dir / "scenario_filtered.csv"), options);
        produced = true;
    }
    if (!produced) {
        throw std::runtime_error("nothing to report under " + in_dir.string());
    }
    std::cout << "report written to " << options.output_dir.string() << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Evaluates PCG variants of a card-duel game by training PPO "
                 "game-testing agents against them and comparing the outcomes."};
    app.require_subcommand(1);

    TrainFlags train_flags;
    CLI::App* train = app.add_subcommand("train", "Train agents for every (seed, version) pair");
    train->add_option("--config", train_flags.config_path, "JSON config file");
    train->add_option("--versions", train_flags.versions, "Comma-separated SG versions")
        ->capture_default_str();
    train->add_option("--seeds", train_flags.seeds, "Number of seeds (1..N)")
        ->capture_default_str();
    train->add_option("--sgas", train_flags.sgas, "Total SGAs per run (default 50000)");
    train->add_option("--checkpoint-every", train_flags.checkpoint_every,
                      "Checkpoint interval in SGAs (default 10000)");
    train->add_option("--metrics-every", train_flags.metrics_every,
                      "Metrics interval in SGAs (default 500)");
    train->add_option("--out", train_flags.out, "Output root (default $PCGEVAL_OUT or ./out)");
    train->add_option("--parallel", train_flags.parallel,
                      "Worker threads (default: hardware concurrency)");

    std::string comp_runs = "out/training";
    int comp_repeats = 5;
    std::uint64_t comp_seed = 1000;
    std::string comp_out;
    CLI::App* comprehensive = app.add_subcommand(
        "comprehensive", "Score every checkpoint against all 35 attribute combinations");
    comprehensive->add_option("--runs", comp_runs, "Training output directory")
        ->capture_default_str();
    comprehensive->add_option("--repeats", comp_repeats, "Duels per combination")
        ->capture_default_str();
    comprehensive->add_option("--seed", comp_seed, "Evaluation seed")->capture_default_str();
    comprehensive->add_option("--out", comp_out, "Output directory (default ./out)");

    std::string scen_runs = "out/training";
    std::string scen_comprehensive = "out/comprehensive.csv";
    std::string scen_source = "both";
    int scen_duels = 1000;
    std::uint64_t scen_seed = 2000;
    std::string scen_out;
    CLI::App* scenario = app.add_subcommand(
        "scenario", "Pit best instances against live PCG opponents, with IQR filtering");
    scenario->add_option("--runs", scen_runs, "Training output directory")
        ->capture_default_str();
    scenario->add_option("--comprehensive", scen_comprehensive, "Comprehensive results CSV")
        ->capture_default_str();
    scenario->add_option("--source", scen_source, "Opponent source: v1, v2 or both")
        ->capture_default_str();
    scenario->add_option("--duels", scen_duels, "Duels per instance")->capture_default_str();
    scenario->add_option("--seed", scen_seed, "Evaluation seed")->capture_default_str();
    scenario->add_option("--out", scen_out, "Output directory (default ./out)");

    std::vector<std::string> stats_inputs;
    std::string stats_test = "kw";
    std::string stats_groups;
    std::string stats_format = "text";
    CLI::App* stats_cmd =
        app.add_subcommand("stats", "Statistical comparison of result groups by version");
    stats_cmd->add_option("--inputs", stats_inputs, "Results CSV files")->required();
    stats_cmd->add_option("--test", stats_test, "Test: mwu, kw or sw")->capture_default_str();
    stats_cmd->add_option("--groups", stats_groups, "Versions to include, e.g. 1,2,3");
    stats_cmd->add_option("--format", stats_format, "Output format: text or json")
        ->capture_default_str();

    std::string report_in = "out";
    std::string report_out;
    bool report_svg = false;
    CLI::App* report = app.add_subcommand("report", "Emit plot-ready CSV (and optional SVG) data");
    report->add_option("--in", report_in, "Directory with training/test outputs")
        ->capture_default_str();
    report->add_option("--out", report_out, "Report directory (default <in>/report)");
    report->add_flag("--svg", report_svg, "Also render SVG charts");

    try {
        app.parse(argc, argv);
        if (train->parsed()) return cmd_train(train_flags);
        if (comprehensive->parsed())
            return cmd_comprehensive(comp_runs, comp_repeats, comp_seed, comp_out);
        if (scenario->parsed())
            return cmd_scenario(scen_runs, scen_comprehensive, scen_source, scen_duels,
                                scen_seed, scen_out);
        if (stats_cmd->parsed())
            return cmd_stats(stats_inputs, stats_test, stats_groups, stats_format);
        if (report->parsed()) return cmd_report(report_in, report_out, report_svg);
        return kExitUsage;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
}
