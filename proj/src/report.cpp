#include "pcgeval/report.hpp"

#include "pcgeval/csv.hpp"
#include "pcgeval/stats.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <regex>

namespace pcgeval {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open report file for writing: " + path.string());
    }
    return out;
}

std::string version_tag(PcgVersion version) {
    return "v" + std::to_string(static_cast<int>(version));
}

void maybe_svg(const ReportOptions& options, const std::filesystem::path& csv_path,
               const std::string& title, const std::vector<SvgSeries>& series) {
    if (!options.svg) {
        return;
    }
    std::filesystem::path svg_path = csv_path;
    svg_path.replace_extension(".svg");
    write_svg_chart(svg_path, title, series);
}

} // namespace

void emit_training_report(const std::vector<RunMetrics>& runs, const ReportOptions& options) {
    std::filesystem::create_directories(options.output_dir);
    const std::vector<VersionSummary> summaries = summarize_training(runs);

    {
        auto out = open_out(options.output_dir / "training_summary.csv");
        out << "version,runs,total_games,total_wins,avg_reward_per_game_mean,"
               "avg_reward_per_game_std,avg_win_rate_mean,avg_win_rate_std\n";
        for (const VersionSummary& s : summaries) {
            out << static_cast<int>(s.version) << ',' << s.runs << ',' << s.total_games << ','
                << s.total_wins << ',' << format_double(s.avg_reward_per_game_mean) << ','
                << format_double(s.avg_reward_per_game_std) << ','
                << format_double(s.avg_win_rate_mean) << ','
                << format_double(s.avg_win_rate_std) << '\n';
        }
    }

    for (const VersionSummary& s : summaries) {
        const std::string tag = version_tag(s.version);

        const std::filesystem::path win_path = options.output_dir / ("win_rate_" + tag + ".csv");
        {
            auto out = open_out(win_path);
            out << "sga,min,median,max\n";
            for (const CurvePoint& p : s.win_rate_curve) {
                out << p.sga << ',';
                if (p.min) out << format_double(*p.min);
                out << ',';
                if (p.median) out << format_double(*p.median);
                out << ',';
                if (p.max) out << format_double(*p.max);
                out << '\n';
            }
        }
        {
            SvgSeries lo{"min", {}};
            SvgSeries med{"median", {}};
            SvgSeries hi{"max", {}};
            for (const CurvePoint& p : s.win_rate_curve) {
                if (p.min) lo.points.emplace_back(static_cast<double>(p.sga), *p.min);
                if (p.median) med.points.emplace_back(static_cast<double>(p.sga), *p.median);
                if (p.max) hi.points.emplace_back(static_cast<double>(p.sga), *p.max);
            }
            maybe_svg(options, win_path, "win rate " + tag, {lo, med, hi});
        }

        const std::filesystem::path reward_path =
            options.output_dir / ("cum_reward_" + tag + ".csv");
        {
            auto out = open_out(reward_path);
            out << "sga,min,median,max\n";
            for (const CurvePoint& p : s.cumulative_reward_curve) {
                out << p.sga << ',';
                if (p.min) out << format_double(*p.min);
                out << ',';
                if (p.median) out << format_double(*p.median);
                out << ',';
                if (p.max) out << format_double(*p.max);
                out << '\n';
            }
        }
        {
            SvgSeries lo{"min", {}};
            SvgSeries med{"median", {}};
            SvgSeries hi{"max", {}};
            for (const CurvePoint& p : s.cumulative_reward_curve) {
                if (p.min) lo.points.emplace_back(static_cast<double>(p.sga), *p.min);
                if (p.median) med.points.emplace_back(static_cast<double>(p.sga), *p.median);
                if (p.max) hi.points.emplace_back(static_cast<double>(p.sga), *p.max);
            }
            maybe_svg(options, reward_path, "cumulative reward " + tag, {lo, med, hi});
        }
    }

    // Median attribute appearance rate per version across runs.
    std::map<PcgVersion, std::vector<const RunMetrics*>> by_version;
    for (const RunMetrics& run : runs) {
        by_version[run.id.version].push_back(&run);
    }
    for (const auto& [version, group] : by_version) {
        const std::filesystem::path path =
            options.output_dir / ("attr_freq_" + version_tag(version) + ".csv");
        auto out = open_out(path);
        out << "sga,attr0,attr1,attr2,attr3,attr4,attr5,attr6\n";
        std::vector<SvgSeries> series(kNumAttrs);
        for (int a = 0; a < kNumAttrs; ++a) {
            series[a].label = "attr" + std::to_string(a);
        }
        const std::size_t ticks = group.front()->rows.size();
        for (std::size_t i = 0; i < ticks; ++i) {
            out << group.front()->rows[i].sga;
            for (int a = 0; a < kNumAttrs; ++a) {
                std::vector<double> values;
                for (const RunMetrics* run : group) {
                    values.push_back(run->rows[i].attr_freq[a]);
                }
                const double med = stats::median(values);
                out << ',' << format_double(med);
                series[a].points.emplace_back(static_cast<double>(group.front()->rows[i].sga),
                                              med);
            }
            out << '\n';
        }
        maybe_svg(options, path, "attribute appearance " + version_tag(version), series);
    }
}

void emit_comprehensive_report(const std::vector<InstanceScore>& scores,
                               const ReportOptions& options) {
    std::filesystem::create_directories(options.output_dir);
    std::map<PcgVersion, std::map<std::uint64_t, std::vector<double>>> grouped;
    for (const InstanceScore& s : scores) {
        grouped[s.version][s.checkpoint_sga].push_back(s.win_rate);
    }
    for (const auto& [version, by_sga] : grouped) {
        const std::filesystem::path path =
            options.output_dir / ("comprehensive_" + version_tag(version) + ".csv");
        auto out = open_out(path);
        out << "checkpoint_sga,avg_win_rate,max_win_rate\n";
        SvgSeries avg{"avg", {}};
        SvgSeries best{"max", {}};
        for (const auto& [sga, values] : by_sga) {
            double mean = 0.0;
            double maxv = values.front();
            for (double v : values) {
                mean += v;
                maxv = std::max(maxv, v);
            }
            mean /= static_cast<double>(values.size());
            out << sga << ',' << format_double(mean) << ',' << format_double(maxv) << '\n';
            avg.points.emplace_back(static_cast<double>(sga), mean);
            best.points.emplace_back(static_cast<double>(sga), maxv);
        }
        maybe_svg(options, path, "comprehensive " + version_tag(version), {avg, best});
    }
}

void emit_scenario_report(const std::vector<ScenarioResult>& results,
                          const ReportOptions& options) {
    std::filesystem::create_directories(options.output_dir);
    std::map<std::pair<PcgVersion, std::string>, std::vector<double>> groups;
    for (const ScenarioResult& r : results) {
        if (r.retained) {
            groups[{r.version, r.opponent_source}].push_back(r.win_rate);
        }
    }
    auto out = open_out(options.output_dir / "scenario_summary.csv");
    out << "version,source,n,min,q1,median,q3,max\n";
    for (const auto& [key, values] : groups) {
        out << static_cast<int>(key.first) << ',' << key.second << ','
            << values.size() << ',' << format_double(stats::quantile(values, 0.0)) << ','
            << format_double(stats::quantile(values, 0.25)) << ','
            << format_double(stats::quantile(values, 0.5)) << ','
            << format_double(stats::quantile(values, 0.75)) << ','
            << format_double(stats::quantile(values, 1.0)) << '\n';
    }
}

std::vector<RunMetrics> load_run_metrics(const std::filesystem::path& training_dir) {
    const std::regex run_pattern("^v([123])_seed([0-9]+)$");
    std::vector<RunMetrics> runs;
    if (!std::filesystem::is_directory(training_dir)) {
        throw std::runtime_error("training directory not found: " + training_dir.string());
    }
    for (const auto& entry : std::filesystem::directory_iterator(training_dir)) {
        if (!entry.is_directory()) {
            continue;
        }
        std::smatch match;
        const std::string name = entry.path().filename().string();
        if (!std::regex_match(name, match, run_pattern)) {
            continue;
        }
        const std::filesystem::path metrics = entry.path() / "metrics.csv";
        if (!std::filesystem::exists(metrics)) {
            continue;
        }
        RunMetrics run;
        run.id.version = static_cast<PcgVersion>(std::stoi(match[1].str()));
        run.id.seed = std::stoull(match[2].str());
        run.rows = read_metrics_csv(metrics);
        runs.push_back(std::move(run));
    }
    std::sort(runs.begin(), runs.end(), [](const RunMetrics& a, const RunMetrics& b) {
        return std::tie(a.id.version, a.id.seed) < std::tie(b.id.version, b.id.seed);
    });
    if (runs.empty()) {
        throw std::runtime_error("no run metrics found under " + training_dir.string());
    }
    return runs;
}

void write_svg_chart(const std::filesystem::path& path, const std::string& title,
                     const std::vector<SvgSeries>& series) {
    constexpr double width = 720;
    constexpr double height = 420;
    constexpr double margin = 50;

    double min_x = 0.0;
    double max_x = 1.0;
    double min_y = 0.0;
    double max_y = 1.0;
    bool first = true;
    for (const SvgSeries& s : series) {
        for (const auto& [x, y] : s.points) {
            if (first) {
                min_x = max_x = x;
                min_y = max_y = y;
                first = false;
            }
            min_x = std::min(min_x, x);
            max_x = std::max(max_x, x);
            min_y = std::min(min_y, y);
            max_y = std::max(max_y, y);
        }
    }
    if (max_x == min_x) max_x = min_x + 1.0;
    if (max_y == min_y) max_y = min_y + 1.0;

    const auto sx = [&](double x) {
        return margin + (x - min_x) / (max_x - min_x) * (width - 2 * margin);
    };
    const auto sy = [&](double y) {
        return height - margin - (y - min_y) / (max_y - min_y) * (height - 2 * margin);
    };

    static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                    "#9467bd", "#8c564b", "#e377c2"};
    auto out = open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\""
        << "sans-serif\" font-size=\"16\">" << title << "</text>\n";
    out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << width - 2 * margin
        << "\" height=\"" << height - 2 * margin
        << "\" fill=\"none\" stroke=\"#444\" stroke-width=\"1\"/>\n";
    out << "<text x=\"" << margin << "\" y=\"" << height - margin + 18
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(min_x)
        << "</text>\n";
    out << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 18
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_double(max_x) << "</text>\n";
    out << "<text x=\"" << margin - 6 << "\" y=\"" << height - margin
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_double(min_y) << "</text>\n";
    out << "<text x=\"" << margin - 6 << "\" y=\"" << margin + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << format_double(max_y) << "</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const SvgSeries& s = series[i];
        if (s.points.empty()) {
            continue;
        }
        const char* color = kColors[i % (sizeof(kColors) / sizeof(kColors[0]))];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (const auto& [x, y] : s.points) {
            out << format_double(sx(x)) << ',' << format_double(sy(y)) << ' ';
        }
        out << "\"/>\n";
        out << "<text x=\"" << width - margin + 4 << "\" y=\""
            << margin + 16 * static_cast<double>(i) << "\" font-family=\"sans-serif\""
            << " font-size=\"11\" fill=\"" << color << "\">" << s.label << "</text>\n";
    }
    out << "</svg>\n";
}

} // namespace pcgeval
