#pragma once

#include "pcgeval/evaltests.hpp"
#include "pcgeval/harness.hpp"

#include <filesystem>
#include <vector>

namespace pcgeval {

// Plot-ready data files derived from training metrics and test results:
//   win_rate_v<N>.csv        sga, min, median, max         (training curves)
//   cum_reward_v<N>.csv      sga, min, median, max
//   attr_freq_v<N>.csv       sga, attr0..attr6             (median across runs)
//   comprehensive_v<N>.csv   checkpoint_sga, avg_win_rate, max_win_rate
//   scenario_summary.csv     version, source, n, min, q1, median, q3, max
//   training_summary.csv     per-version totals and mean/std aggregates
// With svg=true each curve file gets a companion .svg rendering.
struct ReportOptions {
    std::filesystem::path output_dir;
    bool svg = false;
};

void emit_training_report(const std::vector<RunMetrics>& runs, const ReportOptions& options);
void emit_comprehensive_report(const std::vector<InstanceScore>& scores,
                               const ReportOptions& options);
void emit_scenario_report(const std::vector<ScenarioResult>& results,
                          const ReportOptions& options);

// Loads every <run>/metrics.csv under the training output directory.
std::vector<RunMetrics> load_run_metrics(const std::filesystem::path& training_dir);

// Minimal SVG polyline chart; one polyline per series, missing points skipped.
struct SvgSeries {
    std::string label;
    std::vector<std::pair<double, double>> points;
};
void write_svg_chart(const std::filesystem::path& path, const std::string& title,
                     const std::vector<SvgSeries>& series);

} // namespace pcgeval
