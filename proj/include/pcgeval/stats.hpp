#pragma once

#include <span>
#include <string>
#include <vector>

namespace pcgeval::stats {

// Outcome of a hypothesis test. `method` records whether the p-value came
// from exact enumeration or an approximation; callers apply their own
// significance threshold.
struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::string method;
};

// Two-sided Mann-Whitney U test. Statistic is U of the first sample, computed
// from midranks. Exact enumeration when both samples have at most
// kExactLimit observations and there are no ties; otherwise the normal
// approximation with tie and continuity corrections.
inline constexpr std::size_t kMannWhitneyExactLimit = 8;
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

// Kruskal-Wallis H test with tie correction; p from the chi-square survival
// function at df = groups - 1.
TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups);

// Shapiro-Wilk normality test, Royston's AS R94 approximation. Requires
// 3 <= n <= 5000 and a non-degenerate sample.
TestResult shapiro_wilk(std::span<const double> x);

// Type-7 (linear interpolation) quantile of an unsorted sample.
double quantile(std::vector<double> values, double q);
double median(std::vector<double> values);

// Midranks of the pooled values (average rank across ties), 1-based.
std::vector<double> midranks(std::span<const double> values);

// Special functions backing the tests.
double chi2_sf(double x, double df);  // upper tail of chi-square
double norm_sf(double z);             // upper tail of the standard normal
double norm_ppf(double p);            // inverse standard normal CDF (AS 241)

} // namespace pcgeval::stats
