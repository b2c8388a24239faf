#include "pcgeval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace pcgeval::stats {

namespace {

double poly(const double* coef, int n, double x) {
    double value = coef[0];
    double p = 1.0;
    for (int i = 1; i < n; ++i) {
        p *= x;
        value += coef[i] * p;
    }
    return value;
}

// Regularized lower incomplete gamma P(a, x) by series expansion (x < a + 1).
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) {
            break;
        }
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Regularized upper incomplete gamma Q(a, x) by continued fraction (Lentz).
double gamma_q_cf(double a, double x) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-16) {
            break;
        }
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q(double a, double x) {
    if (x <= 0.0) {
        return 1.0;
    }
    if (x < a + 1.0) {
        return 1.0 - gamma_p_series(a, x);
    }
    return gamma_q_cf(a, x);
}

struct TieSummary {
    double correction_sum = 0.0; // sum of t^3 - t over tie groups
    bool has_ties = false;
};

TieSummary tie_summary(std::vector<double> sorted_values) {
    std::sort(sorted_values.begin(), sorted_values.end());
    TieSummary summary;
    std::size_t i = 0;
    while (i < sorted_values.size()) {
        std::size_t j = i;
        while (j + 1 < sorted_values.size() && sorted_values[j + 1] == sorted_values[i]) {
            ++j;
        }
        const double t = static_cast<double>(j - i + 1);
        if (t > 1.0) {
            summary.has_ties = true;
            summary.correction_sum += t * t * t - t;
        }
        i = j + 1;
    }
    return summary;
}

// Number of size-n subsets of ranks {1..n+m} for each possible value of
// U = ranksum - n(n+1)/2, i.e. U in [0, n*m]. Exact distribution of the
// Mann-Whitney statistic under H0 (no ties).
std::vector<double> exact_u_counts(std::size_t n, std::size_t m) {
    const std::size_t max_u = n * m;
    // counts[j][u]: subsets of size j with U value u, built rank by rank.
    std::vector<std::vector<double>> counts(n + 1, std::vector<double>(max_u + 1, 0.0));
    counts[0][0] = 1.0;
    for (std::size_t rank = 1; rank <= n + m; ++rank) {
        for (std::size_t j = std::min(rank, n); j >= 1; --j) {
            // Adding rank as the j-th selected element contributes rank - j to U.
            const std::size_t add = rank - j;
            for (std::size_t u = max_u + 1; u-- > add;) {
                counts[j][u] += counts[j - 1][u - add];
            }
        }
    }
    return counts[n];
}

} // namespace

std::vector<double> midranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        const double avg = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = avg;
        }
        i = j + 1;
    }
    return ranks;
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) {
        throw std::invalid_argument("mann_whitney_u: both samples must be non-empty");
    }
    const std::size_t na = a.size();
    const std::size_t nb = b.size();
    const std::size_t n_total = na + nb;

    std::vector<double> pooled;
    pooled.reserve(n_total);
    pooled.insert(pooled.end(), a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    const std::vector<double> ranks = midranks(pooled);

    double rank_sum_a = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
        rank_sum_a += ranks[i];
    }
    const double u_a = rank_sum_a - static_cast<double>(na) * (static_cast<double>(na) + 1.0) / 2.0;

    const TieSummary ties = tie_summary(pooled);

    if (!ties.has_ties && na <= kMannWhitneyExactLimit && nb <= kMannWhitneyExactLimit) {
        const std::vector<double> counts = exact_u_counts(na, nb);
        const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
        const auto u_obs = static_cast<std::size_t>(std::llround(u_a));
        double below = 0.0;
        double above = 0.0;
        for (std::size_t u = 0; u < counts.size(); ++u) {
            if (u <= u_obs) below += counts[u];
            if (u >= u_obs) above += counts[u];
        }
        const double p = std::min(1.0, 2.0 * std::min(below, above) / total);
        return {u_a, p, "exact"};
    }

    const double nn = static_cast<double>(n_total);
    const double mean_u = static_cast<double>(na) * static_cast<double>(nb) / 2.0;
    double var_u = static_cast<double>(na) * static_cast<double>(nb) / 12.0 *
                   (nn + 1.0 - ties.correction_sum / (nn * (nn - 1.0)));
    if (var_u <= 0.0) {
        return {u_a, 1.0, "degenerate"};
    }
    // Continuity correction toward the mean.
    const double diff = std::max(0.0, std::fabs(u_a - mean_u) - 0.5);
    const double z = diff / std::sqrt(var_u);
    const double p = std::min(1.0, 2.0 * norm_sf(z));
    return {u_a, p, "normal-approx"};
}

TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) {
        throw std::invalid_argument("kruskal_wallis: need at least two groups");
    }
    std::vector<double> pooled;
    for (const auto& g : groups) {
        if (g.empty()) {
            throw std::invalid_argument("kruskal_wallis: empty group");
        }
        pooled.insert(pooled.end(), g.begin(), g.end());
    }
    const double n_total = static_cast<double>(pooled.size());
    if (pooled.size() < 3) {
        throw std::invalid_argument("kruskal_wallis: need at least three observations");
    }

    const std::vector<double> ranks = midranks(pooled);

    double h = 0.0;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double rank_sum = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            rank_sum += ranks[offset + i];
        }
        offset += g.size();
        h += rank_sum * rank_sum / static_cast<double>(g.size());
    }
    h = 12.0 / (n_total * (n_total + 1.0)) * h - 3.0 * (n_total + 1.0);

    const TieSummary ties = tie_summary(pooled);
    const double denom = 1.0 - ties.correction_sum / (n_total * n_total * n_total - n_total);
    if (denom <= 0.0) {
        // Every observation identical.
        return {0.0, 1.0, "degenerate"};
    }
    h /= denom;

    const double df = static_cast<double>(groups.size()) - 1.0;
    return {h, chi2_sf(h, df), ties.has_ties ? "chi-square, tie-corrected" : "chi-square"};
}

TestResult shapiro_wilk(std::span<const double> sample) {
    // Royston (1995), AS R94.
    static constexpr double c1[6] = {0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056};
    static constexpr double c2[6] = {0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633};
    static constexpr double c3[4] = {0.544, -0.39978, 0.025054, -6.714e-4};
    static constexpr double c4[4] = {1.3822, -0.77857, 0.062767, -0.0020322};
    static constexpr double c5[4] = {-1.5861, -0.31082, -0.083751, 0.0038915};
    static constexpr double c6[3] = {-0.4803, -0.082676, 0.0030302};
    static constexpr double g[2] = {-2.273, 0.459};
    static constexpr double pi6 = 1.90985931710274;  // 6/pi
    static constexpr double stqr = 1.04719755119660; // asin(sqrt(3/4))

    const std::size_t n = sample.size();
    if (n < 3 || n > 5000) {
        throw std::invalid_argument("shapiro_wilk: sample size must be in [3, 5000]");
    }

    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    const double range = x.back() - x.front();
    if (!(range > 0.0)) {
        throw std::invalid_argument("shapiro_wilk: degenerate sample (zero range)");
    }

    const double an = static_cast<double>(n);
    const std::size_t nn2 = n / 2;
    std::vector<double> a(nn2 + 1, 0.0); // 1-based

    if (n == 3) {
        a[1] = std::sqrt(0.5);
    } else {
        const double an25 = an + 0.25;
        double summ2 = 0.0;
        for (std::size_t i = 1; i <= nn2; ++i) {
            a[i] = norm_ppf((static_cast<double>(i) - 0.375) / an25);
            summ2 += a[i] * a[i];
        }
        summ2 *= 2.0;
        const double ssumm2 = std::sqrt(summ2);
        const double rsn = 1.0 / std::sqrt(an);
        const double a1 = poly(c1, 6, rsn) - a[1] / ssumm2;

        std::size_t i1 = 2;
        double fac;
        if (n > 5) {
            i1 = 3;
            const double a2 = -a[2] / ssumm2 + poly(c2, 6, rsn);
            fac = std::sqrt((summ2 - 2.0 * a[1] * a[1] - 2.0 * a[2] * a[2]) /
                            (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2));
            a[2] = a2;
        } else {
            fac = std::sqrt((summ2 - 2.0 * a[1] * a[1]) / (1.0 - 2.0 * a1 * a1));
        }
        a[1] = a1;
        for (std::size_t i = i1; i <= nn2; ++i) {
            a[i] = -a[i] / fac;
        }
    }

    // W as the squared correlation between the scaled sample and the
    // antisymmetric coefficient vector (-a[1], ..., a[1]).
    const auto coef = [&](std::size_t i) -> double { // 1-based position
        const std::size_t j = n + 1 - i;
        if (i == j) return 0.0;
        const double sign = i < j ? -1.0 : 1.0;
        return sign * a[std::min(i, j)];
    };

    double sa = 0.0;
    double sx = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        sa += coef(i);
        sx += x[i - 1] / range;
    }
    sa /= an;
    sx /= an;

    double ssa = 0.0;
    double ssx = 0.0;
    double sax = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const double asa = coef(i) - sa;
        const double xsx = x[i - 1] / range - sx;
        ssa += asa * asa;
        ssx += xsx * xsx;
        sax += asa * xsx;
    }
    const double ssassx = std::sqrt(ssa * ssx);
    const double w1 = (ssassx - sax) * (ssassx + sax) / (ssa * ssx);
    const double w = 1.0 - w1;

    if (n == 3) {
        double pw = pi6 * (std::asin(std::sqrt(w)) - stqr);
        pw = std::clamp(pw, 0.0, 1.0);
        return {w, pw, "exact (n=3)"};
    }

    double y = std::log(w1);
    double m;
    double s;
    if (n <= 11) {
        const double gamma = poly(g, 2, an);
        if (y >= gamma) {
            return {w, std::numeric_limits<double>::min(), "Royston AS R94"};
        }
        y = -std::log(gamma - y);
        m = poly(c3, 4, an);
        s = std::exp(poly(c4, 4, an));
    } else {
        const double log_n = std::log(an);
        m = poly(c5, 4, log_n);
        s = std::exp(poly(c6, 3, log_n));
    }
    const double pw = norm_sf((y - m) / s);
    return {w, pw, "Royston AS R94"};
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw std::invalid_argument("quantile: empty sample");
    }
    if (q < 0.0 || q > 1.0) {
        throw std::invalid_argument("quantile: q must be in [0, 1]");
    }
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double median(std::vector<double> values) { return quantile(std::move(values), 0.5); }

double chi2_sf(double x, double df) {
    if (x < 0.0 || df < 1.0) {
        throw std::invalid_argument("chi2_sf: require x >= 0 and df >= 1");
    }
    return gamma_q(df / 2.0, x / 2.0);
}

double norm_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double norm_ppf(double p) {
    // Wichura's algorithm AS 241 (PPND16).
    if (p <= 0.0 || p >= 1.0) {
        throw std::invalid_argument("norm_ppf: p must be in (0, 1)");
    }
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        const double num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                                 6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                               1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                             1.3314166789178437745e2) * r + 3.3871328727963666080e0);
        const double den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                                 3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                               5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                             4.2313330701600911252e1) * r + 1.0);
        return q * num / den;
    }
    double r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        const double num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                                 2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                               3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                             4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        const double den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                                 1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                               6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                             2.05319162663775882187e0) * r + 1.0);
        value = num / den;
    } else {
        r -= 5.0;
        const double num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                                 1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                               2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                             5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        const double den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                                 1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                               1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                             5.99832206555887937690e-1) * r + 1.0);
        value = num / den;
    }
    return q < 0.0 ? -value : value;
}

} // namespace pcgeval::stats
