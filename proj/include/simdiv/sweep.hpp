#pragma once

#include "simdiv/common.hpp"
#include "simdiv/diversity.hpp"
#include "simdiv/similarity.hpp"
#include "simdiv/spectral.hpp"

#include <cmath>
#include <span>
#include <string>
#include <vector>

// Half-distance sweeps: evaluate LCR diversity and Vendi score over a grid
// of kernel rates k and correlate the two families across datasets.

namespace simdiv {

struct CorrelationStats {
    double pearson = 0.0;
    double r_squared = 0.0;
    double covariance = 0.0;
};

// A sample standard deviation at or below this relative level counts as
// degenerate: the values have collapsed to a single point, as happens at the
// extremes of the half-distance range.
inline constexpr double kDegenerateRelativeStd = 1e-4;

// Sample covariance (denominator n-1), Pearson correlation, and its square.
// Throws on length mismatch, fewer than 3 points, or degenerate variance.
inline CorrelationStats correlation_stats(std::span<const double> xs,
                                          std::span<const double> ys) {
    if (xs.size() != ys.size()) {
        throw Error("correlation inputs differ in length: " +
                    std::to_string(xs.size()) + " vs " + std::to_string(ys.size()));
    }
    const auto n = static_cast<Index>(xs.size());
    if (n < 3) throw Error("correlation requires at least 3 points");

    double mean_x = 0.0, mean_y = 0.0;
    for (Index i = 0; i < n; ++i) {
        mean_x += xs[static_cast<std::size_t>(i)];
        mean_y += ys[static_cast<std::size_t>(i)];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double dx = xs[static_cast<std::size_t>(i)] - mean_x;
        const double dy = ys[static_cast<std::size_t>(i)] - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    const double denom = static_cast<double>(n - 1);
    const double std_x = std::sqrt(sxx / denom);
    const double std_y = std::sqrt(syy / denom);
    if (std_x <= kDegenerateRelativeStd * (1.0 + std::abs(mean_x)) ||
        std_y <= kDegenerateRelativeStd * (1.0 + std::abs(mean_y))) {
        throw Error("degenerate variance: std(x)=" + std::to_string(std_x) +
                    ", std(y)=" + std::to_string(std_y));
    }
    CorrelationStats stats;
    stats.covariance = sxy / denom;
    stats.pearson = stats.covariance / (std_x * std_y);
    stats.r_squared = stats.pearson * stats.pearson;
    return stats;
}

struct SweepCell {
    std::size_t dataset = 0;
    double k = 0.0;
    Order q = 1.0;
    double lcr = 0.0;
    double vs = 0.0;
    std::string status = "ok";  // "ok" or "failed: <reason>"
};

struct SweepStats {
    double k = 0.0;
    Order q = 1.0;
    double pearson = 0.0;
    double r_squared = 0.0;
    double covariance = 0.0;
    std::string flag = "ok";  // "ok", "degenerate", or "failed: <reason>"
};

struct SweepResult {
    std::vector<double> k_grid;
    std::vector<Order> orders;
    std::vector<SweepCell> cells;
    std::vector<SweepStats> stats;
};

// 33 log-spaced rates from 0.1/d_max to 10/d_min+ across all datasets, where
// d_min+ is the smallest positive distance. Brackets the reciprocals of the
// extreme distances.
inline std::vector<double> default_k_grid(
    const std::vector<DistanceMatrix>& datasets, int count = 33) {
    if (datasets.empty()) throw Error("k grid needs at least one dataset");
    if (count < 2) throw Error("k grid needs at least two points");
    double d_max = 0.0;
    double d_min = 0.0;
    for (const DistanceMatrix& d : datasets) {
        d_max = std::max(d_max, d.max_distance());
        const double mp = d.min_positive_distance();
        if (mp > 0.0 && (d_min == 0.0 || mp < d_min)) d_min = mp;
    }
    if (d_max <= 0.0 || d_min <= 0.0) {
        throw Error("k grid requires some strictly positive distance");
    }
    const double lo = std::log(0.1 / d_max);
    const double hi = std::log(10.0 / d_min);
    std::vector<double> grid(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        grid[static_cast<std::size_t>(i)] =
            std::exp(lo + (hi - lo) * static_cast<double>(i) /
                              static_cast<double>(count - 1));
    }
    return grid;
}

// For each dataset x k, builds Z = exp(-k d) and evaluates LCR (uniform
// abundance) and VS at each order; then correlates LCR against VS across
// datasets per (k, q). Per-cell failures are recorded and the sweep goes on.
inline SweepResult sweep_half_distance(const std::vector<DistanceMatrix>& datasets,
                                       const std::vector<double>& k_grid,
                                       const std::vector<Order>& orders) {
    if (datasets.empty()) throw Error("sweep requires at least one dataset");
    if (k_grid.empty()) throw Error("sweep requires a nonempty k grid");
    if (orders.empty()) throw Error("sweep requires a nonempty order list");
    for (std::size_t i = 1; i < k_grid.size(); ++i) {
        if (!(k_grid[i] > k_grid[i - 1])) {
            throw Error("k grid must be strictly increasing");
        }
    }

    SweepResult result;
    result.k_grid = k_grid;
    result.orders = orders;
    result.cells.reserve(datasets.size() * k_grid.size() * orders.size());

    for (std::size_t d = 0; d < datasets.size(); ++d) {
        for (double k : k_grid) {
            try {
                const SimilarityMatrix z =
                    kernel_similarity(datasets[d], KernelRate(k));
                const Abundance uniform = Abundance::uniform(z.order());
                const auto lcr_values =
                    lcr_profile(uniform, z, std::span<const Order>(orders));
                const EigenSpectrum spectrum = eigen_spectrum(z);
                const auto vs_values =
                    spectrum_entropy_curve(spectrum, std::span<const Order>(orders));
                for (std::size_t iq = 0; iq < orders.size(); ++iq) {
                    result.cells.push_back({d, k, orders[iq],
                                            lcr_values[iq].second.value,
                                            vs_values[iq].second.value, "ok"});
                }
            } catch (const std::exception& e) {
                for (Order q : orders) {
                    result.cells.push_back({d, k, q, 0.0, 0.0,
                                            std::string("failed: ") + e.what()});
                }
            }
        }
    }

    // Correlation of LCR vs VS across datasets at each (k, q).
    for (double k : k_grid) {
        for (Order q : orders) {
            std::vector<double> xs, ys;
            xs.reserve(datasets.size());
            ys.reserve(datasets.size());
            for (const SweepCell& cell : result.cells) {
                if (cell.k == k && cell.q == q && cell.status == "ok") {
                    xs.push_back(cell.lcr);
                    ys.push_back(cell.vs);
                }
            }
            SweepStats stats;
            stats.k = k;
            stats.q = q;
            if (xs.size() < 3) {
                stats.flag = "failed: fewer than 3 usable datasets";
            } else {
                try {
                    const CorrelationStats cs = correlation_stats(xs, ys);
                    stats.pearson = cs.pearson;
                    stats.r_squared = cs.r_squared;
                    stats.covariance = cs.covariance;
                } catch (const Error&) {
                    // Values collapsed to a point; the extreme-k convention is
                    // a perfect correlation with a degeneracy flag.
                    stats.flag = "degenerate";
                    stats.pearson = 1.0;
                    stats.r_squared = 1.0;
                    double mean_x = 0.0, mean_y = 0.0;
                    for (double v : xs) mean_x += v;
                    for (double v : ys) mean_y += v;
                    mean_x /= static_cast<double>(xs.size());
                    mean_y /= static_cast<double>(ys.size());
                    double sxy = 0.0;
                    for (std::size_t i = 0; i < xs.size(); ++i) {
                        sxy += (xs[i] - mean_x) * (ys[i] - mean_y);
                    }
                    stats.covariance = sxy / static_cast<double>(xs.size() - 1);
                }
            }
            result.stats.push_back(std::move(stats));
        }
    }
    return result;
}

// Verifies the extreme-k regimes on one dataset: both diversities within eps
// of 1 at a small rate and within eps of n at a large rate. The two rates are
// chosen conservatively from the extreme distances so the bounds below hold
// analytically; the report carries the measured values.
struct LimitCheckReport {
    double k_small = 0.0;
    double k_large = 0.0;
    double lcr_at_small = 0.0;
    double vs_at_small = 0.0;
    double lcr_at_large = 0.0;
    double vs_at_large = 0.0;
    double eps = 0.0;
    Index n = 0;
    bool small_ok = false;
    bool large_ok = false;
    bool passed = false;
};

inline LimitCheckReport limit_check(const DistanceMatrix& d, double eps) {
    if (!(eps > 0.0 && eps < 1.0)) throw Error("limit check eps must be in (0,1)");
    const Index n = d.order();
    if (n < 2) throw Error("limit check requires n >= 2");
    const double d_max = d.max_distance();
    const double d_min = d.min_positive_distance();
    if (d_min <= 0.0) {
        throw Error("limit check requires some strictly positive distance");
    }

    LimitCheckReport report;
    report.eps = eps;
    report.n = n;
    const double nd = static_cast<double>(n);
    // Small-k side: 1 - z <= k d_max everywhere; the entropy of the residual
    // spectrum mass delta is at most delta (1 + log(n/delta)).
    const double delta_small = eps / (8.0 * (std::log(nd / eps) + 2.0));
    report.k_small = delta_small / d_max;
    // Large-k side: off-diagonals at most delta; LCR then sits within
    // n^2 delta of n.
    const double delta_large = eps / (8.0 * nd * nd);
    report.k_large = std::log(1.0 / delta_large) / d_min;

    const Abundance uniform = Abundance::uniform(n);
    {
        const SimilarityMatrix z = kernel_similarity(d, KernelRate(report.k_small));
        report.lcr_at_small = lcr_diversity(uniform, z, 1.0).value;
        report.vs_at_small = vendi_score(z, 1.0).value;
    }
    {
        const SimilarityMatrix z = kernel_similarity(d, KernelRate(report.k_large));
        report.lcr_at_large = lcr_diversity(uniform, z, 1.0).value;
        report.vs_at_large = vendi_score(z, 1.0).value;
    }
    report.small_ok = std::abs(report.lcr_at_small - 1.0) <= eps &&
                      std::abs(report.vs_at_small - 1.0) <= eps;
    report.large_ok = std::abs(report.lcr_at_large - nd) <= eps &&
                      std::abs(report.vs_at_large - nd) <= eps;
    report.passed = report.small_ok && report.large_ok;
    return report;
}

}  // namespace simdiv
