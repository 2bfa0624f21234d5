#pragma once

#include "simdiv/common.hpp"
#include "simdiv/diversity.hpp"
#include "simdiv/optimize.hpp"
#include "simdiv/rng.hpp"
#include "simdiv/similarity.hpp"
#include "simdiv/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

// Executable checks of the bounds between the eigenvalue entropy VS_q and
// the uniform-abundance similarity diversity D_q, plus the minimization
// search for counterexamples to VS_q >= D_q over PSD similarity matrices.

namespace simdiv {

inline constexpr double kGapTolerance = 1e-9;

struct GapReport {
    Order q = 1.0;
    double gap = 0.0;  // left side minus right side of "left >= right"
    double vs_value = 0.0;
    double lcr_value = 0.0;
    enum class Verdict { holds, violated, near_zero } verdict = Verdict::near_zero;
};

namespace detail {

inline GapReport::Verdict classify_gap(double gap, double tol) {
    if (gap < -tol) return GapReport::Verdict::violated;
    if (gap <= tol) return GapReport::Verdict::near_zero;
    return GapReport::Verdict::holds;
}

// Eigenvalues of Z itself (not Z/n), ascending.
inline Vector eigenvalues_of(const Matrix& z) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(z, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw Error("symmetric eigendecomposition did not converge");
    }
    return solver.eigenvalues();
}

}  // namespace detail

// Maps free parameters x (r x n) to a PSD similarity matrix Z = w'w where
// column j of w is exp(x_.j) normalized to unit length. Shifting any column
// of x by a constant leaves Z unchanged (per-column max is subtracted before
// exponentiation).
inline SimilarityMatrix gram_from_parameters(const Matrix& x) {
    const Index r = x.rows();
    const Index n = x.cols();
    if (r < 2 || n < 2) {
        throw Error("gram parameterization requires r >= 2 and n >= 2, got r=" +
                    std::to_string(r) + ", n=" + std::to_string(n));
    }
    Matrix w(r, n);
    for (Index j = 0; j < n; ++j) {
        const double shift = x.col(j).maxCoeff();
        if (!std::isfinite(shift)) {
            throw Error("gram parameters contain a non-finite value in column " +
                        std::to_string(j));
        }
        for (Index i = 0; i < r; ++i) w(i, j) = std::exp(x(i, j) - shift);
        w.col(j) /= w.col(j).norm();
    }
    Matrix z = w.transpose() * w;
    for (Index j = 0; j < n; ++j) {
        z(j, j) = 1.0;
        for (Index i = 0; i < j; ++i) {
            const double v = std::min(1.0, std::max(0.0, z(i, j)));
            z(i, j) = v;
            z(j, i) = v;
        }
    }
    Provenance prov;
    prov.source = Provenance::Source::gram;
    return SimilarityMatrix::adopt(std::move(z), std::move(prov));
}

// gap = VS_q(Z) - D_q(Z, uniform); the conjectured inequality is gap >= 0.
inline GapReport vs_lcr_gap(const SimilarityMatrix& z, Order q,
                            double gap_tol = kGapTolerance) {
    GapReport report;
    report.q = q;
    report.vs_value = vendi_score(z, q).value;
    report.lcr_value = lcr_diversity(Abundance::uniform(z.order()), z, q).value;
    report.gap = report.vs_value - report.lcr_value;
    report.verdict = detail::classify_gap(report.gap, gap_tol);
    return report;
}

// The three proven orders, evaluated through their closed forms:
//   q=2:   VS = n^2 / sum(Z.^2),      D = n^2 / sum(Z)
//   q=3:   VS = sqrt(n^3 / tr(Z^3)),  D = sqrt(n^3 / sum(rowsum^2))
//   q=inf: VS = n / lambda_max,       D = n / max rowsum
struct ClosedFormGaps {
    GapReport at_2;
    GapReport at_3;
    GapReport at_inf;
};

inline ClosedFormGaps closed_form_gaps(const SimilarityMatrix& z,
                                       double gap_tol = kGapTolerance) {
    const double n = static_cast<double>(z.order());
    const Matrix& m = z.matrix();
    const Vector row_sums = m.rowwise().sum();

    ClosedFormGaps gaps;
    gaps.at_2.q = 2.0;
    gaps.at_2.vs_value = n * n / m.array().square().sum();
    gaps.at_2.lcr_value = n * n / m.sum();

    gaps.at_3.q = 3.0;
    const double trace_cubed = (m * m).cwiseProduct(m).sum();
    gaps.at_3.vs_value = std::sqrt(n * n * n / trace_cubed);
    gaps.at_3.lcr_value = std::sqrt(n * n * n / row_sums.squaredNorm());

    gaps.at_inf.q = order::infinity;
    const Vector eigenvalues = detail::eigenvalues_of(m);
    gaps.at_inf.vs_value = n / eigenvalues(eigenvalues.size() - 1);
    gaps.at_inf.lcr_value = n / row_sums.maxCoeff();

    for (GapReport* report : {&gaps.at_2, &gaps.at_3, &gaps.at_inf}) {
        report->gap = report->vs_value - report->lcr_value;
        report->verdict = detail::classify_gap(report->gap, gap_tol);
    }
    return gaps;
}

// For full-rank Z and q <= 0, VS_q >= n >= D_q. Full rank means the smallest
// eigenvalue of Z/n exceeds 1e-10.
struct LowOrderSandwich {
    Order q = 0.0;
    double vs_value = 0.0;
    double order_n = 0.0;
    double lcr_value = 0.0;
    bool holds = false;
};

inline LowOrderSandwich low_order_sandwich(const SimilarityMatrix& z, Order q,
                                           double tol = kGapTolerance) {
    order::require_valid(q);
    if (q > 0.0) {
        throw Error("low-order sandwich applies to q <= 0, got q = " +
                    std::to_string(q));
    }
    const double n = static_cast<double>(z.order());
    const double min_scaled = detail::eigenvalues_of(z.matrix())(0) / n;
    if (!(min_scaled > 1e-10)) {
        throw Error("similarity matrix is not full rank: smallest eigenvalue of "
                    "Z/n is " + std::to_string(min_scaled));
    }
    LowOrderSandwich result;
    result.q = q;
    result.order_n = n;
    result.vs_value = vendi_score(z, q).value;
    result.lcr_value = lcr_diversity(Abundance::uniform(z.order()), z, q).value;
    result.holds = result.vs_value >= n - tol && n >= result.lcr_value - tol;
    return result;
}

// Proven reverse bound: VS_1(Z) <= (sum(Z)/n) * D_1(Z, uniform).
// gap = (T/n) D_1 - VS_1; a violation is an implementation bug.
inline GapReport mean_similarity_bound(const SimilarityMatrix& z,
                                       double gap_tol = kGapTolerance) {
    GapReport report;
    report.q = 1.0;
    report.vs_value = vendi_score(z, 1.0).value;
    report.lcr_value = lcr_diversity(Abundance::uniform(z.order()), z, 1.0).value;
    const double mean_row_mass = z.matrix().sum() / static_cast<double>(z.order());
    report.gap = mean_row_mass * report.lcr_value - report.vs_value;
    report.verdict = detail::classify_gap(report.gap, gap_tol);
    return report;
}

struct PowerInequality {
    double exponent = 0.0;
    double lhs = 0.0;
    double rhs = 0.0;
    double gap = 0.0;  // signed so that >= 0 means the inequality holds
    bool holds = false;
    std::string relation;
};

// tr(Z^q) vs sum_i rowsum_i^(q-1): conjectured <= for q > 1 and >= for q < 1.
// Matrix powers go through the eigenvalues; a rank-deficient Z is rejected
// for q < 1 since fractional or negative powers of zero are undefined.
inline PowerInequality trace_power_gap(const SimilarityMatrix& z, Order q,
                                       double tol = kGapTolerance) {
    order::require_valid(q);
    if (!std::isfinite(q) || q == 1.0) {
        throw Error("trace power inequality requires finite q != 1");
    }
    Vector eigenvalues = detail::eigenvalues_of(z.matrix());
    const double n = static_cast<double>(z.order());
    if (q < 1.0 && eigenvalues(0) / n <= kSpectrumTruncation) {
        throw Error("trace power inequality at q < 1 requires full rank; "
                    "smallest eigenvalue of Z/n is " +
                    std::to_string(eigenvalues(0) / n));
    }
    double trace_power = 0.0;
    const bool integral = q == std::floor(q);
    for (Index i = 0; i < eigenvalues.size(); ++i) {
        // Roundoff can leave tiny negatives on a PSD spectrum; clamp them
        // before fractional powers.
        const double lam = integral ? eigenvalues(i) : std::max(0.0, eigenvalues(i));
        trace_power += std::pow(lam, q);
    }
    const Vector row_sums = z.matrix().rowwise().sum();
    double row_side = 0.0;
    for (Index i = 0; i < row_sums.size(); ++i) {
        row_side += std::pow(row_sums(i), q - 1.0);
    }
    PowerInequality result;
    result.exponent = q;
    result.lhs = trace_power;
    result.rhs = row_side;
    result.gap = (q > 1.0) ? row_side - trace_power : trace_power - row_side;
    result.holds = result.gap >= -tol;
    result.relation = (q > 1.0) ? "tr(Z^q) <= sum(rowsum^(q-1))"
                                : "tr(Z^q) >= sum(rowsum^(q-1))";
    return result;
}

// 1'M^a 1 <= 1'(M1)^a for symmetric M with entries in [0,1] and a >= 0.
// Non-integer a on a materially non-PSD M is rejected.
inline PowerInequality rowsum_power_gap(const Matrix& m, double alpha,
                                        double tol = kGapTolerance) {
    if (m.rows() != m.cols()) throw Error("matrix must be square");
    if (!(std::isfinite(alpha) && alpha >= 0.0)) {
        throw Error("exponent must be finite and >= 0, got " + std::to_string(alpha));
    }
    const Index n = m.rows();
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            if (!std::isfinite(m(i, j)) || m(i, j) < 0.0 || m(i, j) > 1.0) {
                throw Error("matrix entry (" + std::to_string(i) + "," +
                            std::to_string(j) + ") outside [0,1]");
            }
            if (i < j && std::abs(m(i, j) - m(j, i)) > kSymmetryTolerance) {
                throw Error("matrix asymmetric at (" + std::to_string(i) + "," +
                            std::to_string(j) + ")");
            }
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(m);
    if (solver.info() != Eigen::Success) {
        throw Error("symmetric eigendecomposition did not converge");
    }
    const Vector& eigenvalues = solver.eigenvalues();
    const bool integral = alpha == std::floor(alpha);
    if (!integral &&
        eigenvalues(0) < -kDefaultPsdTolerance * static_cast<double>(n)) {
        throw Error("fractional power of a materially non-PSD matrix is "
                    "undefined; smallest eigenvalue " +
                    std::to_string(eigenvalues(0)));
    }
    const Vector ones_projection = solver.eigenvectors().transpose() * Vector::Ones(n);
    double quadratic = 0.0;
    for (Index i = 0; i < n; ++i) {
        const double lam =
            integral ? eigenvalues(i) : std::max(0.0, eigenvalues(i));
        quadratic += std::pow(lam, alpha) * ones_projection(i) * ones_projection(i);
    }
    const Vector row_sums = m.rowwise().sum();
    double row_side = 0.0;
    for (Index i = 0; i < n; ++i) row_side += std::pow(row_sums(i), alpha);

    PowerInequality result;
    result.exponent = alpha;
    result.lhs = quadratic;
    result.rhs = row_side;
    result.gap = row_side - quadratic;
    result.holds = result.gap >= -tol;
    result.relation = "1'M^a 1 <= 1'(M1)^a";
    return result;
}

// ---------------------------------------------------------------------------
// Counterexample search: minimize VS_q(Z(x)) - D_q(Z(x), uniform) over the
// gram parameterization from normally drawn starting points. A negative
// minimum that survives re-verification is a research finding.
// ---------------------------------------------------------------------------

struct SearchGrid {
    std::vector<Order> orders;
    std::vector<int> sizes;
    std::vector<double> scales;
    int replicates = 5;

    // {2, floor(n/2), n} with r = 1 removed and duplicates collapsed.
    static std::vector<int> gram_ranks(int n) {
        std::vector<int> ranks;
        for (int r : {2, n / 2, n}) {
            if (r > 1 && std::find(ranks.begin(), ranks.end(), r) == ranks.end()) {
                ranks.push_back(r);
            }
        }
        std::sort(ranks.begin(), ranks.end());
        return ranks;
    }

    // Small grid suitable for routine runs: 210 minimizations.
    static SearchGrid desk() {
        SearchGrid grid;
        grid.orders = {-2.0, 0.0, 1.0, 2.7, 5.0};
        grid.sizes = {3, 5, 10};
        grid.scales = {0.1, 1.0, 10.0};
        grid.replicates = 2;
        return grid;
    }

    // The full published grid: 4420 minimizations, hours of compute.
    static SearchGrid reference() {
        SearchGrid grid;
        grid.orders = {-10.0, -2.7, -2.0, -1.0, -0.3, 0.0, 0.3, 1.0, 2.7,
                       3.4, 4.0, 5.0, 2.0 * 3.14159265358979323846, 7.0,
                       8.0, 9.1, 10.0};
        grid.sizes = {3, 5, 10, 20, 50};
        grid.scales = {0.1, 1.0, 2.0, 10.0};
        grid.replicates = 5;
        return grid;
    }

    std::size_t minimization_count() const {
        std::size_t pairs = 0;
        for (int n : sizes) pairs += gram_ranks(n).size();
        return orders.size() * pairs * scales.size() *
               static_cast<std::size_t>(replicates);
    }
};

enum class SearchStatus { converged, failed, counterexample_candidate };

inline const char* search_status_name(SearchStatus status) {
    switch (status) {
        case SearchStatus::converged: return "converged";
        case SearchStatus::failed: return "failed";
        case SearchStatus::counterexample_candidate:
            return "counterexample_candidate";
    }
    return "unknown";
}

struct SearchRecord {
    Order q = 0.0;
    int n = 0;
    int r = 0;
    double scale = 0.0;
    int replicate = 0;
    std::uint64_t seed = 0;
    std::vector<double> initial_x;
    double gap = std::numeric_limits<double>::quiet_NaN();
    double confirmed_gap = std::numeric_limits<double>::quiet_NaN();
    Matrix minimizer;  // Z at the minimum; empty when the point failed
    int iterations = 0;
    SearchStatus status = SearchStatus::failed;
};

struct SearchSettings {
    std::uint64_t seed = 1;
    double flag_threshold = 1e-6;     // minimized gap below -this triggers re-check
    double confirm_threshold = 1e-9;  // confirmed gap below -this flags a candidate
    MinimizeOptions optimizer{};
    int threads = 1;
};

namespace detail {

inline SearchRecord run_search_point(Order q, int n, int r, double scale,
                                     int replicate, std::uint64_t seed,
                                     const SearchSettings& settings) {
    SearchRecord record;
    record.q = q;
    record.n = n;
    record.r = r;
    record.scale = scale;
    record.replicate = replicate;
    record.seed = seed;

    Rng rng(seed);
    Vector x0(static_cast<Index>(r) * n);
    for (Index i = 0; i < x0.size(); ++i) x0(i) = scale * rng.normal();
    record.initial_x.assign(x0.data(), x0.data() + x0.size());

    const Objective objective = [q, n, r](const Vector& flat) {
        const Eigen::Map<const Matrix> x(flat.data(), r, n);
        const SimilarityMatrix z = gram_from_parameters(x);
        return vendi_score(z, q).value -
               lcr_diversity(Abundance::uniform(n), z, q).value;
    };

    try {
        MinimizeResult best = minimize_bfgs(objective, x0, settings.optimizer);
        record.gap = best.value;
        record.confirmed_gap = best.value;
        record.iterations = best.iterations;
        record.status = SearchStatus::converged;
        const Eigen::Map<const Matrix> x_min(best.x.data(), r, n);
        record.minimizer = gram_from_parameters(x_min).matrix();
        if (best.value < -settings.flag_threshold) {
            MinimizeOptions tight = settings.optimizer;
            tight.gradient_tolerance *= 1e-2;
            tight.max_iterations *= 2;
            MinimizeResult polished = minimize_bfgs(objective, best.x, tight);
            record.confirmed_gap = polished.value;
            record.iterations += polished.iterations;
            if (polished.value < -settings.confirm_threshold) {
                record.status = SearchStatus::counterexample_candidate;
                const Eigen::Map<const Matrix> x_conf(polished.x.data(), r, n);
                record.minimizer = gram_from_parameters(x_conf).matrix();
            }
        }
    } catch (const std::exception&) {
        record.status = SearchStatus::failed;  // search continues past this point
    }
    return record;
}

}  // namespace detail

// Runs every grid point x replicate, in deterministic lexicographic order
// (orders, sizes, ranks, scales, replicates). Each unit derives its own seed
// from the master seed, so results do not depend on thread count. Returned
// records are in grid order; on_record fires as units finish.
inline std::vector<SearchRecord> counterexample_search(
    const SearchGrid& grid, const SearchSettings& settings,
    const std::function<void(const SearchRecord&)>& on_record = nullptr) {
    if (grid.orders.empty() || grid.sizes.empty() || grid.scales.empty() ||
        grid.replicates < 1) {
        throw Error("search grid must have orders, sizes, scales, and replicates");
    }
    for (int n : grid.sizes) {
        if (n < 2) throw Error("grid sizes must be >= 2");
    }

    struct Point {
        Order q;
        int n, r;
        double scale;
        int replicate;
        std::uint64_t seed;
    };
    std::vector<Point> points;
    points.reserve(grid.minimization_count());
    std::uint64_t index = 0;
    for (Order q : grid.orders) {
        for (int n : grid.sizes) {
            for (int r : SearchGrid::gram_ranks(n)) {
                for (double scale : grid.scales) {
                    for (int rep = 1; rep <= grid.replicates; ++rep) {
                        points.push_back(
                            {q, n, r, scale, rep, split_seed(settings.seed, index)});
                        ++index;
                    }
                }
            }
        }
    }

    std::vector<SearchRecord> records(points.size());
    std::atomic<std::size_t> next{0};
    std::mutex stream_mutex;
    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= points.size()) return;
            const Point& pt = points[i];
            records[i] = detail::run_search_point(pt.q, pt.n, pt.r, pt.scale,
                                                  pt.replicate, pt.seed, settings);
            if (on_record) {
                std::lock_guard<std::mutex> lock(stream_mutex);
                on_record(records[i]);
            }
        }
    };

    const int thread_count = std::max(1, settings.threads);
    if (thread_count == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(thread_count));
        for (int t = 0; t < thread_count; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return records;
}

}  // namespace simdiv
