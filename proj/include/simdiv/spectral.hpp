#pragma once

#include "simdiv/common.hpp"
#include "simdiv/similarity.hpp"

#include <Eigen/Eigenvalues>

#include <ostream>
#include <span>
#include <utility>
#include <vector>

// Eigenspectrum of Z/n and the Vendi scores VS_q computed from it: the
// Renyi entropy, in effective-number form, of the positive eigenvalues of
// the unit-trace-normalized similarity matrix.

namespace simdiv {

// Eigenvalues of Z/n at or below this are dropped as numerically nonpositive.
inline constexpr double kSpectrumTruncation = 1e-12;

// A smallest eigenvalue of Z/n below -1e-8 (i.e. below -1e-8 * n on Z's own
// spectrum) means Z is materially non-PSD and VS is ill-defined on it.
inline constexpr double kMaterialNegativity = 1e-8;

struct EigenSpectrum {
    Vector values;               // retained eigenvalues of Z/n, nonincreasing
    Index order = 0;             // n
    Index truncated = 0;         // eigenvalues dropped as nonpositive
    double trace_deficit = 0.0;  // 1 - sum(retained); not renormalized away
    double min_raw = 0.0;        // smallest eigenvalue before truncation
    bool materially_non_psd = false;
};

inline EigenSpectrum eigen_spectrum(const SimilarityMatrix& z) {
    const Index n = z.order();
    const double scale = static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Matrix> solver(z.matrix() / scale,
                                                 Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw Error("symmetric eigendecomposition did not converge (order " +
                    std::to_string(n) + ")");
    }
    const Vector& ascending = solver.eigenvalues();

    // Solver contract checks: unit trace and the Gershgorin row-sum bound.
    const double trace =
        detail::compensated_sum(n, [&](Index i) { return ascending(i); });
    if (std::abs(trace - 1.0) > 1e-9) {
        throw Error("eigenvalue sum " + std::to_string(trace) +
                    " deviates from the unit trace of Z/n beyond 1e-9");
    }
    const double max_row_sum = z.matrix().rowwise().sum().maxCoeff();
    if (ascending(n - 1) * scale > max_row_sum + 1e-9 * scale) {
        throw Error("largest eigenvalue " + std::to_string(ascending(n - 1) * scale) +
                    " exceeds the Gershgorin row-sum bound " +
                    std::to_string(max_row_sum));
    }

    EigenSpectrum spectrum;
    spectrum.order = n;
    spectrum.min_raw = ascending(0);
    spectrum.materially_non_psd = ascending(0) < -kMaterialNegativity;

    Index retained = 0;
    for (Index i = 0; i < n; ++i) {
        if (ascending(i) > kSpectrumTruncation) ++retained;
    }
    spectrum.truncated = n - retained;
    spectrum.values.resize(retained);
    for (Index i = 0; i < retained; ++i) {
        spectrum.values(i) = ascending(n - 1 - i);
    }
    spectrum.trace_deficit =
        1.0 - detail::compensated_sum(retained, [&](Index i) {
            return spectrum.values(i);
        });
    return spectrum;
}

// VS_q over the retained spectrum. At q=0 this is the retained rank; the
// truncated trace deficit is reported, never silently renormalized.
inline EffectiveNumber vendi_from_spectrum(const EigenSpectrum& spectrum, Order q) {
    order::require_valid(q);
    const Index count = spectrum.values.size();
    if (count < 1) throw Error("spectrum has no retained eigenvalues");

    if (order::effectively_infinite(q)) {
        const double extreme =
            (q > 0) ? spectrum.values(0) : spectrum.values(count - 1);
        return EffectiveNumber::from_log(-std::log(extreme));
    }
    if (order::effectively_one(q)) {
        double h = 0.0;
        for (Index i = 0; i < count; ++i) {
            h -= spectrum.values(i) * std::log(spectrum.values(i));
        }
        return EffectiveNumber::from_log(h);
    }
    const double log_sum = detail::log_sum_exp(
        count, [&](Index i) { return q * std::log(spectrum.values(i)); });
    return EffectiveNumber::from_log(log_sum / (1.0 - q));
}

inline EffectiveNumber vendi_score(const SimilarityMatrix& z, Order q) {
    return vendi_from_spectrum(eigen_spectrum(z), q);
}

// Reuses one decomposition across orders.
inline std::vector<std::pair<Order, EffectiveNumber>> spectrum_entropy_curve(
    const EigenSpectrum& spectrum, std::span<const Order> orders) {
    if (orders.empty()) throw Error("order list must be nonempty");
    std::vector<std::pair<Order, EffectiveNumber>> results;
    results.reserve(orders.size());
    for (Order q : orders) {
        results.emplace_back(q, vendi_from_spectrum(spectrum, q));
    }
    return results;
}

// CSV rows (rank from 1, eigenvalue, cumulative share), log-log plottable.
inline void write_spectrum_csv(const EigenSpectrum& spectrum, std::ostream& out) {
    out << "rank,eigenvalue,cumulative_share\n";
    char line[96];
    double cumulative = 0.0;
    for (Index i = 0; i < spectrum.values.size(); ++i) {
        cumulative += spectrum.values(i);
        std::snprintf(line, sizeof(line), "%lld,%.17g,%.17g\n",
                      static_cast<long long>(i + 1), spectrum.values(i), cumulative);
        out << line;
    }
}

}  // namespace simdiv
