#pragma once

#include "simdiv/common.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

// Similarity-matrix construction: pairwise distances, the exponential
// distance kernel z = exp(-k d), validation of user-supplied matrices,
// PSD checks, and expansion from unique elements to full observations.

namespace simdiv {

inline constexpr double kSymmetryTolerance = 1e-12;   // absolute, per entry
inline constexpr double kDefaultPsdTolerance = 1e-10; // scaled by n inside check_psd

enum class Metric { euclidean };

inline const char* metric_name(Metric m) {
    switch (m) {
        case Metric::euclidean: return "euclidean";
    }
    return "unknown";
}

// Positive finite rate of the exponential distance kernel. Adding ln2/k to a
// pairwise distance halves the similarity, hence "half-distance" rate.
class KernelRate {
public:
    explicit KernelRate(double value) : value_(value) {
        if (!(std::isfinite(value) && value > 0.0)) {
            throw Error("kernel rate k must be positive and finite, got " +
                        std::to_string(value));
        }
    }
    double value() const { return value_; }

private:
    double value_;
};

// k = 1/sqrt(d): makes the kernel's exponent the root-mean-square distance.
inline KernelRate rmsd_rate(Index dimension) {
    if (dimension < 1) throw Error("rmsd rate requires dimension >= 1");
    return KernelRate(1.0 / std::sqrt(static_cast<double>(dimension)));
}

struct Provenance {
    enum class Source { user, kernel, gram, expanded };
    Source source = Source::user;
    double kernel_rate = 0.0;  // meaningful when source == kernel
    std::string metric;        // meaningful when source == kernel

    std::string describe() const {
        switch (source) {
            case Source::kernel: {
                std::ostringstream out;
                out << "exp(-k d) kernel, k=" << kernel_rate << ", metric=" << metric;
                return out.str();
            }
            case Source::gram: return "gram parameterization";
            case Source::expanded: return "expanded from unique elements";
            case Source::user: return "user-supplied";
        }
        return "unknown";
    }
};

struct SimilarityViolation {
    enum class Kind { nonfinite, asymmetry, diagonal, range };
    Kind kind;
    Index row = -1;
    Index col = -1;
    double value = 0.0;
    double magnitude = 0.0;  // how far past the invariant the entry lies

    std::string describe() const {
        std::ostringstream out;
        switch (kind) {
            case Kind::nonfinite: out << "non-finite entry"; break;
            case Kind::asymmetry: out << "asymmetry"; break;
            case Kind::diagonal:  out << "non-unit diagonal"; break;
            case Kind::range:     out << "entry outside [0,1]"; break;
        }
        out << " at (" << row << "," << col << "), value " << value
            << ", magnitude " << magnitude;
        return out.str();
    }
};

// Validation outcome for a raw candidate similarity matrix: per-invariant
// violation counts, the worst offender of each kind, and a capped sample of
// individual violations.
struct SimilarityValidation {
    bool valid = true;
    std::size_t nonfinite_count = 0;
    std::size_t asymmetry_count = 0;
    std::size_t diagonal_count = 0;
    std::size_t range_count = 0;
    std::vector<SimilarityViolation> worst;    // at most one per kind
    std::vector<SimilarityViolation> samples;  // capped listing

    std::string summary() const {
        if (valid) return "valid similarity matrix";
        std::ostringstream out;
        out << "invalid similarity matrix:";
        if (nonfinite_count) out << " " << nonfinite_count << " non-finite;";
        if (asymmetry_count) out << " " << asymmetry_count << " asymmetric;";
        if (diagonal_count) out << " " << diagonal_count << " non-unit diagonal;";
        if (range_count) out << " " << range_count << " outside [0,1];";
        for (const auto& v : worst) out << "\n  worst " << v.describe();
        return out.str();
    }
};

inline SimilarityValidation validate_similarity(const Matrix& raw) {
    if (raw.rows() != raw.cols()) {
        throw Error("similarity matrix must be square, got " +
                    std::to_string(raw.rows()) + "x" + std::to_string(raw.cols()));
    }
    if (raw.rows() < 1) throw Error("similarity matrix must be at least 1x1");

    constexpr std::size_t kSampleCap = 32;
    SimilarityValidation report;
    SimilarityViolation worst_by_kind[4];
    bool seen_kind[4] = {false, false, false, false};

    auto record = [&](SimilarityViolation v) {
        report.valid = false;
        const auto slot = static_cast<std::size_t>(v.kind);
        if (!seen_kind[slot] || v.magnitude > worst_by_kind[slot].magnitude) {
            worst_by_kind[slot] = v;
            seen_kind[slot] = true;
        }
        if (report.samples.size() < kSampleCap) report.samples.push_back(v);
    };

    const Index n = raw.rows();
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < n; ++i) {
            const double v = raw(i, j);
            if (!std::isfinite(v)) {
                ++report.nonfinite_count;
                record({SimilarityViolation::Kind::nonfinite, i, j, v, 0.0});
                continue;
            }
            if (i == j) {
                if (v != 1.0) {
                    ++report.diagonal_count;
                    record({SimilarityViolation::Kind::diagonal, i, j, v,
                            std::abs(v - 1.0)});
                }
            } else if (v < 0.0 || v > 1.0) {
                ++report.range_count;
                record({SimilarityViolation::Kind::range, i, j, v,
                        std::max(-v, v - 1.0)});
            }
            if (i < j) {
                const double mirrored = raw(j, i);
                if (std::isfinite(mirrored)) {
                    const double gap = std::abs(v - mirrored);
                    if (gap > kSymmetryTolerance) {
                        ++report.asymmetry_count;
                        record({SimilarityViolation::Kind::asymmetry, i, j, v, gap});
                    }
                }
            }
        }
    }
    for (std::size_t k = 0; k < 4; ++k) {
        if (seen_kind[k]) report.worst.push_back(worst_by_kind[k]);
    }
    return report;
}

enum class PsdStatus { unchecked, verified, failed };

struct PsdCheck {
    bool is_psd = false;
    double min_eigenvalue = 0.0;
};

// Symmetric matrix with unit diagonal and entries in [0,1]. Construction
// always validates; the named builders below produce matrices that are exact
// by construction.
class SimilarityMatrix {
public:
    static SimilarityMatrix adopt(Matrix z, Provenance provenance = {}) {
        SimilarityValidation report = validate_similarity(z);
        if (!report.valid) throw Error(report.summary());
        return SimilarityMatrix(std::move(z), std::move(provenance));
    }

    const Matrix& matrix() const { return z_; }
    Index order() const { return z_.rows(); }
    const Provenance& provenance() const { return provenance_; }
    PsdStatus psd_status() const { return psd_status_; }

    // True iff the smallest eigenvalue is >= -tol * n. Caches the verdict.
    PsdCheck check_psd(double tol = kDefaultPsdTolerance) const {
        Eigen::SelfAdjointEigenSolver<Matrix> solver(z_, Eigen::EigenvaluesOnly);
        if (solver.info() != Eigen::Success) {
            throw Error("eigensolver failed during PSD check (order " +
                        std::to_string(order()) + ")");
        }
        PsdCheck check;
        check.min_eigenvalue = solver.eigenvalues()(0);
        check.is_psd =
            check.min_eigenvalue >= -tol * static_cast<double>(order());
        psd_status_ = check.is_psd ? PsdStatus::verified : PsdStatus::failed;
        return check;
    }

private:
    SimilarityMatrix(Matrix z, Provenance provenance)
        : z_(std::move(z)), provenance_(std::move(provenance)) {}

    Matrix z_;
    Provenance provenance_;
    mutable PsdStatus psd_status_ = PsdStatus::unchecked;
};

inline PsdCheck is_psd(const SimilarityMatrix& z, double tol = kDefaultPsdTolerance) {
    return z.check_psd(tol);
}

// Symmetric nonnegative matrix with zero diagonal. A diagonal entry within
// 1e-12 of zero is forced to exactly zero on adoption.
class DistanceMatrix {
public:
    static DistanceMatrix adopt(Matrix d, std::string metric = "user") {
        if (d.rows() != d.cols()) {
            throw Error("distance matrix must be square, got " +
                        std::to_string(d.rows()) + "x" + std::to_string(d.cols()));
        }
        const Index n = d.rows();
        if (n < 1) throw Error("distance matrix must be at least 1x1");
        for (Index j = 0; j < n; ++j) {
            for (Index i = 0; i < n; ++i) {
                const double v = d(i, j);
                if (!std::isfinite(v)) {
                    throw Error("distance matrix has non-finite entry at (" +
                                std::to_string(i) + "," + std::to_string(j) + ")");
                }
                if (v < 0.0) {
                    throw Error("distance matrix has negative entry at (" +
                                std::to_string(i) + "," + std::to_string(j) +
                                "): " + std::to_string(v));
                }
                if (i == j && v != 0.0) {
                    if (v > kSymmetryTolerance) {
                        throw Error("distance matrix diagonal must be zero, entry (" +
                                    std::to_string(i) + "," + std::to_string(i) +
                                    ") is " + std::to_string(v));
                    }
                    d(i, i) = 0.0;
                }
                if (i < j && std::abs(v - d(j, i)) > kSymmetryTolerance) {
                    throw Error("distance matrix asymmetric at (" + std::to_string(i) +
                                "," + std::to_string(j) + "): |" + std::to_string(v) +
                                " - " + std::to_string(d(j, i)) + "|");
                }
            }
        }
        return DistanceMatrix(std::move(d), std::move(metric));
    }

    const Matrix& matrix() const { return d_; }
    Index order() const { return d_.rows(); }
    const std::string& metric() const { return metric_; }

    double max_distance() const { return d_.maxCoeff(); }

    // Smallest strictly positive entry; 0 when all entries are zero.
    double min_positive_distance() const {
        double best = 0.0;
        for (Index j = 0; j < d_.cols(); ++j) {
            for (Index i = 0; i < j; ++i) {
                const double v = d_(i, j);
                if (v > 0.0 && (best == 0.0 || v < best)) best = v;
            }
        }
        return best;
    }

private:
    DistanceMatrix(Matrix d, std::string metric)
        : d_(std::move(d)), metric_(std::move(metric)) {}

    Matrix d_;
    std::string metric_;
};

// Relative frequencies over unique elements: nonnegative, summing to 1
// within 1e-12 (checked with compensated summation).
class Abundance {
public:
    explicit Abundance(Vector p) : p_(std::move(p)) {
        if (p_.size() < 1) throw Error("abundance vector must be nonempty");
        for (Index i = 0; i < p_.size(); ++i) {
            const double v = p_(i);
            if (!std::isfinite(v) || v < 0.0) {
                throw Error("abundance entry " + std::to_string(i) +
                            " must be finite and nonnegative, got " +
                            std::to_string(v));
            }
        }
        const double total =
            detail::compensated_sum(p_.size(), [&](Index i) { return p_(i); });
        if (std::abs(total - 1.0) > 1e-12) {
            throw Error("abundance must sum to 1 within 1e-12, got sum " +
                        std::to_string(total));
        }
    }

    static Abundance uniform(Index n) {
        if (n < 1) throw Error("uniform abundance requires n >= 1");
        return Abundance(Vector::Constant(n, 1.0 / static_cast<double>(n)));
    }

    static Abundance from_counts(const std::vector<std::int64_t>& counts) {
        if (counts.empty()) throw Error("counts must be nonempty");
        long double total = 0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            if (counts[i] < 0) {
                throw Error("count " + std::to_string(i) + " is negative");
            }
            total += static_cast<long double>(counts[i]);
        }
        if (total <= 0) throw Error("counts must include a positive entry");
        Vector p(static_cast<Index>(counts.size()));
        for (std::size_t i = 0; i < counts.size(); ++i) {
            p(static_cast<Index>(i)) = static_cast<double>(
                static_cast<long double>(counts[i]) / total);
        }
        return Abundance(std::move(p));
    }

    Index size() const { return p_.size(); }
    double operator[](Index i) const { return p_(i); }
    const Vector& vector() const { return p_; }

    Index support_size() const {
        Index m = 0;
        for (Index i = 0; i < p_.size(); ++i) m += (p_(i) > 0.0) ? 1 : 0;
        return m;
    }

private:
    Vector p_;
};

// Euclidean pairwise distances. Only the upper triangle is computed and
// mirrored, so the result is exactly symmetric.
inline DistanceMatrix pairwise_distances(const Matrix& features,
                                         Metric metric = Metric::euclidean) {
    if (features.rows() < 1 || features.cols() < 1) {
        throw Error("feature matrix must have at least one row and one column");
    }
    for (Index i = 0; i < features.rows(); ++i) {
        for (Index j = 0; j < features.cols(); ++j) {
            if (!std::isfinite(features(i, j))) {
                throw Error("feature matrix has non-finite value at row " +
                            std::to_string(i) + ", column " + std::to_string(j));
            }
        }
    }
    const Index n = features.rows();
    Matrix d = Matrix::Zero(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = i + 1; j < n; ++j) {
            const double dist = (features.row(i) - features.row(j)).norm();
            d(i, j) = dist;
            d(j, i) = dist;
        }
    }
    return DistanceMatrix::adopt(std::move(d), metric_name(metric));
}

// z_ij = exp(-k d_ij), diagonal forced to exactly 1. Off-diagonal underflow
// to 0 at huge k is accepted; the large-k limit is the identity matrix.
inline SimilarityMatrix kernel_similarity(const DistanceMatrix& d, KernelRate k) {
    const Index n = d.order();
    Matrix z(n, n);
    for (Index i = 0; i < n; ++i) {
        z(i, i) = 1.0;
        for (Index j = i + 1; j < n; ++j) {
            const double v = std::exp(-k.value() * d.matrix()(i, j));
            z(i, j) = v;
            z(j, i) = v;
        }
    }
    Provenance prov;
    prov.source = Provenance::Source::kernel;
    prov.kernel_rate = k.value();
    prov.metric = d.metric();
    return SimilarityMatrix::adopt(std::move(z), std::move(prov));
}

// Expands a similarity matrix over m unique elements to order n = sum(counts),
// repeating each unique element contiguously in input order.
inline SimilarityMatrix expand_to_zn(const SimilarityMatrix& z,
                                     const std::vector<std::int64_t>& counts) {
    const Index m = z.order();
    if (static_cast<Index>(counts.size()) != m) {
        throw Error("counts length " + std::to_string(counts.size()) +
                    " does not match similarity order " + std::to_string(m));
    }
    std::int64_t total = 0;
    for (std::size_t u = 0; u < counts.size(); ++u) {
        if (counts[u] < 1) {
            throw Error("count for unique element " + std::to_string(u) +
                        " must be >= 1, got " + std::to_string(counts[u]));
        }
        total += counts[u];
    }
    const Index n = static_cast<Index>(total);
    std::vector<Index> block(static_cast<std::size_t>(n));
    Index pos = 0;
    for (Index u = 0; u < m; ++u) {
        for (std::int64_t c = 0; c < counts[static_cast<std::size_t>(u)]; ++c) {
            block[static_cast<std::size_t>(pos++)] = u;
        }
    }
    Matrix zn(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            zn(i, j) = z.matrix()(block[static_cast<std::size_t>(i)],
                                  block[static_cast<std::size_t>(j)]);
        }
    }
    Provenance prov;
    prov.source = Provenance::Source::expanded;
    return SimilarityMatrix::adopt(std::move(zn), std::move(prov));
}

}  // namespace simdiv
