#pragma once

#include "simdiv/simdiv.hpp"

// Shared generators and independent oracles for the test suite. The oracles
// evaluate the defining formulas directly (plain power sums, explicit loops)
// so they share no code path with the library implementations they check.

namespace testsupport {

using namespace simdiv;

inline Matrix random_parameters(Rng& rng, int r, int n, double scale = 1.0) {
    Matrix x(r, n);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = scale * rng.normal();
    return x;
}

inline SimilarityMatrix random_gram(Rng& rng, int n, int r, double scale = 1.0) {
    return gram_from_parameters(random_parameters(rng, r, n, scale));
}

inline Abundance random_abundance(Rng& rng, Index m, bool with_zeros = false) {
    Vector p(m);
    for (Index i = 0; i < m; ++i) p(i) = std::exp(rng.normal());
    if (with_zeros && m > 1) {
        for (Index i = 0; i < m; ++i) {
            if (rng.uniform01() < 0.25) p(i) = 0.0;
        }
        if (p.maxCoeff() == 0.0) p(0) = 1.0;
    }
    p /= p.sum();
    return Abundance(p);
}

inline Matrix random_features(Rng& rng, Index n, Index d, double spread = 1.0) {
    Matrix x(n, d);
    for (Index i = 0; i < x.size(); ++i) x.data()[i] = spread * rng.normal();
    return x;
}

// Hill number by direct evaluation of the power sum.
inline double oracle_hill(const Vector& p, double q) {
    long double acc = 0.0L;
    if (std::isinf(q)) {
        double extreme = q > 0 ? 0.0 : 2.0;
        for (Index i = 0; i < p.size(); ++i) {
            if (p(i) > 0.0) {
                extreme = q > 0 ? std::max(extreme, p(i)) : std::min(extreme, p(i));
            }
        }
        return 1.0 / extreme;
    }
    if (q == 1.0) {
        for (Index i = 0; i < p.size(); ++i) {
            if (p(i) > 0.0) acc -= p(i) * std::log((long double)p(i));
        }
        return std::exp((double)acc);
    }
    for (Index i = 0; i < p.size(); ++i) {
        if (p(i) > 0.0) acc += std::pow((long double)p(i), (long double)q);
    }
    return std::pow((double)acc, 1.0 / (1.0 - q));
}

// Similarity-sensitive diversity by direct evaluation.
inline double oracle_lcr(const Vector& p, const Matrix& z, double q) {
    const Index m = p.size();
    Vector zp = Vector::Zero(m);
    for (Index i = 0; i < m; ++i) {
        long double s = 0.0L;
        for (Index j = 0; j < m; ++j) s += (long double)z(i, j) * p(j);
        zp(i) = (double)s;
    }
    if (std::isinf(q)) {
        double extreme = q > 0 ? 0.0 : 2.0;
        for (Index i = 0; i < m; ++i) {
            if (p(i) > 0.0) {
                extreme = q > 0 ? std::max(extreme, zp(i)) : std::min(extreme, zp(i));
            }
        }
        return 1.0 / extreme;
    }
    long double acc = 0.0L;
    if (q == 1.0) {
        for (Index i = 0; i < m; ++i) {
            if (p(i) > 0.0) acc -= p(i) * std::log((long double)zp(i));
        }
        return std::exp((double)acc);
    }
    for (Index i = 0; i < m; ++i) {
        if (p(i) > 0.0) {
            acc += (long double)p(i) * std::pow((long double)zp(i), (long double)(q - 1.0));
        }
    }
    return std::pow((double)acc, 1.0 / (1.0 - q));
}

// Closed forms for the eigenvalue entropy at q = 2 and q = 3.
inline double oracle_vs2(const Matrix& z) {
    const double n = static_cast<double>(z.rows());
    long double sum_sq = 0.0L;
    for (Index i = 0; i < z.rows(); ++i) {
        for (Index j = 0; j < z.cols(); ++j) sum_sq += (long double)z(i, j) * z(i, j);
    }
    return n * n / (double)sum_sq;
}

inline double oracle_vs3(const Matrix& z) {
    const Index n = z.rows();
    long double trace3 = 0.0L;
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            long double zij2 = 0.0L;
            for (Index k = 0; k < n; ++k) zij2 += (long double)z(i, k) * z(k, j);
            trace3 += zij2 * z(j, i);
        }
    }
    const double nd = static_cast<double>(n);
    return std::sqrt(nd * nd * nd / (double)trace3);
}

inline double rel_diff(double a, double b) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) / scale;
}

}  // namespace testsupport
