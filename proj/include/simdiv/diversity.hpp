#pragma once

#include "simdiv/common.hpp"
#include "simdiv/similarity.hpp"

#include <span>
#include <utility>
#include <vector>

// Hill numbers and similarity-sensitive diversity in effective-number form.
// Zero-frequency elements are excluded from every sum (the 0 ln 0 := 0
// convention); power sums accumulate in the log domain so large |q| cannot
// overflow.

namespace simdiv {

// Frequency-weighted average similarity (Zp)_i of each element to the whole
// system. On the support of p, p_i <= (Zp)_i <= 1.
inline Vector ordinariness(const Abundance& p, const SimilarityMatrix& z) {
    if (p.size() != z.order()) {
        throw Error("abundance length " + std::to_string(p.size()) +
                    " does not match similarity order " + std::to_string(z.order()));
    }
    return z.matrix() * p.vector();
}

namespace detail {

// Shared q-dispatch for diversities of the form
//   D_q = (sum_i p_i v_i^(q-1))^(1/(1-q)),   v_i > 0 on the support of p,
// with the Shannon limit at q = 1 and max/min limits at q = +/-inf.
inline EffectiveNumber power_mean_diversity(const Vector& p, const Vector& v,
                                            Order q) {
    order::require_valid(q);

    std::vector<Index> support;
    support.reserve(static_cast<std::size_t>(p.size()));
    for (Index i = 0; i < p.size(); ++i) {
        if (p(i) > 0.0) support.push_back(i);
    }
    if (support.empty()) throw Error("abundance has empty support");

    if (order::effectively_infinite(q)) {
        double extreme = v(support.front());
        for (Index i : support) {
            extreme = (q > 0) ? std::max(extreme, v(i)) : std::min(extreme, v(i));
        }
        return EffectiveNumber::from_log(-std::log(extreme));
    }
    if (order::effectively_one(q)) {
        double h = 0.0;
        for (Index i : support) h -= p(i) * std::log(v(i));
        return EffectiveNumber::from_log(h);
    }
    const auto count = static_cast<Index>(support.size());
    const double log_sum = log_sum_exp(count, [&](Index s) {
        const Index i = support[static_cast<std::size_t>(s)];
        return std::log(p(i)) + (q - 1.0) * std::log(v(i));
    });
    return EffectiveNumber::from_log(log_sum / (1.0 - q));
}

}  // namespace detail

// Traditional effective diversity of order q: richness at q=0, exponential
// Shannon at q=1, inverse Simpson at q=2, inverse Berger-Parker at q=inf.
inline EffectiveNumber hill_number(const Abundance& p, Order q) {
    return detail::power_mean_diversity(p.vector(), p.vector(), q);
}

// Similarity-sensitive diversity of order q from the ordinariness (Zp)_i.
// Reduces to hill_number when Z is the identity.
inline EffectiveNumber lcr_diversity(const Abundance& p, const SimilarityMatrix& z,
                                     Order q) {
    const Vector zp = ordinariness(p, z);
    return detail::power_mean_diversity(p.vector(), zp, q);
}

// Batch evaluation across orders; the ordinariness vector is computed once.
inline std::vector<std::pair<Order, EffectiveNumber>> lcr_profile(
    const Abundance& p, const SimilarityMatrix& z, std::span<const Order> orders) {
    if (orders.empty()) throw Error("order list must be nonempty");
    const Vector zp = ordinariness(p, z);
    std::vector<std::pair<Order, EffectiveNumber>> results;
    results.reserve(orders.size());
    for (Order q : orders) {
        results.emplace_back(q, detail::power_mean_diversity(p.vector(), zp, q));
    }
    return results;
}

}  // namespace simdiv
