#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

// Core aliases and numeric helpers shared by every simdiv header.

namespace simdiv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Entropy order q: any finite real, +inf, or -inf. NaN is never a valid order.
using Order = double;

namespace order {

inline constexpr Order infinity = std::numeric_limits<double>::infinity();

// |q| beyond this is numerically indistinguishable from the max/min limit form.
inline constexpr double infinite_cutoff = 1e6;

// Within this window of q = 1 the generic exponent 1/(1-q) cancels
// catastrophically; the Shannon limit formula is used instead.
inline constexpr double unit_window = 1e-9;

inline bool is_valid(Order q) { return !std::isnan(q); }

inline bool effectively_infinite(Order q) {
    return std::isinf(q) || std::abs(q) > infinite_cutoff;
}

inline bool effectively_one(Order q) { return std::abs(q - 1.0) < unit_window; }

inline void require_valid(Order q) {
    if (!is_valid(q)) throw Error("order q must not be NaN");
}

}  // namespace order

// An entropy in effective-number form together with its log form.
struct EffectiveNumber {
    double value = 1.0;
    double log_value = 0.0;

    static EffectiveNumber from_log(double log_value) {
        return {std::exp(log_value), log_value};
    }
    static EffectiveNumber from_value(double value) {
        return {value, std::log(value)};
    }
};

namespace detail {

// log(sum_i exp(term(i))) for i in [0, count), stable against overflow.
// Caller guarantees count >= 1.
template <typename TermFn>
double log_sum_exp(Index count, TermFn&& term) {
    double peak = -std::numeric_limits<double>::infinity();
    for (Index i = 0; i < count; ++i) peak = std::max(peak, term(i));
    if (!std::isfinite(peak)) return peak;
    double sum = 0.0;
    for (Index i = 0; i < count; ++i) sum += std::exp(term(i) - peak);
    return peak + std::log(sum);
}

// Compensated (Kahan) summation; used where a plain accumulation would
// swamp a 1e-12 tolerance check.
template <typename ValueFn>
double compensated_sum(Index count, ValueFn&& value) {
    double sum = 0.0;
    double carry = 0.0;
    for (Index i = 0; i < count; ++i) {
        double y = value(i) - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    return sum;
}

}  // namespace detail
}  // namespace simdiv
