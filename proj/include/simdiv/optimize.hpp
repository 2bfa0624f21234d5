#pragma once

#include "simdiv/common.hpp"

#include <functional>
#include <limits>

// Dense BFGS minimizer with forward-difference gradients. Small problems
// only (a few thousand parameters); the inverse Hessian is kept explicitly.

namespace simdiv {

struct MinimizeOptions {
    int max_iterations = 500;
    double gradient_tolerance = 1e-8;  // sup-norm of the FD gradient
};

struct MinimizeResult {
    Vector x;
    double value = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;  // gradient tolerance reached
};

using Objective = std::function<double(const Vector&)>;

// Forward differences with per-coordinate step sqrt(eps) * (1 + |x_i|).
inline Vector fd_gradient(const Objective& f, const Vector& x, double fx,
                          int& evaluations) {
    static const double root_eps = std::sqrt(std::numeric_limits<double>::epsilon());
    Vector g(x.size());
    Vector probe = x;
    for (Index i = 0; i < x.size(); ++i) {
        const double xi = x(i);
        double h = root_eps * (1.0 + std::abs(xi));
        const double stepped = xi + h;
        h = stepped - xi;  // the step actually representable at xi
        probe(i) = stepped;
        g(i) = (f(probe) - fx) / h;
        ++evaluations;
        probe(i) = xi;
    }
    return g;
}

namespace detail {

// Backtracking line search with quadratic interpolation, Armijo condition
// f(x + a d) <= f(x) + c1 a g.d. Returns accepted step or 0 on breakdown.
inline double armijo_search(const Objective& f, const Vector& x, const Vector& d,
                            double fx, double slope, double& f_out,
                            int& evaluations) {
    constexpr double c1 = 1e-4;
    double alpha = 1.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
        const double f_trial = f(x + alpha * d);
        ++evaluations;
        if (std::isfinite(f_trial) && f_trial <= fx + c1 * alpha * slope) {
            f_out = f_trial;
            return alpha;
        }
        double next = alpha * 0.5;
        if (std::isfinite(f_trial)) {
            // Minimizer of the quadratic through f(0), f'(0), f(alpha).
            const double denom = 2.0 * (f_trial - fx - slope * alpha);
            if (denom > 0.0) {
                next = -slope * alpha * alpha / denom;
            }
        }
        alpha = std::min(std::max(next, 0.1 * alpha), 0.5 * alpha);
        if (alpha < 1e-14) break;
    }
    return 0.0;
}

}  // namespace detail

inline MinimizeResult minimize_bfgs(const Objective& f, Vector x0,
                                    const MinimizeOptions& options = {}) {
    const Index dim = x0.size();
    if (dim < 1) throw Error("minimize_bfgs requires at least one parameter");

    MinimizeResult result;
    result.x = std::move(x0);
    result.value = f(result.x);
    result.evaluations = 1;
    if (!std::isfinite(result.value)) {
        throw Error("objective is non-finite at the initial point");
    }

    Matrix h_inv = Matrix::Identity(dim, dim);
    Vector g = fd_gradient(f, result.x, result.value, result.evaluations);
    bool first_update = true;

    for (; result.iterations < options.max_iterations; ++result.iterations) {
        result.gradient_norm = g.lpNorm<Eigen::Infinity>();
        if (result.gradient_norm <= options.gradient_tolerance) {
            result.converged = true;
            return result;
        }

        Vector direction = -(h_inv * g);
        double slope = direction.dot(g);
        if (!(slope < 0.0)) {
            h_inv.setIdentity();
            direction = -g;
            slope = -g.squaredNorm();
            first_update = true;
        }

        double f_new = 0.0;
        double alpha = detail::armijo_search(f, result.x, direction, result.value,
                                             slope, f_new, result.evaluations);
        if (alpha == 0.0 && !first_update) {
            // Retry once along steepest descent before giving up.
            h_inv.setIdentity();
            direction = -g;
            slope = -g.squaredNorm();
            first_update = true;
            alpha = detail::armijo_search(f, result.x, direction, result.value,
                                          slope, f_new, result.evaluations);
        }
        if (alpha == 0.0) break;

        const Vector step = alpha * direction;
        result.x += step;
        result.value = f_new;

        Vector g_new = fd_gradient(f, result.x, result.value, result.evaluations);
        const Vector y = g_new - g;
        const double sy = step.dot(y);
        if (sy > 1e-10 * step.norm() * y.norm()) {
            if (first_update) {
                h_inv *= sy / y.squaredNorm();  // standard initial scaling
                first_update = false;
            }
            const double rho = 1.0 / sy;
            const Vector hy = h_inv * y;
            // H <- (I - rho s y') H (I - rho y s') + rho s s'
            h_inv.noalias() -= rho * (step * hy.transpose() + hy * step.transpose());
            h_inv.noalias() +=
                (rho * rho * (y.dot(hy)) + rho) * (step * step.transpose());
        }
        g = std::move(g_new);
    }
    result.gradient_norm = g.lpNorm<Eigen::Infinity>();
    result.converged = result.gradient_norm <= options.gradient_tolerance;
    return result;
}

}  // namespace simdiv
