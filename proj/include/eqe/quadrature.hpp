#pragma once

// Double-exponential quadrature: tanh-sinh on finite intervals and exp-sinh
// on [a, inf). Levels halve the step until two successive estimates agree;
// the point set at each level is fixed, so results are bit-reproducible.

#include <cstddef>
#include <functional>

namespace eqe::quad {

struct QuadResult {
    double value = 0.0;
    double error_estimate = 0.0;  ///< absolute
    std::size_t evaluations = 0;
};

struct QuadOptions {
    /// Characteristic length of the integrand's decay (exp-sinh only).
    double scale = 1.0;
    std::size_t max_evaluations = 1'000'000;
    /// Levels to complete before the convergence test may pass.
    int min_levels = 4;
};

using Integrand = std::function<double(double)>;

/// Integral of f over [0, inf).
QuadResult integrate_semi_infinite(const Integrand& f, double target_rel_tol,
                                   const QuadOptions& options = {});

/// Integral of f over [a, inf).
QuadResult integrate_semi_infinite(const Integrand& f, double a, double target_rel_tol,
                                   const QuadOptions& options = {});

/// Integral of f over [a, b], a < b. The relative tolerance is floored at
/// 64 ulp of max(|a|, |b|) / (b - a). Endpoint singularities that are
/// integrable are tolerated; f is never evaluated exactly at a or b.
QuadResult integrate_finite(const Integrand& f, double a, double b, double target_rel_tol,
                            const QuadOptions& options = {});

}  // namespace eqe::quad
