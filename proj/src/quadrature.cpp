#include "eqe/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "eqe/error.hpp"

namespace eqe::quad {
namespace {

constexpr double kHalfPi = 0.5 * std::numbers::pi;
constexpr double kTMax = 6.5;
constexpr int kMaxLevels = 20;

struct Node {
    double x;
    double w;
};

// Abscissa and weight of the tanh-sinh rule on [a, b] at parameter t. The
// distance to the nearer endpoint is formed directly so points crowding an
// endpoint keep full relative precision.
Node tanh_sinh_node(double a, double b, double t) {
    const double half_width = 0.5 * (b - a);
    const double u = kHalfPi * std::sinh(std::abs(t));
    const double e = std::exp(-2.0 * u);
    const double delta = half_width * 2.0 * e / (1.0 + e);
    const double w = half_width * kHalfPi * std::cosh(t) * 4.0 * e / ((1.0 + e) * (1.0 + e));
    return {t >= 0.0 ? b - delta : a + delta, w};
}

Node exp_sinh_node(double a, double scale, double t) {
    const double u = kHalfPi * std::sinh(t);
    const double eu = std::exp(u);
    return {a + scale * eu, scale * kHalfPi * std::cosh(t) * eu};
}

template <typename NodeFn, typename Inside>
QuadResult integrate_de(const Integrand& f, NodeFn node_at, Inside inside, double tol,
                        const QuadOptions& options, const char* name) {
    if (!(tol > 0.0)) {
        throw DomainError(std::string(name) + ": tolerance must be positive");
    }
    double raw_sum = 0.0;
    std::size_t evaluations = 0;
    double previous = 0.0;
    double current = 0.0;

    auto accumulate = [&](double t) {
        const Node n = node_at(t);
        if (n.w == 0.0 || !inside(n.x)) {
            return;
        }
        const double fx = f(n.x);
        ++evaluations;
        const double contrib = n.w * fx;
        if (!std::isfinite(contrib)) {
            std::ostringstream msg;
            msg << name << ": integrand not finite at x=" << n.x;
            throw DomainError(msg.str());
        }
        raw_sum += contrib;
    };

    const int k_max = static_cast<int>(kTMax);
    for (int k = -k_max; k <= k_max; ++k) {
        accumulate(static_cast<double>(k));
    }
    current = raw_sum;

    for (int level = 1; level <= kMaxLevels; ++level) {
        const double h = std::ldexp(1.0, -level);
        const auto new_points = static_cast<std::size_t>(2.0 * kTMax / h / 2.0) + 1;
        if (evaluations + new_points > options.max_evaluations) {
            break;
        }
        for (double t = h; t <= kTMax; t += 2.0 * h) {
            accumulate(t);
            accumulate(-t);
        }
        previous = current;
        current = raw_sum * h;
        const double err = std::abs(current - previous);
        if (level >= options.min_levels && err <= std::max(tol * std::abs(current), 1e-300)) {
            return {current, err, evaluations};
        }
    }
    std::ostringstream msg;
    msg << name << ": no convergence within " << evaluations << " evaluations (estimate " << current
        << ", last change " << std::abs(current - previous) << ")";
    throw ConvergenceError(msg.str(), evaluations, current);
}

}  // namespace

QuadResult integrate_semi_infinite(const Integrand& f, double target_rel_tol,
                                   const QuadOptions& options) {
    return integrate_semi_infinite(f, 0.0, target_rel_tol, options);
}

QuadResult integrate_semi_infinite(const Integrand& f, double a, double target_rel_tol,
                                   const QuadOptions& options) {
    if (!std::isfinite(a)) {
        throw DomainError("integrate_semi_infinite: lower limit must be finite");
    }
    if (!(options.scale > 0.0) || !std::isfinite(options.scale)) {
        throw DomainError("integrate_semi_infinite: scale must be positive");
    }
    return integrate_de(
        f, [&](double t) { return exp_sinh_node(a, options.scale, t); },
        [&](double x) { return x > a && std::isfinite(x); }, target_rel_tol, options,
        "integrate_semi_infinite");
}

QuadResult integrate_finite(const Integrand& f, double a, double b, double target_rel_tol,
                            const QuadOptions& options) {
    if (!std::isfinite(a) || !std::isfinite(b) || !(a < b)) {
        throw DomainError("integrate_finite: require finite a < b");
    }
    // Abscissae cannot resolve the interval better than one ulp of its
    // endpoints, which bounds the attainable relative accuracy.
    const double resolution = 64.0 * std::numeric_limits<double>::epsilon() *
                              std::max(std::abs(a), std::abs(b)) / (b - a);
    const double tol = target_rel_tol > 0.0 ? std::max(target_rel_tol, resolution) : target_rel_tol;
    return integrate_de(
        f, [&](double t) { return tanh_sinh_node(a, b, t); },
        [&](double x) { return x > a && x < b; }, tol, options, "integrate_finite");
}

}  // namespace eqe::quad
