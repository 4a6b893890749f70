#include "eqe/condmarg.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "eqe/error.hpp"

namespace eqe {
namespace {

constexpr int kPeakGrid = 512;

void check_split(const RadialParams& p, const BlockSplit& split) {
    if (split.dim() != p.dim()) {
        throw DomainError("BlockSplit does not match the distribution dimension");
    }
}

double squared_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) {
        s += x * x;
    }
    return s;
}

}  // namespace

BlockSplit::BlockSplit(int dim1, int dim2) : dim1_(dim1), dim2_(dim2) {
    if (dim1 < 1 || dim2 < 1) {
        throw DomainError("BlockSplit: block sizes must be >= 1");
    }
}

RadialParams conditional_params(const RadialParams& p, const BlockSplit& split, double x2_norm_sq) {
    check_split(p, split);
    if (!(x2_norm_sq >= 0.0) || !std::isfinite(x2_norm_sq)) {
        throw DomainError("conditional_params: |x2|^2 must be finite and >= 0");
    }
    return {split.dim1(), p.lambda1() - 2.0 * p.lambda2() * x2_norm_sq, p.lambda2()};
}

double conditional_log_density(const RadialParams& p, const BlockSplit& split,
                               std::span<const double> x1, std::span<const double> x2) {
    if (static_cast<int>(x2.size()) != split.dim2()) {
        throw DomainError("conditional_log_density: x2 dimension mismatch");
    }
    return log_density(conditional_params(p, split, squared_norm(x2)), x1);
}

double marginal_log_density_sq(const RadialParams& p, const BlockSplit& split, double q1) {
    check_split(p, split);
    if (!(q1 >= 0.0) || !std::isfinite(q1)) {
        throw DomainError("marginal_log_density: |x1|^2 must be finite and >= 0");
    }
    const double l1 = p.lambda1();
    const double l2 = p.lambda2();
    const double shifted = l1 - 2.0 * l2 * q1;
    if (!std::isfinite(shifted)) {
        // l2 q1 overflowed; the density has long since underflowed to zero
        return -std::numeric_limits<double>::infinity();
    }
    const RadialParams inner(split.dim2(), shifted, l2);
    return q1 * (l1 - l2 * q1) + log_norm_const(inner) - log_norm_const(p);
}

double marginal_log_density(const RadialParams& p, const BlockSplit& split,
                            std::span<const double> x1) {
    if (static_cast<int>(x1.size()) != split.dim1()) {
        throw DomainError("marginal_log_density: x1 dimension mismatch");
    }
    return marginal_log_density_sq(p, split, squared_norm(x1));
}

double marginal_log_density(const EllipticalParams& p, int dim1, std::span<const double> x1) {
    const int d = p.dim();
    if (dim1 < 1 || dim1 >= d || static_cast<int>(x1.size()) != dim1) {
        throw DomainError("marginal_log_density: invalid leading block");
    }
    const auto l11 = p.sigma_factor().topLeftCorner(dim1, dim1);
    const Eigen::Map<const Eigen::VectorXd> xv(x1.data(), dim1);
    const Eigen::VectorXd z = l11.triangularView<Eigen::Lower>().solve(xv - p.mu().head(dim1));
    double log_det = 0.0;
    for (int i = 0; i < dim1; ++i) {
        log_det += std::log(l11(i, i));
    }
    return marginal_log_density_sq(p.radial(), BlockSplit(dim1, d - dim1), z.squaredNorm()) -
           log_det;
}

std::vector<double> marginal_peaks(const RadialParams& p, const BlockSplit& split) {
    check_split(p, split);
    const double l1 = p.lambda1();
    const double l2 = p.lambda2();
    // d/dr1 of the marginal log density is 2 r1 h(r1), using
    // d ln Z / d l1 = E[r^2] for the inner dim2-dimensional law.
    auto h = [&](double r) {
        const double shifted = l1 - 2.0 * l2 * r * r;
        const RadialParams inner(split.dim2(), shifted, l2);
        return shifted - 2.0 * l2 * radial_moment(inner, 2);
    };

    std::vector<double> peaks;
    const bool origin_is_peak = h(0.0) < 0.0;
    if (origin_is_peak) {
        peaks.push_back(0.0);
    }
    if (!(l1 > 0.0)) {
        // h(r) < l1 - 2 l2 r^2 <= 0 for all r: monotone decay from the origin.
        return peaks;
    }

    // All positive roots of h lie below R since h(r) < l1 - 2 l2 r^2.
    const double radius = mode_radius(p);
    std::vector<double> grid(kPeakGrid);
    for (int i = 0; i < kPeakGrid; ++i) {
        // log-spaced distance to R, from R (at r = 0) down to 1e-10 R
        grid[i] = radius * (1.0 - std::pow(10.0, -10.0 * i / (kPeakGrid - 1)));
    }
    int stationary = 1;  // the origin
    double prev_r = grid[0];
    double prev_h = h(prev_r);
    for (int i = 1; i < kPeakGrid; ++i) {
        const double r = grid[i];
        const double hr = h(r);
        if ((prev_h > 0.0) != (hr > 0.0)) {
            ++stationary;
            double lo = prev_r;
            double hi = r;
            const bool falling = prev_h > 0.0;
            while (hi - lo > 1e-10 * std::max(1.0, radius)) {
                const double mid = 0.5 * (lo + hi);
                ((h(mid) > 0.0) == falling ? lo : hi) = mid;
            }
            if (falling) {
                peaks.push_back(0.5 * (lo + hi));
            }
        }
        prev_r = r;
        prev_h = hr;
    }
    if (stationary > 2) {
        std::ostringstream msg;
        msg << "marginal_peaks: found " << stationary
            << " stationary points, expected at most two";
        throw ConvergenceError(msg.str(), static_cast<std::size_t>(stationary));
    }
    return peaks;
}

}  // namespace eqe
