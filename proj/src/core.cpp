#include "eqe/core.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "eqe/error.hpp"
#include "eqe/quadrature.hpp"
#include "eqe/specfun.hpp"

namespace eqe {
namespace {

constexpr double kLn2 = std::numbers::ln2;
const double kLnPi = std::log(std::numbers::pi);

double sum_log_diag(const Eigen::MatrixXd& m) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        s += std::log(m(i, i));
    }
    return s;
}

void check_lower_factor(const Eigen::MatrixXd& l, const char* who) {
    if (l.rows() != l.cols() || l.rows() == 0) {
        throw DomainError(std::string(who) + ": factor must be square and non-empty");
    }
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        if (!(l(i, i) > 0.0) || !std::isfinite(l(i, i))) {
            throw DomainError(std::string(who) + ": factor diagonal must be positive");
        }
        for (Eigen::Index j = i + 1; j < l.cols(); ++j) {
            if (l(i, j) != 0.0) {
                throw DomainError(std::string(who) + ": factor must be lower triangular");
            }
        }
    }
}

Eigen::MatrixXd cholesky_or_throw(const Eigen::MatrixXd& sigma, const char* who) {
    if (sigma.rows() != sigma.cols() || sigma.rows() == 0) {
        throw DomainError(std::string(who) + ": Sigma must be square and non-empty");
    }
    if (!sigma.allFinite() || !sigma.isApprox(sigma.transpose(), 1e-12)) {
        throw DomainError(std::string(who) + ": Sigma must be finite and symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw DomainError(std::string(who) + ": Sigma is not positive definite");
    }
    Eigen::MatrixXd l = llt.matrixL();
    for (Eigen::Index i = 0; i < l.rows(); ++i) {
        if (!(l(i, i) > 0.0)) {
            throw DomainError(std::string(who) + ": Sigma is not positive definite");
        }
    }
    return l;
}

double log_norm_const_pcf(const RadialParams& p) {
    const int d = p.dim();
    const double l1 = p.lambda1();
    const double l2 = p.lambda2();
    // exp(l1^2 / (8 l2)) = exp(z^2 / 4) is absorbed into the scaled function.
    const auto pcf = specfun::pcf_d_scaled(-0.5 * d, -l1 / std::sqrt(2.0 * l2));
    return log_sphere_surface_area(d - 1) - kLn2 - 0.25 * d * std::log(2.0 * l2) +
           std::lgamma(0.5 * d) + pcf.log_mag;
}

double log_norm_const_quad(const RadialParams& p) {
    return log_sphere_surface_area(p.dim() - 1) - kLn2 +
           log_radial_integral(0.5 * p.dim() - 1.0, p.lambda1(), p.lambda2());
}

}  // namespace

RadialParams::RadialParams(int dim, double lambda1, double lambda2)
    : dim_(dim), lambda1_(lambda1), lambda2_(lambda2) {
    if (dim < 1) {
        throw DomainError("RadialParams: dim must be >= 1");
    }
    if (!std::isfinite(lambda1)) {
        throw DomainError("RadialParams: lambda1 must be finite");
    }
    if (!(lambda2 > 0.0) || !std::isfinite(lambda2)) {
        throw DomainError("RadialParams: lambda2 must be positive and finite");
    }
}

RingParams::RingParams(int dim, double alpha, double radius)
    : dim_(dim), alpha_(alpha), radius_(radius) {
    if (dim < 1) {
        throw DomainError("RingParams: dim must be >= 1");
    }
    if (!(alpha > 0.0) || !std::isfinite(alpha) || !(radius > 0.0) || !std::isfinite(radius)) {
        throw DomainError("RingParams: alpha and R must be positive and finite");
    }
}

EllipticalParams::EllipticalParams(Eigen::VectorXd mu, Eigen::MatrixXd sigma_factor,
                                   RadialParams radial)
    : mu_(std::move(mu)), factor_(std::move(sigma_factor)), radial_(radial) {
    check_lower_factor(factor_, "EllipticalParams");
    if (mu_.size() != radial_.dim() || factor_.rows() != radial_.dim()) {
        throw DomainError("EllipticalParams: mu, Sigma and dim are inconsistent");
    }
    if (!mu_.allFinite()) {
        throw DomainError("EllipticalParams: mu must be finite");
    }
    log_det_ = 2.0 * sum_log_diag(factor_);
}

EllipticalParams EllipticalParams::from_covariance(Eigen::VectorXd mu, const Eigen::MatrixXd& sigma,
                                                   RadialParams radial) {
    return {std::move(mu), cholesky_or_throw(sigma, "EllipticalParams"), radial};
}

Eigen::VectorXd EllipticalParams::whiten(std::span<const double> x) const {
    if (static_cast<Eigen::Index>(x.size()) != mu_.size()) {
        throw DomainError("EllipticalParams: point dimension mismatch");
    }
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    return factor_.triangularView<Eigen::Lower>().solve(xv - mu_);
}

MomentPair::MomentPair(double c2, double c4) : c2_(c2), c4_(c4) {
    if (!(c2 > 0.0) || !(c4 > 0.0) || !std::isfinite(c2) || !std::isfinite(c4)) {
        throw DomainError("MomentPair: c2 and c4 must be positive and finite");
    }
    if (!(c4 > c2 * c2)) {
        throw DomainError("MomentPair: c4 must exceed c2^2");
    }
}

const char* to_string(NormMethod m) {
    return m == NormMethod::pcf ? "pcf" : "quadrature";
}

double log_sphere_surface_area(int n) {
    if (n < 0) {
        throw DomainError("sphere_surface_area: n must be >= 0");
    }
    const double h = 0.5 * (n + 1);
    return kLn2 + h * kLnPi - std::lgamma(h);
}

double sphere_surface_area(int n) { return std::exp(log_sphere_surface_area(n)); }

RadialParams ring_to_radial(const RingParams& p) {
    const double r2 = p.radius() * p.radius();
    return {p.dim(), p.alpha() / r2, p.alpha() / (2.0 * r2 * r2)};
}

RingParams radial_to_ring(const RadialParams& p) {
    if (!(p.lambda1() > 0.0)) {
        throw DomainError("radial_to_ring: ring form requires lambda1 > 0");
    }
    const double r = mode_radius(p);
    return {p.dim(), p.lambda1() * r * r, r};
}

double mode_radius(const RadialParams& p) {
    if (!(p.lambda1() > 0.0)) {
        throw DomainError("mode_radius: lambda1 <= 0, density decays monotonically from r = 0");
    }
    return std::sqrt(p.lambda1() / (2.0 * p.lambda2()));
}

double log_radial_integral(double power, double lambda1, double lambda2, double rel_tol) {
    if (!(power > -1.0)) {
        throw DomainError("log_radial_integral: power must exceed -1");
    }
    if (!(lambda2 > 0.0)) {
        throw DomainError("log_radial_integral: lambda2 must be positive");
    }
    // Locate the peak of g(y) = power ln y + l1 y - l2 y^2 and its width so
    // the quadrature is centred on the mass.
    double center = 0.0;
    if (power > 0.0) {
        const double disc = std::sqrt(lambda1 * lambda1 + 8.0 * lambda2 * power);
        center = lambda1 >= 0.0 ? (lambda1 + disc) / (4.0 * lambda2) : 2.0 * power / (disc - lambda1);
    } else if (power == 0.0) {
        center = std::max(lambda1 / (2.0 * lambda2), 0.0);
    } else if (lambda1 > 0.0) {
        const double disc2 = lambda1 * lambda1 + 8.0 * lambda2 * power;
        if (disc2 > 0.0) {
            center = (lambda1 + std::sqrt(disc2)) / (4.0 * lambda2);
        }
    }
    auto g = [=](double y) { return power * std::log(y) + y * (lambda1 - lambda2 * y); };
    double width = 1.0 / (std::max(-lambda1, 0.0) + std::sqrt(2.0 * lambda2));
    double ref = 0.0;
    if (center > 0.0) {
        width = 1.0 / std::sqrt(2.0 * lambda2 + power / (center * center));
        ref = g(center);
    }
    const quad::Integrand f = [&](double y) { return std::exp(g(y) - ref); };

    double total = 0.0;
    if (center > 4.0 * width) {
        total = quad::integrate_finite(f, 0.0, center, rel_tol).value +
                quad::integrate_semi_infinite(f, center, rel_tol, {.scale = width}).value;
    } else {
        total = quad::integrate_semi_infinite(f, 0.0, rel_tol, {.scale = std::max(width, center)})
                    .value;
    }
    return std::log(total) + ref;
}

LogNormConst log_norm_const_detailed(const RadialParams& p, NormMethod method) {
    if (method == NormMethod::quadrature) {
        return {log_norm_const_quad(p), NormMethod::quadrature, false};
    }
    try {
        return {log_norm_const_pcf(p), NormMethod::pcf, false};
    } catch (const ConvergenceError&) {
        return {log_norm_const_quad(p), NormMethod::quadrature, true};
    }
}

double log_norm_const(const RadialParams& p, NormMethod method) {
    return log_norm_const_detailed(p, method).value;
}

double log_norm_const_d2_closed(double lambda1, double lambda2) {
    [[maybe_unused]] const RadialParams p(2, lambda1, lambda2);
    // Z_2 = (pi/2) sqrt(pi/l2) exp(l1^2/(4 l2)) [1 - erf(-l1/(2 sqrt(l2)))]
    return std::log(0.5 * std::numbers::pi) + 0.5 * (kLnPi - std::log(lambda2)) +
           lambda1 * lambda1 / (4.0 * lambda2) +
           specfun::log_erfc(-lambda1 / (2.0 * std::sqrt(lambda2)));
}

double log_norm_const_d1_neg(double lambda1, double lambda2) {
    [[maybe_unused]] const RadialParams p(1, lambda1, lambda2);
    if (!(lambda1 < 0.0)) {
        throw DomainError("log_norm_const_d1_neg: requires lambda1 < 0");
    }
    const double x = lambda1 * lambda1 / (8.0 * lambda2);
    return -kLn2 + 0.5 * std::log(-lambda1 / lambda2) + x + specfun::bessel_k_quarter(x).log_mag;
}

double radial_moment(const RadialParams& p, int k, NormMethod method) {
    if (k != 2 && k != 4 && k != 6 && k != 8) {
        throw DomainError("radial_moment: k must be one of 2, 4, 6, 8");
    }
    const int d = p.dim();
    const double log_ratio = log_norm_const(p.with_dim(d + k), method) - log_norm_const(p, method);
    return std::exp(log_ratio + log_sphere_surface_area(d - 1) - log_sphere_surface_area(d + k - 1));
}

double entropy(const RadialParams& p) {
    return p.lambda2() * radial_moment(p, 4) - p.lambda1() * radial_moment(p, 2) +
           log_norm_const(p);
}

double log_density(const RadialParams& p, std::span<const double> x) {
    if (static_cast<int>(x.size()) != p.dim()) {
        throw DomainError("log_density: point dimension mismatch");
    }
    double q = 0.0;
    for (double v : x) {
        q += v * v;
    }
    return q * (p.lambda1() - p.lambda2() * q) - log_norm_const(p);
}

double log_density(const EllipticalParams& p, std::span<const double> x) {
    const Eigen::VectorXd z = p.whiten(x);
    const double q = z.squaredNorm();
    const auto& r = p.radial();
    return q * (r.lambda1() - r.lambda2() * q) - log_norm_const(r) - 0.5 * p.log_det_sigma();
}

EllipticalGamma::EllipticalGamma(const Eigen::MatrixXd& sigma, double a, double b)
    : factor_(cholesky_or_throw(sigma, "EllipticalGamma")), a_(a), b_(b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
        throw DomainError("EllipticalGamma: a and b must be positive and finite");
    }
    log_det_ = 2.0 * sum_log_diag(factor_);
}

EllipticalGamma EllipticalGamma::moment_matched(int dim, const MomentPair& m) {
    if (dim < 1) {
        throw DomainError("EllipticalGamma: dim must be >= 1");
    }
    const double a = m.c2() * m.c2() / (m.c4() - m.c2() * m.c2());
    return {Eigen::MatrixXd::Identity(dim, dim), a, m.c2() / a};
}

double EllipticalGamma::log_density(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != dim()) {
        throw DomainError("EllipticalGamma: point dimension mismatch");
    }
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), dim());
    const double q = factor_.triangularView<Eigen::Lower>().solve(xv).squaredNorm();
    if (std::isinf(q)) {
        return -std::numeric_limits<double>::infinity();
    }
    const double half_d = 0.5 * dim();
    return std::lgamma(half_d) - half_d * kLnPi - std::lgamma(a_) - a_ * std::log(b_) -
           0.5 * log_det_ + (a_ - half_d) * std::log(q) - q / b_;
}

double EllipticalGamma::entropy() const {
    // E[ln q] = ln b + E[ln t], t ~ Gamma(a, 1)
    const double log_norm = std::lgamma(a_);
    const quad::Integrand f = [&](double t) {
        return std::log(t) * std::exp((a_ - 1.0) * std::log(t) - t - log_norm);
    };
    const double split = std::max(a_, 1.0);
    const double e_log_t = quad::integrate_finite(f, 0.0, split, 1e-13).value +
                           quad::integrate_semi_infinite(f, split, 1e-13,
                                                         {.scale = std::sqrt(split)})
                               .value;
    const double e_log_q = std::log(b_) + e_log_t;
    const double half_d = 0.5 * dim();
    const double log_const = std::lgamma(half_d) - half_d * kLnPi - std::lgamma(a_) -
                             a_ * std::log(b_) - 0.5 * log_det_;
    return -log_const - (a_ - half_d) * e_log_q + a_;
}

double EllipticalGamma::mode_radius_sq() const {
    const double half_d = 0.5 * dim();
    if (!(a_ > half_d)) {
        throw DomainError("EllipticalGamma: mode at the origin when a <= D/2");
    }
    return b_ * (a_ - half_d);
}

}  // namespace eqe
