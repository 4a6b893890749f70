#pragma once

// The quartic-exponential law p(x) = exp(l1 q - l2 q^2) / Z_D(l1, l2) with
// q = x^T x (spherical) or q = (x - mu)^T Sigma^{-1} (x - mu) (elliptical).

#include <Eigen/Dense>
#include <span>

namespace eqe {

/// Natural parameters of the spherical law in R^dim. lambda2 > 0.
class RadialParams {
public:
    RadialParams(int dim, double lambda1, double lambda2);

    int dim() const { return dim_; }
    double lambda1() const { return lambda1_; }
    double lambda2() const { return lambda2_; }

    /// Same law in another dimension (used for the Z_{D+k} moment ratios).
    RadialParams with_dim(int dim) const { return {dim, lambda1_, lambda2_}; }

    bool operator==(const RadialParams&) const = default;

private:
    int dim_;
    double lambda1_;
    double lambda2_;
};

/// Ring form: lambda1 = alpha / R^2, lambda2 = alpha / (2 R^4).
class RingParams {
public:
    RingParams(int dim, double alpha, double radius);

    int dim() const { return dim_; }
    double alpha() const { return alpha_; }
    double radius() const { return radius_; }

private:
    int dim_;
    double alpha_;
    double radius_;
};

/// Location mu, Sigma = L L^T carried by its lower Cholesky factor, plus the
/// radial law of the whitened variable L^{-1} (x - mu).
class EllipticalParams {
public:
    /// `sigma_factor` must be lower triangular with positive diagonal.
    EllipticalParams(Eigen::VectorXd mu, Eigen::MatrixXd sigma_factor, RadialParams radial);

    /// Factors a full SPD matrix; throws DomainError if it is not SPD.
    static EllipticalParams from_covariance(Eigen::VectorXd mu, const Eigen::MatrixXd& sigma,
                                            RadialParams radial);

    int dim() const { return radial_.dim(); }
    const Eigen::VectorXd& mu() const { return mu_; }
    const Eigen::MatrixXd& sigma_factor() const { return factor_; }
    Eigen::MatrixXd sigma() const { return factor_ * factor_.transpose(); }
    const RadialParams& radial() const { return radial_; }
    double log_det_sigma() const { return log_det_; }

    /// L^{-1} (x - mu)
    Eigen::VectorXd whiten(std::span<const double> x) const;

private:
    Eigen::VectorXd mu_;
    Eigen::MatrixXd factor_;
    RadialParams radial_;
    double log_det_;
};

/// Constraint targets E[r^2] = c2, E[r^4] = c4.
class MomentPair {
public:
    MomentPair(double c2, double c4);

    double c2() const { return c2_; }
    double c4() const { return c4_; }
    /// c4 / c2^2, scale free.
    double kurtosis_ratio() const { return c4_ / (c2_ * c2_); }

private:
    double c2_;
    double c4_;
};

enum class NormMethod { pcf, quadrature };

const char* to_string(NormMethod m);

struct LogNormConst {
    double value;
    NormMethod method;  ///< path that produced `value`
    bool fell_back;     ///< pcf was requested but quadrature was used
};

/// Surface area of the unit n-sphere (embedded in R^{n+1}).
double sphere_surface_area(int n);
double log_sphere_surface_area(int n);

RadialParams ring_to_radial(const RingParams& p);
/// Throws DomainError when lambda1 <= 0 (no ring form).
RingParams radial_to_ring(const RadialParams& p);

/// sqrt(lambda1 / (2 lambda2)); throws DomainError when lambda1 <= 0.
double mode_radius(const RadialParams& p);

/// ln Z_D. The pcf path falls back to quadrature if a special function
/// fails to converge; `detailed` reports which path produced the value.
LogNormConst log_norm_const_detailed(const RadialParams& p, NormMethod method = NormMethod::pcf);
double log_norm_const(const RadialParams& p, NormMethod method = NormMethod::pcf);

/// D = 2 closed form through erfc.
double log_norm_const_d2_closed(double lambda1, double lambda2);

/// D = 1, lambda1 < 0 closed form through K_{1/4}:
/// Z_1 = (1/2) sqrt(-l1/l2) exp(x) K_{1/4}(x), x = l1^2 / (8 l2).
double log_norm_const_d1_neg(double lambda1, double lambda2);

/// log of \int_0^inf y^power exp(l1 y - l2 y^2) dy by quadrature, power > -1.
double log_radial_integral(double power, double lambda1, double lambda2, double rel_tol = 1e-13);

/// E[r^k] for k in {2, 4, 6, 8}, as a ratio of normalization constants.
double radial_moment(const RadialParams& p, int k, NormMethod method = NormMethod::pcf);

/// Differential entropy in nats.
double entropy(const RadialParams& p);

double log_density(const RadialParams& p, std::span<const double> x);
double log_density(const EllipticalParams& p, std::span<const double> x);

/// Elliptical Gamma law: q = x^T Sigma^{-1} x ~ Gamma(shape a, scale b),
/// density Gamma(D/2) / (pi^{D/2} Gamma(a) b^a |Sigma|^{1/2}) q^{a-D/2} e^{-q/b}.
/// Used as the baseline for the maximum-entropy comparison.
class EllipticalGamma {
public:
    EllipticalGamma(const Eigen::MatrixXd& sigma, double a, double b);

    /// Spherical (Sigma = I) member with E[r^2], E[r^4] equal to `m`.
    static EllipticalGamma moment_matched(int dim, const MomentPair& m);

    int dim() const { return static_cast<int>(factor_.rows()); }
    double shape() const { return a_; }
    double scale() const { return b_; }
    const Eigen::MatrixXd& sigma_factor() const { return factor_; }

    double log_density(std::span<const double> x) const;
    /// E[q] = a b, E[q^2] = a b^2 (a + 1); equal to E[r^2], E[r^4] when Sigma = I.
    double mean_q() const { return a_ * b_; }
    double mean_q2() const { return a_ * b_ * b_ * (a_ + 1.0); }
    /// Entropy in nats; E[ln q] is obtained by 1D quadrature.
    double entropy() const;
    /// b (a - D/2); throws DomainError when a <= D/2 (no annulus).
    double mode_radius_sq() const;

private:
    Eigen::MatrixXd factor_;
    double a_;
    double b_;
    double log_det_;
};

}  // namespace eqe
