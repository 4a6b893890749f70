#pragma once

// Maximum-entropy inverse problem: find (lambda1, lambda2) whose law has
// E[r^2] = c2 and E[r^4] = c4, and the elliptical moment fit built on it.
//
// In natural coordinates theta = (lambda1, -lambda2) the dual objective
// ln Z(theta) - theta . (c2, c4) is convex with gradient (E[r^2] - c2,
// E[r^4] - c4) and Hessian Cov(r^2, r^4). It is minimized by damped Newton
// iteration in units where c2 = 1, which makes the fit exactly scale
// equivariant.

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <variant>
#include <vector>

#include "eqe/core.hpp"

namespace eqe {

enum class Feasibility { interior, near_gaussian_boundary, infeasible };

const char* to_string(Feasibility f);

/// One accepted Newton step (parameters in the caller's units).
struct FitIteration {
    double lambda1;
    double lambda2;
    double objective;  ///< ln Z - lambda1 c2 + lambda2 c4
    double hessian_det;
    double step_length;  ///< damping factor actually taken
};

struct FitReport {
    std::variant<RadialParams, EllipticalParams> params;
    std::size_t iterations = 0;
    /// |E[r^2] - c2| / c2 and |E[r^4] - c4| / c4 at the returned parameters.
    std::array<double, 2> residual{};
    bool converged = false;
    Feasibility feasibility = Feasibility::interior;
    MomentPair targets;
    std::vector<FitIteration> trace;

    const RadialParams& radial() const;
};

struct FitOptions {
    std::size_t max_iterations = 200;
    /// Relative moment residual at which the iteration stops.
    double tolerance = 1e-11;
    /// Relative gap to the Gaussian kurtosis ratio (D+2)/D treated as
    /// infeasible.
    double boundary_epsilon = 1e-6;
    /// Relative gap below which a feasible target is flagged as near the
    /// Gaussian boundary.
    double near_boundary_gap = 1e-3;
};

/// Kurtosis ratio c4 / c2^2 of a Gaussian in R^dim: the supremum over the
/// family, approached as lambda2 -> 0+.
double gaussian_kurtosis_ratio(int dim);

/// Throws InfeasibleError at or beyond the Gaussian boundary and
/// ConvergenceError (carrying the iteration count) if the iteration stalls.
FitReport fit_moments(int dim, const MomentPair& targets, const FitOptions& options = {});

enum class FitModel { spherical, elliptical };

/// Spherical: mu = 0 and Sigma = I are fixed. Elliptical: mu is the sample
/// mean and Sigma the sample covariance rescaled to unit determinant. The
/// radial law is then fitted to the mean of q and q^2. Data whose kurtosis
/// ratio is within four standard errors of the Gaussian boundary are
/// flagged near_gaussian_boundary; such fits may return converged = false
/// instead of throwing.
FitReport fit_data(const Eigen::MatrixXd& data, FitModel model, const FitOptions& options = {});

}  // namespace eqe
