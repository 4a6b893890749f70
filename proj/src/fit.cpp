#include "eqe/fit.hpp"

#include <cmath>
#include <sstream>

#include "eqe/error.hpp"

namespace eqe {
namespace {

struct Moments {
    double log_z;
    double e2, e4, e6, e8;
};

Moments moments_of(int dim, double l1, double l2) {
    const RadialParams p(dim, l1, l2);
    const double log_z = log_norm_const(p);
    auto moment = [&](int k) {
        const double log_ratio = log_norm_const(p.with_dim(dim + k)) - log_z;
        return std::exp(log_ratio + log_sphere_surface_area(dim - 1) -
                        log_sphere_surface_area(dim + k - 1));
    };
    return {log_z, moment(2), moment(4), moment(6), moment(8)};
}

struct RawFit {
    double lambda1;  // in units where c2 = 1
    double lambda2;
    std::size_t iterations;
    std::array<double, 2> residual;
    bool converged;
    std::vector<FitIteration> trace;
};

// Damped Newton on the dual objective in units where c2 = 1 (targets 1, kappa).
RawFit newton_unit_scale(int dim, double kappa, double scale, const FitOptions& options) {
    const double half_d_log_scale = 0.5 * dim * std::log(scale);
    // Start: l2 = D / (2 (c4 - c2^2)), l1 = 2 l2 c2, read with c2 = 1.
    double l2 = dim / (2.0 * (kappa - 1.0));
    double l1 = 2.0 * l2;
    auto objective = [&](double a1, double a2, double log_z) { return log_z - a1 + a2 * kappa; };

    RawFit out{l1, l2, 0, {}, false, {}};
    Moments m = moments_of(dim, l1, l2);
    double g = objective(l1, l2, m.log_z);
    for (std::size_t it = 0;; ++it) {
        const double r2 = m.e2 - 1.0;
        const double r4 = m.e4 - kappa;
        out.residual = {std::abs(r2), std::abs(r4) / kappa};
        out.lambda1 = l1;
        out.lambda2 = l2;
        out.iterations = it;
        if (out.residual[0] <= options.tolerance && out.residual[1] <= options.tolerance) {
            out.converged = true;
            return out;
        }
        if (it >= options.max_iterations) {
            return out;
        }
        // Hessian = Cov(r^2, r^4) in theta = (l1, -l2).
        const double h11 = m.e4 - m.e2 * m.e2;
        const double h12 = m.e6 - m.e2 * m.e4;
        const double h22 = m.e8 - m.e4 * m.e4;
        const double det = h11 * h22 - h12 * h12;
        if (!(h11 > 0.0) || !(det > 0.0)) {
            std::ostringstream msg;
            msg << "fit_moments: Hessian lost positive definiteness at lambda=(" << l1 / scale
                << ", " << l2 / (scale * scale) << ")";
            throw ConvergenceError(msg.str(), it);
        }
        const double d1 = -(h22 * r2 - h12 * r4) / det;  // d theta_1
        const double d2 = -(-h12 * r2 + h11 * r4) / det;  // d theta_2 = -d l2
        const double decrement = -(r2 * d1 + r4 * d2);
        // Below this the objective cannot resolve the step; take it whole.
        const bool noise_level = decrement <= 1e-14 * (1.0 + std::abs(g));

        // lambda2 may at most halve per step; iterates that jump close to
        // lambda2 = 0 land where the Hessian is nearly singular.
        double t = d2 > 0.0 ? std::min(1.0, 0.5 * l2 / d2) : 1.0;
        bool accepted = false;
        double n1 = l1;
        double n2 = l2;
        Moments nm = m;
        double ng = g;
        for (int halvings = 0; halvings < 60; ++halvings, t *= 0.5) {
            n1 = l1 + t * d1;
            n2 = l2 - t * d2;
            if (!(n2 > 0.0) || !std::isfinite(n1)) {
                continue;
            }
            nm = moments_of(dim, n1, n2);
            ng = objective(n1, n2, nm.log_z);
            if (noise_level || ng <= g - 1e-4 * t * decrement) {
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            std::ostringstream msg;
            msg << "fit_moments: line search failed at iteration " << it;
            throw ConvergenceError(msg.str(), it);
        }
        l1 = n1;
        l2 = n2;
        m = nm;
        g = ng;
        out.trace.push_back({l1 / scale, l2 / (scale * scale), g + half_d_log_scale, det, t});
    }
}

}  // namespace

const char* to_string(Feasibility f) {
    switch (f) {
        case Feasibility::interior:
            return "interior";
        case Feasibility::near_gaussian_boundary:
            return "near_gaussian_boundary";
        case Feasibility::infeasible:
            return "infeasible";
    }
    return "unknown";
}

const RadialParams& FitReport::radial() const {
    if (const auto* r = std::get_if<RadialParams>(&params)) {
        return *r;
    }
    return std::get<EllipticalParams>(params).radial();
}

double gaussian_kurtosis_ratio(int dim) {
    if (dim < 1) {
        throw DomainError("gaussian_kurtosis_ratio: dim must be >= 1");
    }
    return (dim + 2.0) / dim;
}

namespace {

FitReport fit_moments_impl(int dim, const MomentPair& targets, const FitOptions& options,
                           Feasibility flag) {
    const double kappa = targets.kurtosis_ratio();
    const double scale = targets.c2();
    RawFit raw = newton_unit_scale(dim, kappa, scale, options);
    return FitReport{
        .params = RadialParams(dim, raw.lambda1 / scale, raw.lambda2 / (scale * scale)),
        .iterations = raw.iterations,
        .residual = raw.residual,
        .converged = raw.converged,
        .feasibility = flag,
        .targets = targets,
        .trace = std::move(raw.trace),
    };
}

Feasibility classify(int dim, double kappa, double near_gap, const FitOptions& options) {
    const double boundary = gaussian_kurtosis_ratio(dim);
    const double gap = 1.0 - kappa / boundary;
    if (gap <= options.boundary_epsilon) {
        return Feasibility::infeasible;
    }
    return gap <= near_gap ? Feasibility::near_gaussian_boundary : Feasibility::interior;
}

}  // namespace

FitReport fit_moments(int dim, const MomentPair& targets, const FitOptions& options) {
    if (dim < 1) {
        throw DomainError("fit_moments: dim must be >= 1");
    }
    const double kappa = targets.kurtosis_ratio();
    const auto flag = classify(dim, kappa, options.near_boundary_gap, options);
    if (flag == Feasibility::infeasible) {
        std::ostringstream msg;
        msg << "fit_moments: infeasible targets, c4/c2^2 = " << kappa
            << " is at or beyond the Gaussian limit " << gaussian_kurtosis_ratio(dim)
            << " (no lambda2 > 0 solution)";
        throw InfeasibleError(msg.str());
    }
    auto report = fit_moments_impl(dim, targets, options, flag);
    if (!report.converged) {
        std::ostringstream msg;
        msg << "fit_moments: no convergence after " << report.iterations
            << " iterations (residuals " << report.residual[0] << ", " << report.residual[1]
            << ")";
        throw ConvergenceError(msg.str(), report.iterations);
    }
    return report;
}

FitReport fit_data(const Eigen::MatrixXd& data, FitModel model, const FitOptions& options) {
    const auto n = data.rows();
    const auto dim = data.cols();
    if (dim < 1 || n <= dim + 1) {
        throw DomainError("fit_data: need more than dim + 1 rows");
    }
    if (!data.allFinite()) {
        throw DomainError("fit_data: data contain non-finite values");
    }

    Eigen::VectorXd mu = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd factor = Eigen::MatrixXd::Identity(dim, dim);
    if (model == FitModel::elliptical) {
        mu = data.colwise().mean().transpose();
        const Eigen::MatrixXd centered = data.rowwise() - mu.transpose();
        const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
        Eigen::LLT<Eigen::MatrixXd> llt(cov);
        if (llt.info() != Eigen::Success) {
            throw DomainError("fit_data: sample covariance is not positive definite");
        }
        Eigen::MatrixXd l = llt.matrixL();
        double log_det = 0.0;
        for (Eigen::Index i = 0; i < dim; ++i) {
            if (!(l(i, i) > 0.0)) {
                throw DomainError("fit_data: sample covariance is not positive definite");
            }
            log_det += 2.0 * std::log(l(i, i));
        }
        // det(Sigma) = 1
        factor = l * std::exp(-log_det / (2.0 * dim));
    }

    const Eigen::MatrixXd centered = data.rowwise() - mu.transpose();
    const Eigen::MatrixXd white =
        factor.triangularView<Eigen::Lower>().solve(centered.transpose()).transpose();
    const Eigen::VectorXd q = white.rowwise().squaredNorm();
    const Eigen::VectorXd q2 = q.array().square();
    const double c2 = q.mean();
    const double c4 = q2.mean();
    if (!(c4 > c2 * c2)) {
        throw DomainError("fit_data: degenerate radial spread (c4 <= c2^2)");
    }
    const MomentPair targets(c2, c4);

    // Delta-method standard error of kappa = c4 / c2^2.
    const double v22 = (q.array() - c2).square().sum() / (n - 1.0);
    const double v44 = (q2.array() - c4).square().sum() / (n - 1.0);
    const double v24 = ((q.array() - c2) * (q2.array() - c4)).sum() / (n - 1.0);
    const double g2 = -2.0 * c4 / (c2 * c2 * c2);
    const double g4 = 1.0 / (c2 * c2);
    const double se_kappa = std::sqrt(std::max(g2 * g2 * v22 + 2.0 * g2 * g4 * v24 + g4 * g4 * v44, 0.0) / n);

    const int d = static_cast<int>(dim);
    const double kappa = targets.kurtosis_ratio();
    const double boundary = gaussian_kurtosis_ratio(d);
    const double near_gap = std::max(options.near_boundary_gap, 4.0 * se_kappa / boundary);
    const auto flag = classify(d, kappa, near_gap, options);
    if (flag == Feasibility::infeasible) {
        std::ostringstream msg;
        msg << "fit_data: infeasible, sample c4/c2^2 = " << kappa << " reaches the Gaussian limit "
            << boundary
            << "; data this heavy-tailed cannot be fitted with lambda2 > 0";
        throw InfeasibleError(msg.str());
    }

    FitReport report = [&] {
        try {
            return fit_moments_impl(d, targets, options, flag);
        } catch (const ConvergenceError&) {
            if (flag != Feasibility::near_gaussian_boundary) {
                throw;
            }
            // Boundary-adjacent targets may drive lambda2 -> 0; report the
            // start point as an unconverged fit.
            const double l2 = d / (2.0 * (kappa - 1.0));
            return FitReport{
                .params = RadialParams(d, 2.0 * l2 / c2, l2 / (c2 * c2)),
                .iterations = 0,
                .residual = {1.0, 1.0},
                .converged = false,
                .feasibility = flag,
                .targets = targets,
                .trace = {},
            };
        }
    }();
    if (!report.converged && flag != Feasibility::near_gaussian_boundary) {
        std::ostringstream msg;
        msg << "fit_data: no convergence after " << report.iterations << " iterations";
        throw ConvergenceError(msg.str(), report.iterations);
    }
    const RadialParams radial = report.radial();
    report.params = EllipticalParams(mu, factor, radial);
    return report;
}

}  // namespace eqe
