#include "eqe/cli/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <sstream>

#include "eqe/condmarg.hpp"
#include "eqe/fit.hpp"
#include "eqe/quadrature.hpp"
#include "eqe/sampling.hpp"

namespace eqe::cli {
namespace {

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

CheckResult pcf_vs_quadrature() {
    double worst = 0.0;
    for (int d : {1, 2, 3, 5, 10}) {
        for (double l1 : {-20.0, -5.0, 0.0, 2.0, 8.0, 20.0}) {
            for (double l2 : {0.05, 0.5, 4.0, 50.0}) {
                const RadialParams p(d, l1, l2);
                worst = std::max(worst, rel_diff(log_norm_const(p, NormMethod::pcf),
                                                 log_norm_const(p, NormMethod::quadrature)));
            }
        }
    }
    return {"pcf_vs_quadrature", false, worst, 1e-8, "120 (D, l1, l2) points"};
}

CheckResult d2_closed_form() {
    double worst = 0.0;
    for (double l1 : {-30.0, -3.0, -0.1, 0.0, 0.7, 4.0, 25.0}) {
        for (double l2 : {0.01, 0.3, 2.0, 90.0}) {
            const double pcf = log_norm_const(RadialParams(2, l1, l2));
            worst = std::max(worst, rel_diff(pcf, log_norm_const_d2_closed(l1, l2)));
        }
    }
    return {"d2_closed_form", false, worst, 1e-10, "erfc form vs general formula"};
}

CheckResult gradient_identity() {
    double worst = 0.0;
    for (int d : {1, 2, 4, 7}) {
        for (double l1 : {-4.0, 0.5, 6.0}) {
            for (double l2 : {0.2, 3.0}) {
                const RadialParams p(d, l1, l2);
                const double h1 = 1e-5 * std::max(1.0, std::abs(l1));
                const double h2 = 1e-5 * l2;
                const double g1 = (log_norm_const(RadialParams(d, l1 + h1, l2)) -
                                   log_norm_const(RadialParams(d, l1 - h1, l2))) /
                                  (2.0 * h1);
                const double g2 = (log_norm_const(RadialParams(d, l1, l2 + h2)) -
                                   log_norm_const(RadialParams(d, l1, l2 - h2))) /
                                  (2.0 * h2);
                const double e2 = radial_moment(p, 2);
                const double e4 = radial_moment(p, 4);
                worst = std::max({worst, std::abs(g1 - e2) / e2, std::abs(g2 + e4) / e4});
            }
        }
    }
    return {"gradient_identity", false, worst, 1e-5, "dlnZ/dl1 = E[r^2], dlnZ/dl2 = -E[r^4]"};
}

CheckResult chain_rule() {
    const RadialParams p(5, 3.0, 0.8);
    const BlockSplit split(2, 3);
    SeededGenerator gen(20240601);
    double worst = 0.0;
    for (int i = 0; i < 25; ++i) {
        std::array<double, 5> x{};
        for (double& v : x) v = 1.5 * gen.normal();
        const std::span<const double> xs(x);
        const double joint = log_density(p, xs);
        const double chained = conditional_log_density(p, split, xs.first(2), xs.subspan(2)) +
                               marginal_log_density(p, split.swapped(), xs.subspan(2));
        worst = std::max(worst, std::abs(joint - chained) / std::max(1.0, std::abs(joint)));
    }
    return {"chain_rule", false, worst, 1e-8, "p(x1|x2) p(x2) = p(x), D = 5"};
}

CheckResult marginal_normalization() {
    const RadialParams p = ring_to_radial(RingParams(2, 8.0, 1.0));
    const BlockSplit split(1, 1);
    auto f = [&](double x) {
        const double q = x * x;
        return std::isfinite(q) ? std::exp(marginal_log_density_sq(p, split, q)) : 0.0;
    };
    const double total = 2.0 * quad::integrate_semi_infinite(f, 1e-12).value;
    const auto peaks = marginal_peaks(p, split);
    std::ostringstream detail;
    detail << "ring (alpha 8, R 1), peaks at +-";
    for (double r : peaks) detail << r << ' ';
    const bool bimodal = peaks.size() == 1 && peaks[0] > 0.0 && peaks[0] < 1.0;
    return {"marginal_normalization", bimodal, std::abs(total - 1.0), 1e-8, detail.str()};
}

CheckResult sampler_ks() {
    const RadialParams p(3, 2.0, 1.5);
    constexpr std::size_t n = 20000;
    SeededGenerator gen(1);
    const Eigen::MatrixXd x = sample(p, n, gen);
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = x.row(static_cast<Eigen::Index>(i)).norm();
    std::sort(r.begin(), r.end());
    // Oracle CDF by quadrature of the normalized radial density between
    // consecutive order statistics.
    const double log_norm = log_norm_const(p) - log_sphere_surface_area(p.dim() - 1);
    auto density = [&](double t) {
        const double t2 = t * t;
        return std::exp((p.dim() - 1) * std::log(t) + t2 * (p.lambda1() - p.lambda2() * t2) -
                        log_norm);
    };
    double cdf = 0.0;
    double prev = 0.0;
    double stat = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (r[i] > prev) {
            cdf += quad::integrate_finite(density, prev, r[i], 1e-12).value;
            prev = r[i];
        }
        stat = std::max({stat, std::abs(cdf - static_cast<double>(i) / n),
                         std::abs(cdf - static_cast<double>(i + 1) / n)});
    }
    return {"sampler_ks", false, stat, 1.36 / std::sqrt(static_cast<double>(n)),
            "radius KS, n = 20000, D = 3"};
}

CheckResult fit_round_trip() {
    double worst = 0.0;
    for (int d : {1, 3, 6}) {
        for (double l1 : {-2.0, 1.0, 9.0}) {
            const RadialParams truth(d, l1, 1.3);
            const MomentPair m(radial_moment(truth, 2), radial_moment(truth, 4));
            const auto fitted = fit_moments(d, m).radial();
            worst = std::max({worst, std::abs(fitted.lambda1() - l1) / std::max(1.0, std::abs(l1)),
                              std::abs(fitted.lambda2() - 1.3) / 1.3});
        }
    }
    return {"fit_round_trip", false, worst, 1e-6, "moments of known law refitted"};
}

CheckResult maxent_dominance() {
    // Positive margin means the quartic law has the larger entropy.
    double worst_margin = 1e300;
    for (int d : {1, 2, 5}) {
        for (double l1 : {-1.0, 3.0, 12.0}) {
            const RadialParams p(d, l1, 2.0);
            const MomentPair m(radial_moment(p, 2), radial_moment(p, 4));
            const double margin = entropy(p) - EllipticalGamma::moment_matched(d, m).entropy();
            worst_margin = std::min(worst_margin, margin);
        }
    }
    // Reported as a violation amount so that worst <= tolerance means pass.
    return {"maxent_dominance", false, std::max(0.0, -worst_margin), 0.0,
            "H(quartic) >= H(elliptical gamma) at equal E[r^2], E[r^4]"};
}

}  // namespace

std::vector<CheckResult> run_selfcheck(const SelfcheckOptions& options) {
    std::vector<CheckResult> results;
    using Check = CheckResult (*)();
    const std::pair<const char*, Check> checks[] = {
        {"pcf_vs_quadrature", pcf_vs_quadrature},
        {"d2_closed_form", d2_closed_form},
        {"gradient_identity", gradient_identity},
        {"chain_rule", chain_rule},
        {"marginal_normalization", marginal_normalization},
        {"sampler_ks", sampler_ks},
        {"fit_round_trip", fit_round_trip},
        {"maxent_dominance", maxent_dominance},
    };
    for (const auto& [name, check] : checks) {
        CheckResult r{name, false, 0.0, 0.0, ""};
        try {
            r = check();
            // marginal_normalization stores its bimodality verdict in `passed`.
            const bool extra = r.name != "marginal_normalization" || r.passed;
            if (options.inject_failure && results.empty()) {
                r.tolerance = 0.0;
                r.worst = std::max(r.worst, 1e-300);
                r.detail += " [injected zero tolerance]";
            }
            r.passed = extra && std::isfinite(r.worst) && r.worst <= r.tolerance;
        } catch (const std::exception& e) {
            r.passed = false;
            r.worst = std::numeric_limits<double>::quiet_NaN();
            r.detail = std::string("exception: ") + e.what();
        }
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace eqe::cli
