#include "eqe/sampling.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <thread>

#include "eqe/error.hpp"

namespace eqe {
namespace {

constexpr int kGaussPoints = 20;
constexpr std::size_t kPilotIntervals = 4096;
constexpr std::size_t kUniformKnots = 512;
// Tail beyond r_max carries less than e^{-46} relative mass.
constexpr double kTailLogDrop = 46.0;

struct GaussLegendre {
    std::array<double, kGaussPoints> x{};
    std::array<double, kGaussPoints> w{};
};

// Nodes and weights on [-1, 1] by Newton iteration on P_n.
const GaussLegendre& gauss_legendre() {
    static const GaussLegendre rule = [] {
        GaussLegendre g;
        const int n = kGaussPoints;
        for (int i = 0; i < n; ++i) {
            double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
            double dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                double p0 = 1.0;
                double p1 = 0.0;
                for (int j = 1; j <= n; ++j) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / j;
                }
                dp = n * (z * p0 - p1) / (z * z - 1.0);
                const double dz = p0 / dp;
                z -= dz;
                if (std::abs(dz) < 1e-16) {
                    break;
                }
            }
            g.x[i] = z;
            g.w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        }
        return g;
    }();
    return rule;
}

template <typename F>
double gauss_integral(F&& f, double a, double b) {
    const auto& g = gauss_legendre();
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < kGaussPoints; ++i) {
        s += g.w[i] * f(mid + half * g.x[i]);
    }
    return s * half;
}

void fill_direction(SeededGenerator& gen, Eigen::Ref<Eigen::VectorXd> out) {
    for (;;) {
        for (Eigen::Index j = 0; j < out.size(); ++j) {
            out[j] = gen.normal();
        }
        const double n = out.norm();
        if (n > 0.0) {
            out /= n;
            return;
        }
    }
}

}  // namespace

RadialCdfTable::RadialCdfTable(const RadialParams& p, std::size_t n_knots) : params_(p) {
    if (n_knots < 8) {
        throw DomainError("RadialCdfTable: need at least 8 knots");
    }
    const int d = p.dim();
    const double l1 = p.lambda1();
    const double l2 = p.lambda2();

    // Radial mode: 4 l2 y^2 - 2 l1 y - (D - 1) = 0 with y = r^2.
    double y_peak = 0.0;
    if (d > 1) {
        const double disc = std::sqrt(l1 * l1 + 4.0 * l2 * (d - 1));
        y_peak = l1 >= 0.0 ? (l1 + disc) / (4.0 * l2) : (d - 1.0) / (disc - l1);
    } else {
        y_peak = std::max(l1 / (2.0 * l2), 0.0);
    }
    const double r_peak = std::sqrt(y_peak);
    log_ref_ = 0.0;
    log_ref_ = r_peak > 0.0 ? log_shape(r_peak) : 0.0;

    double step = 1.0 / std::sqrt(std::sqrt(l2));
    if (l1 < 0.0) {
        step = std::min(step, 1.0 / std::sqrt(-l1));
    }
    double lo = r_peak;
    double hi = r_peak + step;
    while (log_shape(hi) > -kTailLogDrop) {
        lo = hi;
        step *= 2.0;
        hi += step;
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (log_shape(mid) > -kTailLogDrop ? lo : hi) = mid;
    }
    const double r_max = hi;

    auto shape = [this](double r) { return std::exp(log_shape(r)); };

    // Pilot CDF on a uniform grid.
    std::vector<double> pilot_r(kPilotIntervals + 1);
    std::vector<double> pilot_c(kPilotIntervals + 1, 0.0);
    for (std::size_t i = 0; i <= kPilotIntervals; ++i) {
        pilot_r[i] = r_max * static_cast<double>(i) / kPilotIntervals;
    }
    for (std::size_t i = 0; i < kPilotIntervals; ++i) {
        pilot_c[i + 1] = pilot_c[i] + gauss_integral(shape, pilot_r[i], pilot_r[i + 1]);
    }
    const double pilot_total = pilot_c.back();

    knots_.reserve(n_knots + kUniformKnots + 2);
    knots_.push_back(0.0);
    knots_.push_back(r_max);
    std::size_t cursor = 0;
    for (std::size_t j = 1; j + 1 < n_knots; ++j) {
        const double target = pilot_total * static_cast<double>(j) / (n_knots - 1);
        while (cursor + 1 < kPilotIntervals && pilot_c[cursor + 1] < target) {
            ++cursor;
        }
        const double c0 = pilot_c[cursor];
        const double c1 = pilot_c[cursor + 1];
        const double t = c1 > c0 ? (target - c0) / (c1 - c0) : 0.5;
        knots_.push_back(pilot_r[cursor] + std::clamp(t, 0.0, 1.0) * (pilot_r[cursor + 1] - pilot_r[cursor]));
    }
    for (std::size_t j = 1; j < kUniformKnots; ++j) {
        knots_.push_back(r_max * static_cast<double>(j) / kUniformKnots);
    }
    std::sort(knots_.begin(), knots_.end());
    const double min_gap = 1e-12 * r_max;
    std::vector<double> unique_knots{knots_.front()};
    for (std::size_t i = 1; i < knots_.size(); ++i) {
        if (knots_[i] - unique_knots.back() > min_gap) {
            unique_knots.push_back(knots_[i]);
        }
    }
    unique_knots.back() = r_max;
    knots_ = std::move(unique_knots);

    // Exact CDF at the final knots; intervals with no numerical mass (deep
    // in a tail) are dropped so the table stays strictly increasing.
    std::vector<double> mass(knots_.size(), 0.0);
    for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
        mass[i + 1] = mass[i] + gauss_integral(shape, knots_[i], knots_[i + 1]);
    }
    const double total = mass.back();
    log_norm_ = std::log(total);
    std::vector<double> kept_r{knots_.front()};
    std::vector<double> kept_c{0.0};
    for (std::size_t i = 1; i < knots_.size(); ++i) {
        const double c = mass[i] / total;
        if (c > kept_c.back()) {
            kept_r.push_back(knots_[i]);
            kept_c.push_back(c);
        } else if (i + 1 == knots_.size()) {
            // the last knot with mass already rounds to 1; move it out to r_max
            kept_r.back() = knots_[i];
        }
    }
    kept_c.back() = 1.0;
    knots_ = std::move(kept_r);
    cdf_ = std::move(kept_c);
    pdf_.resize(knots_.size());
    for (std::size_t i = 0; i < knots_.size(); ++i) {
        pdf_[i] = pdf(knots_[i]);
    }
}

double RadialCdfTable::log_shape(double r) const {
    const double y = r * r;
    const double poly = y * (params_.lambda1() - params_.lambda2() * y);
    if (params_.dim() == 1) {
        return poly - log_ref_;
    }
    return (params_.dim() - 1) * std::log(r) + poly - log_ref_;
}

double RadialCdfTable::pdf(double r) const {
    if (r < 0.0 || r > r_max()) {
        return 0.0;
    }
    if (r == 0.0 && params_.dim() > 1) {
        return 0.0;
    }
    return std::exp(log_shape(r) - log_norm_);
}

double RadialCdfTable::interval_mass(std::size_t k, double r) const {
    if (r <= knots_[k]) {
        return 0.0;
    }
    return gauss_integral([this](double s) { return pdf(s); }, knots_[k], r);
}

double RadialCdfTable::cdf(double r) const {
    if (r <= 0.0) return 0.0;
    if (r >= r_max()) return 1.0;
    const auto it = std::upper_bound(knots_.begin(), knots_.end(), r);
    const auto k = static_cast<std::size_t>(it - knots_.begin()) - 1;
    return std::min(cdf_[k] + interval_mass(k, r), 1.0);
}

double RadialCdfTable::inverse_cdf(double u) const {
    if (!(u > 0.0)) return 0.0;
    if (u >= 1.0) return r_max();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto k = static_cast<std::size_t>(it - cdf_.begin()) - 1;
    const double c0 = cdf_[k];
    const double c1 = cdf_[k + 1];
    const double r0 = knots_[k];
    const double r1 = knots_[k + 1];
    const double dc = c1 - c0;
    const double secant = (r1 - r0) / dc;

    // Monotone cubic Hermite guess in (u -> r) with slopes 1/pdf, limited
    // to 3x the secant (Fritsch-Carlson).
    auto slope = [&](double density) {
        return density > 0.0 ? std::min(1.0 / density, 3.0 * secant) : 3.0 * secant;
    };
    const double m0 = slope(pdf_[k]) * dc;
    const double m1 = slope(pdf_[k + 1]) * dc;
    const double t = (u - c0) / dc;
    const double t2 = t * t;
    const double t3 = t2 * t;
    double r = (2 * t3 - 3 * t2 + 1) * r0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * r1 +
               (t3 - t2) * m1;
    if (k == 0) {
        // F(r) ~ c r^D near the origin, which the cubic cannot follow for
        // tiny u.
        r = r1 * std::pow(t, 1.0 / params_.dim());
    }
    r = std::clamp(r, r0, r1);

    // Safeguarded Newton on F(r) - u within [r0, r1].
    const double target = u - c0;
    double lo = r0;
    double hi = r1;
    for (int it = 0; it < 60; ++it) {
        const double f = interval_mass(k, r) - target;
        if (f == 0.0) {
            break;
        }
        (f < 0.0 ? lo : hi) = r;
        const double density = pdf(r);
        const double tol = 4.0 * std::numeric_limits<double>::epsilon() * std::max(r, 1e-300);
        if (density > 0.0 && std::abs(f) <= tol * density) {
            // the Newton correction is below resolution
            break;
        }
        double next = density > 0.0 ? r - f / density : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        r = next;
        if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) {
            break;
        }
    }
    return r;
}

RadialCdfTable build_radial_table(const RadialParams& p, std::size_t n_knots) {
    return RadialCdfTable(p, n_knots);
}

Eigen::MatrixXd sample(const RadialCdfTable& table, std::size_t n, SeededGenerator& gen) {
    if (n < 1) {
        throw DomainError("sample: n must be >= 1");
    }
    const int d = table.params().dim();
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), d);
    Eigen::VectorXd dir(d);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = table.inverse_cdf(gen.uniform());
        fill_direction(gen, dir);
        out.row(static_cast<Eigen::Index>(i)) = r * dir.transpose();
    }
    return out;
}

Eigen::MatrixXd sample(const RadialParams& p, std::size_t n, SeededGenerator& gen) {
    return sample(RadialCdfTable(p), n, gen);
}

Eigen::MatrixXd sample(const EllipticalParams& p, std::size_t n, SeededGenerator& gen) {
    Eigen::MatrixXd z = sample(RadialCdfTable(p.radial()), n, gen);
    // rows: x = mu + L z
    Eigen::MatrixXd x = z * p.sigma_factor().transpose();
    x.rowwise() += p.mu().transpose();
    return x;
}

std::uint64_t worker_seed(std::uint64_t seed, unsigned worker) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(worker)};
    std::array<std::uint32_t, 2> words{};
    seq.generate(words.begin(), words.end());
    return (static_cast<std::uint64_t>(words[0]) << 32) | words[1];
}

Eigen::MatrixXd sample_parallel(const EllipticalParams& p, std::size_t n, std::uint64_t seed,
                                unsigned workers) {
    if (n < 1) {
        throw DomainError("sample: n must be >= 1");
    }
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
    const RadialCdfTable table(p.radial());
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), p.dim());
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(workers);
    std::size_t start = 0;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t count = n / workers + (w < n % workers ? 1 : 0);
        threads.emplace_back([&, w, start, count] {
            try {
                SeededGenerator gen(worker_seed(seed, w));
                Eigen::MatrixXd z = sample(table, count, gen);
                Eigen::MatrixXd x = z * p.sigma_factor().transpose();
                x.rowwise() += p.mu().transpose();
                out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(count)) = x;
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
        start += count;
    }
    for (auto& t : threads) {
        t.join();
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    return out;
}

Eigen::MatrixXd sample(const EllipticalGamma& eg, std::size_t n, SeededGenerator& gen) {
    if (n < 1) {
        throw DomainError("sample: n must be >= 1");
    }
    const int d = eg.dim();
    std::gamma_distribution<double> gamma(eg.shape(), eg.scale());
    Eigen::MatrixXd out(static_cast<Eigen::Index>(n), d);
    Eigen::VectorXd dir(d);
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::sqrt(gamma(gen.engine()));
        fill_direction(gen, dir);
        out.row(static_cast<Eigen::Index>(i)) = (r * (eg.sigma_factor() * dir)).transpose();
    }
    return out;
}

}  // namespace eqe
