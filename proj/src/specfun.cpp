#include "eqe/specfun.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <string>

#include "eqe/error.hpp"

namespace eqe::specfun {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
// Rescaling step for long positive series (exact power of two).
constexpr int kRescaleExp = 800;
const double kRescaleLog = kRescaleExp * std::numbers::ln2;

struct AsymptoticResult {
    ScaledValue value;
    double rel_err;
};

// Power series of M(a, b, x) for x >= 0 with on-the-fly rescaling so that
// sums up to exp(x) for x in the thousands stay representable.
ScaledValue kummer_series(double a, double b, double x) {
    constexpr std::size_t kMaxTerms = 200000;
    double term = 1.0;
    double sum = 1.0;
    double abs_sum = 1.0;
    double scale_log = 0.0;
    std::size_t k = 0;
    for (; k < kMaxTerms; ++k) {
        const double ratio = (a + k) * x / ((b + k) * (k + 1.0));
        if (ratio == 0.0) {
            break;
        }
        term *= ratio;
        sum += term;
        abs_sum += std::abs(term);
        if (std::abs(term) <= 1e-17 * std::abs(sum) && std::abs(ratio) < 0.5) {
            break;
        }
        if (abs_sum > 1e250) {
            term = std::ldexp(term, -kRescaleExp);
            sum = std::ldexp(sum, -kRescaleExp);
            abs_sum = std::ldexp(abs_sum, -kRescaleExp);
            scale_log += kRescaleLog;
        }
    }
    if (k == kMaxTerms) {
        throw ConvergenceError("kummer_m: series did not converge", k);
    }
    if (sum == 0.0) {
        return ScaledValue::zero();
    }
    const double cancellation = abs_sum / std::abs(sum);
    if (cancellation * kEps * std::sqrt(static_cast<double>(k + 1)) > 1e-10) {
        std::ostringstream msg;
        msg << "kummer_m: cancellation too severe (a=" << a << ", b=" << b << ", x=" << x << ")";
        throw ConvergenceError(msg.str(), k);
    }
    return ScaledValue::from_log(std::log(std::abs(sum)) + scale_log, sum > 0 ? 1 : -1);
}

// D_nu(z) ~ z^nu e^{-z^2/4} sum_k (-1)^k (-nu)_{2k} / (k! (2z^2)^k), z > 0.
AsymptoticResult pcf_asymptotic(double nu, double z, bool scaled = false) {
    const double two_z2 = 2.0 * z * z;
    double term = 1.0;
    double sum = 1.0;
    double err = 0.0;
    for (int k = 0; k < 500; ++k) {
        const double next = -term * (nu - 2.0 * k) * (nu - 2.0 * k - 1.0) / ((k + 1.0) * two_z2);
        if (next == 0.0) {
            err = 0.0;
            break;
        }
        if (std::abs(next) >= std::abs(term)) {
            err = std::abs(term);
            break;
        }
        sum += next;
        term = next;
        err = std::abs(term);
        if (std::abs(term) < 1e-17 * std::abs(sum)) {
            break;
        }
    }
    const auto prefactor = ScaledValue::from_log(nu * std::log(z) - (scaled ? 0.0 : 0.25 * z * z));
    return {prefactor * ScaledValue::from_double(sum), err / std::abs(sum)};
}

// Two-term Kummer representation, valid for nu < 0 and any real z. For z > 0
// the terms have opposite signs; `cancellation` receives |t1| / |t1 + t2|.
ScaledValue pcf_kummer(double nu, double z, double* cancellation = nullptr) {
    const double x = 0.5 * z * z;
    const double log_pi = std::log(std::numbers::pi);
    const auto m1 = kummer_m(-0.5 * nu, 0.5, x);
    const auto m2 = kummer_m(0.5 * (1.0 - nu), 1.5, x);
    const auto t1 = ScaledValue::from_log(0.5 * log_pi - std::lgamma(0.5 * (1.0 - nu))) * m1;
    ScaledValue t2;
    if (z != 0.0) {
        t2 = ScaledValue::from_log(0.5 * (log_pi + std::numbers::ln2) + std::log(std::abs(z)) -
                                       std::lgamma(-0.5 * nu),
                                   z > 0 ? -1 : 1) *
             m2;
    }
    const auto bracket = t1 + t2;
    if (cancellation != nullptr) {
        *cancellation = bracket.is_zero() ? std::numeric_limits<double>::infinity()
                                          : std::exp(t1.log_mag - bracket.log_mag);
    }
    return ScaledValue::from_log(0.5 * nu * std::numbers::ln2 - 0.25 * z * z) * bracket;
}

// Integrates Weber's equation w'' = (z^2/4 - nu - 1/2) w from z_start down to
// z_end with a Taylor-series stepper. D_nu is recessive for increasing z, so
// the backward direction is the stable one.
ScaledValue pcf_backward_ode(double nu, double z_start, double z_end) {
    const auto d0 = pcf_asymptotic(nu, z_start).value;
    const auto d1 = pcf_asymptotic(nu + 1.0, z_start).value;
    // D'_nu = (z/2) D_nu - D_{nu+1}
    const auto deriv = ScaledValue::from_double(0.5 * z_start) * d0 - d1;

    double scale_log = d0.log_mag;
    double w = d0.sign;
    double wp = (deriv / ScaledValue::from_log(scale_log)).value();

    const double a = -nu - 0.5;
    const int steps = std::max(1, static_cast<int>(std::ceil((z_start - z_end) / 0.25)));
    const double h = -(z_start - z_end) / steps;
    std::array<double, 400> c{};
    double z0 = z_start;
    for (int s = 0; s < steps; ++s) {
        c[0] = w;
        c[1] = wp;
        const double q = 0.25 * z0 * z0 + a;
        double w_new = c[0] + c[1] * h;
        double wp_new = c[1];
        double hn = h;  // h^(n-1) for the derivative sum
        bool done = false;
        for (std::size_t n = 0; n + 2 < c.size(); ++n) {
            double rhs = q * c[n];
            if (n >= 1) rhs += 0.5 * z0 * c[n - 1];
            if (n >= 2) rhs += 0.25 * c[n - 2];
            c[n + 2] = rhs / ((n + 2.0) * (n + 1.0));
            const double dterm = (n + 2.0) * c[n + 2] * hn;
            hn *= h;
            const double vterm = c[n + 2] * hn;
            w_new += vterm;
            wp_new += dterm;
            if (n >= 6 && std::abs(vterm) < 1e-18 * std::abs(w_new) &&
                std::abs(dterm) < 1e-18 * (std::abs(wp_new) + std::abs(w_new))) {
                done = true;
                break;
            }
        }
        if (!done) {
            throw ConvergenceError("pcf_d: Taylor step did not converge", c.size());
        }
        w = w_new;
        wp = wp_new;
        z0 += h;
        const double m = std::abs(w);
        if (m > 0.0) {
            scale_log += std::log(m);
            w /= m;
            wp /= m;
        }
    }
    return ScaledValue::from_log(scale_log + std::log(std::abs(w)), w > 0 ? 1 : -1);
}

}  // namespace

ScaledValue ScaledValue::from_double(double v) {
    if (v == 0.0) {
        return zero();
    }
    return {std::log(std::abs(v)), v > 0 ? 1 : -1};
}

ScaledValue ScaledValue::operator*(const ScaledValue& o) const {
    if (sign == 0 || o.sign == 0) {
        return zero();
    }
    return {log_mag + o.log_mag, sign * o.sign};
}

ScaledValue ScaledValue::operator/(const ScaledValue& o) const {
    if (o.sign == 0) {
        throw DomainError("ScaledValue: division by zero");
    }
    if (sign == 0) {
        return zero();
    }
    return {log_mag - o.log_mag, sign * o.sign};
}

ScaledValue ScaledValue::operator+(const ScaledValue& o) const {
    if (sign == 0) return o;
    if (o.sign == 0) return *this;
    const ScaledValue& hi = log_mag >= o.log_mag ? *this : o;
    const ScaledValue& lo = log_mag >= o.log_mag ? o : *this;
    const double r = std::exp(lo.log_mag - hi.log_mag);
    if (hi.sign == lo.sign) {
        return {hi.log_mag + std::log1p(r), hi.sign};
    }
    if (r == 1.0) {
        return zero();
    }
    return {hi.log_mag + std::log1p(-r), hi.sign};
}

double log_gamma(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError("log_gamma: argument must be positive and finite");
    }
    return std::lgamma(x);
}

double erf(double x) { return std::erf(x); }

double erfc(double x) { return std::erfc(x); }

double log_erfc(double x) {
    if (x < 20.0) {
        return std::log(std::erfc(x));
    }
    // Laplace continued fraction erfc(x) = e^{-x^2}/sqrt(pi) / (x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    double tail = x;
    for (int k = 60; k >= 1; --k) {
        tail = x + 0.5 * k / tail;
    }
    return -x * x - 0.5 * std::log(std::numbers::pi) - std::log(tail);
}

ScaledValue kummer_m(double a, double b, double z) {
    if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(z)) {
        throw DomainError("kummer_m: non-finite argument");
    }
    if (b <= 0.0 && b == std::floor(b)) {
        throw DomainError("kummer_m: b must not be a non-positive integer");
    }
    if (z == 0.0) {
        return ScaledValue::from_double(1.0);
    }
    if (z < 0.0) {
        // Kummer transformation M(a,b,z) = e^z M(b-a,b,-z)
        auto r = kummer_series(b - a, b, -z);
        r.log_mag += z;
        return r;
    }
    return kummer_series(a, b, z);
}

ScaledValue pcf_d(double nu, double z) {
    if (!std::isfinite(nu) || !std::isfinite(z)) {
        throw DomainError("pcf_d: non-finite argument");
    }
    if (nu > 0.0) {
        throw DomainError("pcf_d: only orders nu <= 0 are supported");
    }
    if (nu == 0.0) {
        return ScaledValue::from_log(-0.25 * z * z);
    }
    if (z <= 0.0) {
        return pcf_kummer(nu, z);
    }
    if (z <= kPcfKummerMaxZ) {
        double cancellation = 0.0;
        const auto v = pcf_kummer(nu, z, &cancellation);
        if (cancellation <= kPcfMaxCancellation) {
            return v;
        }
    }
    constexpr double kAsymptoticTol = 1e-15;
    const auto direct = pcf_asymptotic(nu, z);
    if (direct.rel_err <= kAsymptoticTol && pcf_asymptotic(nu + 1.0, z).rel_err <= kAsymptoticTol) {
        return direct.value;
    }
    double z_start = std::max(z, 6.0);
    for (; z_start < 80.0; z_start += 0.5) {
        if (pcf_asymptotic(nu, z_start).rel_err <= kAsymptoticTol &&
            pcf_asymptotic(nu + 1.0, z_start).rel_err <= kAsymptoticTol) {
            break;
        }
    }
    if (z_start >= 80.0) {
        throw ConvergenceError("pcf_d: asymptotic expansion never reached tolerance", 0);
    }
    return pcf_backward_ode(nu, z_start, z);
}

ScaledValue pcf_d_scaled(double nu, double z) {
    if (z > kPcfKummerMaxZ && std::isfinite(z) && std::isfinite(nu) && nu < 0.0) {
        const auto direct = pcf_asymptotic(nu, z, true);
        if (direct.rel_err <= 1e-15) {
            return direct.value;
        }
    }
    return pcf_d(nu, z) * ScaledValue::from_log(0.25 * z * z);
}

ScaledValue bessel_k_quarter(double x) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        throw DomainError("bessel_k_quarter: argument must be positive and finite");
    }
    constexpr double nu = 0.25;
    if (x <= 2.0) {
        // K_nu = pi/2 (I_{-nu} - I_nu) / sin(nu pi)
        const double half = 0.5 * x;
        const double q = half * half;
        auto bessel_i = [&](double order) {
            double term = std::pow(half, order) / std::tgamma(order + 1.0);
            double sum = term;
            for (int k = 0; k < 200; ++k) {
                term *= q / ((k + 1.0) * (k + 1.0 + order));
                sum += term;
                if (std::abs(term) < 1e-17 * std::abs(sum)) {
                    break;
                }
            }
            return sum;
        };
        const double k = 0.5 * std::numbers::pi * (bessel_i(-nu) - bessel_i(nu)) /
                         std::sin(nu * std::numbers::pi);
        return ScaledValue::from_double(k);
    }
    // Steed's continued fraction (Temme's CF2) for x >= 2.
    const double mu2 = nu * nu;
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25 - mu2;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    int i = 2;
    for (; i <= 100000; ++i) {
        a -= 2.0 * (i - 1);
        c = -a * c / i;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < kEps) {
            break;
        }
    }
    if (i > 100000) {
        throw ConvergenceError("bessel_k_quarter: continued fraction did not converge", 100000);
    }
    return ScaledValue::from_log(0.5 * std::log(std::numbers::pi / (2.0 * x)) - x - std::log(s));
}

}  // namespace eqe::specfun
