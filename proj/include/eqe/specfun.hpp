#pragma once

// Special functions needed by the quartic-exponential normalizer.
//
// Only the orders and argument ranges that actually arise are supported:
// parabolic cylinder D_nu for nu <= 0, Kummer M for real arguments and
// K_{1/4} on the positive axis. Results that can overflow a double are
// returned as ScaledValue (log magnitude plus sign).

#include <cmath>
#include <limits>

namespace eqe::specfun {

struct ScaledValue {
    double log_mag = -std::numeric_limits<double>::infinity();
    int sign = 0;

    static ScaledValue zero() { return {}; }
    static ScaledValue from_log(double log_mag, int sign = 1) {
        return sign == 0 ? zero() : ScaledValue{log_mag, sign > 0 ? 1 : -1};
    }
    static ScaledValue from_double(double v);

    bool is_zero() const { return sign == 0; }
    /// May overflow to +-inf or underflow to 0.
    double value() const { return sign == 0 ? 0.0 : sign * std::exp(log_mag); }

    ScaledValue operator*(const ScaledValue& o) const;
    ScaledValue operator/(const ScaledValue& o) const;
    ScaledValue operator-() const { return {log_mag, -sign}; }
    /// Log-sum-exp combination; exact cancellation yields zero.
    ScaledValue operator+(const ScaledValue& o) const;
    ScaledValue operator-(const ScaledValue& o) const { return *this + (-o); }
};

/// ln Gamma(x) for x > 0.
double log_gamma(double x);

double erf(double x);
double erfc(double x);
/// ln erfc(x), finite for arbitrarily large positive x.
double log_erfc(double x);

/// Confluent hypergeometric M(a, b, z) = 1F1(a; b; z).
ScaledValue kummer_m(double a, double b, double z);

/// Parabolic cylinder function D_nu(z), nu <= 0.
ScaledValue pcf_d(double nu, double z);
/// e^{z^2/4} D_nu(z), nu <= 0. For large z this never forms z^2, so it stays
/// accurate where D_nu itself underflows even in log form.
ScaledValue pcf_d_scaled(double nu, double z);

/// Modified Bessel function of the second kind K_{1/4}(x), x > 0.
ScaledValue bessel_k_quarter(double x);

/// For z > 0 pcf_d uses the two-term Kummer combination only up to this
/// argument and only while the terms cancel by less than
/// kPcfMaxCancellation; otherwise it integrates Weber's equation back from
/// the region where the asymptotic expansion is exact to 1e-15.
inline constexpr double kPcfKummerMaxZ = 2.5;
inline constexpr double kPcfMaxCancellation = 100.0;

}  // namespace eqe::specfun
