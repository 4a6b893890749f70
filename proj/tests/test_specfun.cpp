#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "eqe/error.hpp"
#include "eqe/quadrature.hpp"
#include "eqe/specfun.hpp"

using namespace eqe;
using namespace eqe::specfun;

namespace {

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

// D_nu(z) = e^{-z^2/4} / Gamma(-nu) * int_0^inf t^{-nu-1} e^{-t^2/2 - z t} dt
double pcf_by_quadrature(double nu, double z) {
    auto f = [&](double t) { return std::exp((-nu - 1.0) * std::log(t) - 0.5 * t * t - z * t); };
    const double integral = quad::integrate_semi_infinite(f, 1e-13).value;
    return std::exp(-0.25 * z * z - std::lgamma(-nu)) * integral;
}

}  // namespace

TEST_CASE("log_gamma exact values and range") {
    CHECK(log_gamma(1.0) == doctest::Approx(0.0));
    CHECK(rel_err(log_gamma(0.5), 0.5 * std::log(std::numbers::pi)) < 1e-14);
    CHECK(rel_err(log_gamma(5.0), std::log(24.0)) < 1e-14);
    CHECK(rel_err(log_gamma(0.001), 6.9071788853838536825) < 1e-13);
    CHECK(rel_err(log_gamma(170.0), 701.43726380873708535) < 1e-13);
    CHECK_THROWS_AS(log_gamma(0.0), DomainError);
    CHECK_THROWS_AS(log_gamma(-1.5), DomainError);
}

TEST_CASE("erf values, symmetry and limits") {
    CHECK(specfun::erf(0.0) == 0.0);
    CHECK(std::abs(specfun::erf(1.0) - 0.84270079294971486934) < 1e-14);
    CHECK(std::abs(specfun::erf(0.3) - 0.32862675945912742764) < 1e-14);
    for (double x : {0.01, 0.7, 2.3, 5.0}) {
        CHECK(specfun::erf(-x) == -specfun::erf(x));
    }
    CHECK(std::abs(specfun::erf(6.0)) > 1.0 - 1e-15);
    CHECK(std::abs(specfun::erf(-6.0)) > 1.0 - 1e-15);
    double prev = -1.0;
    for (double x = -6.0; x <= 6.0; x += 0.05) {
        const double v = specfun::erf(x);
        CHECK(v >= prev);
        CHECK(std::abs(v) <= 1.0);
        prev = v;
    }
}

TEST_CASE("log_erfc stays finite far in the tail") {
    CHECK(rel_err(log_erfc(1.0), std::log(std::erfc(1.0))) < 1e-14);
    CHECK(rel_err(log_erfc(20.0), std::log(std::erfc(20.0))) < 1e-12);
    // erfc(x) ~ e^{-x^2} / (x sqrt(pi)) (1 - 1/(2x^2))
    const double x = 1e3;
    const double approx = -x * x - std::log(x * std::sqrt(std::numbers::pi)) - 0.5 / (x * x);
    CHECK(rel_err(log_erfc(x), approx) < 1e-12);
}

TEST_CASE("kummer_m special cases and series oracle") {
    CHECK(kummer_m(0.3, 1.7, 0.0).value() == doctest::Approx(1.0).epsilon(1e-15));
    for (double z : {-5.0, -0.5, 0.0, 1.0, 12.0, 45.0}) {
        CHECK(rel_err(kummer_m(1.0, 1.0, z).value(), std::exp(z)) < 1e-12);
    }
    CHECK(rel_err(kummer_m(0.25, 0.5, 2.0).value(), 3.69109104345072663) < 1e-10);
    CHECK(rel_err(kummer_m(-2.5, 1.5, -30.0).value(), 919.28908115039500359) < 1e-10);
    CHECK_THROWS_AS(kummer_m(1.0, -2.0, 1.0), DomainError);
}

TEST_CASE("pcf_d frozen values") {
    CHECK(rel_err(pcf_d(-1.5, -3.0).value(), 45.731011764234663168) < 1e-9);
    CHECK(rel_err(pcf_d(-2.5, 4.0).value(), 0.00045701669487249300859) < 1e-9);
    CHECK(rel_err(pcf_d(-5.0, 1.2).value(), 0.011579312087453917146) < 1e-9);
}

TEST_CASE("pcf_d order zero is a Gaussian") {
    for (double z : {-30.0, -2.0, 0.0, 1.5, 40.0}) {
        const auto v = pcf_d(0.0, z);
        CHECK(v.sign == 1);
        CHECK(std::abs(v.log_mag + 0.25 * z * z) < 1e-12 * std::max(1.0, 0.25 * z * z));
    }
}

TEST_CASE("pcf_d order -1 matches the erfc form on [-40, 40]") {
    for (double z = -40.0; z <= 40.0; z += 0.25) {
        // D_{-1}(z) = sqrt(pi/2) e^{z^2/4} erfc(z / sqrt 2)
        const double want =
            0.5 * std::log(0.5 * std::numbers::pi) + 0.25 * z * z + log_erfc(z / std::sqrt(2.0));
        const auto got = pcf_d(-1.0, z);
        CHECK(got.sign == 1);
        // relative accuracy of the value is the absolute accuracy of its log
        CHECK(std::abs(got.log_mag - want) < 1e-9);
    }
}

TEST_CASE("pcf_d three-term recurrence") {
    for (double nu = -8.5; nu <= -1.0; nu += 0.5) {
        for (double z = -12.0; z <= 30.0; z += 0.75) {
            const auto up = pcf_d(nu + 1.0, z);
            const auto mid = pcf_d(nu, z);
            const auto down = pcf_d(nu - 1.0, z);
            const auto residual =
                up - ScaledValue::from_double(z) * mid + ScaledValue::from_double(nu) * down;
            // scale by the largest term so cancellation is measured fairly
            const double scale = std::max({up.log_mag, std::log(std::abs(z) + 1e-300) + mid.log_mag,
                                           std::log(-nu) + down.log_mag});
            const double rel = residual.is_zero() ? 0.0 : std::exp(residual.log_mag - scale);
            CHECK_MESSAGE(rel < 1e-8, "nu=" << nu << " z=" << z);
        }
    }
}

TEST_CASE("pcf_d agrees with its integral representation") {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> nu_dist(-10.0, -0.5);
    std::uniform_real_distribution<double> z_dist(-10.0, 10.0);
    for (int i = 0; i < 50; ++i) {
        const double nu = nu_dist(gen);
        const double z = z_dist(gen);
        const double want = pcf_by_quadrature(nu, z);
        CHECK_MESSAGE(rel_err(pcf_d(nu, z).value(), want) < 1e-8, "nu=" << nu << " z=" << z);
    }
}

TEST_CASE("pcf_d rejects unsupported input") {
    CHECK_THROWS_AS(pcf_d(0.5, 1.0), DomainError);
    CHECK_THROWS_AS(pcf_d(-1.0, std::nan("")), DomainError);
}

TEST_CASE("pcf_d_scaled stays accurate for huge arguments") {
    // e^{z^2/4} D_nu(z) ~ z^nu (1 - nu (nu - 1) / (2 z^2))
    for (double nu : {-0.5, -2.5, -5.0}) {
        for (double z : {1e5, 1e8, 1e150}) {
            const double want = nu * std::log(z) - nu * (nu - 1.0) / (2.0 * z * z);
            CHECK(std::abs(pcf_d_scaled(nu, z).log_mag - want) < 1e-13 * std::abs(want));
        }
    }
    for (double z : {-3.0, 0.5, 6.0}) {
        const double direct = pcf_d(-1.5, z).log_mag + 0.25 * z * z;
        CHECK(std::abs(pcf_d_scaled(-1.5, z).log_mag - direct) < 1e-13);
    }
}

TEST_CASE("bessel_k_quarter frozen values and tail") {
    CHECK(rel_err(bessel_k_quarter(1.0).value(), 0.43073977444858552466) < 1e-12);
    CHECK(rel_err(bessel_k_quarter(0.5).value(), 0.96031632493188602295) < 1e-12);
    CHECK(std::abs(bessel_k_quarter(50.0).log_mag - (-51.732076775301099954)) < 1e-12 * 51.7);
    // K_nu(x) ~ sqrt(pi/(2x)) e^{-x} (1 + (4 nu^2 - 1)/(8x) + ...)
    const double x = 700.0;
    const double mu = 0.25;
    const double series = 1.0 + (mu - 1.0) / (8.0 * x) + (mu - 1.0) * (mu - 9.0) / (2.0 * 64.0 * x * x);
    const double want = 0.5 * std::log(std::numbers::pi / (2.0 * x)) - x + std::log(series);
    CHECK(std::abs(bessel_k_quarter(x).log_mag - want) < 1e-12 * x);
    CHECK(bessel_k_quarter(1e-6).value() > 0.0);
    CHECK_THROWS_AS(bessel_k_quarter(0.0), DomainError);
    CHECK_THROWS_AS(bessel_k_quarter(-1.0), DomainError);
}

TEST_CASE("bessel_k_quarter agrees with its integral representation") {
    for (double x : {1e-6, 1e-3, 0.2, 1.9, 2.1, 7.0, 30.0}) {
        auto f = [&](double t) {
            // beyond t = 60 the integrand is below 1e-300 for every x tested
            return t > 60.0 ? 0.0 : std::exp(-x * std::cosh(t)) * std::cosh(0.25 * t);
        };
        const double want = quad::integrate_semi_infinite(f, 1e-13).value;
        CHECK_MESSAGE(rel_err(bessel_k_quarter(x).value(), want) < 1e-9, "x=" << x);
    }
}

TEST_CASE("ScaledValue arithmetic") {
    const auto a = ScaledValue::from_double(3.0);
    const auto b = ScaledValue::from_double(-5.0);
    CHECK((a + b).value() == doctest::Approx(-2.0));
    CHECK((a * b).value() == doctest::Approx(-15.0));
    CHECK((a / b).value() == doctest::Approx(-0.6));
    CHECK((a - a).is_zero());
    CHECK(ScaledValue::from_double(0.0).is_zero());
    const auto huge = ScaledValue::from_log(5000.0);
    CHECK((huge * ScaledValue::from_log(-4990.0)).value() == doctest::Approx(std::exp(10.0)));
}
