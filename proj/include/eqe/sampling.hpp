#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "eqe/core.hpp"

namespace eqe {

/// Single-consumer random stream; identical seeds give identical streams.
class SeededGenerator {
public:
    explicit SeededGenerator(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }
    /// Uniform on [0, 1).
    double uniform() { return std::generate_canonical<double, 53>(engine_); }
    double normal() { return normal_(engine_); }
    std::mt19937_64& engine() { return engine_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

/// Tabulated CDF of the radius r = |x| with density proportional to
/// r^{D-1} exp(l1 r^2 - l2 r^4) on [0, r_max].
///
/// Knots are the union of a CDF-uniform set (placed from a pilot pass, so
/// they cluster where the mass is) and a coarse uniform-in-r grid that
/// bounds the width of every interval. CDF values at knots are exact
/// Gauss-Legendre integrals; between knots the CDF is integrated locally,
/// and the inverse is a monotone cubic Hermite guess polished by
/// safeguarded Newton iteration.
class RadialCdfTable {
public:
    static constexpr std::size_t kDefaultKnots = 2048;

    explicit RadialCdfTable(const RadialParams& p, std::size_t n_knots = kDefaultKnots);

    const RadialParams& params() const { return params_; }
    std::span<const double> knots() const { return knots_; }
    std::span<const double> cdf_values() const { return cdf_; }
    double r_max() const { return knots_.back(); }

    /// Normalized radial density.
    double pdf(double r) const;
    double cdf(double r) const;
    double inverse_cdf(double u) const;

private:
    double log_shape(double r) const;
    double interval_mass(std::size_t k, double r) const;

    RadialParams params_;
    double log_ref_ = 0.0;   // log shape at the radial mode
    double log_norm_ = 0.0;  // log of the tabulated total mass (relative to log_ref_)
    std::vector<double> knots_;
    std::vector<double> cdf_;
    std::vector<double> pdf_;
};

RadialCdfTable build_radial_table(const RadialParams& p,
                                  std::size_t n_knots = RadialCdfTable::kDefaultKnots);

/// n x D matrix of draws, one point per row.
Eigen::MatrixXd sample(const RadialCdfTable& table, std::size_t n, SeededGenerator& gen);
Eigen::MatrixXd sample(const RadialParams& p, std::size_t n, SeededGenerator& gen);
Eigen::MatrixXd sample(const EllipticalParams& p, std::size_t n, SeededGenerator& gen);

/// Splits n draws over `workers` threads. Worker w draws a contiguous block
/// from its own generator seeded by worker_seed(seed, w); the result is the
/// concatenation of the blocks in worker order.
Eigen::MatrixXd sample_parallel(const EllipticalParams& p, std::size_t n, std::uint64_t seed,
                                unsigned workers);
std::uint64_t worker_seed(std::uint64_t seed, unsigned worker);

/// Draws from the Elliptical Gamma baseline.
Eigen::MatrixXd sample(const EllipticalGamma& eg, std::size_t n, SeededGenerator& gen);

}  // namespace eqe
