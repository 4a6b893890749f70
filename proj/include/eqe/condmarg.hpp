#pragma once

#include <span>
#include <vector>

#include "eqe/core.hpp"

namespace eqe {

/// x = (x1, x2) with x1 in R^dim1, x2 in R^dim2.
class BlockSplit {
public:
    BlockSplit(int dim1, int dim2);

    int dim1() const { return dim1_; }
    int dim2() const { return dim2_; }
    int dim() const { return dim1_ + dim2_; }
    /// The same split with the blocks exchanged.
    BlockSplit swapped() const { return {dim2_, dim1_}; }

private:
    int dim1_;
    int dim2_;
};

/// Law of x1 given |x2|^2: (dim1, lambda1 - 2 lambda2 |x2|^2, lambda2).
RadialParams conditional_params(const RadialParams& p, const BlockSplit& split, double x2_norm_sq);

/// ln p(x1 | x2).
double conditional_log_density(const RadialParams& p, const BlockSplit& split,
                               std::span<const double> x1, std::span<const double> x2);

/// ln p(x1) = l1 q1 - l2 q1^2 + ln Z_dim2(l1 - 2 l2 q1, l2) - ln Z_D(l1, l2),
/// q1 = |x1|^2.
double marginal_log_density(const RadialParams& p, const BlockSplit& split,
                            std::span<const double> x1);
/// Same, as a function of q1 = |x1|^2.
double marginal_log_density_sq(const RadialParams& p, const BlockSplit& split, double q1);

/// Marginal of the leading dim1 coordinates of an elliptical law. With
/// Sigma = L L^T and L lower triangular, the leading whitened block depends
/// on x1 only: ln p(x1) = ln p_white(L11^{-1} (x1 - mu1)) - ln |L11|.
double marginal_log_density(const EllipticalParams& p, int dim1, std::span<const double> x1);

/// Radii r1 = |x1| >= 0 at which the marginal has a local maximum, ascending.
/// 0 is included when the origin is a maximum. Throws ConvergenceError if
/// more than two stationary points are found.
std::vector<double> marginal_peaks(const RadialParams& p, const BlockSplit& split);

}  // namespace eqe
