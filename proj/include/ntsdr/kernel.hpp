#ifndef NTSDR_KERNEL_HPP
#define NTSDR_KERNEL_HPP

#include "ntsdr/types.hpp"

namespace ntsdr {

// Gaussian radial kernel exp(-gamma * |x - y|^2). The bandwidth gamma comes
// from the median-free heuristic below: gamma = rho / (2 * sigma^2), where
// sigma^2 averages squared pairwise distances of the point cloud the kernel
// will act on.
struct KernelSpec {
    double gamma = 0.0; // > 0, finite
    double rho = 1.0;   // multiplier the heuristic was called with
};

double gaussian_kernel(const Vector& x, const Vector& y, double gamma);

// points: one point per column. rho must lie in (0.1, 10). For clouds with
// more than 4000 points sigma^2 is estimated from 4000 uniformly sampled
// pairs (fixed internal seed, so repeated calls agree bitwise).
KernelSpec bandwidth_heuristic(const Matrix& points, double rho = 1.0);

// Symmetric PSD matrix k(x_i, x_j) with unit diagonal.
Matrix kernel_matrix(const Matrix& points, const KernelSpec& spec);

// Rectangular block k(a_i, b_j), rows indexed by columns of a.
Matrix kernel_cross(const Matrix& a, const Matrix& b, const KernelSpec& spec);

// Q_m = I - 11^T / m. Idempotent, symmetric, rows sum to zero; Q_1 = [0].
Matrix centering_projector(Eigen::Index m);

} // namespace ntsdr

#endif
