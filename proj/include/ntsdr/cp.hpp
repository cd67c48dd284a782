#ifndef NTSDR_CP_HPP
#define NTSDR_CP_HPP

#include "ntsdr/tucker.hpp"

#include <vector>

namespace ntsdr {

// One deflated leading pair: alternating exact eigen-steps maximize the
// smoothed moment sum_a (f^T S_U Gamma_a S_V g)^2, S = G G(eps)^{-1}, over
// pairs with unit RKHS norm (f^T G_U f = 1). The search runs in whitened
// coordinates theta = G^{1/2} f, where the norm constraint is the Euclidean
// sphere and deflation is an orthogonal (norm-one) projector, so successive
// pair values cannot inflate.
struct PairResult {
    Vector f, g;        // r*n coordinates, unit norm in the raw Gram metrics
    double value = 0.0; // attained objective at the last exact half-step
    int iterations = 0;
    bool converged = false;
    bool degenerate = false; // no usable direction left
};

// Fprev/Gprev hold earlier pairs as columns (r*n x k, k may be 0). The new
// pair is orthogonal to them as RKHS functions (f^T G_U Fprev = 0); with
// opts.euclidean_deflation the constraint is on raw coefficients instead
// (f^T Fprev = 0).
PairResult leading_pair(const GramSet& gram, const Matrix& Fprev, const Matrix& Gprev,
                        const FitOptions& opts);

struct CpModel {
    Eigen::Index d = 0; // pairs kept (may be fewer than requested)
    Matrix Fcoef;       // d x (r*n), rows G_U-orthonormal
    Matrix Gcoef;       // d x (r*n)
    Matrix Uvals;       // n x d, in-sample coefficient functions u_k(Y_b)
    std::vector<double> pair_values; // non-increasing
    std::vector<int> pair_iterations;
    std::vector<char> pair_converged;
    int requested_pairs = 0;
    RegularizationParams reg;
    double rho_u = 1.0, rho_v = 1.0, rho_y = 1.0;
    SvdFeatureSet features;
    KernelSpec spec_u, spec_v;
};

CpModel fit_cp(const SampleSet& data, Eigen::Index d, const FitOptions& opts = {});
CpModel fit_cp_prepared(const SvdFeatureSet& features, const GramSet& gram, Eigen::Index d,
                        const FitOptions& opts);

// Sufficient predictors: entry (b, k) of the returned m x d matrix is
// sum_i f_k(U_{ib}) g_k(V_{ib}) for new sample b.
Matrix evaluate_cp(const CpModel& model, const std::vector<Matrix>& newX);

// Per-factor interaction features, rows in sample-major (b, i) order,
// column k holds f_k(U_{ib}) g_k(V_{ib}).
Matrix structure_matrix_cp(const CpModel& model, const std::vector<Matrix>& newX);

} // namespace ntsdr

#endif
