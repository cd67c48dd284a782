#ifndef NTSDR_FEATURE_HPP
#define NTSDR_FEATURE_HPP

#include "ntsdr/kernel.hpp"
#include "ntsdr/types.hpp"

#include <vector>

namespace ntsdr {

// Sign-normalized SVD of one matrix: x = sum_i lambda_i U0_i V0_i^T with
// lambda descending, each U0_i's first component positive (first nonzero
// component decides when the leading one vanishes), and V0_i's sign chosen
// so lambda_i stays positive. Factors below 1e-10 * lambda_1 are dropped.
struct SignedSvd {
    Vector lambda;      // effective_rank entries, descending, > 0
    Matrix U0, V0;      // p x effective_rank, q x effective_rank
    int effective_rank = 0;
    int sign_fallbacks = 0; // leading component was ~0, used first nonzero
    int ties = 0;           // near-equal neighbor singular values
};

SignedSvd signed_svd(const Matrix& x);

// Scaled singular factors of every sample: U_{ia} = lambda_i(X_a)^{1/2} U0_i(X_a),
// V_{ia} likewise. Columns follow the composite (i, a) order with a running
// fast; rank-deficient samples contribute zero columns past their effective
// rank so the grid stays rectangular.
struct SvdFeatureSet {
    Eigen::Index n = 0, p = 0, q = 0, r = 0;
    Matrix U;       // p x (r*n)
    Matrix V;       // q x (r*n)
    Matrix lambda;  // n x r, zero past the effective rank
    std::vector<int> effective_rank;
    int rank_deficient_samples = 0;
    int sign_fallbacks = 0;
    int ties = 0;
};

SvdFeatureSet extract_features(const SampleSet& data);

// Same factor extraction for prediction-time samples: no response needed,
// any count >= 1, but shapes must match the training dimensions.
SvdFeatureSet features_for_eval(const std::vector<Matrix>& xs, Eigen::Index p, Eigen::Index q);

// Kernel and centered Gram matrices of the three sample spaces. The centered
// basis is f_{ia} = k(., U_{ia}) - n^{-1} sum_b k(., U_{ib}), so
// G_U = (I_r (x) Q_n) K_U (I_r (x) Q_n) with Q_n = I - 11^T/n, and the Gram
// of the tensor-product basis {f_{ia} g_{jb}} factorizes as G_U (x) G_V
// (second pair index fast). G_Y = Q_n K_Y Q_n.
struct GramSet {
    Eigen::Index n = 0, r = 0;
    Matrix K_U, K_V;  // r*n square
    Matrix K_Y;       // n square
    Matrix G_U, G_V, G_Y;
    Matrix Q;         // Q_n
    KernelSpec spec_u, spec_v, spec_y;

    Eigen::Index rn() const { return r * n; }
};

GramSet build_grams(const SvdFeatureSet& features, const std::vector<double>& y,
                    const KernelSpec& spec_u, const KernelSpec& spec_v,
                    const KernelSpec& spec_y);

// Bandwidths from the pairwise-distance heuristic on the stored factors.
GramSet build_grams_auto(const SvdFeatureSet& features, const std::vector<double>& y,
                         double rho_u = 1.0, double rho_v = 1.0, double rho_y = 1.0);

// Applies I_r (x) Q_n from the left: centers every factor block of n rows.
void block_center_rows(Matrix& m, Eigen::Index r, Eigen::Index n);
// Same from the right (centers blocks of n columns).
void block_center_cols(Matrix& m, Eigen::Index r, Eigen::Index n);

// Coordinate of the centered feature map F(X_a) - E_n F in the product basis.
// The full coordinate vector is supported on the (m, m) "diagonal" slots of
// the (rn)^2-dimensional basis; this returns those rn diagonal values,
// diag[(i, a')] = Q_n(a', a).
Vector feature_coordinate(Eigen::Index a, const GramSet& gram);

// Evaluates f = sum_{ia} coord[ia] f_{ia} (mode 'U') or the V-side analogue
// at an arbitrary point. Training block means realize the centering.
double evaluate_basis_function(const Vector& coord, char mode, const Vector& point,
                               const SvdFeatureSet& features, const KernelSpec& spec);

// Batch form: rows of coefs are coordinate vectors, columns of points are
// evaluation points; returns coefs.rows() x points.cols().
Matrix basis_values(const Matrix& coefs, char mode, const Matrix& points,
                    const SvdFeatureSet& features, const KernelSpec& spec);

} // namespace ntsdr

#endif
