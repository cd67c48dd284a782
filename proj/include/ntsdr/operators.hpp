#ifndef NTSDR_OPERATORS_HPP
#define NTSDR_OPERATORS_HPP

#include "ntsdr/feature.hpp"

#include <Eigen/Cholesky>
#include <optional>
#include <vector>

namespace ntsdr {

// Regularization strengths for the two stages: eta_* feed the regression
// coordinates s(Y), eps_* feed the estimator updates. All finite, > 0.
struct RegularizationParams {
    double eta_u = 1e-3, eta_v = 1e-3;
    double eps_u = 1e-3, eps_v = 1e-3;
};

void validate(const RegularizationParams& reg);

// Largest eigenvalue of a symmetric PSD matrix by power iteration
// (fixed start, relative tolerance 1e-6, 200 iteration cap).
double power_lambda_max(const Matrix& a);

// A(eps) = A + eps * lambda_max(A) * I with a cached Cholesky factor. Every
// pseudo-inverse in the estimators is replaced by one of these solves.
class RegularizedGram {
public:
    RegularizedGram(Matrix gram, double eps);

    const Matrix& gram() const { return gram_; }
    double eps() const { return eps_; }
    double lambda_max() const { return lam_max_; }
    double shift() const { return shift_; }

    template <typename Derived>
    typename Derived::PlainObject solve(const Eigen::MatrixBase<Derived>& rhs) const {
        return llt_.solve(rhs.derived());
    }
    const Eigen::LLT<Matrix>& llt() const { return llt_; }

    // A(eps)^{-1} A and its trace; computed once on first use.
    const Matrix& inv_gram() const;
    double trace_inv_gram() const { return inv_gram().trace(); }

private:
    Matrix gram_;
    double eps_ = 0.0, lam_max_ = 0.0, shift_ = 0.0;
    Eigen::LLT<Matrix> llt_;
    mutable std::optional<Matrix> inv_gram_;
};

// d_a = 1_r (x) (G_Y e_a): the diagonal of mat_rn(Delta G_Y e_a), where
// Delta stacks the coordinates of the raw feature maps F(X_a). Everything
// downstream touches Delta only through these diagonals.
Vector diag_structure(Eigen::Index a, const GramSet& gram);

// All n diagonals side by side (rn x n); column a equals diag_structure(a).
Matrix diag_all(const GramSet& gram);

// Coordinate matrix of s(Y_b) = r^{-1} G_V(eta)^{-1} Diag(d_b) G_U(eta)^{-1}.
// Rows index the V-side basis (j, b), columns the U-side (i, a); the inner
// product of two such elements is tr(M1^T G_V M2 G_U).
Matrix s_coordinates(Eigen::Index b, const GramSet& gram,
                     const RegularizedGram& gu_eta, const RegularizedGram& gv_eta);

// Coordinates of the operator T_{s(Y_a)} : H_V -> H_U and of its adjoint,
// with the Gram pseudo-inverse pair G G^+ replaced exactly by I_r (x) Q_n:
//   [T]   = r^{-1} G_U(eps)^{-1} (I(x)Q) Diag(d_a) (I(x)Q)
//   [T^*] = r^{-1} G_V(eps)^{-1} (I(x)Q) Diag(d_a) (I(x)Q)
Matrix t_operator_coords(Eigen::Index a, const GramSet& gram, const RegularizedGram& gu_eps);
Matrix t_operator_adjoint_coords(Eigen::Index a, const GramSet& gram, const RegularizedGram& gv_eps);

// Gamma_a = n^{-1} r^{-2} (I(x)Q) Diag(d_a) (I(x)Q). Block-diagonal with r
// identical n x n blocks, so the economical form stores one block per sample:
//   block_a = n^{-1} r^{-2} Q diag(G_Y e_a) Q.
std::vector<Matrix> gamma_blocks(const GramSet& gram);

// Dense rn x rn realizations (I_r (x) block_a); meant for small problems.
std::vector<Matrix> gamma_matrices(const GramSet& gram);

// <s(Y_b), F(X_a) - E_n F> for all pairs; entry (a, b). Columns sum to zero.
Matrix s_f_inner_matrix(const GramSet& gram, const RegularizedGram& gu_eta,
                        const RegularizedGram& gv_eta);

double s_f_inner(Eigen::Index a, Eigen::Index b, const GramSet& gram,
                 const RegularizedGram& gu_eta, const RegularizedGram& gv_eta);

} // namespace ntsdr

#endif
