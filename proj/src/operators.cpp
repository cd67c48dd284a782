#include "ntsdr/operators.hpp"

#include "ntsdr/errors.hpp"

#include <cmath>

namespace ntsdr {

void validate(const RegularizationParams& reg) {
    for (double v : {reg.eta_u, reg.eta_v, reg.eps_u, reg.eps_v})
        if (!(v > 0.0) || !std::isfinite(v))
            throw InvalidArgument("regularization strengths must be positive and finite");
}

double power_lambda_max(const Matrix& a) {
    if (a.rows() != a.cols()) throw InvalidArgument("power_lambda_max: matrix not square");
    const Eigen::Index m = a.rows();
    Vector v = Vector::Constant(m, 1.0 / std::sqrt(static_cast<double>(m)));
    double lam = 0.0;
    for (int it = 0; it < 200; ++it) {
        Vector w = a * v;
        double norm = w.norm();
        if (norm == 0.0) return 0.0; // v hit the null space of a zero operator
        double lam_new = v.dot(w);
        v = w / norm;
        if (std::abs(lam_new - lam) <= 1e-6 * std::abs(lam_new)) return lam_new;
        lam = lam_new;
    }
    return lam;
}

RegularizedGram::RegularizedGram(Matrix gram, double eps) : gram_(std::move(gram)), eps_(eps) {
    if (!(eps > 0.0) || !std::isfinite(eps))
        throw InvalidArgument("regularization eps must be positive and finite");
    if (gram_.rows() != gram_.cols()) throw InvalidArgument("gram matrix not square");
    lam_max_ = power_lambda_max(gram_);
    if (!(lam_max_ > 0.0))
        throw DegenerateData("gram matrix is identically zero; nothing to regularize");
    shift_ = eps_ * lam_max_;
    Matrix shifted = gram_;
    shifted.diagonal().array() += shift_;
    llt_.compute(shifted);
    if (llt_.info() != Eigen::Success)
        throw NumericalFailure("Cholesky factorization of the shifted gram failed");
}

const Matrix& RegularizedGram::inv_gram() const {
    if (!inv_gram_) inv_gram_ = llt_.solve(gram_);
    return *inv_gram_;
}

Vector diag_structure(Eigen::Index a, const GramSet& gram) {
    if (a < 0 || a >= gram.n) throw InvalidArgument("diag_structure: sample index out of range");
    Vector d(gram.rn());
    for (Eigen::Index i = 0; i < gram.r; ++i) d.segment(i * gram.n, gram.n) = gram.G_Y.col(a);
    return d;
}

Matrix diag_all(const GramSet& gram) {
    Matrix d(gram.rn(), gram.n);
    for (Eigen::Index i = 0; i < gram.r; ++i) d.middleRows(i * gram.n, gram.n) = gram.G_Y;
    return d;
}

Matrix s_coordinates(Eigen::Index b, const GramSet& gram,
                     const RegularizedGram& gu_eta, const RegularizedGram& gv_eta) {
    Vector d = diag_structure(b, gram);
    // G_V(eta)^{-1} D_b, then the U-side solve applied from the right.
    Matrix left = gv_eta.solve(Matrix(d.asDiagonal()));
    Matrix s = gu_eta.solve(Matrix(left.transpose())).transpose();
    s /= static_cast<double>(gram.r);
    return s;
}

namespace {

// (I(x)Q) Diag(d_a) (I(x)Q) is block-diagonal with r copies of Q diag(g) Q,
// g = G_Y e_a. Builds the dense rn x rn version.
Matrix centered_diag_dense(const GramSet& gram, Eigen::Index a) {
    Matrix block = gram.Q * gram.G_Y.col(a).asDiagonal() * gram.Q;
    Matrix out = Matrix::Zero(gram.rn(), gram.rn());
    for (Eigen::Index i = 0; i < gram.r; ++i)
        out.block(i * gram.n, i * gram.n, gram.n, gram.n) = block;
    return out;
}

} // namespace

Matrix t_operator_coords(Eigen::Index a, const GramSet& gram, const RegularizedGram& gu_eps) {
    if (a < 0 || a >= gram.n) throw InvalidArgument("t_operator_coords: sample index out of range");
    return gu_eps.solve(centered_diag_dense(gram, a)) / static_cast<double>(gram.r);
}

Matrix t_operator_adjoint_coords(Eigen::Index a, const GramSet& gram, const RegularizedGram& gv_eps) {
    if (a < 0 || a >= gram.n) throw InvalidArgument("t_operator_adjoint_coords: sample index out of range");
    return gv_eps.solve(centered_diag_dense(gram, a)) / static_cast<double>(gram.r);
}

std::vector<Matrix> gamma_blocks(const GramSet& gram) {
    const double scale = 1.0 / (static_cast<double>(gram.n) * static_cast<double>(gram.r) *
                                static_cast<double>(gram.r));
    std::vector<Matrix> blocks(static_cast<std::size_t>(gram.n));
    for (Eigen::Index a = 0; a < gram.n; ++a)
        blocks[static_cast<std::size_t>(a)] =
            scale * (gram.Q * gram.G_Y.col(a).asDiagonal() * gram.Q);
    return blocks;
}

std::vector<Matrix> gamma_matrices(const GramSet& gram) {
    std::vector<Matrix> blocks = gamma_blocks(gram);
    std::vector<Matrix> out(blocks.size());
    for (std::size_t a = 0; a < blocks.size(); ++a) {
        Matrix g = Matrix::Zero(gram.rn(), gram.rn());
        for (Eigen::Index i = 0; i < gram.r; ++i)
            g.block(i * gram.n, i * gram.n, gram.n, gram.n) = blocks[a];
        out[a] = std::move(g);
    }
    return out;
}

Matrix s_f_inner_matrix(const GramSet& gram, const RegularizedGram& gu_eta,
                        const RegularizedGram& gv_eta) {
    // diag(G_V S_b G_U)[m] = sum_k E[m,k] d_b[k] with
    // E = (G_V(eta)^{-1}G_V o G_U(eta)^{-1}G_U)^T / r, entrywise product.
    Matrix e = (gv_eta.inv_gram().array() * gu_eta.inv_gram().array()).matrix().transpose();
    Matrix diags = e * diag_all(gram) / static_cast<double>(gram.r); // rn x n
    Matrix t = Matrix::Zero(gram.n, gram.n);
    for (Eigen::Index i = 0; i < gram.r; ++i) t += diags.middleRows(i * gram.n, gram.n);
    return gram.Q * t;
}

double s_f_inner(Eigen::Index a, Eigen::Index b, const GramSet& gram,
                 const RegularizedGram& gu_eta, const RegularizedGram& gv_eta) {
    if (a < 0 || a >= gram.n || b < 0 || b >= gram.n)
        throw InvalidArgument("s_f_inner: sample index out of range");
    Matrix e = (gv_eta.inv_gram().array() * gu_eta.inv_gram().array()).matrix().transpose();
    Vector diag_b = e * diag_structure(b, gram) / static_cast<double>(gram.r);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < gram.r; ++i)
        acc += gram.Q.col(a).dot(diag_b.segment(i * gram.n, gram.n));
    return acc;
}

} // namespace ntsdr
