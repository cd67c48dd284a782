#include "ntsdr/cp.hpp"

#include "ntsdr/errors.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <string>

namespace ntsdr {

namespace {

// Orthogonal projector onto the complement of span(basis): the basis need not
// be orthonormal, Q x = x - basis (basis^T basis)^{-1} basis^T x.
struct Deflator {
    Matrix basis; // rn x k
    Eigen::LLT<Matrix> chol;
    bool active = false;

    Deflator() = default;
    explicit Deflator(const Matrix& b) {
        if (b.cols() == 0) return;
        basis = b;
        chol.compute(Matrix(basis.transpose() * basis));
        if (chol.info() != Eigen::Success)
            throw SingularMatrix("deflation span is degenerate");
        active = true;
    }

    Vector apply(const Vector& x) const {
        if (!active) return x;
        return x - basis * chol.solve(basis.transpose() * x);
    }

    void apply_cols(Matrix& w) const {
        if (!active) return;
        w -= basis * chol.solve(basis.transpose() * w);
    }
};

// Columns a = 1..n of [Gamma_1 y, ..., Gamma_n y] with Gamma_a = I_r (x) B_a,
// B_a = (n r^2)^{-1} Q diag(G_Y e_a) Q. Centering realizes Q at O(n^2).
Matrix gamma_stack(const Vector& y, const GramSet& gram) {
    const Eigen::Index n = gram.n, r = gram.r;
    const double scale = 1.0 / (static_cast<double>(n) * static_cast<double>(r) *
                                static_cast<double>(r));
    Matrix w(r * n, n);
    for (Eigen::Index i = 0; i < r; ++i) {
        Vector h = y.segment(i * n, n);
        h.array() -= h.mean();
        Matrix block = h.asDiagonal() * gram.G_Y;
        block.rowwise() -= block.colwise().mean();
        w.middleRows(i * n, n) = scale * block;
    }
    return w;
}

void fix_sign(Vector& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) > 1e-12) {
            if (v(i) < 0.0) v = -v;
            return;
        }
    }
}

// Exact maximizer of x^T (W W^T) x over the unit sphere through the small
// n x n eigenproblem of W^T W; the top eigenvector z maps to x = W z / sqrt(lam).
std::pair<Vector, double> plain_top(const Matrix& w) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(w.transpose() * w));
    if (es.info() != Eigen::Success) throw NumericalFailure("pair eigen-step failed");
    const Eigen::Index last = w.cols() - 1;
    double lam = es.eigenvalues()(last);
    if (!(lam > 1e-300)) return {Vector::Zero(w.rows()), 0.0};
    Vector z = es.eigenvectors().col(last);
    fix_sign(z);
    return {Vector(w * z / std::sqrt(lam)), lam};
}

// Spectral half-powers of one Gram. The pair objective sum_a (f' S Gamma_a
// S' g)^2, S = G G(eps)^{-1}, with unit-H-norm constraints f' G f = 1 turns
// Euclidean in theta = G^{1/2} f: the eigen-steps then act on the whitened
// stack B_a = smooth_half * Gamma_a * smooth_half', and orthogonal deflation
// of theta is exactly Gram-orthogonality of the coefficient vectors.
struct Whitener {
    Matrix smooth_half; // G^{1/2} G(eps)^{-1}
    Matrix to_theta;    // G^{1/2}
    Matrix from_theta;  // pinv(G^{1/2})

    Whitener(const Matrix& gram_m, double eps, const char* what) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(gram_m);
        if (es.info() != Eigen::Success)
            throw NumericalFailure(std::string(what) + ": gram eigendecomposition failed");
        const Vector& lam = es.eigenvalues();
        const Matrix& v = es.eigenvectors();
        const double lmax = lam.maxCoeff();
        if (!(lmax > 0.0))
            throw DegenerateData(std::string(what) + ": gram has no positive spectrum");
        const double shift = eps * lmax, cut = 1e-12 * lmax;
        Vector wsm = Vector::Zero(lam.size());
        Vector wto = Vector::Zero(lam.size());
        Vector wfrom = Vector::Zero(lam.size());
        for (Eigen::Index i = 0; i < lam.size(); ++i) {
            double l = lam(i);
            if (l <= cut) continue;
            double root = std::sqrt(l);
            wsm(i) = root / (l + shift);
            wto(i) = root;
            wfrom(i) = 1.0 / root;
        }
        smooth_half = v * wsm.asDiagonal() * v.transpose();
        to_theta = v * wto.asDiagonal() * v.transpose();
        from_theta = v * wfrom.asDiagonal() * v.transpose();
    }
};

// Candidate start directions: eigenvectors of T = sum_a B_a^T B_a, the
// quadratic form behind the first half-step. With P = Q S_U^2 Q the sum
// collapses blockwise to a Hadamard against G_Y G_Y^T, so T costs two dense
// products instead of n stack applications.
Matrix init_candidates(const GramSet& gram, const Whitener& wu, const Whitener& wv) {
    const Eigen::Index n = gram.n, r = gram.r;
    const double c = 1.0 / (static_cast<double>(n) * static_cast<double>(r) *
                            static_cast<double>(r));
    Matrix p = wu.smooth_half * wu.smooth_half;
    block_center_rows(p, r, n);
    block_center_cols(p, r, n);
    Matrix yy = gram.G_Y * gram.G_Y.transpose();
    Matrix m(r * n, r * n);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < r; ++j)
            m.block(i * n, j * n, n, n) = p.block(i * n, j * n, n, n).cwiseProduct(yy);
    block_center_rows(m, r, n);
    block_center_cols(m, r, n);
    m *= c * c;
    Matrix t = wv.smooth_half * m * wv.smooth_half;
    Eigen::SelfAdjointEigenSolver<Matrix> es(t);
    if (es.info() != Eigen::Success) throw NumericalFailure("initialization eigensolve failed");
    return es.eigenvectors(); // ascending; callers walk from the back
}

// One deflated pair in whitened coordinates. thetaF/thetaG span the
// directions the new pair must stay orthogonal to.
PairResult whitened_pair(const GramSet& gram, const Whitener& wu, const Whitener& wv,
                         const Matrix& dirs, const Matrix& thetaF, const Matrix& thetaG,
                         const FitOptions& opts) {
    const Eigen::Index rn = gram.rn();
    Deflator qf(thetaF), qg(thetaG);

    PairResult out;
    Vector psi;
    for (Eigen::Index j = dirs.cols(); j-- > 0;) {
        Vector cand = qg.apply(dirs.col(j));
        double nrm = cand.norm();
        if (nrm > 1e-10) {
            psi = cand / nrm;
            break;
        }
    }
    if (psi.size() == 0) {
        out.degenerate = true;
        out.f = Vector::Zero(rn);
        out.g = Vector::Zero(rn);
        return out;
    }

    Vector theta;
    double lam = 0.0, prev = -1.0;
    for (int it = 1; it <= opts.max_pair_iter; ++it) {
        Matrix w = wu.smooth_half * gamma_stack(wv.smooth_half * qg.apply(psi), gram);
        qf.apply_cols(w);
        std::tie(theta, lam) = plain_top(w);
        if (!(lam > 0.0)) break;

        Matrix v = wv.smooth_half * gamma_stack(wu.smooth_half * qf.apply(theta), gram);
        qg.apply_cols(v);
        std::tie(psi, lam) = plain_top(v);
        out.iterations = it;
        if (!(lam > 0.0)) break;
        if (it > 1 && std::abs(lam - prev) <= opts.pair_tol * std::max(lam, 1e-300)) {
            out.converged = true;
            break;
        }
        prev = lam;
    }

    if (!(lam > 0.0)) {
        out.degenerate = true;
        out.f = Vector::Zero(rn);
        out.g = Vector::Zero(rn);
        return out;
    }

    // Back to coefficients, then unit H-norm; the value stays the one
    // attained at the unit whitened iterates, which is the same scale.
    theta = qf.apply(theta);
    psi = qg.apply(psi);
    Vector f = wu.from_theta * theta;
    Vector g = wv.from_theta * psi;
    double nf2 = f.dot(gram.G_U * f), ng2 = g.dot(gram.G_V * g);
    if (!(nf2 > 1e-20) || !(ng2 > 1e-20)) {
        out.degenerate = true;
        out.f = Vector::Zero(rn);
        out.g = Vector::Zero(rn);
        return out;
    }
    f /= std::sqrt(nf2);
    g /= std::sqrt(ng2);
    fix_sign(f);
    fix_sign(g);
    out.f = f;
    out.g = g;
    out.value = lam;
    return out;
}

// Maps accepted coefficient vectors to the whitened-space deflation basis:
// Gram-orthogonality constrains theta against G^{1/2} f, plain coefficient
// orthogonality against G^{-1/2} f.
Vector deflation_column(const Whitener& wh, const Vector& coef, bool euclidean) {
    return (euclidean ? wh.from_theta : wh.to_theta) * coef;
}

} // namespace

PairResult leading_pair(const GramSet& gram, const Matrix& Fprev, const Matrix& Gprev,
                        const FitOptions& opts) {
    const Eigen::Index rn = gram.rn();
    if (Fprev.cols() != Gprev.cols() || (Fprev.cols() > 0 && Fprev.rows() != rn) ||
        (Gprev.cols() > 0 && Gprev.rows() != rn))
        throw InvalidArgument("leading_pair: previous-pair blocks are misshapen");
    validate(opts.reg);

    Whitener wu(gram.G_U, opts.reg.eps_u, "leading_pair");
    Whitener wv(gram.G_V, opts.reg.eps_v, "leading_pair");
    Matrix thf(rn, Fprev.cols()), thg(rn, Gprev.cols());
    for (Eigen::Index k = 0; k < Fprev.cols(); ++k)
        thf.col(k) = deflation_column(wu, Fprev.col(k), opts.euclidean_deflation);
    for (Eigen::Index k = 0; k < Gprev.cols(); ++k)
        thg.col(k) = deflation_column(wv, Gprev.col(k), opts.euclidean_deflation);
    Matrix dirs = init_candidates(gram, wu, wv);
    return whitened_pair(gram, wu, wv, dirs, thf, thg, opts);
}

CpModel fit_cp_prepared(const SvdFeatureSet& features, const GramSet& gram, Eigen::Index d,
                        const FitOptions& opts) {
    validate(opts.reg);
    if (d < 1) throw InvalidArgument("fit_cp: d must be >= 1");
    if (d > gram.rn() || d >= gram.n)
        throw InvalidArgument("fit_cp: d exceeds the identifiable pair count");

    RegularizedGram gu_eps(gram.G_U, opts.reg.eps_u), gv_eps(gram.G_V, opts.reg.eps_v);
    Whitener wu(gram.G_U, opts.reg.eps_u, "fit_cp");
    Whitener wv(gram.G_V, opts.reg.eps_v, "fit_cp");
    Matrix dirs = init_candidates(gram, wu, wv);

    CpModel model;
    model.requested_pairs = static_cast<int>(d);
    model.reg = opts.reg;
    model.features = features;
    model.spec_u = gram.spec_u;
    model.spec_v = gram.spec_v;

    Matrix fmat(gram.rn(), 0), gmat(gram.rn(), 0);
    Matrix thf(gram.rn(), 0), thg(gram.rn(), 0);
    for (Eigen::Index k = 0; k < d; ++k) {
        PairResult pr = whitened_pair(gram, wu, wv, dirs, thf, thg, opts);
        bool keep = !pr.degenerate;
        if (keep && !model.pair_values.empty() &&
            pr.value < 1e-12 * model.pair_values.front())
            keep = false; // vanishing trailing pair: stop early
        if (!keep) break;
        fmat.conservativeResize(Eigen::NoChange, fmat.cols() + 1);
        gmat.conservativeResize(Eigen::NoChange, gmat.cols() + 1);
        thf.conservativeResize(Eigen::NoChange, thf.cols() + 1);
        thg.conservativeResize(Eigen::NoChange, thg.cols() + 1);
        fmat.col(fmat.cols() - 1) = pr.f;
        gmat.col(gmat.cols() - 1) = pr.g;
        thf.col(thf.cols() - 1) = deflation_column(wu, pr.f, opts.euclidean_deflation);
        thg.col(thg.cols() - 1) = deflation_column(wv, pr.g, opts.euclidean_deflation);
        model.pair_values.push_back(pr.value);
        model.pair_iterations.push_back(pr.iterations);
        model.pair_converged.push_back(pr.converged ? 1 : 0);
    }
    if (fmat.cols() == 0) throw DegenerateData("fit_cp: no informative pair found");

    model.d = fmat.cols();
    model.Fcoef = fmat.transpose();
    model.Gcoef = gmat.transpose();

    // u_k(Y_b) = r^{-1} (wf_k o wg_k)^T d_b / (|f_k|_GU^2 |g_k|_GV^2) with
    // wf = G_U(eps)^{-1} G_U f, the same smoothing the pair search applies.
    Matrix wf = gu_eps.solve(gram.G_U * fmat);
    Matrix wg = gv_eps.solve(gram.G_V * gmat);
    Matrix e = (wf.array() * wg.array()).matrix(); // rn x d
    Matrix uvals = diag_all(gram).transpose() * e / static_cast<double>(gram.r);
    for (Eigen::Index k = 0; k < model.d; ++k) {
        double denom = fmat.col(k).dot(gram.G_U * fmat.col(k)) *
                       gmat.col(k).dot(gram.G_V * gmat.col(k));
        uvals.col(k) /= denom;
    }
    model.Uvals = uvals;
    return model;
}

CpModel fit_cp(const SampleSet& data, Eigen::Index d, const FitOptions& opts) {
    SvdFeatureSet features = extract_features(data);
    GramSet gram = build_grams_auto(features, data.y, opts.rho_u, opts.rho_v, opts.rho_y);
    CpModel model = fit_cp_prepared(features, gram, d, opts);
    model.rho_u = opts.rho_u;
    model.rho_v = opts.rho_v;
    model.rho_y = opts.rho_y;
    return model;
}

Matrix evaluate_cp(const CpModel& model, const std::vector<Matrix>& newX) {
    SvdFeatureSet fresh = features_for_eval(newX, model.features.p, model.features.q);
    Matrix fvals = basis_values(model.Fcoef, 'U', fresh.U, model.features, model.spec_u);
    Matrix gvals = basis_values(model.Gcoef, 'V', fresh.V, model.features, model.spec_v);
    const Eigen::Index m = fresh.n, r = fresh.r;
    Matrix out = Matrix::Zero(m, model.d);
    for (Eigen::Index b = 0; b < m; ++b)
        for (Eigen::Index i = 0; i < r; ++i)
            out.row(b).array() +=
                fvals.col(i * m + b).array().transpose() * gvals.col(i * m + b).array().transpose();
    return out;
}

Matrix structure_matrix_cp(const CpModel& model, const std::vector<Matrix>& newX) {
    SvdFeatureSet fresh = features_for_eval(newX, model.features.p, model.features.q);
    Matrix fvals = basis_values(model.Fcoef, 'U', fresh.U, model.features, model.spec_u);
    Matrix gvals = basis_values(model.Gcoef, 'V', fresh.V, model.features, model.spec_v);
    const Eigen::Index m = fresh.n, r = fresh.r;
    Matrix out(m * r, model.d);
    for (Eigen::Index b = 0; b < m; ++b)
        for (Eigen::Index i = 0; i < r; ++i)
            out.row(b * r + i) =
                (fvals.col(i * m + b).array() * gvals.col(i * m + b).array()).matrix().transpose();
    return out;
}

} // namespace ntsdr
