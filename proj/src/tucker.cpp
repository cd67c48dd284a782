#include "ntsdr/tucker.hpp"

#include "ntsdr/errors.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>
#include <sstream>

namespace ntsdr {

namespace {

// G(eps)^{-1} G-smoothed coefficient rows, centered per factor block: the
// form every cross term contracts against the regularized target through.
// Smoothing keeps the near-null Gram directions from leaking sampling noise
// into the fit while leaving the well-determined directions untouched.
Matrix smoothed_centered(const Matrix& coefs, const Matrix& gram_m, const RegularizedGram& reg,
                         const GramSet& gram) {
    Matrix out = reg.solve(gram_m * coefs.transpose()).transpose();
    block_center_cols(out, gram.r, gram.n);
    return out;
}

std::string condition_report(const Matrix& sym) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
    const Vector& ev = es.eigenvalues();
    double lo = ev.minCoeff(), hi = ev.maxCoeff();
    std::ostringstream os;
    os << "lambda_min=" << lo << " lambda_max=" << hi;
    if (lo > 0.0) os << " cond=" << hi / lo;
    return os.str();
}

// Exact solve of the small PSD normal system M X = Rhs. Semidefinite blocks
// are fine when Rhs lies in the range of M (minimal-norm solution through the
// eigendecomposition); a genuinely inconsistent system is an error rather
// than something to be ridged over.
Matrix exact_small_solve(const Matrix& m, const Matrix& rhs, const char* what) {
    const double mscale = m.cwiseAbs().maxCoeff();
    if (mscale == 0.0) {
        if (rhs.cwiseAbs().maxCoeff() == 0.0) return Matrix::Zero(rhs.rows(), rhs.cols());
        throw SingularMatrix(std::string(what) + ": zero normal matrix against nonzero data");
    }
    const double rscale = rhs.cwiseAbs().maxCoeff();
    auto residual_ok = [&](const Matrix& x, double slack) {
        if (!x.allFinite()) return false;
        double tol = slack * (mscale * std::max(1.0, x.cwiseAbs().maxCoeff()) + rscale);
        return (m * x - rhs).cwiseAbs().maxCoeff() <= tol;
    };
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() == Eigen::Success) {
        Matrix x = llt.solve(rhs);
        if (residual_ok(x, 1e-6)) return x;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.info() != Eigen::Success)
        throw NumericalFailure(std::string(what) + ": eigensolve failed (" + condition_report(m) +
                               ")");
    const Vector& ev = es.eigenvalues();
    Vector inv = Vector::Zero(ev.size());
    const double cut = 1e-12 * ev.maxCoeff();
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev(i) > cut) inv(i) = 1.0 / ev(i);
    Matrix x = es.eigenvectors() * inv.asDiagonal() *
               (es.eigenvectors().transpose() * rhs);
    if (!residual_ok(x, 1e-6))
        throw SingularMatrix(std::string(what) + ": normal system is inconsistent (" +
                             condition_report(m) + ")");
    return x;
}

// Explicit (pseudo)inverse of a small PSD block, shared across the n
// right-hand sides of the H step.
Matrix exact_small_inverse(const Matrix& m, const char* what) {
    const Eigen::Index k = m.rows();
    const double mscale = m.cwiseAbs().maxCoeff();
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() == Eigen::Success) {
        Matrix x = llt.solve(Matrix::Identity(k, k));
        if (x.allFinite() && (m * x * m - m).cwiseAbs().maxCoeff() <= 1e-6 * mscale) return x;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.info() != Eigen::Success)
        throw NumericalFailure(std::string(what) + ": eigensolve failed (" + condition_report(m) +
                               ")");
    const Vector& ev = es.eigenvalues();
    Vector inv = Vector::Zero(ev.size());
    const double cut = 1e-12 * ev.maxCoeff();
    for (Eigen::Index i = 0; i < ev.size(); ++i)
        if (ev(i) > cut) inv(i) = 1.0 / ev(i);
    Matrix x = es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
    if (!x.allFinite() || (m * x * m - m).cwiseAbs().maxCoeff() > 1e-6 * mscale)
        throw NumericalFailure(std::string(what) + ": block inversion failed (" +
                               condition_report(m) + ")");
    return x;
}

void check_h_list(const std::vector<Matrix>& hvals, Eigen::Index n, Eigen::Index s, Eigen::Index t) {
    if (static_cast<Eigen::Index>(hvals.size()) != n)
        throw InvalidArgument("Hvals length differs from the sample count");
    for (const Matrix& h : hvals)
        if (h.rows() != s || h.cols() != t)
            throw InvalidArgument("Hvals carry inconsistent shapes");
}

// RKHS mass of the regularized targets: |s(Y_b)|^2 summed over b equals
// d_b' (P_V o P_U) d_b with P = Q G(eps)^{-1} G G(eps)^{-1} Q, both factors
// centered per block (the Hadamard coupling keeps Q from being absorbed).
// Independent of (F, G, H), so the sweep loop computes it once per fit.
double objective_constant(const Matrix& d, const GramSet& gram, const RegularizedGram& gu,
                          const RegularizedGram& gv) {
    Matrix pu = gu.solve(gu.inv_gram().transpose());
    Matrix pv = gv.solve(gv.inv_gram().transpose());
    block_center_rows(pu, gram.r, gram.n);
    block_center_cols(pu, gram.r, gram.n);
    block_center_rows(pv, gram.r, gram.n);
    block_center_cols(pv, gram.r, gram.n);
    const double r = static_cast<double>(gram.r);
    return (d.array() * ((pv.array() * pu.array()).matrix() * d).array()).sum() /
           (static_cast<double>(gram.n) * r * r);
}

// The (F, G, H)-dependent part of the least-squares objective: fitted mass
// in the raw RKHS metric minus twice the overlap with the smoothed targets.
double objective_fit_part(const Matrix& Fcoef, const Matrix& Gcoef,
                          const std::vector<Matrix>& Hvals, const GramSet& gram, const Matrix& d,
                          const RegularizedGram& gu, const RegularizedGram& gv) {
    const Eigen::Index n = gram.n;
    const double r = static_cast<double>(gram.r);

    Matrix wf = Fcoef * gram.G_U * Fcoef.transpose();
    Matrix wg = Gcoef * gram.G_V * Gcoef.transpose();
    Matrix left = smoothed_centered(Gcoef, gram.G_V, gv, gram);  // t x rn
    Matrix right = smoothed_centered(Fcoef, gram.G_U, gu, gram); // s x rn

    double acc = 0.0;
    for (Eigen::Index b = 0; b < n; ++b) {
        const Matrix& hb = Hvals[static_cast<std::size_t>(b)];
        Matrix a = wf * hb * wg;
        double quad = (a.array() * hb.array()).sum();
        Vector diag_prod =
            ((hb.transpose() * right).array() * left.array()).colwise().sum().matrix().transpose();
        double cross = diag_prod.dot(d.col(b)) / r;
        acc += quad - 2.0 * cross;
    }
    return acc / static_cast<double>(n);
}

} // namespace

Matrix update_f(const Matrix& Gcoef, const std::vector<Matrix>& Hvals, const GramSet& gram,
                const RegularizedGram& gu_eps, const RegularizedGram& gv_eps) {
    const Eigen::Index rn = gram.rn(), t = Gcoef.rows();
    if (Gcoef.cols() != rn) throw InvalidArgument("update_f: Gcoef width is not r*n");
    if (Hvals.empty()) throw InvalidArgument("update_f: empty Hvals");
    const Eigen::Index s = Hvals.front().rows();
    check_h_list(Hvals, gram.n, s, t);

    Matrix gt = smoothed_centered(Gcoef, gram.G_V, gv_eps, gram);
    Matrix wg = Gcoef * gram.G_V * Gcoef.transpose();
    Matrix m = Matrix::Zero(s, s);
    Matrix r0 = Matrix::Zero(s, rn);
    for (Eigen::Index a = 0; a < gram.n; ++a) {
        const Matrix& ha = Hvals[static_cast<std::size_t>(a)];
        m.noalias() += ha * wg * ha.transpose();
        r0.noalias() += ha * (gt * diag_structure(a, gram).asDiagonal());
    }
    // Normal equation M F G_U = C ends in the raw Gram on both sides; the
    // centering projector is exactly G_U G_U^+, so the minimal solution is
    // M^+ applied to the twice-centered smoothed right side.
    block_center_cols(r0, gram.r, gram.n);
    Matrix rhs = gu_eps.solve(r0.transpose()).transpose();
    block_center_cols(rhs, gram.r, gram.n);
    rhs /= static_cast<double>(gram.r);
    return exact_small_solve(m, rhs, "update_f");
}

Matrix update_g(const Matrix& Fcoef, const std::vector<Matrix>& Hvals, const GramSet& gram,
                const RegularizedGram& gu_eps, const RegularizedGram& gv_eps) {
    const Eigen::Index rn = gram.rn(), s = Fcoef.rows();
    if (Fcoef.cols() != rn) throw InvalidArgument("update_g: Fcoef width is not r*n");
    if (Hvals.empty()) throw InvalidArgument("update_g: empty Hvals");
    const Eigen::Index t = Hvals.front().cols();
    check_h_list(Hvals, gram.n, s, t);

    Matrix ft = smoothed_centered(Fcoef, gram.G_U, gu_eps, gram);
    Matrix wf = Fcoef * gram.G_U * Fcoef.transpose();
    Matrix m = Matrix::Zero(t, t);
    Matrix r0 = Matrix::Zero(t, rn);
    for (Eigen::Index a = 0; a < gram.n; ++a) {
        const Matrix& ha = Hvals[static_cast<std::size_t>(a)];
        m.noalias() += ha.transpose() * wf * ha;
        r0.noalias() += ha.transpose() * (ft * diag_structure(a, gram).asDiagonal());
    }
    block_center_cols(r0, gram.r, gram.n);
    Matrix rhs = gv_eps.solve(r0.transpose()).transpose();
    block_center_cols(rhs, gram.r, gram.n);
    rhs /= static_cast<double>(gram.r);
    return exact_small_solve(m, rhs, "update_g");
}

std::vector<Matrix> update_h(const Matrix& Fcoef, const Matrix& Gcoef, const GramSet& gram,
                             const RegularizedGram& gu_eps, const RegularizedGram& gv_eps) {
    const Eigen::Index rn = gram.rn(), s = Fcoef.rows(), t = Gcoef.rows();
    if (Fcoef.cols() != rn || Gcoef.cols() != rn)
        throw InvalidArgument("update_h: coefficient width is not r*n");

    Matrix wf = Fcoef * gram.G_U * Fcoef.transpose();
    Matrix wg = Gcoef * gram.G_V * Gcoef.transpose();
    if (wf.cwiseAbs().maxCoeff() == 0.0 || wg.cwiseAbs().maxCoeff() == 0.0)
        throw SingularMatrix("update_h: a coefficient block spans no RKHS mass");
    Matrix winv_f = exact_small_inverse(wf, "update_h");
    Matrix winv_g = exact_small_inverse(wg, "update_h");

    Matrix ft = smoothed_centered(Fcoef, gram.G_U, gu_eps, gram);
    Matrix gt = smoothed_centered(Gcoef, gram.G_V, gv_eps, gram);
    std::vector<Matrix> out(static_cast<std::size_t>(gram.n), Matrix(s, t));
    for (Eigen::Index a = 0; a < gram.n; ++a) {
        Matrix na = ft * diag_structure(a, gram).asDiagonal() * gt.transpose(); // s x t
        out[static_cast<std::size_t>(a)] = winv_f * na * winv_g / static_cast<double>(gram.r);
    }
    return out;
}

double tucker_objective(const Matrix& Fcoef, const Matrix& Gcoef, const std::vector<Matrix>& Hvals,
                        const GramSet& gram, const RegularizedGram& gu,
                        const RegularizedGram& gv) {
    check_h_list(Hvals, gram.n, Fcoef.rows(), Gcoef.rows());
    Matrix d = diag_all(gram);
    return objective_constant(d, gram, gu, gv) +
           objective_fit_part(Fcoef, Gcoef, Hvals, gram, d, gu, gv);
}

namespace {

// Top eigenvectors of sum_a Gamma_a^T Gamma_a = I_r (x) (sum_a B_a^T B_a):
// factor-block replication 1_r (x) w / sqrt(r) of the n x n eigenvectors w
// resolves the r-fold eigenvalue multiplicity deterministically.
Matrix init_gcoef(const GramSet& gram, Eigen::Index t) {
    std::vector<Matrix> blocks = gamma_blocks(gram);
    Matrix c = Matrix::Zero(gram.n, gram.n);
    for (const Matrix& b : blocks) c.noalias() += b.transpose() * b;
    Eigen::SelfAdjointEigenSolver<Matrix> es(c);
    if (es.info() != Eigen::Success)
        throw NumericalFailure("initialization eigensolve failed");
    Matrix g = Matrix::Zero(t, gram.rn());
    const double scale = 1.0 / std::sqrt(static_cast<double>(gram.r));
    for (Eigen::Index j = 0; j < t; ++j) {
        Vector w = es.eigenvectors().col(gram.n - 1 - j);
        Eigen::Index anchor = 0;
        while (anchor < w.size() && std::abs(w(anchor)) < 1e-12) ++anchor;
        if (anchor < w.size() && w(anchor) < 0.0) w = -w;
        for (Eigen::Index i = 0; i < gram.r; ++i) g.row(j).segment(i * gram.n, gram.n) = scale * w;
    }
    return g;
}

// Gram-metric modified Gram-Schmidt on the rows of coefs. Returns the
// transform T with new = T * old, or an empty matrix when a pivot collapses.
Matrix gram_orthonormalize(Matrix& coefs, const Matrix& gram) {
    const Eigen::Index k = coefs.rows();
    Matrix t = Matrix::Identity(k, k);
    Matrix out = coefs;
    for (Eigen::Index i = 0; i < k; ++i) {
        Vector v = out.row(i).transpose();
        Vector ti = t.row(i).transpose();
        for (Eigen::Index j = 0; j < i; ++j) {
            double c = (out.row(j) * gram * v)(0);
            v -= c * out.row(j).transpose();
            ti -= c * t.row(j).transpose();
        }
        double nrm2 = v.dot(gram * v);
        if (!(nrm2 > 1e-24)) return Matrix();
        double nrm = std::sqrt(nrm2);
        out.row(i) = v.transpose() / nrm;
        t.row(i) = ti.transpose() / nrm;
    }
    coefs = out;
    return t;
}

} // namespace

TuckerModel fit_tucker_prepared(const SvdFeatureSet& features, const GramSet& gram,
                                Eigen::Index s, Eigen::Index t, const FitOptions& opts) {
    validate(opts.reg);
    if (s < 1 || t < 1) throw InvalidArgument("fit_tucker: s and t must be >= 1");
    if (s > gram.rn() || t > gram.rn()) throw InvalidArgument("fit_tucker: grid dims exceed r*n");
    if (t > gram.n || s > gram.n)
        throw InvalidArgument("fit_tucker: grid dims exceed the sample count");
    if (opts.max_iter < 1) throw InvalidArgument("fit_tucker: max_iter must be >= 1");

    RegularizedGram gu_eps(gram.G_U, opts.reg.eps_u), gv_eps(gram.G_V, opts.reg.eps_v);

    TuckerModel model;
    model.s = s;
    model.t = t;
    model.reg = opts.reg;
    model.features = features;
    model.spec_u = gram.spec_u;
    model.spec_v = gram.spec_v;

    Matrix gcoef = init_gcoef(gram, t);
    std::vector<Matrix> hvals(static_cast<std::size_t>(gram.n));
    std::mt19937_64 rng(opts.init_seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (Eigen::Index a = 0; a < gram.n; ++a) {
        Matrix h(s, t);
        for (Eigen::Index i = 0; i < s; ++i)
            for (Eigen::Index j = 0; j < t; ++j) h(i, j) = nd(rng);
        hvals[static_cast<std::size_t>(a)] = h;
    }

    Matrix dall = diag_all(gram);
    const double s_const = objective_constant(dall, gram, gu_eps, gv_eps);

    Matrix fcoef;
    double prev = 0.0;
    for (int it = 1; it <= opts.max_iter; ++it) {
        fcoef = update_f(gcoef, hvals, gram, gu_eps, gv_eps);
        gcoef = update_g(fcoef, hvals, gram, gu_eps, gv_eps);
        hvals = update_h(fcoef, gcoef, gram, gu_eps, gv_eps);
        double obj = s_const +
                     objective_fit_part(fcoef, gcoef, hvals, gram, dall, gu_eps, gv_eps);
        model.objective_trace.push_back(obj);
        model.iterations = it;
        if (it > 1 && std::abs(prev - obj) <= opts.tol * std::max(std::abs(prev), 1e-12)) {
            model.converged = true;
            break;
        }
        prev = obj;
    }

    // Re-express in orthonormal bases; H absorbs both transforms so the
    // fitted function (and hence the objective) is untouched.
    Matrix fc = fcoef, gc = gcoef;
    Matrix tf = gram_orthonormalize(fc, gram.G_U);
    Matrix tg = tf.size() ? gram_orthonormalize(gc, gram.G_V) : Matrix();
    if (tg.size()) {
        Eigen::PartialPivLU<Matrix> luf(Matrix(tf.transpose()));
        Eigen::PartialPivLU<Matrix> lug(Matrix(tg.transpose()));
        Matrix tg_inv = lug.solve(Matrix::Identity(t, t)).transpose();
        for (Matrix& h : hvals) h = luf.solve(h * tg_inv);
        fcoef = fc;
        gcoef = gc;
        model.orthonormalized = true;
    }

    model.Fcoef = fcoef;
    model.Gcoef = gcoef;
    model.Hvals = hvals;
    return model;
}

TuckerModel fit_tucker(const SampleSet& data, Eigen::Index s, Eigen::Index t,
                       const FitOptions& opts) {
    SvdFeatureSet features = extract_features(data);
    GramSet gram = build_grams_auto(features, data.y, opts.rho_u, opts.rho_v, opts.rho_y);
    TuckerModel model = fit_tucker_prepared(features, gram, s, t, opts);
    model.rho_u = opts.rho_u;
    model.rho_v = opts.rho_v;
    model.rho_y = opts.rho_y;
    return model;
}

std::vector<Matrix> evaluate_tucker(const TuckerModel& model, const std::vector<Matrix>& newX) {
    SvdFeatureSet fresh = features_for_eval(newX, model.features.p, model.features.q);
    Matrix fvals = basis_values(model.Fcoef, 'U', fresh.U, model.features, model.spec_u);
    Matrix gvals = basis_values(model.Gcoef, 'V', fresh.V, model.features, model.spec_v);
    const Eigen::Index m = fresh.n, r = fresh.r;
    std::vector<Matrix> out(static_cast<std::size_t>(m));
    for (Eigen::Index b = 0; b < m; ++b) {
        Matrix pb = Matrix::Zero(model.s, model.t);
        for (Eigen::Index i = 0; i < r; ++i)
            pb.noalias() += fvals.col(i * m + b) * gvals.col(i * m + b).transpose();
        out[static_cast<std::size_t>(b)] = pb;
    }
    return out;
}

Matrix structure_matrix_tucker(const TuckerModel& model, const std::vector<Matrix>& newX) {
    SvdFeatureSet fresh = features_for_eval(newX, model.features.p, model.features.q);
    Matrix fvals = basis_values(model.Fcoef, 'U', fresh.U, model.features, model.spec_u);
    Matrix gvals = basis_values(model.Gcoef, 'V', fresh.V, model.features, model.spec_v);
    const Eigen::Index m = fresh.n, r = fresh.r;
    Matrix out(m * r, model.s * model.t);
    for (Eigen::Index b = 0; b < m; ++b)
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index k = 0; k < model.s; ++k)
                for (Eigen::Index l = 0; l < model.t; ++l)
                    out(b * r + i, k * model.t + l) = fvals(k, i * m + b) * gvals(l, i * m + b);
    return out;
}

} // namespace ntsdr
