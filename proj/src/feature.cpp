#include "ntsdr/feature.hpp"

#include "ntsdr/errors.hpp"
#include "ntsdr/threading.hpp"

#include <Eigen/SVD>
#include <cmath>

namespace ntsdr {

namespace {
constexpr double kRankTol = 1e-10; // relative to lambda_1
constexpr double kSignTol = 1e-12;
} // namespace

SignedSvd signed_svd(const Matrix& x) {
    if (x.size() == 0) throw InvalidArgument("signed_svd: empty matrix");
    if (!x.allFinite()) throw InvalidArgument("signed_svd: non-finite entries");

    Eigen::JacobiSVD<Matrix> svd(x, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const Eigen::Index r = sv.size();

    SignedSvd out;
    const double lead = r > 0 ? sv(0) : 0.0;
    int keep = 0;
    for (Eigen::Index i = 0; i < r; ++i)
        if (sv(i) > kRankTol * lead && sv(i) > 0.0) ++keep;

    out.effective_rank = keep;
    out.lambda.resize(keep);
    out.U0.resize(x.rows(), keep);
    out.V0.resize(x.cols(), keep);

    for (int i = 0; i < keep; ++i) {
        Vector u = svd.matrixU().col(i);
        Vector v = svd.matrixV().col(i);
        // Pin the U side: make its anchor component positive; the V side
        // absorbs the compensating flip so lambda stays positive.
        Eigen::Index anchor = 0;
        if (std::abs(u(0)) < kSignTol) {
            ++out.sign_fallbacks;
            while (anchor < u.size() && std::abs(u(anchor)) < kSignTol) ++anchor;
            if (anchor == u.size()) anchor = 0; // all ~0: leave as is
        }
        if (u(anchor) < 0.0) {
            u = -u;
            v = -v;
        }
        out.lambda(i) = sv(i);
        out.U0.col(i) = u;
        out.V0.col(i) = v;
        if (i + 1 < keep && sv(i) - sv(i + 1) < kRankTol * lead) ++out.ties;
    }
    return out;
}

namespace {

SvdFeatureSet features_from_list(const std::vector<Matrix>& xs, Eigen::Index p, Eigen::Index q) {
    SvdFeatureSet fs;
    fs.n = static_cast<Eigen::Index>(xs.size());
    fs.p = p;
    fs.q = q;
    fs.r = std::min(fs.p, fs.q);
    fs.U = Matrix::Zero(fs.p, fs.r * fs.n);
    fs.V = Matrix::Zero(fs.q, fs.r * fs.n);
    fs.lambda = Matrix::Zero(fs.n, fs.r);
    fs.effective_rank.assign(static_cast<std::size_t>(fs.n), 0);

    std::vector<SignedSvd> per_sample(static_cast<std::size_t>(fs.n));
    parallel_for(static_cast<std::size_t>(fs.n), [&](std::size_t a) {
        per_sample[a] = signed_svd(xs[a]);
    });

    for (Eigen::Index a = 0; a < fs.n; ++a) {
        const SignedSvd& s = per_sample[static_cast<std::size_t>(a)];
        fs.effective_rank[static_cast<std::size_t>(a)] = s.effective_rank;
        if (s.effective_rank < fs.r) ++fs.rank_deficient_samples;
        fs.sign_fallbacks += s.sign_fallbacks;
        fs.ties += s.ties;
        for (int i = 0; i < s.effective_rank; ++i) {
            const double scale = std::sqrt(s.lambda(i));
            fs.U.col(flat_index(i, a, fs.n)) = scale * s.U0.col(i);
            fs.V.col(flat_index(i, a, fs.n)) = scale * s.V0.col(i);
            fs.lambda(a, i) = s.lambda(i);
        }
    }
    return fs;
}

} // namespace

SvdFeatureSet extract_features(const SampleSet& data) {
    validate(data);
    return features_from_list(data.X, data.p(), data.q());
}

SvdFeatureSet features_for_eval(const std::vector<Matrix>& xs, Eigen::Index p, Eigen::Index q) {
    if (xs.empty()) throw InvalidArgument("features_for_eval: no samples");
    for (const Matrix& x : xs) {
        if (x.rows() != p || x.cols() != q)
            throw InvalidArgument("features_for_eval: sample shape differs from training data");
        if (!x.allFinite()) throw InvalidArgument("features_for_eval: non-finite entries");
    }
    return features_from_list(xs, p, q);
}

void block_center_rows(Matrix& m, Eigen::Index r, Eigen::Index n) {
    if (m.rows() != r * n) throw InvalidArgument("block_center_rows: row count is not r*n");
    for (Eigen::Index i = 0; i < r; ++i) {
        auto block = m.middleRows(i * n, n);
        block.rowwise() -= block.colwise().mean().eval();
    }
}

void block_center_cols(Matrix& m, Eigen::Index r, Eigen::Index n) {
    if (m.cols() != r * n) throw InvalidArgument("block_center_cols: column count is not r*n");
    for (Eigen::Index i = 0; i < r; ++i) {
        auto block = m.middleCols(i * n, n);
        block.colwise() -= block.rowwise().mean().eval();
    }
}

GramSet build_grams(const SvdFeatureSet& features, const std::vector<double>& y,
                    const KernelSpec& spec_u, const KernelSpec& spec_v,
                    const KernelSpec& spec_y) {
    if (static_cast<Eigen::Index>(y.size()) != features.n)
        throw InvalidArgument("build_grams: response length does not match feature set");
    if (features.n < 2) throw InvalidArgument("build_grams: need n >= 2");

    GramSet g;
    g.n = features.n;
    g.r = features.r;
    g.spec_u = spec_u;
    g.spec_v = spec_v;
    g.spec_y = spec_y;
    g.Q = centering_projector(g.n);

    g.K_U = kernel_matrix(features.U, spec_u);
    g.K_V = kernel_matrix(features.V, spec_v);
    Matrix ypts(1, g.n);
    for (Eigen::Index a = 0; a < g.n; ++a) ypts(0, a) = y[static_cast<std::size_t>(a)];
    g.K_Y = kernel_matrix(ypts, spec_y);

    g.G_U = g.K_U;
    block_center_rows(g.G_U, g.r, g.n);
    block_center_cols(g.G_U, g.r, g.n);
    g.G_V = g.K_V;
    block_center_rows(g.G_V, g.r, g.n);
    block_center_cols(g.G_V, g.r, g.n);
    g.G_Y = g.Q * g.K_Y * g.Q;
    return g;
}

GramSet build_grams_auto(const SvdFeatureSet& features, const std::vector<double>& y,
                         double rho_u, double rho_v, double rho_y) {
    Matrix ypts(1, features.n);
    for (Eigen::Index a = 0; a < features.n; ++a) ypts(0, a) = y[static_cast<std::size_t>(a)];
    return build_grams(features, y, bandwidth_heuristic(features.U, rho_u),
                       bandwidth_heuristic(features.V, rho_v),
                       bandwidth_heuristic(ypts, rho_y));
}

Vector feature_coordinate(Eigen::Index a, const GramSet& gram) {
    if (a < 0 || a >= gram.n) throw InvalidArgument("feature_coordinate: sample index out of range");
    Vector diag(gram.rn());
    for (Eigen::Index i = 0; i < gram.r; ++i)
        diag.segment(i * gram.n, gram.n) = gram.Q.col(a);
    return diag;
}

Matrix basis_values(const Matrix& coefs, char mode, const Matrix& points,
                    const SvdFeatureSet& features, const KernelSpec& spec) {
    if (mode != 'U' && mode != 'V') throw InvalidArgument("basis_values: mode must be 'U' or 'V'");
    const Matrix& train = (mode == 'U') ? features.U : features.V;
    if (coefs.cols() != train.cols())
        throw InvalidArgument("basis_values: coordinate length is not r*n");
    Matrix kx = kernel_cross(train, points, spec);
    block_center_rows(kx, features.r, features.n);
    return coefs * kx;
}

double evaluate_basis_function(const Vector& coord, char mode, const Vector& point,
                               const SvdFeatureSet& features, const KernelSpec& spec) {
    Matrix pts(point.size(), 1);
    pts.col(0) = point;
    return basis_values(coord.transpose(), mode, pts, features, spec)(0, 0);
}

} // namespace ntsdr
