#include "ntsdr/gsir.hpp"

#include "ntsdr/errors.hpp"
#include "ntsdr/operators.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace ntsdr {

namespace {

Matrix vectorized_points(const std::vector<Matrix>& xs, Eigen::Index p, Eigen::Index q) {
    Matrix pts(p * q, static_cast<Eigen::Index>(xs.size()));
    for (std::size_t a = 0; a < xs.size(); ++a) {
        if (xs[a].rows() != p || xs[a].cols() != q)
            throw InvalidArgument("gsir: sample shape differs from training data");
        pts.col(static_cast<Eigen::Index>(a)) =
            Eigen::Map<const Vector>(xs[a].data(), p * q);
    }
    return pts;
}

} // namespace

GsirModel fit_gsir(const SampleSet& data, Eigen::Index d, double rho_x, double rho_y, double eps) {
    validate(data);
    const Eigen::Index n = data.n();
    if (d < 1) throw InvalidArgument("fit_gsir: d must be >= 1");
    if (d > n - 1) throw InvalidArgument("fit_gsir: d exceeds n - 1");
    if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("fit_gsir: eps must be positive");

    GsirModel model;
    model.d = d;
    model.p = data.p();
    model.q = data.q();
    model.eps = eps;
    model.rho_x = rho_x;
    model.rho_y = rho_y;
    model.train_points = vectorized_points(data.X, model.p, model.q);

    model.spec_x = bandwidth_heuristic(model.train_points, rho_x);
    Matrix ypts(1, n);
    for (Eigen::Index a = 0; a < n; ++a) ypts(0, a) = data.y[static_cast<std::size_t>(a)];
    KernelSpec spec_y = bandwidth_heuristic(ypts, rho_y);

    Matrix q_n = centering_projector(n);
    Matrix gx = q_n * kernel_matrix(model.train_points, model.spec_x) * q_n;
    Matrix gy = q_n * kernel_matrix(ypts, spec_y) * q_n;
    gx = 0.5 * (gx + gx.transpose());
    gy = 0.5 * (gy + gy.transpose());

    RegularizedGram rg(gx, eps);
    Matrix z = rg.solve(gx); // M(eps)^{-1} G_X
    Matrix a = z * gy * z.transpose();
    Matrix white = rg.llt().matrixL().solve(a);
    white = rg.llt().matrixL().solve(Matrix(white.transpose()));
    white = 0.5 * (white + white.transpose());

    Eigen::SelfAdjointEigenSolver<Matrix> es(white);
    if (es.info() != Eigen::Success) throw NumericalFailure("fit_gsir: eigensolve failed");

    Matrix coord(d, n);
    model.eigenvalues.resize(d);
    for (Eigen::Index k = 0; k < d; ++k) {
        model.eigenvalues(k) = es.eigenvalues()(n - 1 - k);
        coord.row(k) = rg.llt().matrixU().solve(es.eigenvectors().col(n - 1 - k)).transpose();
    }

    // G_X-metric Gram-Schmidt, then unit in-sample variance; both survive the
    // final sign fix.
    for (Eigen::Index k = 0; k < d; ++k) {
        Vector c = coord.row(k).transpose();
        for (Eigen::Index j = 0; j < k; ++j) {
            Vector cj = coord.row(j).transpose();
            double denom = cj.dot(gx * cj);
            c -= (cj.dot(gx * c) / denom) * cj;
        }
        Vector vals = gx * c;
        double var = vals.squaredNorm() / static_cast<double>(n);
        if (!(var > 1e-24))
            throw DegenerateData("fit_gsir: requested directions exceed the informative rank");
        c /= std::sqrt(var);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(c(i)) > 1e-12) {
                if (c(i) < 0.0) c = -c;
                break;
            }
        }
        coord.row(k) = c.transpose();
    }

    model.coord = coord;
    model.qcoord = coord * q_n; // rows Q c_k (Q symmetric)
    Matrix raw = kernel_matrix(model.train_points, model.spec_x) * model.qcoord.transpose();
    model.offset = raw.colwise().mean().transpose();
    model.values = raw.rowwise() - model.offset.transpose();
    return model;
}

Matrix evaluate_gsir(const GsirModel& model, const std::vector<Matrix>& newX) {
    if (newX.empty()) throw InvalidArgument("evaluate_gsir: no samples");
    Matrix pts = vectorized_points(newX, model.p, model.q);
    Matrix k = kernel_cross(model.train_points, pts, model.spec_x); // n x m
    Matrix raw = k.transpose() * model.qcoord.transpose();          // m x d
    return raw.rowwise() - model.offset.transpose();
}

} // namespace ntsdr
