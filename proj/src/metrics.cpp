#include "ntsdr/metrics.hpp"

#include "ntsdr/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ntsdr {

ScoreReport summarize(const std::vector<double>& per_rep) {
    ScoreReport r;
    if (per_rep.empty()) return r;
    r.per_rep = per_rep;
    r.n_reps = static_cast<int>(per_rep.size());
    double sum = 0.0;
    for (double v : per_rep) sum += v;
    r.mean = sum / r.n_reps;
    if (r.n_reps > 1) {
        double ss = 0.0;
        for (double v : per_rep) ss += (v - r.mean) * (v - r.mean);
        r.sd = std::sqrt(ss / (r.n_reps - 1));
    }
    return r;
}

namespace {

// Doubly-centered pairwise Euclidean distance matrix of the rows.
Matrix centered_distances(const Matrix& x) {
    const Eigen::Index n = x.rows();
    Matrix d(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        d(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double v = (x.row(i) - x.row(j)).norm();
            d(i, j) = v;
            d(j, i) = v;
        }
    }
    Vector row_mean = d.rowwise().mean();
    double grand = row_mean.mean();
    d.colwise() -= row_mean;
    d.rowwise() -= row_mean.transpose();
    d.array() += grand;
    return d;
}

} // namespace

double distance_correlation(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows()) throw InvalidArgument("distance_correlation: row counts differ");
    if (a.rows() < 2) throw InvalidArgument("distance_correlation: need at least two rows");
    if (!a.allFinite() || !b.allFinite())
        throw InvalidArgument("distance_correlation: non-finite entries");

    Matrix da = centered_distances(a);
    Matrix db = centered_distances(b);
    const double m = static_cast<double>(a.rows()) * static_cast<double>(a.rows());
    double cov2 = std::max((da.array() * db.array()).sum() / m, 0.0);
    double va = std::max(da.array().square().sum() / m, 0.0);
    double vb = std::max(db.array().square().sum() / m, 0.0);
    if (!(va > 0.0) || !(vb > 0.0)) return 0.0;
    double r2 = cov2 / std::sqrt(va * vb);
    return std::clamp(std::sqrt(std::max(r2, 0.0)), 0.0, 1.0);
}

double distance_correlation(const Vector& a, const Vector& b) {
    return distance_correlation(Matrix(a), Matrix(b));
}

double structure_dcor(const Matrix& s_true, const Matrix& s_est) {
    return distance_correlation(s_true, s_est);
}

double pearson(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw InvalidArgument("pearson: length mismatch");
    if (a.size() < 2) throw InvalidArgument("pearson: need at least two points");
    Vector ca = a.array() - a.mean();
    Vector cb = b.array() - b.mean();
    double va = ca.squaredNorm(), vb = cb.squaredNorm();
    if (!(va > 0.0) || !(vb > 0.0)) throw DegenerateData("pearson: zero variance");
    return ca.dot(cb) / std::sqrt(va * vb);
}

} // namespace ntsdr
