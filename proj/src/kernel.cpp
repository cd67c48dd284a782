#include "ntsdr/kernel.hpp"

#include "ntsdr/errors.hpp"
#include "ntsdr/threading.hpp"

#include <cmath>
#include <random>

namespace ntsdr {

void validate(const SampleSet& data) {
    if (data.n() < 2) throw InvalidArgument("sample set needs n >= 2");
    if (data.y.size() != data.X.size())
        throw InvalidArgument("response length does not match predictor count");
    const Eigen::Index p = data.p(), q = data.q();
    if (p < 1 || q < 1) throw InvalidArgument("predictors must be non-empty matrices");
    for (Eigen::Index a = 0; a < data.n(); ++a) {
        const Matrix& x = data.X[static_cast<std::size_t>(a)];
        if (x.rows() != p || x.cols() != q)
            throw InvalidArgument("predictor " + std::to_string(a) + " deviates from the common shape");
        if (!x.allFinite())
            throw InvalidArgument("predictor " + std::to_string(a) + " has non-finite entries");
        if (!std::isfinite(data.y[static_cast<std::size_t>(a)]))
            throw InvalidArgument("response " + std::to_string(a) + " is non-finite");
    }
}

double gaussian_kernel(const Vector& x, const Vector& y, double gamma) {
    if (!(gamma > 0.0) || !std::isfinite(gamma))
        throw InvalidArgument("kernel bandwidth gamma must be positive and finite");
    if (x.size() != y.size())
        throw InvalidArgument("kernel arguments have mismatched dimension");
    return std::exp(-gamma * (x - y).squaredNorm());
}

KernelSpec bandwidth_heuristic(const Matrix& points, double rho) {
    if (!(rho > 0.1) || !(rho < 10.0))
        throw InvalidArgument("bandwidth multiplier rho must lie in (0.1, 10)");
    const Eigen::Index m = points.cols();
    if (m < 2) throw DegenerateData("bandwidth heuristic needs at least two points");

    double sigma2 = 0.0;
    const Eigen::Index pair_cap = 4000;
    if (m > pair_cap) {
        // Subsample pairs; the seed is fixed so the estimate is reproducible.
        std::mt19937_64 rng(0x5eedULL ^ static_cast<unsigned long long>(m));
        std::uniform_int_distribution<Eigen::Index> pick(0, m - 1);
        double acc = 0.0;
        for (Eigen::Index t = 0; t < pair_cap; ++t) {
            Eigen::Index i = pick(rng), j = pick(rng);
            while (j == i) j = pick(rng);
            acc += (points.col(i) - points.col(j)).squaredNorm();
        }
        sigma2 = acc / static_cast<double>(pair_cap);
    } else {
        double acc = 0.0;
        for (Eigen::Index i = 0; i < m; ++i)
            for (Eigen::Index j = i + 1; j < m; ++j)
                acc += (points.col(i) - points.col(j)).squaredNorm();
        sigma2 = acc / (static_cast<double>(m) * static_cast<double>(m - 1) / 2.0);
    }
    if (!(sigma2 > 0.0))
        throw DegenerateData("all points coincide; pairwise scatter is zero");

    KernelSpec spec;
    spec.rho = rho;
    spec.gamma = rho / (2.0 * sigma2);
    return spec;
}

Matrix kernel_matrix(const Matrix& points, const KernelSpec& spec) {
    if (!(spec.gamma > 0.0) || !std::isfinite(spec.gamma))
        throw InvalidArgument("kernel spec carries a non-positive bandwidth");
    const Eigen::Index m = points.cols();
    Matrix K(m, m);
    parallel_for(static_cast<std::size_t>(m), [&](std::size_t ui) {
        const Eigen::Index i = static_cast<Eigen::Index>(ui);
        K(i, i) = 1.0;
        for (Eigen::Index j = i + 1; j < m; ++j)
            K(i, j) = std::exp(-spec.gamma * (points.col(i) - points.col(j)).squaredNorm());
    });
    for (Eigen::Index i = 0; i < m; ++i)
        for (Eigen::Index j = i + 1; j < m; ++j) K(j, i) = K(i, j);
    return K;
}

Matrix kernel_cross(const Matrix& a, const Matrix& b, const KernelSpec& spec) {
    if (!(spec.gamma > 0.0) || !std::isfinite(spec.gamma))
        throw InvalidArgument("kernel spec carries a non-positive bandwidth");
    if (a.rows() != b.rows())
        throw InvalidArgument("kernel arguments have mismatched dimension");
    Matrix K(a.cols(), b.cols());
    parallel_for(static_cast<std::size_t>(a.cols()), [&](std::size_t ui) {
        const Eigen::Index i = static_cast<Eigen::Index>(ui);
        for (Eigen::Index j = 0; j < b.cols(); ++j)
            K(i, j) = std::exp(-spec.gamma * (a.col(i) - b.col(j)).squaredNorm());
    });
    return K;
}

Matrix centering_projector(Eigen::Index m) {
    if (m < 1) throw InvalidArgument("centering projector needs m >= 1");
    Matrix Q = Matrix::Identity(m, m);
    Q.array() -= 1.0 / static_cast<double>(m);
    return Q;
}

} // namespace ntsdr
