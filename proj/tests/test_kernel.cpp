#include "ntsdr/errors.hpp"
#include "ntsdr/kernel.hpp"

#include <doctest.h>

#include "dense_oracle.hpp"

using namespace ntsdr;

TEST_SUITE("kernel") {

    TEST_CASE("gaussian kernel closed form") {
        Vector x(1), y(1);
        x << 0.0;
        y << 1.0;
        CHECK(gaussian_kernel(x, y, 0.5) == doctest::Approx(0.6065306597126334).epsilon(1e-14));
        CHECK(gaussian_kernel(x, x, 0.7) == 1.0);
        Vector a(2), b(2);
        a << 1.0, 2.0;
        b << 3.0, -1.0;
        CHECK(gaussian_kernel(a, b, 0.1) ==
              doctest::Approx(std::exp(-0.1 * 13.0)).epsilon(1e-14));
    }

    TEST_CASE("bandwidth averages squared distances over distinct pairs") {
        Matrix pts(1, 3);
        pts << 0.0, 1.0, 2.0; // pair distances^2: 1, 4, 1 -> sigma^2 = 2
        KernelSpec spec = bandwidth_heuristic(pts, 2.0);
        CHECK(spec.gamma == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(spec.rho == 2.0);
        CHECK_THROWS_AS(bandwidth_heuristic(pts, 0.1), InvalidArgument);
        CHECK_THROWS_AS(bandwidth_heuristic(pts, 10.0), InvalidArgument);
        CHECK_THROWS_AS(bandwidth_heuristic(Matrix::Ones(2, 4), 1.0), DegenerateData);
        CHECK_THROWS_AS(bandwidth_heuristic(Matrix::Ones(2, 1), 1.0), DegenerateData);
    }

    TEST_CASE("subsampled bandwidth estimate is reproducible") {
        Matrix pts(1, 4321);
        for (Eigen::Index i = 0; i < pts.cols(); ++i)
            pts(0, i) = 0.001 * static_cast<double>(i);
        KernelSpec s1 = bandwidth_heuristic(pts, 1.0);
        KernelSpec s2 = bandwidth_heuristic(pts, 1.0);
        CHECK(s1.gamma == s2.gamma);
        CHECK(s1.gamma > 0.0);
    }

    TEST_CASE("kernel matrix is symmetric with unit diagonal") {
        std::mt19937_64 rng(7);
        Matrix pts = oracle::random_matrix(3, 9, rng);
        KernelSpec spec = bandwidth_heuristic(pts, 1.0);
        Matrix k = kernel_matrix(pts, spec);
        CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
        CHECK((k.diagonal().array() - 1.0).abs().maxCoeff() == 0.0);
        Matrix cross = kernel_cross(pts, pts, spec);
        CHECK((k - cross).cwiseAbs().maxCoeff() < 1e-15);
        for (Eigen::Index i = 0; i < k.rows(); ++i)
            for (Eigen::Index j = 0; j < k.cols(); ++j)
                CHECK(k(i, j) ==
                      doctest::Approx(gaussian_kernel(pts.col(i), pts.col(j), spec.gamma))
                          .epsilon(1e-15));
    }

    TEST_CASE("centering projector") {
        Matrix q2 = centering_projector(2);
        CHECK(q2(0, 0) == doctest::Approx(0.5));
        CHECK(q2(0, 1) == doctest::Approx(-0.5));
        CHECK(q2(1, 0) == doctest::Approx(-0.5));
        CHECK(q2(1, 1) == doctest::Approx(0.5));

        Matrix q3 = centering_projector(3);
        CHECK(q3.rowwise().sum().cwiseAbs().maxCoeff() < 1e-15);
        CHECK((q3 * q3 - q3).cwiseAbs().maxCoeff() < 1e-15);
        CHECK((q3 - q3.transpose()).cwiseAbs().maxCoeff() == 0.0);

        Matrix q1 = centering_projector(1);
        CHECK(q1.rows() == 1);
        CHECK(q1(0, 0) == 0.0);
    }
}
