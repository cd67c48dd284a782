#include "ntsdr/errors.hpp"
#include "ntsdr/metrics.hpp"

#include <doctest.h>

#include "dense_oracle.hpp"

using namespace ntsdr;

TEST_SUITE("metrics") {

    TEST_CASE("pearson closed form") {
        Vector a(3), b(3);
        a << 1.0, 2.0, 3.0;
        b << 1.0, 2.0, 4.0;
        CHECK(pearson(a, b) == doctest::Approx(0.9819805060619659).epsilon(1e-12));
        CHECK(pearson(a, a) == doctest::Approx(1.0).epsilon(1e-12));
        Vector c = Vector::Ones(3);
        CHECK_THROWS_AS(pearson(a, c), DegenerateData);
        Vector short2(2);
        short2 << 1.0, 2.0;
        CHECK_THROWS_AS(pearson(a, short2), InvalidArgument);
    }

    TEST_CASE("distance correlation matches brute force") {
        std::mt19937_64 rng(301);
        for (int trial = 0; trial < 4; ++trial) {
            const Eigen::Index n = 4 + trial % 3;
            Matrix x = oracle::random_matrix(n, 2, rng);
            Matrix y = oracle::random_matrix(n, 3, rng);
            const double got = distance_correlation(x, y);
            const double want = oracle::dcor_brute(x, y);
            CHECK(got == doctest::Approx(want).epsilon(1e-12));
            CHECK(got >= 0.0);
            CHECK(got <= 1.0);
        }
    }

    TEST_CASE("distance correlation edge cases") {
        std::mt19937_64 rng(307);
        Matrix x = oracle::random_matrix(6, 1, rng);
        CHECK(distance_correlation(x, x) == doctest::Approx(1.0).epsilon(1e-12));
        Matrix c = Matrix::Ones(6, 2);
        CHECK(distance_correlation(x, c) == 0.0);

        Vector vx = x.col(0);
        Vector vy = 2.0 * vx;
        CHECK(distance_correlation(vx, vy) == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(structure_dcor(x, x) == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("summary statistics") {
        ScoreReport r = summarize({1.0, 2.0, 3.0});
        CHECK(r.n_reps == 3);
        CHECK(r.mean == doctest::Approx(2.0).epsilon(1e-15));
        CHECK(r.sd == doctest::Approx(1.0).epsilon(1e-15));
        ScoreReport empty = summarize({});
        CHECK(empty.n_reps == 0);
        ScoreReport one = summarize({0.5});
        CHECK(one.n_reps == 1);
        CHECK(one.mean == 0.5);
        CHECK(one.sd == 0.0);
    }
}
