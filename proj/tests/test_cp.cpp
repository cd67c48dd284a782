#include "ntsdr/cp.hpp"
#include "ntsdr/errors.hpp"

#include <doctest.h>

#include "dense_oracle.hpp"

using namespace ntsdr;

TEST_SUITE("cp") {

    TEST_CASE("pair values are non-increasing and bases Gram-orthonormal") {
        SampleSet data = oracle::random_samples(18, 3, 3, 101);
        CpModel m = fit_cp(data, 3, {});
        REQUIRE(m.d >= 1);
        for (Eigen::Index k = 1; k < m.d; ++k)
            CHECK(m.pair_values[static_cast<std::size_t>(k)] <=
                  m.pair_values[static_cast<std::size_t>(k - 1)] + 1e-10);

        SvdFeatureSet f = extract_features(data);
        GramSet gram = build_grams_auto(f, data.y, 1.0, 1.0, 1.0);
        Matrix fg = m.Fcoef * gram.G_U * m.Fcoef.transpose();
        Matrix gg = m.Gcoef * gram.G_V * m.Gcoef.transpose();
        CHECK((fg - Matrix::Identity(m.d, m.d)).cwiseAbs().maxCoeff() < 1e-6);
        CHECK((gg - Matrix::Identity(m.d, m.d)).cwiseAbs().maxCoeff() < 1e-6);
        CHECK(m.Uvals.rows() == 18);
        CHECK(m.Uvals.cols() == m.d);
    }

    TEST_CASE("rejects impossible pair counts") {
        SampleSet data = oracle::random_samples(6, 2, 2, 103);
        CHECK_THROWS_AS(fit_cp(data, 0, {}), InvalidArgument);
        CHECK_THROWS_AS(fit_cp(data, 6, {}), InvalidArgument);  // d must stay below n
        CHECK_THROWS_AS(fit_cp(data, 13, {}), InvalidArgument); // d > rn
    }

    TEST_CASE("euclidean deflation variant stays usable") {
        SampleSet data = oracle::random_samples(14, 2, 2, 107);
        FitOptions opts;
        opts.euclidean_deflation = true;
        CpModel m = fit_cp(data, 2, opts);
        REQUIRE(m.d >= 1);
        for (double v : m.pair_values) CHECK(v > 0.0);
    }

    TEST_CASE("evaluation matches the training grid") {
        SampleSet data = oracle::random_samples(12, 3, 2, 109);
        CpModel m = fit_cp(data, 2, {});
        SvdFeatureSet f = extract_features(data);
        GramSet gram = build_grams_auto(f, data.y, 1.0, 1.0, 1.0);

        Matrix ku = gram.K_U;
        block_center_rows(ku, gram.r, gram.n);
        Matrix kv = gram.K_V;
        block_center_rows(kv, gram.r, gram.n);
        Matrix fvals = m.Fcoef * ku;
        Matrix gvals = m.Gcoef * kv;

        Matrix got = evaluate_cp(m, data.X);
        REQUIRE(got.rows() == 12);
        REQUIRE(got.cols() == m.d);
        for (Eigen::Index b = 0; b < gram.n; ++b)
            for (Eigen::Index k = 0; k < m.d; ++k) {
                double acc = 0.0;
                for (Eigen::Index i = 0; i < gram.r; ++i)
                    acc += fvals(k, i * gram.n + b) * gvals(k, i * gram.n + b);
                CHECK(got(b, k) == doctest::Approx(acc).epsilon(1e-8));
            }

        Matrix s = structure_matrix_cp(m, data.X);
        CHECK(s.rows() == 12 * gram.r);
        CHECK(s.cols() == m.d);
        CHECK(s.allFinite());
    }

    TEST_CASE("repeated fits agree bitwise") {
        SampleSet data = oracle::random_samples(10, 2, 2, 113);
        CpModel a = fit_cp(data, 2, {});
        CpModel b = fit_cp(data, 2, {});
        REQUIRE(a.d == b.d);
        CHECK((a.Fcoef - b.Fcoef).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a.Gcoef - b.Gcoef).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a.Uvals - b.Uvals).cwiseAbs().maxCoeff() == 0.0);
    }
}
