#include "ntsdr/errors.hpp"
#include "ntsdr/tuning.hpp"

#include <doctest.h>

#include "dense_oracle.hpp"

using namespace ntsdr;

namespace {

struct Prepared {
    SampleSet data;
    SvdFeatureSet features;
    GramSet gram;
};

Prepared tuning_problem(Eigen::Index n, unsigned long long seed) {
    Prepared out;
    out.data = oracle::random_samples(n, 2, 2, seed);
    out.features = extract_features(out.data);
    out.gram = build_grams_auto(out.features, out.data.y, 1.0, 1.0, 1.0);
    return out;
}

// Regression GCV recomputed from the definitions, entry by entry.
double gcv_r_dense(const GramSet& g, double eta_u, double eta_v, GcvCenter center) {
    RegularizedGram gu(g.G_U, eta_u), gv(g.G_V, eta_v);
    Matrix target = center == GcvCenter::Gram ? g.G_Y : Matrix(g.Q * g.K_Y);
    double numer = 0.0;
    for (Eigen::Index a = 0; a < g.n; ++a) {
        Matrix diag = feature_coordinate(a, g).asDiagonal();
        for (Eigen::Index b = 0; b < g.n; ++b) {
            Matrix sb = s_coordinates(b, g, gu, gv);
            const double fit = (sb.transpose() * g.G_V * diag * g.G_U).trace();
            const double resid = target(a, b) - fit;
            numer += resid * resid;
        }
    }
    const double nr = static_cast<double>(g.rn());
    const double dof = gu.trace_inv_gram() * gv.trace_inv_gram() - nr * nr;
    return numer / (dof * dof);
}

} // namespace

TEST_SUITE("tuning") {

    TEST_CASE("regression score matches a dense recomputation") {
        Prepared pr = tuning_problem(5, 211);
        for (double eta : {1e-3, 1e-2}) {
            const double got = gcv_r(pr.gram, eta, eta, GcvCenter::CenteredKernel);
            const double want = gcv_r_dense(pr.gram, eta, eta, GcvCenter::CenteredKernel);
            CHECK(got == doctest::Approx(want).epsilon(1e-8));
            const double gotg = gcv_r(pr.gram, eta, eta, GcvCenter::Gram);
            const double wantg = gcv_r_dense(pr.gram, eta, eta, GcvCenter::Gram);
            CHECK(gotg == doctest::Approx(wantg).epsilon(1e-8));
        }
        CHECK_THROWS_AS(gcv_r(pr.gram, -1.0, 1e-3), InvalidArgument);
    }

    TEST_CASE("singleton grids reproduce the explicit fit") {
        Prepared pr = tuning_problem(12, 223);
        TuningGrid grid;
        grid.eta_grid = {3e-3};
        grid.eps_grid = {2e-4};

        TuckerTuning tuned = tune_tucker(pr.features, pr.gram, 1, 1, grid);
        CHECK(tuned.report.reg.eta_u == 3e-3);
        CHECK(tuned.report.reg.eta_v == 3e-3);
        CHECK(tuned.report.reg.eps_u == 2e-4);
        CHECK(tuned.report.reg.eps_v == 2e-4);

        FitOptions opts;
        opts.reg = tuned.report.reg;
        TuckerModel direct = fit_tucker_prepared(pr.features, pr.gram, 1, 1, opts);
        CHECK((tuned.model.Fcoef - direct.Fcoef).cwiseAbs().maxCoeff() == 0.0);
        CHECK((tuned.model.Gcoef - direct.Gcoef).cwiseAbs().maxCoeff() == 0.0);

        CpTuning ctuned = tune_cp(pr.features, pr.gram, 1, grid);
        CpModel cdirect = fit_cp_prepared(pr.features, pr.gram, 1, opts);
        REQUIRE(ctuned.model.d == cdirect.d);
        CHECK((ctuned.model.Fcoef - cdirect.Fcoef).cwiseAbs().maxCoeff() == 0.0);
        CHECK((ctuned.model.Uvals - cdirect.Uvals).cwiseAbs().maxCoeff() == 0.0);
    }

    TEST_CASE("duplicate and shuffled grid points change nothing") {
        Prepared pr = tuning_problem(10, 227);
        TuningGrid g1, g2;
        g1.eta_grid = {1e-4, 1e-2};
        g1.eps_grid = {1e-3, 1e-1};
        g2.eta_grid = {1e-2, 1e-4, 1e-2};
        g2.eps_grid = {1e-1, 1e-3, 1e-3};
        TuckerTuning a = tune_tucker(pr.features, pr.gram, 1, 1, g1);
        TuckerTuning b = tune_tucker(pr.features, pr.gram, 1, 1, g2);
        CHECK(a.report.reg.eta_u == b.report.reg.eta_u);
        CHECK(a.report.reg.eta_v == b.report.reg.eta_v);
        CHECK(a.report.reg.eps_u == b.report.reg.eps_u);
        CHECK(a.report.reg.eps_v == b.report.reg.eps_v);
        CHECK(a.report.eta_score == b.report.eta_score);
        CHECK(a.report.eps_score == b.report.eps_score);
    }

    TEST_CASE("invalid grids are rejected") {
        Prepared pr = tuning_problem(8, 229);
        TuningGrid bad;
        bad.eta_grid = {};
        CHECK_THROWS_AS(tune_tucker(pr.features, pr.gram, 1, 1, bad), InvalidArgument);
        bad.eta_grid = {-1e-3};
        CHECK_THROWS_AS(tune_tucker(pr.features, pr.gram, 1, 1, bad), InvalidArgument);
    }

    TEST_CASE("structured scores are finite and nonnegative") {
        Prepared pr = tuning_problem(10, 233);
        FitOptions opts;
        TuckerModel tm = fit_tucker_prepared(pr.features, pr.gram, 1, 1, opts);
        const double st = gcv_tucker(tm, pr.gram);
        CHECK(std::isfinite(st));
        CHECK(st >= 0.0);
        CpModel cm = fit_cp_prepared(pr.features, pr.gram, 1, opts);
        const double sc = gcv_cp(cm, pr.gram);
        CHECK(std::isfinite(sc));
        CHECK(sc >= 0.0);
    }
}
