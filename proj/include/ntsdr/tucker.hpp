#ifndef NTSDR_TUCKER_HPP
#define NTSDR_TUCKER_HPP

#include "ntsdr/operators.hpp"

#include <vector>

namespace ntsdr {

// Shared knobs for the iterative fits.
struct FitOptions {
    RegularizationParams reg;
    double rho_u = 1.0, rho_v = 1.0, rho_y = 1.0;
    int max_iter = 100;          // outer sweeps (Tucker) / pairs cap (CP reuses reg)
    double tol = 1e-6;           // relative objective change
    int max_pair_iter = 200;     // CP inner alternation cap
    double pair_tol = 1e-8;      // CP inner relative change
    unsigned long long init_seed = 1;
    bool euclidean_deflation = false; // CP: orthogonality of coefficients instead of functions
};

// Grid-form estimator: predictors <f_k g_l, F(x)> for k <= s, l <= t.
// Fcoef/Gcoef rows hold basis coordinates; Hvals are the per-sample H(Y_a).
// After fitting, Fcoef rows are G_U-orthonormal and Gcoef rows G_V-orthonormal,
// with Hvals counter-transformed so the fitted function is unchanged.
struct TuckerModel {
    Eigen::Index s = 0, t = 0;
    Matrix Fcoef; // s x rn
    Matrix Gcoef; // t x rn
    std::vector<Matrix> Hvals;
    std::vector<double> objective_trace;
    int iterations = 0;
    bool converged = false;
    bool orthonormalized = false;
    RegularizationParams reg;
    double rho_u = 1.0, rho_v = 1.0, rho_y = 1.0;
    // training payload needed for out-of-sample evaluation
    SvdFeatureSet features;
    KernelSpec spec_u, spec_v;
};

// One block update each, holding the other blocks fixed. Every update is the
// exact coordinate minimizer (pseudo-inverse solves of the small normal
// systems) of one shared least-squares objective: the raw RKHS distance from
// the G(eps)^{-1}-smoothed targets, so the sweep trace is monotone by
// construction. Hvals all zero yields the zero solution; a zero coefficient
// block in update_h is an error because its normal system carries no
// information.
Matrix update_f(const Matrix& Gcoef, const std::vector<Matrix>& Hvals, const GramSet& gram,
                const RegularizedGram& gu_eps, const RegularizedGram& gv_eps);
Matrix update_g(const Matrix& Fcoef, const std::vector<Matrix>& Hvals, const GramSet& gram,
                const RegularizedGram& gu_eps, const RegularizedGram& gv_eps);
std::vector<Matrix> update_h(const Matrix& Fcoef, const Matrix& Gcoef, const GramSet& gram,
                             const RegularizedGram& gu_eps, const RegularizedGram& gv_eps);

// Least-squares objective E_n |s(Y) - sum_{kl} f_k g_l h_kl(Y)|^2 in the raw
// tensor-product RKHS metric, where the s(Y) coordinates carry the
// regularized inverses of the passed Grams. The fit minimizes it with the
// eps-Grams; the GCV criterion integrates it with the eta-Grams.
double tucker_objective(const Matrix& Fcoef, const Matrix& Gcoef, const std::vector<Matrix>& Hvals,
                        const GramSet& gram, const RegularizedGram& gu,
                        const RegularizedGram& gv);

TuckerModel fit_tucker(const SampleSet& data, Eigen::Index s, Eigen::Index t,
                       const FitOptions& opts = {});

// Same, reusing prepared features/grams (the tuning loop refits many times).
TuckerModel fit_tucker_prepared(const SvdFeatureSet& features, const GramSet& gram,
                                Eigen::Index s, Eigen::Index t, const FitOptions& opts);

// Sufficient predictors of new samples: entry (k, l) of sample x is
// sum_i f_k(U_i(x)) g_l(V_i(x)) with the fitted RKHS functions.
std::vector<Matrix> evaluate_tucker(const TuckerModel& model, const std::vector<Matrix>& newX);

// Per-factor interaction features, one row per (sample, factor) pair in
// sample-major order; column (k, l) with l fast. Feeds the structure metric.
Matrix structure_matrix_tucker(const TuckerModel& model, const std::vector<Matrix>& newX);

} // namespace ntsdr

#endif
