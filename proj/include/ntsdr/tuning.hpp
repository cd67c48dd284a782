#ifndef NTSDR_TUNING_HPP
#define NTSDR_TUNING_HPP

#include "ntsdr/cp.hpp"
#include "ntsdr/tucker.hpp"

#include <vector>

namespace ntsdr {

// Target matrix C in the regression score: the singly-centered kernel
// (Q K_Y, the definitional reading of the centered kernel evaluated pairwise)
// or the doubly-centered Gram G_Y. Both are exact matrix identities for the
// respective centering conventions.
enum class GcvCenter { CenteredKernel, Gram };

// Score for the unstructured regression stage: picks (eta_U, eta_V).
// numerator sum_{a,b} (C_ab - <s(Y_b), F(X_a)>)^2,
// denominator [tr(G_U(eta)^-1 G_U) tr(G_V(eta)^-1 G_V) - (nr)^2]^2.
double gcv_r(const GramSet& gram, double eta_u, double eta_v,
             GcvCenter center = GcvCenter::CenteredKernel);
double gcv_r(const GramSet& gram, const RegularizedGram& gu_eta, const RegularizedGram& gv_eta,
             GcvCenter center = GcvCenter::CenteredKernel);

// Scores for the structured stage: eta-consistent residual E_n|s(Y) - fit|^2
// over [r^2 (n-1)^2 - tr(G_U(eps)^-1 G_U) tr(G_V(eps)^-1 G_V)]^2. The model's
// stored regularizers supply both eta (numerator) and eps (denominator).
double gcv_tucker(const TuckerModel& model, const GramSet& gram);
double gcv_tucker(const TuckerModel& model, const GramSet& gram, const RegularizedGram& gu_eta,
                  const RegularizedGram& gv_eta);
double gcv_cp(const CpModel& model, const GramSet& gram);
double gcv_cp(const CpModel& model, const GramSet& gram, const RegularizedGram& gu_eta,
              const RegularizedGram& gv_eta);

struct TuningGrid {
    std::vector<double> eta_grid{1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
    std::vector<double> eps_grid{1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
};

struct TuningReport {
    RegularizationParams reg;
    double eta_score = 0.0, eps_score = 0.0;
    int eta_evaluations = 0, eps_evaluations = 0;
};

// Two-stage deterministic grid search: (eta_U, eta_V) by gcv_r on the
// diagonal of the (sorted, deduplicated) grid plus a 3x3 neighbor
// refinement, then (eps_U, eps_V) by the method score with a fresh fit per
// point. Ties prefer larger regularization; every score infinite raises
// TuningFailure.
struct TuckerTuning {
    TuningReport report;
    TuckerModel model;
};
TuckerTuning tune_tucker(const SvdFeatureSet& features, const GramSet& gram, Eigen::Index s,
                         Eigen::Index t, const TuningGrid& grid, const FitOptions& base = {},
                         GcvCenter center = GcvCenter::CenteredKernel);

struct CpTuning {
    TuningReport report;
    CpModel model;
};
CpTuning tune_cp(const SvdFeatureSet& features, const GramSet& gram, Eigen::Index d,
                 const TuningGrid& grid, const FitOptions& base = {},
                 GcvCenter center = GcvCenter::CenteredKernel);

} // namespace ntsdr

#endif
