#ifndef NTSDR_METRICS_HPP
#define NTSDR_METRICS_HPP

#include "ntsdr/types.hpp"

#include <vector>

namespace ntsdr {

// Mean/SD summary of a metric across simulation replications.
struct ScoreReport {
    double mean = 0.0;
    double sd = 0.0;
    int n_reps = 0;
    std::vector<double> per_rep;
};

ScoreReport summarize(const std::vector<double>& per_rep);

// Biased-sample (V-statistic) distance correlation between two row-wise
// samples with Euclidean row metric. Returns 0 when either argument is
// degenerate (all rows equal).
double distance_correlation(const Matrix& a, const Matrix& b);
double distance_correlation(const Vector& a, const Vector& b);

// Structure-recovery score: distance correlation between stacked
// per-(sample, factor) interaction feature rows.
double structure_dcor(const Matrix& s_true, const Matrix& s_est);

// Plain Pearson correlation; throws DegenerateData when a variance vanishes.
double pearson(const Vector& a, const Vector& b);

} // namespace ntsdr

#endif
