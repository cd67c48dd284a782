#ifndef NTSDR_GSIR_HPP
#define NTSDR_GSIR_HPP

#include "ntsdr/kernel.hpp"
#include "ntsdr/types.hpp"

#include <vector>

namespace ntsdr {

// Generalized sliced inverse regression on vectorized predictors; the
// comparison baseline. Predictor functions are kernel expansions over the
// centered kappa_X basis, G_X-orthogonal across components and scaled to
// unit in-sample variance.
struct GsirModel {
    Eigen::Index d = 0;
    Eigen::Index p = 0, q = 0;  // training matrix shape (vectorized column-major)
    Matrix train_points;        // (p*q) x n
    Matrix coord;               // d x n rows c_k over the centered basis
    Matrix qcoord;              // d x n rows Q c_k (evaluation form)
    Vector offset;              // training mean of each raw score
    Matrix values;              // n x d in-sample predictor values
    Vector eigenvalues;         // top-d, descending
    KernelSpec spec_x;
    double eps = 0.0;
    double rho_x = 1.0, rho_y = 1.0;
};

GsirModel fit_gsir(const SampleSet& data, Eigen::Index d, double rho_x = 1.0, double rho_y = 1.0,
                   double eps = 1e-3);

// n_new x d matrix of predictor values with training-mean centering.
Matrix evaluate_gsir(const GsirModel& model, const std::vector<Matrix>& newX);

} // namespace ntsdr

#endif
