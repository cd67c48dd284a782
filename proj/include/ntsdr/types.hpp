#ifndef NTSDR_TYPES_HPP
#define NTSDR_TYPES_HPP

#include <Eigen/Dense>
#include <vector>

namespace ntsdr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Composite index over (factor i, sample a): the sample index runs fast, so
// the pair (i, a) lands at slot i*n + a of any length r*n vector or axis.
inline Eigen::Index flat_index(Eigen::Index i, Eigen::Index a, Eigen::Index n) {
    return i * n + a;
}

// A set of matrix-valued predictors with scalar responses.
struct SampleSet {
    std::vector<Matrix> X;
    std::vector<double> y;

    Eigen::Index n() const { return static_cast<Eigen::Index>(X.size()); }
    Eigen::Index p() const { return X.empty() ? 0 : X.front().rows(); }
    Eigen::Index q() const { return X.empty() ? 0 : X.front().cols(); }
};

// Throws InvalidArgument unless all matrices share one p x q shape, y matches
// X in length, n >= 2, and every entry is finite.
void validate(const SampleSet& data);

} // namespace ntsdr

#endif
