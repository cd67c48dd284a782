#ifndef NTSDR_ERRORS_HPP
#define NTSDR_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ntsdr {

// Bad shapes, out-of-range options, malformed configs.
struct InvalidArgument : std::invalid_argument {
    explicit InvalidArgument(const std::string& msg) : std::invalid_argument(msg) {}
};

// Inputs that are structurally fine but carry no usable signal
// (identical points, zero kernel variance, all-zero operators).
struct DegenerateData : std::runtime_error {
    explicit DegenerateData(const std::string& msg) : std::runtime_error(msg) {}
};

// A linear system that stayed singular after regularization.
struct SingularMatrix : std::runtime_error {
    explicit SingularMatrix(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or failed factorizations mid-algorithm.
struct NumericalFailure : std::runtime_error {
    explicit NumericalFailure(const std::string& msg) : std::runtime_error(msg) {}
};

// Model selection could not produce a usable candidate.
struct TuningFailure : std::runtime_error {
    explicit TuningFailure(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem trouble: unreadable, unwritable, or missing files.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace ntsdr

#endif
