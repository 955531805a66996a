#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace matstein {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Raised when an input violates a documented precondition (CLI exit code 1).
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

// Raised when a computation leaves its numerical domain, e.g. a covariance
// update loses positive definiteness (CLI exit code 2).
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ValidationError(msg);
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace matstein
