#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace rcf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Row-major dense storage; sparse x dense products over many columns run
/// several times faster with a row-major right-hand side.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Index = Eigen::Index;

/// Raised when a computation leaves the finite range (blow-up, singular solve).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised for malformed configuration files or CLI input.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

inline bool all_finite(const Eigen::Ref<const Matrix>& m) {
    return m.allFinite();
}

} // namespace rcf
