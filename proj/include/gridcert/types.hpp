#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace gridcert {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Error raised while ingesting or validating a case document.
/// `field` carries the path of the offending entry, e.g. "buses[2].M".
class CaseError : public std::runtime_error {
public:
    CaseError(std::string field, const std::string& what)
        : std::runtime_error(field.empty() ? what : field + ": " + what),
          field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Numerical failure in a solver (Newton divergence, singular system, ...).
class SolverError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace gridcert
