#pragma once

#include <Eigen/Core>

namespace pjem {

// All numeric work is double precision; the tolerance structure of the
// test suites depends on it.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

// Offset added inside every logarithm so that p*log(p+eps) is finite at p=0.
inline constexpr double kLogEps = 1e-12;

}  // namespace pjem
