#pragma once

#include <Eigen/Core>

namespace granlab {

// Row-major so each row is one sample.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

}  // namespace granlab
