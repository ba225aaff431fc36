#pragma once

#include <Eigen/Dense>

namespace phsis {

/// Matrix exponential by scaling and squaring with the degree-13 Padé
/// approximant (Higham 2005 constants, without the lower-degree shortcuts).
Eigen::MatrixXd expm(const Eigen::MatrixXd& A);

}  // namespace phsis
