#include "acr/rotation.hpp"

namespace acr {

// Explicit instantiation for the common case.
template Mat3 rot6d_to_matrix<double>(const Eigen::Matrix<double, 6, 1>&);

}  // namespace acr
