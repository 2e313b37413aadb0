#pragma once

#include <Eigen/Core>

namespace pcd {

// Row-major so that row j of an N x C matrix is the feature vector of point j.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;

}  // namespace pcd
