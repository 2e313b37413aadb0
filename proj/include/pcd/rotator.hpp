#pragma once

#include <array>

#include "pcd/diffgraph.hpp"
#include "pcd/pcdata.hpp"
#include "pcd/types.hpp"

namespace pcd {

// Learnable per-object Euler angles in radians. No range restriction.
struct RotationParams {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  double operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }
  double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
  bool operator==(const RotationParams&) const = default;
};

Mat3 rotation_x(double a);
Mat3 rotation_y(double a);
Mat3 rotation_z(double a);

// R = Rz(z) * Ry(y) * Rx(x), applied to column vectors.
Mat3 rotation_matrix(const RotationParams& theta);

// dR/dx, dR/dy, dR/dz by the product rule on the three factors.
std::array<Mat3, 3> d_rotation_d_theta(const RotationParams& theta);

// p -> R p for every point.
PointCloud apply_rotation(const RotationParams& theta, const PointCloud& cloud);

namespace ad {

// Differentiable rotation of an N x 3 point block by a 1 x 3 angle block.
Value rotate_points(const Value& theta, const Value& points);

}  // namespace ad
}  // namespace pcd
