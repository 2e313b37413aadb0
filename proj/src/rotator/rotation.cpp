#include <cmath>

#include "pcd/error.hpp"
#include "pcd/rotator.hpp"

namespace pcd {

Mat3 rotation_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 1, 0, 0,
       0, c, -s,
       0, s, c;
  return r;
}

Mat3 rotation_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, 0, s,
       0, 1, 0,
       -s, 0, c;
  return r;
}

Mat3 rotation_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << c, -s, 0,
       s, c, 0,
       0, 0, 1;
  return r;
}

Mat3 rotation_matrix(const RotationParams& theta) {
  return rotation_z(theta.z) * rotation_y(theta.y) * rotation_x(theta.x);
}

namespace {

// d/da of the single-axis matrices.
Mat3 d_rotation_x(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << 0, 0, 0,
       0, -s, -c,
       0, c, -s;
  return r;
}

Mat3 d_rotation_y(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << -s, 0, c,
       0, 0, 0,
       -c, 0, -s;
  return r;
}

Mat3 d_rotation_z(double a) {
  const double c = std::cos(a), s = std::sin(a);
  Mat3 r;
  r << -s, -c, 0,
       c, -s, 0,
       0, 0, 0;
  return r;
}

}  // namespace

std::array<Mat3, 3> d_rotation_d_theta(const RotationParams& theta) {
  const Mat3 rx = rotation_x(theta.x), ry = rotation_y(theta.y), rz = rotation_z(theta.z);
  return {rz * ry * d_rotation_x(theta.x), rz * d_rotation_y(theta.y) * rx,
          d_rotation_z(theta.z) * ry * rx};
}

PointCloud apply_rotation(const RotationParams& theta, const PointCloud& cloud) {
  return PointCloud(cloud.points * rotation_matrix(theta).transpose());
}

namespace ad {

Value rotate_points(const Value& theta, const Value& points) {
  require(theta.rows() == 1 && theta.cols() == 3, ErrorDomain::contract,
          "rotate_points: angles must be 1x3");
  require(points.cols() == 3, ErrorDomain::contract, "rotate_points: points must be Nx3");
  const RotationParams angles{theta.data()(0, 0), theta.data()(0, 1), theta.data()(0, 2)};
  const Mat3 r = rotation_matrix(angles);
  const Value inputs[] = {theta, points};
  return points.tape()->record(
      points.data() * r.transpose(), inputs, [theta, points, angles, r](Tape& t, const Matrix& g) {
        // Rows are y = p R^T, so dL/dp = g R and dL/dtheta_i = <g, p dR_i^T>.
        if (points.requires_grad()) t.accumulate(points, g * r);
        if (theta.requires_grad()) {
          const auto dr = d_rotation_d_theta(angles);
          const Eigen::Matrix3d gp = g.transpose() * points.data();  // sum_j g_j p_j^T
          Matrix dtheta(1, 3);
          for (int i = 0; i < 3; ++i) dtheta(0, i) = (gp.array() * dr[static_cast<std::size_t>(i)].array()).sum();
          t.accumulate(theta, dtheta);
        }
      });
}

}  // namespace ad
}  // namespace pcd
