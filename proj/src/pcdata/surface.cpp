#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

#include "pcd/error.hpp"
#include "pcd/pcdata.hpp"
#include "pcd/random.hpp"

namespace pcd {

PointCloud sample_mesh_surface(const Mesh& mesh, std::size_t n, std::uint64_t seed) {
  require(n >= 1, ErrorDomain::sampling, "sample count must be positive");
  require(!mesh.triangles.empty(), ErrorDomain::sampling, "mesh has no triangles");

  std::vector<double> cumulative(mesh.triangles.size());
  double total = 0.0;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    const Vec3& a = mesh.vertices.at(tri[0]);
    const Vec3& b = mesh.vertices.at(tri[1]);
    const Vec3& c = mesh.vertices.at(tri[2]);
    total += 0.5 * (b - a).cross(c - a).norm();
    cumulative[t] = total;
  }
  require(total > 0.0 && std::isfinite(total), ErrorDomain::sampling,
          "mesh has zero total surface area");

  Rng rng(seed);
  Matrix pts(static_cast<Eigen::Index>(n), 3);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform() * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    if (it == cumulative.end()) --it;
    const auto& tri = mesh.triangles[static_cast<std::size_t>(it - cumulative.begin())];
    const double s = std::sqrt(rng.uniform());
    const double r = rng.uniform();
    const Vec3 p = (1.0 - s) * mesh.vertices[tri[0]] + s * (1.0 - r) * mesh.vertices[tri[1]] +
                   s * r * mesh.vertices[tri[2]];
    pts.row(static_cast<Eigen::Index>(i)) = p.transpose();
  }
  return normalize_unit_sphere(PointCloud(std::move(pts)));
}

}  // namespace pcd
