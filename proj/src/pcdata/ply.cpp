#include <cmath>
#include <cstdio>

#include "pcd/error.hpp"
#include "pcd/pcdata.hpp"

namespace pcd {

Axis parse_axis(std::string_view name) {
  if (name == "x") return Axis::x;
  if (name == "y") return Axis::y;
  if (name == "z") return Axis::z;
  fail(ErrorDomain::config, "color axis must be x, y or z, got '" + std::string(name) + "'");
}

std::string encode_ply(const PointCloud& cloud, Axis color_axis) {
  require(cloud.size() >= 1 && cloud.points.allFinite(), ErrorDomain::data,
          "PLY export needs a non-empty finite cloud");
  const auto col = cloud.points.col(static_cast<Eigen::Index>(color_axis));
  const double lo = col.minCoeff();
  const double hi = col.maxCoeff();

  std::string out = "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cloud.size()) +
                    "\nproperty float x\nproperty float y\nproperty float z\n"
                    "property uchar red\nproperty uchar green\nproperty uchar blue\nend_header\n";
  char buf[160];
  for (Eigen::Index r = 0; r < cloud.points.rows(); ++r) {
    // Linear map of the axis range onto [0, 255]; a flat range is mid-gray.
    const double v = cloud.points(r, static_cast<Eigen::Index>(color_axis));
    const int level = hi > lo ? static_cast<int>(std::lround(255.0 * (v - lo) / (hi - lo))) : 128;
    std::snprintf(buf, sizeof buf, "%.9g %.9g %.9g %d %d %d\n", cloud.points(r, 0),
                  cloud.points(r, 1), cloud.points(r, 2), level, level, level);
    out += buf;
  }
  return out;
}

void export_ply(const PointCloud& cloud, const std::filesystem::path& path, Axis color_axis) {
  write_file(path, encode_ply(cloud, color_axis));
}

}  // namespace pcd
