#include <algorithm>
#include <cmath>

#include "pcd/sadmloss.hpp"

namespace pcd {

std::uint32_t spread_bits_10(std::uint32_t v) {
  v &= 0x3ffu;
  v = (v | (v << 16)) & 0x030000ffu;
  v = (v | (v << 8)) & 0x0300f00fu;
  v = (v | (v << 4)) & 0x030c30c3u;
  v = (v | (v << 2)) & 0x09249249u;
  return v;
}

std::uint32_t morton_encode(std::uint32_t x, std::uint32_t y, std::uint32_t z) {
  return spread_bits_10(x) | (spread_bits_10(y) << 1) | (spread_bits_10(z) << 2);
}

std::vector<std::uint32_t> morton_codes(const Matrix& points) {
  const Eigen::RowVector3d lo = points.colwise().minCoeff();
  const Eigen::RowVector3d hi = points.colwise().maxCoeff();
  std::vector<std::uint32_t> codes(static_cast<std::size_t>(points.rows()));
  for (Eigen::Index r = 0; r < points.rows(); ++r) {
    std::uint32_t q[3];
    for (int k = 0; k < 3; ++k) {
      const double extent = hi(k) - lo(k);
      if (!(extent > 0.0)) {
        q[k] = 0;
        continue;
      }
      const double t = std::floor((points(r, k) - lo(k)) / extent * 1024.0);
      q[k] = static_cast<std::uint32_t>(std::clamp(t, 0.0, 1023.0));
    }
    codes[static_cast<std::size_t>(r)] = morton_encode(q[0], q[1], q[2]);
  }
  return codes;
}

}  // namespace pcd
