#include <algorithm>
#include <numeric>

#include "pcd/error.hpp"
#include "pcd/sadmloss.hpp"

namespace pcd {

std::string_view alignment_name(AlignmentStrategy s) {
  switch (s) {
    case AlignmentStrategy::unsorted: return "unsorted";
    case AlignmentStrategy::axis_z: return "axis_z";
    case AlignmentStrategy::morton: return "morton";
    case AlignmentStrategy::channel_sorted: return "channel_sorted";
  }
  return "unknown";
}

AlignmentStrategy parse_alignment(std::string_view name) {
  if (name == "unsorted") return AlignmentStrategy::unsorted;
  if (name == "axis_z") return AlignmentStrategy::axis_z;
  if (name == "morton") return AlignmentStrategy::morton;
  if (name == "channel_sorted") return AlignmentStrategy::channel_sorted;
  fail(ErrorDomain::config, "unknown alignment strategy '" + std::string(name) + "'");
}

std::vector<std::size_t> point_order(const Matrix& points, AlignmentStrategy strategy) {
  std::vector<std::size_t> order(static_cast<std::size_t>(points.rows()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (strategy == AlignmentStrategy::axis_z) {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return points(static_cast<Eigen::Index>(a), 2) < points(static_cast<Eigen::Index>(b), 2);
    });
  } else if (strategy == AlignmentStrategy::morton) {
    const auto codes = morton_codes(points);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return codes[a] < codes[b]; });
  }
  return order;
}

ad::Value align_features(const ad::Value& features, const Matrix& points,
                         AlignmentStrategy strategy) {
  require(features.rows() == points.rows(), ErrorDomain::contract,
          "align_features: " + std::to_string(features.rows()) + " feature rows for " +
              std::to_string(points.rows()) + " points");
  switch (strategy) {
    case AlignmentStrategy::unsorted: return features;
    case AlignmentStrategy::channel_sorted: return ad::channelwise_sort_desc(features);
    case AlignmentStrategy::axis_z:
    case AlignmentStrategy::morton: {
      const auto order = point_order(points, strategy);
      return ad::row_select(features, order);
    }
  }
  return features;
}

}  // namespace pcd
