#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unistd.h>

#include "pcd/pcdata.hpp"
#include "pcd/random.hpp"

namespace testing {

inline pcd::Matrix random_matrix(pcd::Rng& rng, Eigen::Index rows, Eigen::Index cols,
                                 double lo = -1.0, double hi = 1.0) {
  pcd::Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(lo, hi);
  return m;
}

inline pcd::PointCloud random_cloud(pcd::Rng& rng, std::size_t n) {
  return pcd::normalize_unit_sphere(pcd::PointCloud(random_matrix(rng, static_cast<Eigen::Index>(n), 3)));
}

inline pcd::Matrix shuffle_rows(const pcd::Matrix& m, pcd::Rng& rng) {
  std::vector<std::size_t> order(static_cast<std::size_t>(m.rows()));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(std::span<std::size_t>(order));
  pcd::Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < order.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(order[i]));
  return out;
}

// Small balanced dataset of random clouds, `per_class` items per class.
inline pcd::LabeledDataset random_dataset(std::uint64_t seed, int classes, std::size_t per_class,
                                          std::size_t n) {
  pcd::Rng rng(seed);
  pcd::LabeledDataset ds;
  for (int c = 0; c < classes; ++c) ds.class_names.push_back("c" + std::to_string(c));
  for (int c = 0; c < classes; ++c)
    for (std::size_t i = 0; i < per_class; ++i) ds.push_back(random_cloud(rng, n), c);
  return ds;
}

// Fresh directory under the system temp dir, removed on destruction.
struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    pcd::Rng rng(std::hash<std::string>{}(tag) ^ static_cast<std::uint64_t>(::getpid()));
    path = std::filesystem::temp_directory_path() / ("pcd_" + tag + "_" + std::to_string(rng.next() % 1000000));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace testing
