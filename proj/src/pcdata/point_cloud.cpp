#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>

#include "pcd/error.hpp"
#include "pcd/pcdata.hpp"

namespace pcd {

void LabeledDataset::push_back(PointCloud cloud, int label) {
  clouds.push_back(std::move(cloud));
  labels.push_back(label);
}

std::vector<std::size_t> LabeledDataset::indices_of(int label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) out.push_back(i);
  return out;
}

void LabeledDataset::validate() const {
  require(clouds.size() == labels.size(), ErrorDomain::data,
          "cloud count and label count differ");
  const std::size_t n = points_per_cloud();
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < num_classes(), ErrorDomain::data,
            "item " + std::to_string(i) + " has label " + std::to_string(labels[i]) +
                " outside [0, " + std::to_string(num_classes()) + ")");
    require(clouds[i].size() == n && n >= 1, ErrorDomain::data,
            "item " + std::to_string(i) + " has " + std::to_string(clouds[i].size()) +
                " points, expected " + std::to_string(n));
    require(clouds[i].points.cols() == 3, ErrorDomain::data, "points must be 3D");
    require(clouds[i].points.allFinite(), ErrorDomain::data,
            "item " + std::to_string(i) + " has non-finite coordinates");
  }
}

PointCloud normalize_unit_sphere(const PointCloud& cloud) {
  require(cloud.size() >= 1 && cloud.points.cols() == 3, ErrorDomain::data,
          "normalize_unit_sphere needs at least one 3D point");
  require(cloud.points.allFinite(), ErrorDomain::data, "cloud has non-finite coordinates");

  const Eigen::RowVector3d centroid = cloud.points.colwise().mean();
  Matrix centered = cloud.points.rowwise() - centroid;
  const double max_norm = centered.rowwise().norm().maxCoeff();
  if (max_norm == 0.0) return PointCloud(Matrix::Zero(centered.rows(), 3));
  centered /= max_norm;
  return PointCloud(std::move(centered));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorDomain::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorDomain::io, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorDomain::io, "short write to " + path.string());
}

}  // namespace pcd
