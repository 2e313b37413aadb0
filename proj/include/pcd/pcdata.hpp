#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pcd/types.hpp"

namespace pcd {

// Fixed-length set of 3D points, one point per row (N x 3). Coordinates are
// held in double precision; files store them as float32.
struct PointCloud {
  Matrix points;

  PointCloud() = default;
  explicit PointCloud(Matrix pts) : points(std::move(pts)) {}

  std::size_t size() const { return static_cast<std::size_t>(points.rows()); }
};

struct LabeledDataset {
  std::vector<PointCloud> clouds;
  std::vector<int> labels;
  std::vector<std::string> class_names;

  std::size_t size() const { return clouds.size(); }
  int num_classes() const { return static_cast<int>(class_names.size()); }
  std::size_t points_per_cloud() const { return clouds.empty() ? 0 : clouds.front().size(); }

  void push_back(PointCloud cloud, int label);

  // Indices of all items carrying `label`, ascending.
  std::vector<std::size_t> indices_of(int label) const;

  // Throws ErrorDomain::data when labels are out of range, point counts
  // differ, or a coordinate is non-finite.
  void validate() const;
};

// Center at the centroid, then scale so the farthest point has norm 1.
// A cloud whose points all coincide maps to all zeros.
PointCloud normalize_unit_sphere(const PointCloud& cloud);

struct Mesh {
  std::vector<Vec3> vertices;
  // Triangles after fan triangulation of polygonal faces.
  std::vector<std::array<std::uint32_t, 3>> triangles;
};

Mesh parse_off(std::string_view text);
Mesh read_off(const std::filesystem::path& path);
// Writes the triangles as 3-gons with "%.17g" coordinates.
std::string serialize_off(const Mesh& mesh);

// Area-weighted triangle choice, uniform barycentric point, then
// normalize_unit_sphere.
PointCloud sample_mesh_surface(const Mesh& mesh, std::size_t n, std::uint64_t seed);

enum class ShapeKind { sphere, cube, cone, cylinder, torus, plane };
enum class RotationRegime { aligned, mixed, rotated };

std::string_view shape_name(ShapeKind kind);
ShapeKind parse_shape(std::string_view name);
std::string_view regime_name(RotationRegime regime);
RotationRegime parse_regime(std::string_view name);

struct ToySpec {
  std::vector<ShapeKind> shapes{ShapeKind::sphere, ShapeKind::cube, ShapeKind::cone,
                                ShapeKind::torus};
  std::size_t train_per_class = 200;
  std::size_t test_per_class = 50;
  RotationRegime regime = RotationRegime::aligned;
  double jitter = 0.01;
  std::size_t points = 256;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ToySplit {
  LabeledDataset train;
  LabeledDataset test;
  // Pose applied to each object before normalization; identity for
  // unrotated objects. Parallel to train.clouds / test.clouds.
  std::vector<Mat3> train_poses;
  std::vector<Mat3> test_poses;
};

// Points on the canonical (unposed) surface of `kind`, before jitter and
// normalization. Exposed for tests.
Matrix sample_shape_surface(ShapeKind kind, std::size_t n, std::uint64_t seed);

ToySplit gen_toy(const ToySpec& spec);

// PCDS binary format, little-endian:
//   "PCDS" | u32 version=1 | u32 num_classes | per class: u16 len + UTF-8 name
//   | u32 num_items | u32 points_per_cloud | per item: u32 label + N*3 float32
inline constexpr std::uint32_t kPcdsVersion = 1;

std::string encode_pcds(const LabeledDataset& ds);
LabeledDataset decode_pcds(std::string_view bytes);
void write_dataset(const LabeledDataset& ds, const std::filesystem::path& path);
LabeledDataset read_dataset(const std::filesystem::path& path);

enum class Axis { x = 0, y = 1, z = 2 };
Axis parse_axis(std::string_view name);

std::string encode_ply(const PointCloud& cloud, Axis color_axis);
void export_ply(const PointCloud& cloud, const std::filesystem::path& path, Axis color_axis);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace pcd
