#include <cmath>
#include <numbers>

#include "pcd/error.hpp"
#include "pcd/pcdata.hpp"
#include "pcd/random.hpp"
#include "pcd/rotator.hpp"

namespace pcd {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct ShapeEntry {
  ShapeKind kind;
  std::string_view name;
};
constexpr std::array<ShapeEntry, 6> kShapes{{{ShapeKind::sphere, "sphere"},
                                             {ShapeKind::cube, "cube"},
                                             {ShapeKind::cone, "cone"},
                                             {ShapeKind::cylinder, "cylinder"},
                                             {ShapeKind::torus, "torus"},
                                             {ShapeKind::plane, "plane"}}};

Vec3 disk_point(Rng& rng, double radius, double y) {
  const double r = radius * std::sqrt(rng.uniform());
  const double a = kTwoPi * rng.uniform();
  return {r * std::cos(a), y, r * std::sin(a)};
}

// All shapes are centered at the origin with y as the vertical axis.
Vec3 surface_point(ShapeKind kind, Rng& rng) {
  switch (kind) {
    case ShapeKind::sphere: {
      Vec3 v;
      do {
        v = {rng.normal(), rng.normal(), rng.normal()};
      } while (v.norm() < 1e-12);
      return v.normalized();
    }
    case ShapeKind::cube: {
      const auto face = rng.below(6);
      const double u = rng.uniform(-1.0, 1.0);
      const double w = rng.uniform(-1.0, 1.0);
      const double s = (face % 2 == 0) ? 1.0 : -1.0;
      switch (face / 2) {
        case 0: return {s, u, w};
        case 1: return {u, s, w};
        default: return {u, w, s};
      }
    }
    case ShapeKind::cone: {
      // Apex at y = 1, base radius 1 at y = -1.
      const double lateral = std::numbers::pi * std::sqrt(5.0);
      const double base = std::numbers::pi;
      if (rng.uniform() * (lateral + base) < base) return disk_point(rng, 1.0, -1.0);
      const double t = std::sqrt(rng.uniform());
      const double a = kTwoPi * rng.uniform();
      return {t * std::cos(a), 1.0 - 2.0 * t, t * std::sin(a)};
    }
    case ShapeKind::cylinder: {
      constexpr double r = 0.6;
      const double lateral = kTwoPi * r * 2.0;
      const double cap = std::numbers::pi * r * r;
      const double pick = rng.uniform() * (lateral + 2.0 * cap);
      if (pick < cap) return disk_point(rng, r, -1.0);
      if (pick < 2.0 * cap) return disk_point(rng, r, 1.0);
      const double a = kTwoPi * rng.uniform();
      return {r * std::cos(a), rng.uniform(-1.0, 1.0), r * std::sin(a)};
    }
    case ShapeKind::torus: {
      constexpr double major = 0.7;
      constexpr double minor = 0.3;
      double u = 0.0;
      double v = 0.0;
      do {
        u = kTwoPi * rng.uniform();
        v = kTwoPi * rng.uniform();
      } while (rng.uniform() * (major + minor) > major + minor * std::cos(v));
      const double ring = major + minor * std::cos(v);
      return {ring * std::cos(u), minor * std::sin(v), ring * std::sin(u)};
    }
    case ShapeKind::plane:
      return {rng.uniform(-1.0, 1.0), 0.0, rng.uniform(-1.0, 1.0)};
  }
  return Vec3::Zero();
}

void generate_split(const ToySpec& spec, std::size_t per_class, std::uint64_t index_base,
                    LabeledDataset& out, std::vector<Mat3>& poses) {
  const std::size_t num_classes = spec.shapes.size();
  const std::size_t rotated_classes = spec.regime == RotationRegime::rotated ? num_classes
                                      : spec.regime == RotationRegime::mixed  ? (num_classes + 1) / 2
                                                                              : 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    for (std::size_t i = 0; i < per_class; ++i) {
      const std::uint64_t object = index_base + c * per_class + i;
      Rng point_rng(derive_seed(spec.seed, Stream::points, object));
      Matrix pts = sample_shape_surface(spec.shapes[c], spec.points, point_rng.next());
      if (spec.jitter > 0.0)
        for (Eigen::Index r = 0; r < pts.rows(); ++r)
          for (Eigen::Index k = 0; k < 3; ++k) pts(r, k) += spec.jitter * point_rng.normal();

      Mat3 pose = Mat3::Identity();
      if (c < rotated_classes) {
        Rng pose_rng(derive_seed(spec.seed, Stream::pose, object));
        RotationParams theta;
        theta.x = kTwoPi * pose_rng.uniform();
        theta.y = kTwoPi * pose_rng.uniform();
        theta.z = kTwoPi * pose_rng.uniform();
        pose = rotation_matrix(theta);
        pts = pts * pose.transpose();
      }
      out.push_back(normalize_unit_sphere(PointCloud(std::move(pts))), static_cast<int>(c));
      poses.push_back(pose);
    }
  }
}

}  // namespace

std::string_view shape_name(ShapeKind kind) {
  for (const auto& e : kShapes)
    if (e.kind == kind) return e.name;
  return "unknown";
}

ShapeKind parse_shape(std::string_view name) {
  for (const auto& e : kShapes)
    if (e.name == name) return e.kind;
  fail(ErrorDomain::config, "unknown shape '" + std::string(name) + "'");
}

std::string_view regime_name(RotationRegime regime) {
  switch (regime) {
    case RotationRegime::aligned: return "aligned";
    case RotationRegime::mixed: return "mixed";
    case RotationRegime::rotated: return "rotated";
  }
  return "unknown";
}

RotationRegime parse_regime(std::string_view name) {
  if (name == "aligned") return RotationRegime::aligned;
  if (name == "mixed") return RotationRegime::mixed;
  if (name == "rotated") return RotationRegime::rotated;
  fail(ErrorDomain::config, "unknown rotation regime '" + std::string(name) + "'");
}

void ToySpec::validate() const {
  require(!shapes.empty(), ErrorDomain::config, "toy spec needs at least one shape");
  require(train_per_class >= 1 && test_per_class >= 1, ErrorDomain::config,
          "per-class counts must be at least 1");
  require(jitter >= 0.0 && std::isfinite(jitter), ErrorDomain::config,
          "jitter stddev must be finite and >= 0");
  require(points >= 1, ErrorDomain::config, "point count must be at least 1");
}

Matrix sample_shape_surface(ShapeKind kind, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  Matrix pts(static_cast<Eigen::Index>(n), 3);
  for (std::size_t i = 0; i < n; ++i) pts.row(static_cast<Eigen::Index>(i)) = surface_point(kind, rng);
  return pts;
}

ToySplit gen_toy(const ToySpec& spec) {
  spec.validate();
  ToySplit split;
  for (ShapeKind s : spec.shapes) {
    split.train.class_names.emplace_back(shape_name(s));
    split.test.class_names.emplace_back(shape_name(s));
  }
  const std::uint64_t test_base = spec.shapes.size() * spec.train_per_class;
  generate_split(spec, spec.train_per_class, 0, split.train, split.train_poses);
  generate_split(spec, spec.test_per_class, test_base, split.test, split.test_poses);
  return split;
}

}  // namespace pcd
