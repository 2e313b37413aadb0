#include <cmath>

#include "pcd/distill.hpp"
#include "pcd/error.hpp"
#include "pcd/random.hpp"

namespace pcd {

std::string_view init_name(InitStrategy s) {
  switch (s) {
    case InitStrategy::noise: return "noise";
    case InitStrategy::random: return "random";
    case InitStrategy::herding: return "herding";
    case InitStrategy::kcenter: return "kcenter";
  }
  return "unknown";
}

InitStrategy parse_init(std::string_view name) {
  if (name == "noise") return InitStrategy::noise;
  if (name == "random") return InitStrategy::random;
  if (name == "herding") return InitStrategy::herding;
  if (name == "kcenter") return InitStrategy::kcenter;
  fail(ErrorDomain::config, "unknown init strategy '" + std::string(name) + "'");
}

std::string_view rotation_mode_name(RotationMode m) {
  switch (m) {
    case RotationMode::off: return "off";
    case RotationMode::frozen: return "frozen";
    case RotationMode::learned: return "learned";
  }
  return "unknown";
}

RotationMode parse_rotation_mode(std::string_view name) {
  if (name == "off") return RotationMode::off;
  if (name == "frozen") return RotationMode::frozen;
  if (name == "learned") return RotationMode::learned;
  fail(ErrorDomain::config, "unknown rotation mode '" + std::string(name) + "'");
}

LossWeights DistillConfig::loss_weights() const {
  LossWeights w = default_loss_weights(ppc);
  if (lambda1) w.lambda1 = *lambda1;
  if (lambda2) w.lambda2 = *lambda2;
  return w;
}

void DistillConfig::validate() const {
  require(ppc >= 1, ErrorDomain::config, "ppc must be at least 1");
  require(t_batch_per_class >= 1, ErrorDomain::config, "original batch size must be at least 1");
  require(lr_points > 0.0 && momentum_points >= 0.0 && weight_decay_points >= 0.0,
          ErrorDomain::config, "point optimizer settings must be positive");
  for (double lr : lr_theta) require(lr > 0.0, ErrorDomain::config, "rotation learning rates must be positive");
  require(momentum_theta >= 0.0 && theta_step >= 1 && theta_decay > 0.0, ErrorDomain::config,
          "rotation schedule settings invalid");
  require(jobs >= 1, ErrorDomain::config, "jobs must be at least 1");
  loss_weights().validate();
  kernel.validate();
  extractor.validate();
}

double step_decay_lr(double base, std::size_t iteration, std::size_t step, double decay) {
  return base * std::pow(decay, static_cast<double>(iteration / step));
}

OptState OptState::zeros_like(const SyntheticSet& s) {
  OptState st;
  for (std::size_t c = 0; c < s.num_classes(); ++c) {
    st.point_velocity.emplace_back();
    st.theta_velocity.emplace_back();
    for (const Matrix& p : s.points[c]) {
      st.point_velocity.back().push_back(Matrix::Zero(p.rows(), p.cols()));
      st.theta_velocity.back().push_back(Eigen::Vector3d::Zero());
    }
  }
  return st;
}

SyntheticSet init_synthetic(const LabeledDataset& ds, const DistillConfig& cfg) {
  cfg.validate();
  ds.validate();
  require(ds.size() >= 1, ErrorDomain::data, "dataset is empty");
  SyntheticSet s;
  s.class_names = ds.class_names;
  const auto k = static_cast<std::size_t>(ds.num_classes());
  s.points.resize(k);
  s.angles.assign(k, std::vector<RotationParams>(cfg.ppc));

  if (cfg.init == InitStrategy::noise) {
    const auto n = static_cast<Eigen::Index>(ds.points_per_cloud());
    for (std::size_t c = 0; c < k; ++c)
      for (std::size_t j = 0; j < cfg.ppc; ++j) {
        Rng rng(derive_seed(cfg.seed, Stream::init, 1000 + c * cfg.ppc + j));
        Matrix pts(n, 3);
        for (Eigen::Index i = 0; i < pts.size(); ++i) pts.data()[i] = rng.uniform(-1.0, 1.0);
        s.points[c].push_back(normalize_unit_sphere(PointCloud(std::move(pts))).points);
      }
    return s;
  }

  const SelectionMethod method = cfg.init == InitStrategy::random    ? SelectionMethod::random
                                 : cfg.init == InitStrategy::herding ? SelectionMethod::herding
                                                                     : SelectionMethod::kcenter;
  const SelectionResult picks = select(method, ds, cfg.ppc, cfg.seed, cfg.extractor);
  for (std::size_t c = 0; c < k; ++c)
    for (std::size_t i : picks.selected[c]) s.points[c].push_back(ds.clouds[i].points);
  return s;
}

LabeledDataset bake_rotations(const SyntheticSet& s) {
  LabeledDataset out;
  out.class_names = s.class_names;
  for (std::size_t c = 0; c < s.num_classes(); ++c)
    for (std::size_t j = 0; j < s.points[c].size(); ++j)
      out.push_back(normalize_unit_sphere(apply_rotation(s.angles[c][j], PointCloud(s.points[c][j]))),
                    static_cast<int>(c));
  return out;
}

}  // namespace pcd
