#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "pcd/coreset.hpp"
#include "pcd/featnet.hpp"
#include "pcd/pcdata.hpp"
#include "pcd/rotator.hpp"
#include "pcd/sadmloss.hpp"

namespace pcd {

enum class InitStrategy { noise, random, herding, kcenter };
std::string_view init_name(InitStrategy s);
InitStrategy parse_init(std::string_view name);

// off: the rotation operator is not on the tape at all.
// frozen: rotation applied on the tape with the angles never updated.
// learned: angles optimized jointly with the points.
enum class RotationMode { off, frozen, learned };
std::string_view rotation_mode_name(RotationMode m);
RotationMode parse_rotation_mode(std::string_view name);

struct DistillConfig {
  std::size_t ppc = 3;
  std::size_t iterations = 1500;
  std::size_t t_batch_per_class = 8;
  // Unset weights fall back to default_loss_weights(ppc).
  std::optional<double> lambda1;
  std::optional<double> lambda2;

  double lr_points = 0.01;
  double momentum_points = 0.5;
  double weight_decay_points = 0.0;

  std::array<double, 3> lr_theta{0.5, 5.0, 0.5};
  double momentum_theta = 0.5;
  std::size_t theta_step = 100;
  double theta_decay = 0.5;

  InitStrategy init = InitStrategy::random;
  AlignmentStrategy alignment = AlignmentStrategy::channel_sorted;
  KernelConfig kernel;
  ExtractorConfig extractor;
  std::uint64_t seed = 0;
  std::size_t eval_every = 250;
  RotationMode rotation = RotationMode::learned;
  bool optimize_points = true;
  // Worker threads for per-class loss evaluation.
  std::size_t jobs = 1;

  LossWeights loss_weights() const;
  void validate() const;
};

// base * decay^floor(iteration / step)
double step_decay_lr(double base, std::size_t iteration, std::size_t step, double decay);

struct SyntheticSet {
  std::vector<std::string> class_names;
  // [class][object] -> N x 3 learnable coordinates.
  std::vector<std::vector<Matrix>> points;
  // [class][object] -> learnable angles, initialized to zero.
  std::vector<std::vector<RotationParams>> angles;

  std::size_t num_classes() const { return points.size(); }
  std::size_t ppc() const { return points.empty() ? 0 : points.front().size(); }
};

struct OptState {
  std::vector<std::vector<Matrix>> point_velocity;
  std::vector<std::vector<Eigen::Vector3d>> theta_velocity;
  std::size_t iteration = 0;

  static OptState zeros_like(const SyntheticSet& s);
};

SyntheticSet init_synthetic(const LabeledDataset& ds, const DistillConfig& cfg);

struct ClassGradient {
  double loss = 0.0;
  std::vector<Matrix> points;          // per object, N x 3
  std::vector<Eigen::Vector3d> theta;  // per object
};

// Loss of one class against a sampled original batch under fixed extractor
// weights, with gradients w.r.t. that class's synthetic objects.
ClassGradient class_loss_and_grad(const SyntheticSet& s, std::size_t cls,
                                  const std::vector<Matrix>& t_batch, const NetworkWeights& net,
                                  const DistillConfig& cfg);

// The original-data mini-batch drawn for `cls` at an iteration.
std::vector<Matrix> sample_class_batch(const LabeledDataset& ds, int cls, std::size_t batch,
                                       std::uint64_t iter_seed);

struct StepResult {
  double loss = 0.0;  // before the update
  std::vector<double> class_losses;
};

// One joint update: fresh extractor from iter_seed, per-class losses summed,
// one SGD-with-momentum update (v <- m v + g, p <- p - lr v). Mutates s and
// state.
StepResult distill_step(SyntheticSet& s, const LabeledDataset& ds, const DistillConfig& cfg,
                        OptState& state, std::uint64_t iter_seed);

// Total loss of `s` under the extractor and batches of iteration iter_seed,
// without updating anything.
double evaluate_loss(const SyntheticSet& s, const LabeledDataset& ds, const DistillConfig& cfg,
                     std::uint64_t iter_seed);

std::uint64_t iteration_seed(std::uint64_t master, std::size_t iteration);

struct EvalCheckpoint {
  std::size_t iteration = 0;
  double accuracy = 0.0;
};

struct ProgressSink {
  std::function<void(std::size_t iteration, double loss)> on_iteration;
  // Called every eval_every iterations (and after the last one) when set.
  std::function<double(std::size_t iteration, const SyntheticSet&)> evaluate;
};

struct DistillResult {
  SyntheticSet set;
  std::vector<double> loss_trace;
  std::vector<EvalCheckpoint> eval_trace;
  double wall_seconds = 0.0;
};

DistillResult run_distillation(const LabeledDataset& ds, const DistillConfig& cfg,
                               const ProgressSink& sink = {});

// Applies each object's rotation and re-normalizes.
LabeledDataset bake_rotations(const SyntheticSet& s);

}  // namespace pcd
