#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pcd/diffgraph.hpp"
#include "pcd/featnet.hpp"
#include "pcd/rotator.hpp"
#include "pcd/sadmloss.hpp"

namespace pcd {

// A small end-to-end instance of the distillation objective: per class, an
// original batch, synthetic objects with angles, and one frozen extractor.
struct PipelineShape {
  std::size_t classes = 2;
  std::size_t t_batch = 4;
  std::size_t ppc = 2;
  std::size_t points = 16;
  std::vector<std::size_t> widths{3, 16, 16, 8};
};

struct PipelineInstance {
  NetworkWeights net;
  std::vector<std::vector<Matrix>> originals;  // [class][item]
  std::vector<std::vector<Matrix>> points;     // [class][object]
  std::vector<std::vector<RotationParams>> angles;
  LossWeights weights;
  AlignmentStrategy alignment = AlignmentStrategy::channel_sorted;
  // Bandwidths resolved by the median heuristic at the instance point and
  // then held fixed, so finite differences see the same function.
  std::vector<std::pair<KernelConfig, KernelConfig>> kernels;
};

PipelineInstance make_pipeline_instance(const PipelineShape& shape, std::uint64_t seed);

// Smallest distance to a non-differentiable point on the synthetic side:
// hidden pre-activations near 0 and adjacent sorted feature values.
double kink_margin(const PipelineInstance& inst);

// Parameter blocks in order: for each class, for each object: points (N x 3)
// then angles (1 x 3).
std::vector<Matrix> pipeline_blocks(const PipelineInstance& inst);
ad::Value pipeline_loss(ad::Tape& tape, const PipelineInstance& inst,
                        std::span<const ad::Value> blocks);

struct SuiteResult {
  std::string name;
  std::size_t instances = 0;
  std::size_t excluded = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

enum class GradcheckProfile { small, full };

// Checks every differentiable building block and the full objective against
// central differences (h = 1e-5).
std::vector<SuiteResult> run_gradcheck_suites(GradcheckProfile profile, std::uint64_t seed = 7);

// The end-to-end objective on `wanted` tie-free random instances.
SuiteResult pipeline_suite(const PipelineShape& shape, std::size_t wanted, std::uint64_t seed,
                           double tolerance = 1e-4);

}  // namespace pcd
