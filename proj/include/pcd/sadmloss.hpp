#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "pcd/diffgraph.hpp"
#include "pcd/featnet.hpp"

namespace pcd {

// --- Morton / Z-order ---------------------------------------------------------

// Spreads the low 10 bits of v so bit i lands at bit 3i.
std::uint32_t spread_bits_10(std::uint32_t v);
// x occupies bits 0,3,6,...; y bits 1,4,...; z bits 2,5,...
std::uint32_t morton_encode(std::uint32_t x, std::uint32_t y, std::uint32_t z);
// 10-bit quantization of each axis over the cloud's bounding box, clamped
// to [0, 1023]; a flat axis quantizes to 0.
std::vector<std::uint32_t> morton_codes(const Matrix& points);

// --- alignment ----------------------------------------------------------------

enum class AlignmentStrategy { unsorted, axis_z, morton, channel_sorted };

std::string_view alignment_name(AlignmentStrategy s);
AlignmentStrategy parse_alignment(std::string_view name);

// Row order of the points used by axis_z (ascending z) and morton
// (ascending code). Stable: equal keys keep their original order.
std::vector<std::size_t> point_order(const Matrix& points, AlignmentStrategy strategy);

// Aligns an N x C feature matrix computed from `points` (N x 3).
ad::Value align_features(const ad::Value& features, const Matrix& points,
                         AlignmentStrategy strategy);

// --- kernels and losses ---------------------------------------------------------

struct KernelConfig {
  enum class Bandwidth { fixed, median_heuristic };
  Bandwidth rule = Bandwidth::median_heuristic;
  double sigma = 1.0;

  static KernelConfig fixed(double sigma) { return {Bandwidth::fixed, sigma}; }
  void validate() const;
};

// Median of the squared Frobenius distances over all unordered pairs of
// A u B, divided by 2 ln 2 so the median pair has kernel value 0.5. Falls
// back to 1.0 when every distance is zero (or fewer than two items).
double median_heuristic_sigma(std::span<const Matrix* const> items);
double resolve_sigma(std::span<const ad::Value> a, std::span<const ad::Value> b,
                     const KernelConfig& cfg);

// Mean over all cross pairs of exp(-||a - b||_F^2 / (2 sigma)).
ad::Value gaussian_mean_kernel(std::span<const ad::Value> a, std::span<const ad::Value> b,
                               double sigma);

// K(A,A) + K(B,B) - 2 K(A,B) with sigma resolved from A u B.
ad::Value mmd_loss(std::span<const ad::Value> a, std::span<const ad::Value> b,
                   const KernelConfig& cfg);

struct LossWeights {
  double lambda1 = 0.006;
  double lambda2 = 0.003;

  void validate() const;
};

// Default (lambda1, lambda2) for a points-per-class budget: 1 -> (0.002,
// 0.001), 3 -> (0.006, 0.003), 10 -> (0.02, 0.01); other budgets use the
// nearest listed one below (1 for ppc < 3).
LossWeights default_loss_weights(std::size_t ppc);

// Features of a batch of clouds under one extractor.
struct EmbeddedBatch {
  std::vector<ad::Value> aligned;  // N x C, aligned per strategy
  std::vector<ad::Value> top;      // 1 x C channel maxima
};

// Point blocks may be constants (original data) or differentiable values.
EmbeddedBatch embed_batch(const BoundNetwork& net, std::span<const ad::Value> points,
                          AlignmentStrategy strategy);

// Sorted-feature MMD over the full N x C matrices.
ad::Value l_alpha(const EmbeddedBatch& t, const EmbeddedBatch& s, const KernelConfig& cfg);
// MMD over per-channel maxima.
ad::Value l_beta(const EmbeddedBatch& t, const EmbeddedBatch& s, const KernelConfig& cfg);
// lambda1 * l_alpha + lambda2 * l_beta, each with an independently resolved
// bandwidth.
ad::Value l_sadm(const EmbeddedBatch& t, const EmbeddedBatch& s, const LossWeights& w,
                 const KernelConfig& cfg);

// Convenience entry points that embed both batches first. `t_points` are
// treated as constants; `s_points` live on the tape that receives the loss.
ad::Value l_alpha(const BoundNetwork& net, std::span<const Matrix> t_points,
                  std::span<const ad::Value> s_points, AlignmentStrategy strategy,
                  const KernelConfig& cfg);
ad::Value l_beta(const BoundNetwork& net, std::span<const Matrix> t_points,
                 std::span<const ad::Value> s_points, const KernelConfig& cfg);
ad::Value l_sadm(const BoundNetwork& net, std::span<const Matrix> t_points,
                 std::span<const ad::Value> s_points, const LossWeights& w,
                 AlignmentStrategy strategy, const KernelConfig& cfg);
// Distribution-matching baseline on pooled features; same value as l_beta.
ad::Value dm_baseline_loss(const BoundNetwork& net, std::span<const Matrix> t_points,
                           std::span<const ad::Value> s_points, const KernelConfig& cfg);


// Bandwidths the median heuristic would pick for this pair of batches,
// returned as fixed configs (alpha, beta). Used to freeze sigma for
// finite-difference checks.
std::pair<KernelConfig, KernelConfig> frozen_bandwidths(const EmbeddedBatch& t,
                                                        const EmbeddedBatch& s,
                                                        const KernelConfig& cfg);

// l_sadm with separate kernel configs for the two terms.
ad::Value l_sadm(const EmbeddedBatch& t, const EmbeddedBatch& s, const LossWeights& w,
                 const KernelConfig& alpha_cfg, const KernelConfig& beta_cfg);

}  // namespace pcd
