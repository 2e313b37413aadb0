#include <cmath>

#include "pcd/error.hpp"
#include "pcd/sadmloss.hpp"

namespace pcd {
namespace {

std::vector<ad::Value> as_constants(ad::Tape& tape, std::span<const Matrix> points) {
  std::vector<ad::Value> out;
  out.reserve(points.size());
  for (const Matrix& p : points) out.push_back(tape.constant(p));
  return out;
}

ad::Tape& tape_of(std::span<const ad::Value> s_points) {
  require(!s_points.empty(), ErrorDomain::contract, "synthetic batch is empty");
  return *s_points.front().tape();
}

void check_batch(const EmbeddedBatch& b, const char* which) {
  require(!b.aligned.empty() && b.aligned.size() == b.top.size(), ErrorDomain::contract,
          std::string(which) + " batch is empty");
}

}  // namespace

void LossWeights::validate() const {
  require(lambda1 >= 0.0 && lambda2 >= 0.0 && std::isfinite(lambda1) && std::isfinite(lambda2),
          ErrorDomain::config, "loss weights must be finite and non-negative");
  require(lambda1 > 0.0 || lambda2 > 0.0, ErrorDomain::config,
          "at least one loss weight must be positive");
}

LossWeights default_loss_weights(std::size_t ppc) {
  if (ppc >= 10) return {0.02, 0.01};
  if (ppc >= 3) return {0.006, 0.003};
  return {0.002, 0.001};
}

EmbeddedBatch embed_batch(const BoundNetwork& net, std::span<const ad::Value> points,
                          AlignmentStrategy strategy) {
  EmbeddedBatch out;
  for (const ad::Value& p : points) {
    const ad::Value f = extract_prepool(net, p);
    out.top.push_back(ad::channelwise_max(f));
    out.aligned.push_back(align_features(f, p.data(), strategy));
  }
  return out;
}

ad::Value l_alpha(const EmbeddedBatch& t, const EmbeddedBatch& s, const KernelConfig& cfg) {
  check_batch(t, "original");
  check_batch(s, "synthetic");
  return mmd_loss(t.aligned, s.aligned, cfg);
}

ad::Value l_beta(const EmbeddedBatch& t, const EmbeddedBatch& s, const KernelConfig& cfg) {
  check_batch(t, "original");
  check_batch(s, "synthetic");
  return mmd_loss(t.top, s.top, cfg);
}

ad::Value l_sadm(const EmbeddedBatch& t, const EmbeddedBatch& s, const LossWeights& w,
                 const KernelConfig& cfg) {
  return l_sadm(t, s, w, cfg, cfg);
}

ad::Value l_sadm(const EmbeddedBatch& t, const EmbeddedBatch& s, const LossWeights& w,
                 const KernelConfig& alpha_cfg, const KernelConfig& beta_cfg) {
  w.validate();
  if (w.lambda2 == 0.0) return ad::mul_scalar(l_alpha(t, s, alpha_cfg), w.lambda1);
  if (w.lambda1 == 0.0) return ad::mul_scalar(l_beta(t, s, beta_cfg), w.lambda2);
  return ad::add(ad::mul_scalar(l_alpha(t, s, alpha_cfg), w.lambda1),
                 ad::mul_scalar(l_beta(t, s, beta_cfg), w.lambda2));
}

std::pair<KernelConfig, KernelConfig> frozen_bandwidths(const EmbeddedBatch& t,
                                                        const EmbeddedBatch& s,
                                                        const KernelConfig& cfg) {
  return {KernelConfig::fixed(resolve_sigma(t.aligned, s.aligned, cfg)),
          KernelConfig::fixed(resolve_sigma(t.top, s.top, cfg))};
}

ad::Value l_alpha(const BoundNetwork& net, std::span<const Matrix> t_points,
                  std::span<const ad::Value> s_points, AlignmentStrategy strategy,
                  const KernelConfig& cfg) {
  ad::Tape& tape = tape_of(s_points);
  const auto t = embed_batch(net, as_constants(tape, t_points), strategy);
  return l_alpha(t, embed_batch(net, s_points, strategy), cfg);
}

ad::Value l_beta(const BoundNetwork& net, std::span<const Matrix> t_points,
                 std::span<const ad::Value> s_points, const KernelConfig& cfg) {
  ad::Tape& tape = tape_of(s_points);
  const auto t = embed_batch(net, as_constants(tape, t_points), AlignmentStrategy::unsorted);
  return l_beta(t, embed_batch(net, s_points, AlignmentStrategy::unsorted), cfg);
}

ad::Value l_sadm(const BoundNetwork& net, std::span<const Matrix> t_points,
                 std::span<const ad::Value> s_points, const LossWeights& w,
                 AlignmentStrategy strategy, const KernelConfig& cfg) {
  ad::Tape& tape = tape_of(s_points);
  const auto t = embed_batch(net, as_constants(tape, t_points), strategy);
  return l_sadm(t, embed_batch(net, s_points, strategy), w, cfg);
}

ad::Value dm_baseline_loss(const BoundNetwork& net, std::span<const Matrix> t_points,
                           std::span<const ad::Value> s_points, const KernelConfig& cfg) {
  return l_beta(net, t_points, s_points, cfg);
}

}  // namespace pcd
