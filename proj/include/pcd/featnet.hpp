#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pcd/diffgraph.hpp"
#include "pcd/pcdata.hpp"

namespace pcd {

enum class Activation { relu, identity };

// Shared per-point MLP. widths = {3, hidden..., C}. Hidden layers use
// `activation`; the last layer is linear so pre-pool features keep their sign
// and rarely tie.
struct ExtractorConfig {
  std::vector<std::size_t> widths{3, 64, 128, 64};
  Activation activation = Activation::relu;
  // Simplified 3x3 input alignment: shared MLP 3->64->128, max pool, affine
  // head to 9 values added to the identity, applied to the raw points.
  bool include_input_transform = false;

  std::size_t channels() const { return widths.back(); }
  void validate() const;
};

struct Layer {
  Matrix weight;  // fan_in x fan_out
  Matrix bias;    // 1 x fan_out
};

struct NetworkWeights {
  std::vector<Layer> layers;
  std::vector<Layer> transform;  // empty unless include_input_transform
  Activation activation = Activation::relu;
};

// Uniform in [-sqrt(1/fan_in), sqrt(1/fan_in)], zero biases (the transform
// head bias is the flattened identity).
Layer init_layer(std::size_t fan_in, std::size_t fan_out, std::uint64_t seed);
NetworkWeights init_weights(const ExtractorConfig& cfg, std::uint64_t seed);

// Network weights bound to a tape, either as constants (frozen extractor)
// or as trainable leaves.
struct BoundLayer {
  ad::Value weight;
  ad::Value bias;
};

struct BoundNetwork {
  std::vector<BoundLayer> layers;
  std::vector<BoundLayer> transform;
  Activation activation = Activation::relu;
};

BoundNetwork bind(ad::Tape& tape, const NetworkWeights& w, bool trainable);

// N x C per-point features of an N x 3 point block.
ad::Value extract_prepool(const BoundNetwork& net, const ad::Value& points);
// 1 x C channel maxima of the pre-pool features.
ad::Value extract_pooled(const BoundNetwork& net, const ad::Value& points);

// Off-tape conveniences.
Matrix extract_prepool(const NetworkWeights& w, const PointCloud& cloud);
Matrix extract_pooled(const NetworkWeights& w, const PointCloud& cloud);

// PointNet-lite classifier: trainable trunk, pool, one hidden layer, logits.
struct ClassifierConfig {
  ExtractorConfig trunk{{3, 64, 128}, Activation::relu, false};
  std::size_t hidden = 64;
  int num_classes = 2;

  void validate() const;
};

struct ClassifierWeights {
  NetworkWeights trunk;
  Layer hidden;
  Layer output;
};

ClassifierWeights init_classifier(const ClassifierConfig& cfg, std::uint64_t seed);

struct BoundClassifier {
  BoundNetwork trunk;
  BoundLayer hidden;
  BoundLayer output;
};

BoundClassifier bind(ad::Tape& tape, const ClassifierWeights& w, bool trainable);

// Logits (1 x K) from pooled features (1 x C).
ad::Value classifier_forward(const BoundClassifier& net, const ad::Value& pooled);
ad::Value classifier_logits(const BoundClassifier& net, const ad::Value& points);
Matrix classifier_logits(const ClassifierWeights& w, const PointCloud& cloud);

// Mean softmax cross-entropy over the rows of `logits` (B x K), stabilized
// by max subtraction.
ad::Value cross_entropy(const ad::Value& logits, std::span<const int> labels);

}  // namespace pcd
