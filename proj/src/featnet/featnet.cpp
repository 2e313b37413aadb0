#include <cmath>
#include <string>

#include "pcd/error.hpp"
#include "pcd/featnet.hpp"
#include "pcd/random.hpp"

namespace pcd {
namespace {

constexpr std::size_t kTransformHidden1 = 64;
constexpr std::size_t kTransformHidden2 = 128;

ad::Value activate(Activation a, const ad::Value& x) {
  return a == Activation::relu ? ad::relu(x) : x;
}

BoundLayer bind_layer(ad::Tape& tape, const Layer& l, bool trainable) {
  if (trainable) return {tape.leaf(l.weight), tape.leaf(l.bias)};
  return {tape.constant(l.weight), tape.constant(l.bias)};
}

// Shared MLP; hidden layers activated, last layer linear unless
// `activate_last`.
ad::Value mlp(const std::vector<BoundLayer>& layers, std::size_t count, Activation act,
              ad::Value x, bool activate_last) {
  for (std::size_t i = 0; i < count; ++i) {
    x = ad::affine(x, layers[i].weight, layers[i].bias);
    if (i + 1 < count || activate_last) x = activate(act, x);
  }
  return x;
}

}  // namespace

void ExtractorConfig::validate() const {
  require(widths.size() >= 2, ErrorDomain::config, "extractor needs at least one layer");
  require(widths.front() == 3, ErrorDomain::config, "extractor input width must be 3");
  for (std::size_t w : widths) require(w >= 1, ErrorDomain::config, "layer widths must be >= 1");
}

void ClassifierConfig::validate() const {
  trunk.validate();
  require(hidden >= 1, ErrorDomain::config, "classifier hidden width must be >= 1");
  require(num_classes >= 1, ErrorDomain::config, "classifier needs at least one class");
}

Layer init_layer(std::size_t fan_in, std::size_t fan_out, std::uint64_t seed) {
  Rng rng(seed);
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  Layer l{Matrix(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out)),
          Matrix::Zero(1, static_cast<Eigen::Index>(fan_out))};
  for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = rng.uniform(-bound, bound);
  return l;
}

NetworkWeights init_weights(const ExtractorConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  NetworkWeights w;
  w.activation = cfg.activation;
  std::uint64_t layer = 0;
  for (std::size_t i = 0; i + 1 < cfg.widths.size(); ++i)
    w.layers.push_back(init_layer(cfg.widths[i], cfg.widths[i + 1], derive_seed(seed, Stream::weights, layer++)));
  if (cfg.include_input_transform) {
    w.transform.push_back(init_layer(3, kTransformHidden1, derive_seed(seed, Stream::weights, layer++)));
    w.transform.push_back(init_layer(kTransformHidden1, kTransformHidden2, derive_seed(seed, Stream::weights, layer++)));
    Layer head = init_layer(kTransformHidden2, 9, derive_seed(seed, Stream::weights, layer++));
    head.bias << 1, 0, 0, 0, 1, 0, 0, 0, 1;
    w.transform.push_back(std::move(head));
  }
  return w;
}

BoundNetwork bind(ad::Tape& tape, const NetworkWeights& w, bool trainable) {
  BoundNetwork net;
  net.activation = w.activation;
  for (const Layer& l : w.layers) net.layers.push_back(bind_layer(tape, l, trainable));
  for (const Layer& l : w.transform) net.transform.push_back(bind_layer(tape, l, trainable));
  return net;
}

ad::Value extract_prepool(const BoundNetwork& net, const ad::Value& points) {
  require(points.cols() == 3 && points.rows() >= 1, ErrorDomain::contract,
          "extract_prepool: points must be Nx3 with N >= 1");
  ad::Value x = points;
  if (!net.transform.empty()) {
    const ad::Value h = mlp(net.transform, 2, net.activation, points, true);
    const ad::Value pooled = ad::channelwise_max(h);
    const ad::Value t = ad::affine(pooled, net.transform[2].weight, net.transform[2].bias);
    x = ad::matmul(points, ad::reshape(t, 3, 3));
  }
  return mlp(net.layers, net.layers.size(), net.activation, x, false);
}

ad::Value extract_pooled(const BoundNetwork& net, const ad::Value& points) {
  return ad::channelwise_max(extract_prepool(net, points));
}

Matrix extract_prepool(const NetworkWeights& w, const PointCloud& cloud) {
  ad::Tape tape;
  const BoundNetwork net = bind(tape, w, false);
  return extract_prepool(net, tape.constant(cloud.points)).data();
}

Matrix extract_pooled(const NetworkWeights& w, const PointCloud& cloud) {
  ad::Tape tape;
  const BoundNetwork net = bind(tape, w, false);
  return extract_pooled(net, tape.constant(cloud.points)).data();
}

ClassifierWeights init_classifier(const ClassifierConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  ClassifierWeights w;
  w.trunk = init_weights(cfg.trunk, derive_seed(seed, Stream::weights, 100));
  w.hidden = init_layer(cfg.trunk.channels(), cfg.hidden, derive_seed(seed, Stream::weights, 101));
  w.output = init_layer(cfg.hidden, static_cast<std::size_t>(cfg.num_classes),
                        derive_seed(seed, Stream::weights, 102));
  return w;
}

BoundClassifier bind(ad::Tape& tape, const ClassifierWeights& w, bool trainable) {
  return {bind(tape, w.trunk, trainable), bind_layer(tape, w.hidden, trainable),
          bind_layer(tape, w.output, trainable)};
}

ad::Value classifier_forward(const BoundClassifier& net, const ad::Value& pooled) {
  const ad::Value h = ad::relu(ad::affine(pooled, net.hidden.weight, net.hidden.bias));
  return ad::affine(h, net.output.weight, net.output.bias);
}

ad::Value classifier_logits(const BoundClassifier& net, const ad::Value& points) {
  return classifier_forward(net, extract_pooled(net.trunk, points));
}

Matrix classifier_logits(const ClassifierWeights& w, const PointCloud& cloud) {
  ad::Tape tape;
  const BoundClassifier net = bind(tape, w, false);
  return classifier_logits(net, tape.constant(cloud.points)).data();
}

ad::Value cross_entropy(const ad::Value& logits, std::span<const int> labels) {
  const Matrix& z = logits.data();
  require(static_cast<std::size_t>(z.rows()) == labels.size() && z.rows() >= 1,
          ErrorDomain::contract, "cross_entropy: one label per logit row required");
  Matrix probs(z.rows(), z.cols());
  double loss = 0.0;
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const int label = labels[static_cast<std::size_t>(r)];
    require(label >= 0 && label < z.cols(), ErrorDomain::contract,
            "cross_entropy: label " + std::to_string(label) + " outside [0, " +
                std::to_string(z.cols()) + ")");
    const double m = z.row(r).maxCoeff();
    const Eigen::RowVectorXd e = (z.row(r).array() - m).exp();
    const double s = e.sum();
    probs.row(r) = e / s;
    loss += m + std::log(s) - z(r, label);
  }
  const auto batch = static_cast<double>(z.rows());
  Matrix out(1, 1);
  out(0, 0) = loss / batch;
  std::vector<int> lab(labels.begin(), labels.end());
  const ad::Value inputs[] = {logits};
  return logits.tape()->record(std::move(out), inputs,
                               [logits, probs = std::move(probs), lab = std::move(lab), batch](
                                   ad::Tape& t, const Matrix& g) {
                                 Matrix d = probs;
                                 for (std::size_t r = 0; r < lab.size(); ++r)
                                   d(static_cast<Eigen::Index>(r), lab[r]) -= 1.0;
                                 t.accumulate(logits, (g(0, 0) / batch) * d);
                               });
}

}  // namespace pcd
