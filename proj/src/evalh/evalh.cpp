#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <thread>

#include "json.hpp"

#include "pcd/error.hpp"
#include "pcd/evalh.hpp"
#include "pcd/random.hpp"
#include "pcd/rotator.hpp"

namespace pcd {
namespace {

struct Param {
  Matrix* value;
  Matrix velocity;
  bool decay;
};

void collect(Layer& l, std::vector<Param>& out) {
  out.push_back({&l.weight, Matrix::Zero(l.weight.rows(), l.weight.cols()), true});
  out.push_back({&l.bias, Matrix::Zero(l.bias.rows(), l.bias.cols()), false});
}

std::vector<Param> parameters(ClassifierWeights& w) {
  std::vector<Param> out;
  for (Layer& l : w.trunk.layers) collect(l, out);
  for (Layer& l : w.trunk.transform) collect(l, out);
  collect(w.hidden, out);
  collect(w.output, out);
  return out;
}

std::vector<ad::Value> leaves(const BoundClassifier& net) {
  std::vector<ad::Value> out;
  auto add = [&](const BoundLayer& l) {
    out.push_back(l.weight);
    out.push_back(l.bias);
  };
  for (const auto& l : net.trunk.layers) add(l);
  for (const auto& l : net.trunk.transform) add(l);
  add(net.hidden);
  add(net.output);
  return out;
}

}  // namespace

std::string_view augmentation_name(Augmentation a) {
  return a == Augmentation::none ? "none" : "random_rotation";
}

Augmentation parse_augmentation(std::string_view name) {
  if (name == "none") return Augmentation::none;
  if (name == "random_rotation") return Augmentation::random_rotation;
  fail(ErrorDomain::config, "unknown augmentation '" + std::string(name) + "'");
}

void EvalConfig::validate() const {
  require(epochs >= 1 && batch >= 1 && repeats >= 1 && lr_step >= 1, ErrorDomain::config,
          "epochs, batch, repeats and lr step must be positive");
  require(lr > 0.0 && momentum >= 0.0 && weight_decay >= 0.0 && lr_decay > 0.0,
          ErrorDomain::config, "optimizer settings must be positive");
  require(jobs >= 1, ErrorDomain::config, "jobs must be at least 1");
}

ClassifierConfig EvalConfig::classifier(int num_classes) const {
  ClassifierConfig c;
  c.trunk.widths = trunk_widths;
  c.trunk.include_input_transform = include_input_transform;
  c.hidden = hidden;
  c.num_classes = num_classes;
  return c;
}

double eval_lr(const EvalConfig& cfg, std::size_t epoch) {
  return cfg.lr * std::pow(cfg.lr_decay, static_cast<double>(epoch / cfg.lr_step));
}

ClassifierWeights train_classifier(const LabeledDataset& train, const EvalConfig& cfg,
                                   std::uint64_t seed) {
  cfg.validate();
  train.validate();
  require(train.size() >= 1, ErrorDomain::data, "training set is empty");
  ClassifierWeights w = init_classifier(cfg.classifier(train.num_classes()), seed);
  std::vector<Param> params = parameters(w);

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng shuffle_rng(derive_seed(seed, Stream::shuffle));
  Rng augment_rng(derive_seed(seed, Stream::augment));
  constexpr double kTwoPi = 2.0 * std::numbers::pi;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = eval_lr(cfg, epoch);
    shuffle_rng.shuffle(std::span<std::size_t>(order));

    std::vector<Mat3> poses;
    if (cfg.augmentation == Augmentation::random_rotation) {
      poses.resize(train.size());
      for (auto& pose : poses) {
        RotationParams a;
        a.x = kTwoPi * augment_rng.uniform();
        a.y = kTwoPi * augment_rng.uniform();
        a.z = kTwoPi * augment_rng.uniform();
        pose = rotation_matrix(a);
      }
    }

    for (std::size_t start = 0; start < order.size(); start += cfg.batch) {
      const std::size_t end = std::min(order.size(), start + cfg.batch);
      ad::Tape tape;
      const BoundClassifier net = bind(tape, w, true);
      ad::Value total;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        const Matrix pts = poses.empty() ? train.clouds[i].points
                                         : Matrix(train.clouds[i].points * poses[i].transpose());
        const ad::Value logits = classifier_logits(net, tape.constant(pts));
        const int label = train.labels[i];
        const ad::Value loss = cross_entropy(logits, std::span<const int>(&label, 1));
        total = total.valid() ? ad::add(total, loss) : loss;
      }
      total = ad::mul_scalar(total, 1.0 / static_cast<double>(end - start));
      require(std::isfinite(total.item()), ErrorDomain::divergence,
              "classifier loss diverged at epoch " + std::to_string(epoch));
      tape.backward(total);

      const auto grads = leaves(net);
      for (std::size_t p = 0; p < params.size(); ++p) {
        Param& prm = params[p];
        const Matrix& g = grads[p].grad();
        if (prm.decay && cfg.weight_decay > 0.0)
          prm.velocity = cfg.momentum * prm.velocity + g + cfg.weight_decay * *prm.value;
        else
          prm.velocity = cfg.momentum * prm.velocity + g;
        *prm.value -= lr * prm.velocity;
      }
    }
  }
  return w;
}

int predict(const ClassifierWeights& w, const PointCloud& cloud) {
  const Matrix logits = classifier_logits(w, cloud);
  int best = 0;
  for (Eigen::Index k = 1; k < logits.cols(); ++k)
    if (logits(0, k) > logits(0, best)) best = static_cast<int>(k);
  return best;
}

double evaluate_accuracy(const ClassifierWeights& w, const LabeledDataset& test) {
  require(test.size() >= 1, ErrorDomain::data, "test set is empty");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < test.size(); ++i)
    if (predict(w, test.clouds[i]) == test.labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(test.size());
}

EvalReport repeated_eval(const LabeledDataset& train, const LabeledDataset& test,
                         const EvalConfig& cfg) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const auto k = static_cast<std::size_t>(test.num_classes());
  std::vector<double> acc(cfg.repeats, 0.0);
  std::vector<std::vector<double>> class_acc(cfg.repeats, std::vector<double>(k, 0.0));
  std::vector<std::exception_ptr> errors(cfg.repeats);

  auto run = [&](std::size_t r) {
    try {
      const ClassifierWeights w = train_classifier(train, cfg, derive_seed(cfg.seed, Stream::repeat, r));
      std::vector<std::size_t> hit(k, 0), total(k, 0);
      for (std::size_t i = 0; i < test.size(); ++i) {
        const auto label = static_cast<std::size_t>(test.labels[i]);
        ++total[label];
        if (predict(w, test.clouds[i]) == test.labels[i]) ++hit[label];
      }
      std::size_t correct = 0;
      for (std::size_t c = 0; c < k; ++c) {
        correct += hit[c];
        class_acc[r][c] = total[c] ? static_cast<double>(hit[c]) / static_cast<double>(total[c]) : 0.0;
      }
      acc[r] = static_cast<double>(correct) / static_cast<double>(test.size());
    } catch (...) {
      errors[r] = std::current_exception();
    }
  };

  if (cfg.jobs <= 1) {
    for (std::size_t r = 0; r < cfg.repeats; ++r) run(r);
  } else {
    std::vector<std::thread> workers;
    for (std::size_t t = 0; t < std::min(cfg.jobs, cfg.repeats); ++t)
      workers.emplace_back([&, t] {
        for (std::size_t r = t; r < cfg.repeats; r += cfg.jobs) run(r);
      });
    for (auto& t : workers) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  EvalReport rep;
  rep.accuracies = acc;
  double sum = 0.0;
  for (double a : acc) sum += a;
  rep.mean = sum / static_cast<double>(acc.size());
  if (acc.size() > 1) {
    double ss = 0.0;
    for (double a : acc) ss += (a - rep.mean) * (a - rep.mean);
    rep.std = std::sqrt(ss / static_cast<double>(acc.size() - 1));
  }
  rep.per_class.assign(k, 0.0);
  for (const auto& row : class_acc)
    for (std::size_t c = 0; c < k; ++c) rep.per_class[c] += row[c] / static_cast<double>(cfg.repeats);
  rep.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rep;
}

std::string EvalReport::to_json() const {
  nlohmann::json j;
  j["accuracies"] = accuracies;
  j["mean"] = mean;
  j["std"] = std;
  j["per_class"] = per_class;
  j["wall_seconds"] = wall_seconds;
  return j.dump(2);
}

std::string csv_row(std::string_view dataset, std::string_view method, std::size_t ppc,
                    std::uint64_t seed, const EvalReport& report) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%.*s,%.*s,%zu,%llu,%.6f,%.6f,%.3f",
                static_cast<int>(dataset.size()), dataset.data(), static_cast<int>(method.size()),
                method.data(), ppc, static_cast<unsigned long long>(seed), report.mean, report.std,
                report.wall_seconds);
  return buf;
}

}  // namespace pcd
