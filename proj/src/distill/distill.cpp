#include <chrono>
#include <cmath>
#include <thread>

#include "pcd/distill.hpp"
#include "pcd/error.hpp"
#include "pcd/random.hpp"

namespace pcd {
namespace {

constexpr double kDivergenceBound = 1e12;

// Runs fn(c) for every class, spreading classes over `jobs` threads. Results
// are written by index so the outcome does not depend on scheduling.
template <typename Fn>
void for_each_class(std::size_t classes, std::size_t jobs, Fn&& fn) {
  if (jobs <= 1 || classes <= 1) {
    for (std::size_t c = 0; c < classes; ++c) fn(c);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(jobs);
  for (std::size_t w = 0; w < std::min(jobs, classes); ++w)
    workers.emplace_back([&, w] {
      try {
        for (std::size_t c = w; c < classes; c += jobs) fn(c);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<ClassGradient> all_class_gradients(const SyntheticSet& s, const LabeledDataset& ds,
                                               const DistillConfig& cfg, std::uint64_t iter_seed) {
  const NetworkWeights net = init_weights(cfg.extractor, iter_seed);
  std::vector<ClassGradient> grads(s.num_classes());
  for_each_class(s.num_classes(), cfg.jobs, [&](std::size_t c) {
    const auto batch = sample_class_batch(ds, static_cast<int>(c), cfg.t_batch_per_class, iter_seed);
    grads[c] = class_loss_and_grad(s, c, batch, net, cfg);
  });
  return grads;
}

}  // namespace

std::uint64_t iteration_seed(std::uint64_t master, std::size_t iteration) {
  return derive_seed(master, Stream::iteration, iteration);
}

std::vector<Matrix> sample_class_batch(const LabeledDataset& ds, int cls, std::size_t batch,
                                       std::uint64_t iter_seed) {
  const auto members = ds.indices_of(cls);
  require(!members.empty(), ErrorDomain::data,
          "class " + std::to_string(cls) + " has no original items");
  Rng rng(derive_seed(iter_seed, Stream::batch, static_cast<std::uint64_t>(cls)));
  std::vector<Matrix> out;
  for (std::size_t k : rng.sample_without_replacement(members.size(), std::min(batch, members.size())))
    out.push_back(ds.clouds[members[k]].points);
  return out;
}

ClassGradient class_loss_and_grad(const SyntheticSet& s, std::size_t cls,
                                  const std::vector<Matrix>& t_batch, const NetworkWeights& weights,
                                  const DistillConfig& cfg) {
  ad::Tape tape;
  const BoundNetwork net = bind(tape, weights, false);
  const auto& objects = s.points[cls];

  std::vector<ad::Value> point_leaves;
  std::vector<ad::Value> angle_leaves;
  std::vector<ad::Value> posed;
  for (std::size_t j = 0; j < objects.size(); ++j) {
    point_leaves.push_back(cfg.optimize_points ? tape.leaf(objects[j]) : tape.constant(objects[j]));
    if (cfg.rotation == RotationMode::off) {
      posed.push_back(point_leaves.back());
      continue;
    }
    const RotationParams& a = s.angles[cls][j];
    Matrix theta(1, 3);
    theta << a.x, a.y, a.z;
    angle_leaves.push_back(cfg.rotation == RotationMode::learned ? tape.leaf(theta)
                                                                 : tape.constant(theta));
    posed.push_back(ad::rotate_points(angle_leaves.back(), point_leaves.back()));
  }

  const ad::Value loss =
      l_sadm(net, t_batch, posed, cfg.loss_weights(), cfg.alignment, cfg.kernel);
  tape.backward(loss);

  ClassGradient g;
  g.loss = loss.item();
  for (std::size_t j = 0; j < objects.size(); ++j) {
    g.points.push_back(point_leaves[j].grad());
    g.theta.push_back(angle_leaves.empty()
                          ? Eigen::Vector3d::Zero()
                          : Eigen::Vector3d(angle_leaves[j].grad().row(0).transpose()));
  }
  return g;
}

StepResult distill_step(SyntheticSet& s, const LabeledDataset& ds, const DistillConfig& cfg,
                        OptState& state, std::uint64_t iter_seed) {
  std::vector<ClassGradient> grads;
  try {
    grads = all_class_gradients(s, ds, cfg, iter_seed);
  } catch (const Error& e) {
    if (e.domain() != ErrorDomain::divergence) throw;
    throw Error(ErrorDomain::divergence, std::string(e.what()) + " at iteration " + std::to_string(state.iteration));
  }

  StepResult result;
  for (std::size_t c = 0; c < grads.size(); ++c) {
    const ClassGradient& g = grads[c];
    bool finite = std::isfinite(g.loss) && std::abs(g.loss) <= kDivergenceBound;
    for (const auto& p : g.points) finite = finite && p.allFinite();
    for (const auto& t : g.theta) finite = finite && t.allFinite();
    require(finite, ErrorDomain::divergence,
            "non-finite or exploding loss/gradient at iteration " + std::to_string(state.iteration) +
                ", class " + std::to_string(c));
    result.class_losses.push_back(g.loss);
    result.loss += g.loss;
  }

  std::array<double, 3> lr_theta{};
  for (std::size_t i = 0; i < 3; ++i)
    lr_theta[i] = step_decay_lr(cfg.lr_theta[i], state.iteration, cfg.theta_step, cfg.theta_decay);

  for (std::size_t c = 0; c < grads.size(); ++c) {
    for (std::size_t j = 0; j < s.points[c].size(); ++j) {
      if (cfg.optimize_points) {
        Matrix& v = state.point_velocity[c][j];
        Matrix& p = s.points[c][j];
        if (cfg.weight_decay_points > 0.0)
          v = cfg.momentum_points * v + grads[c].points[j] + cfg.weight_decay_points * p;
        else
          v = cfg.momentum_points * v + grads[c].points[j];
        p -= cfg.lr_points * v;
        require(p.allFinite(), ErrorDomain::divergence,
                "non-finite coordinates after iteration " + std::to_string(state.iteration) +
                    ", class " + std::to_string(c));
      }
      if (cfg.rotation == RotationMode::learned) {
        Eigen::Vector3d& v = state.theta_velocity[c][j];
        v = cfg.momentum_theta * v + grads[c].theta[j];
        RotationParams& a = s.angles[c][j];
        for (std::size_t i = 0; i < 3; ++i) a[i] -= lr_theta[i] * v(static_cast<Eigen::Index>(i));
      }
    }
  }
  ++state.iteration;
  return result;
}

double evaluate_loss(const SyntheticSet& s, const LabeledDataset& ds, const DistillConfig& cfg,
                     std::uint64_t iter_seed) {
  double total = 0.0;
  for (const auto& g : all_class_gradients(s, ds, cfg, iter_seed)) total += g.loss;
  return total;
}

DistillResult run_distillation(const LabeledDataset& ds, const DistillConfig& cfg,
                               const ProgressSink& sink) {
  const auto start = std::chrono::steady_clock::now();
  DistillResult result;
  result.set = init_synthetic(ds, cfg);
  OptState state = OptState::zeros_like(result.set);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const StepResult step = distill_step(result.set, ds, cfg, state, iteration_seed(cfg.seed, it));
    result.loss_trace.push_back(step.loss);
    if (sink.on_iteration) sink.on_iteration(it, step.loss);
    const std::size_t done = it + 1;
    if (sink.evaluate && cfg.eval_every > 0 &&
        (done % cfg.eval_every == 0 || done == cfg.iterations))
      result.eval_trace.push_back({done, sink.evaluate(done, result.set)});
  }
  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

}  // namespace pcd
