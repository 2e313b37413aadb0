#include <charconv>
#include <cstdio>
#include <set>
#include <sstream>

#include "pcd/cli.hpp"
#include "pcd/error.hpp"

namespace pcd {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

std::string fmt_widths(const std::vector<std::size_t>& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) out += (i ? "," : "") + std::to_string(w[i]);
  return out;
}

// Reads keys off a map, remembering which ones were used.
class Consumer {
 public:
  explicit Consumer(const ConfigMap& m) : map_(m) {}

  const std::string* find(const std::string& key) {
    const auto it = map_.find(key);
    if (it == map_.end()) return nullptr;
    used_.insert(key);
    return &it->second;
  }

  void number(const std::string& key, double& out) {
    if (const auto* v = find(key)) out = to_double(key, *v);
  }
  void count(const std::string& key, std::size_t& out) {
    if (const auto* v = find(key)) out = static_cast<std::size_t>(to_u64(key, *v));
  }
  void seed(const std::string& key, std::uint64_t& out) {
    if (const auto* v = find(key)) out = to_u64(key, *v);
  }
  void flag(const std::string& key, bool& out) {
    if (const auto* v = find(key)) {
      if (*v == "true" || *v == "1") out = true;
      else if (*v == "false" || *v == "0") out = false;
      else fail(ErrorDomain::config, key + ": expected true/false, got '" + *v + "'");
    }
  }
  void widths(const std::string& key, std::vector<std::size_t>& out) {
    if (const auto* v = find(key)) {
      out.clear();
      std::stringstream ss(*v);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(static_cast<std::size_t>(to_u64(key, trim(item))));
    }
  }
  template <typename Parse, typename T>
  void choice(const std::string& key, T& out, Parse parse) {
    if (const auto* v = find(key)) out = parse(*v);
  }

  void reject_unknown() const {
    for (const auto& [k, v] : map_)
      if (!used_.count(k)) fail(ErrorDomain::config, "unknown configuration key '" + k + "'");
  }

  static double to_double(const std::string& key, const std::string& v) {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
      fail(ErrorDomain::config, key + ": expected a number, got '" + v + "'");
    return out;
  }
  static std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size())
      fail(ErrorDomain::config, key + ": expected a non-negative integer, got '" + v + "'");
    return out;
  }

 private:
  const ConfigMap& map_;
  std::set<std::string> used_;
};

}  // namespace

ConfigMap parse_config(std::string_view text) {
  ConfigMap out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      fail(ErrorDomain::config, "line " + std::to_string(number) + ": expected 'key = value'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    if (key.empty()) fail(ErrorDomain::config, "line " + std::to_string(number) + ": empty key");
    out[key] = trim(std::string_view(body).substr(eq + 1));
  }
  return out;
}

std::string format_config(const ConfigMap& cfg) {
  std::string out;
  for (const auto& [k, v] : cfg) out += k + " = " + v + "\n";
  return out;
}

ConfigMap merge(ConfigMap base, const ConfigMap& overlay) {
  for (const auto& [k, v] : overlay) base[k] = v;
  return base;
}

void apply_config(const ConfigMap& cfg, ToySpec* toy, DistillConfig* d, EvalConfig* e) {
  Consumer c(cfg);
  if (toy) {
    if (const auto* v = c.find("shapes")) {
      toy->shapes.clear();
      std::stringstream ss(*v);
      std::string item;
      while (std::getline(ss, item, ',')) toy->shapes.push_back(parse_shape(trim(item)));
    }
    c.count("train_per_class", toy->train_per_class);
    c.count("test_per_class", toy->test_per_class);
    c.choice("regime", toy->regime, parse_regime);
    c.number("jitter", toy->jitter);
    c.count("points", toy->points);
    c.seed("seed", toy->seed);
  }
  if (d) {
    c.count("ppc", d->ppc);
    c.count("iterations", d->iterations);
    c.count("t_batch", d->t_batch_per_class);
    if (const auto* v = c.find("lambda1")) {
      if (*v == "auto") d->lambda1.reset();
      else d->lambda1 = Consumer::to_double("lambda1", *v);
    }
    if (const auto* v = c.find("lambda2")) {
      if (*v == "auto") d->lambda2.reset();
      else d->lambda2 = Consumer::to_double("lambda2", *v);
    }
    c.number("lr_points", d->lr_points);
    c.number("momentum_points", d->momentum_points);
    c.number("weight_decay_points", d->weight_decay_points);
    c.number("lr_theta_x", d->lr_theta[0]);
    c.number("lr_theta_y", d->lr_theta[1]);
    c.number("lr_theta_z", d->lr_theta[2]);
    c.number("momentum_theta", d->momentum_theta);
    c.count("theta_step", d->theta_step);
    c.number("theta_decay", d->theta_decay);
    c.choice("init", d->init, parse_init);
    c.choice("alignment", d->alignment, parse_alignment);
    if (const auto* v = c.find("kernel")) {
      if (*v == "median") d->kernel.rule = KernelConfig::Bandwidth::median_heuristic;
      else if (*v == "fixed") d->kernel.rule = KernelConfig::Bandwidth::fixed;
      else fail(ErrorDomain::config, "kernel: expected median or fixed, got '" + *v + "'");
    }
    c.number("sigma", d->kernel.sigma);
    c.widths("widths", d->extractor.widths);
    c.flag("input_transform", d->extractor.include_input_transform);
    c.seed("seed", d->seed);
    c.count("eval_every", d->eval_every);
    c.choice("rotation", d->rotation, parse_rotation_mode);
    c.flag("optimize_points", d->optimize_points);
    c.count("jobs", d->jobs);
  }
  if (e) {
    c.count("eval_epochs", e->epochs);
    c.count("eval_batch", e->batch);
    c.number("eval_lr", e->lr);
    c.number("eval_momentum", e->momentum);
    c.number("eval_weight_decay", e->weight_decay);
    c.count("eval_lr_step", e->lr_step);
    c.number("eval_lr_decay", e->lr_decay);
    c.count("eval_repeats", e->repeats);
    c.widths("eval_trunk", e->trunk_widths);
    c.count("eval_hidden", e->hidden);
    c.flag("eval_input_transform", e->include_input_transform);
    c.choice("eval_augmentation", e->augmentation, parse_augmentation);
    c.seed("eval_seed", e->seed);
    c.count("eval_jobs", e->jobs);
  }
  c.reject_unknown();
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

ConfigMap to_config_map(const ToySpec& t) {
  std::string shapes;
  for (std::size_t i = 0; i < t.shapes.size(); ++i) shapes += (i ? "," : "") + std::string(shape_name(t.shapes[i]));
  return {{"shapes", shapes},
          {"train_per_class", std::to_string(t.train_per_class)},
          {"test_per_class", std::to_string(t.test_per_class)},
          {"regime", std::string(regime_name(t.regime))},
          {"jitter", format_double(t.jitter)},
          {"points", std::to_string(t.points)},
          {"seed", std::to_string(t.seed)}};
}

ConfigMap to_config_map(const DistillConfig& d) {
  const LossWeights w = d.loss_weights();
  return {{"ppc", std::to_string(d.ppc)},
          {"iterations", std::to_string(d.iterations)},
          {"t_batch", std::to_string(d.t_batch_per_class)},
          {"lambda1", format_double(w.lambda1)},
          {"lambda2", format_double(w.lambda2)},
          {"lr_points", format_double(d.lr_points)},
          {"momentum_points", format_double(d.momentum_points)},
          {"weight_decay_points", format_double(d.weight_decay_points)},
          {"lr_theta_x", format_double(d.lr_theta[0])},
          {"lr_theta_y", format_double(d.lr_theta[1])},
          {"lr_theta_z", format_double(d.lr_theta[2])},
          {"momentum_theta", format_double(d.momentum_theta)},
          {"theta_step", std::to_string(d.theta_step)},
          {"theta_decay", format_double(d.theta_decay)},
          {"init", std::string(init_name(d.init))},
          {"alignment", std::string(alignment_name(d.alignment))},
          {"kernel", d.kernel.rule == KernelConfig::Bandwidth::fixed ? "fixed" : "median"},
          {"sigma", format_double(d.kernel.sigma)},
          {"widths", fmt_widths(d.extractor.widths)},
          {"input_transform", fmt_bool(d.extractor.include_input_transform)},
          {"seed", std::to_string(d.seed)},
          {"eval_every", std::to_string(d.eval_every)},
          {"rotation", std::string(rotation_mode_name(d.rotation))},
          {"optimize_points", fmt_bool(d.optimize_points)},
          {"jobs", std::to_string(d.jobs)}};
}

ConfigMap to_config_map(const EvalConfig& e) {
  return {{"eval_epochs", std::to_string(e.epochs)},
          {"eval_batch", std::to_string(e.batch)},
          {"eval_lr", format_double(e.lr)},
          {"eval_momentum", format_double(e.momentum)},
          {"eval_weight_decay", format_double(e.weight_decay)},
          {"eval_lr_step", std::to_string(e.lr_step)},
          {"eval_lr_decay", format_double(e.lr_decay)},
          {"eval_repeats", std::to_string(e.repeats)},
          {"eval_trunk", fmt_widths(e.trunk_widths)},
          {"eval_hidden", std::to_string(e.hidden)},
          {"eval_input_transform", fmt_bool(e.include_input_transform)},
          {"eval_augmentation", std::string(augmentation_name(e.augmentation))},
          {"eval_seed", std::to_string(e.seed)},
          {"eval_jobs", std::to_string(e.jobs)}};
}

}  // namespace pcd
