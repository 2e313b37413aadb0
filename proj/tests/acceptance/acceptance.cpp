// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// nonzero if any criterion fails. Pass criterion numbers as arguments to run
// a subset.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <string>

#include <Eigen/LU>

#include "json.hpp"
#include "support.hpp"

#include "pcd/coreset.hpp"
#include "pcd/distill.hpp"
#include "pcd/error.hpp"
#include "pcd/evalh.hpp"
#include "pcd/gradcheck_suites.hpp"
#include "pcd/rotator.hpp"
#include "pcd/sadmloss.hpp"

using namespace pcd;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeeds = 5;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<ad::Value> consts(ad::Tape& tape, const std::vector<Matrix>& ms) {
  std::vector<ad::Value> out;
  for (const Matrix& m : ms) out.push_back(tape.constant(m));
  return out;
}

std::vector<Matrix> clouds(Rng& rng, std::size_t count, std::size_t n) {
  std::vector<Matrix> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(testing::random_cloud(rng, n).points);
  return out;
}

double sqdist(const Matrix& a, const Matrix& b) { return (a - b).squaredNorm(); }

double kernel_oracle(const std::vector<Matrix>& xs, const std::vector<Matrix>& ys, double sigma) {
  double total = 0.0;
  for (const Matrix& x : xs)
    for (const Matrix& y : ys) total += std::exp(-sqdist(x, y) / (2.0 * sigma));
  return total / static_cast<double>(xs.size() * ys.size());
}

ExtractorConfig small_extractor() {
  ExtractorConfig cfg;
  cfg.widths = {3, 16, 16, 8};
  return cfg;
}

// ---------------------------------------------------------------------------

Outcome gradient_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const SuiteResult r = pipeline_suite(PipelineShape{}, 20, 7);
  const double secs = seconds_since(t0);
  return {r.pass && r.instances >= 20 && secs <= 60.0,
          fmt("%zu instances (%zu excluded for ties), max rel error %.3g <= 1e-4, %.1f s <= 60 s", r.instances,
              r.excluded, r.max_rel_error, secs)};
}

Outcome loss_identities() {
  Rng rng(11);
  double worst_self = 0.0, worst_sadm = 0.0, worst_kernel = 0.0, lowest = 0.0;
  const LossWeights lw{0.006, 0.003};
  for (int trial = 0; trial < 100; ++trial) {
    ad::Tape tape;
    const NetworkWeights w = init_weights(small_extractor(), rng.next());
    const BoundNetwork net = bind(tape, w, false);
    const std::vector<Matrix> xs = clouds(rng, 4, 16), ys = clouds(rng, 2, 16);
    const auto vx = consts(tape, xs), vy = consts(tape, ys);

    worst_self = std::max(worst_self, std::abs(mmd_loss(vx, vx, {}).item()));
    worst_sadm = std::max(worst_sadm, std::abs(l_sadm(net, xs, vx, lw, AlignmentStrategy::channel_sorted, {}).item()));

    const double sigma = rng.uniform(0.2, 3.0);
    worst_kernel = std::max(worst_kernel, std::abs(gaussian_mean_kernel(vx, vy, sigma).item() - kernel_oracle(xs, ys, sigma)));
    for (double v : {mmd_loss(vx, vy, {}).item(), mmd_loss(vx, vy, KernelConfig::fixed(sigma)).item(),
                     l_sadm(net, xs, vy, lw, AlignmentStrategy::channel_sorted, {}).item(),
                     l_sadm(net, xs, vy, lw, AlignmentStrategy::unsorted, {}).item()})
      lowest = std::min(lowest, v);
  }
  return {worst_self <= 1e-12 && worst_sadm <= 1e-9 && worst_kernel <= 1e-12 && lowest >= -1e-9,
          fmt("100 instances: |mmd(X,X)| %.2g, |l_sadm(T,T)| %.2g, kernel vs oracle %.2g, min loss %.2g",
              worst_self, worst_sadm, worst_kernel, lowest)};
}

Outcome permutation_invariance() {
  Rng rng(12);
  const LossWeights lw{0.006, 0.003};
  double worst = 0.0, unsorted_change = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    ad::Tape tape;
    const BoundNetwork net = bind(tape, init_weights(small_extractor(), rng.next()), false);
    const std::vector<Matrix> t = clouds(rng, 4, 16), s = clouds(rng, 2, 16);
    std::vector<Matrix> tp, sp;
    for (const Matrix& m : t) tp.push_back(testing::shuffle_rows(m, rng));
    for (const Matrix& m : s) sp.push_back(testing::shuffle_rows(m, rng));
    const double a = l_sadm(net, t, consts(tape, s), lw, AlignmentStrategy::channel_sorted, {}).item();
    const double b = l_sadm(net, tp, consts(tape, sp), lw, AlignmentStrategy::channel_sorted, {}).item();
    worst = std::max(worst, std::abs(a - b) / std::max(std::abs(a), 1e-300));
    const double u = l_sadm(net, t, consts(tape, s), lw, AlignmentStrategy::unsorted, {}).item();
    const double v = l_sadm(net, tp, consts(tape, sp), lw, AlignmentStrategy::unsorted, {}).item();
    unsorted_change = std::max(unsorted_change, std::abs(u - v));
  }
  return {worst <= 1e-12 && unsorted_change > 1e-6,
          fmt("100 instances: sorted rel change %.2g <= 1e-12; unsorted max change %.3g > 1e-6", worst,
              unsorted_change)};
}

// --- desk-scale toy runs shared by criteria 4 to 7 ------------------------------

// Point learning rate for the desk profile; see README.
constexpr double kDeskLrPoints = 3.0;

DistillConfig desk_config(std::uint64_t seed) {
  DistillConfig cfg;
  cfg.ppc = 3;
  cfg.iterations = 300;
  cfg.seed = seed;
  cfg.lr_points = kDeskLrPoints;
  return cfg;
}

ToySplit desk_toy(std::uint64_t seed, RotationRegime regime) {
  ToySpec spec;
  spec.regime = regime;
  spec.seed = seed;
  return gen_toy(spec);
}

EvalConfig desk_eval(std::uint64_t seed) {
  EvalConfig cfg;
  cfg.repeats = 5;
  cfg.seed = seed;
  return cfg;
}

enum class Variant { neither, theta_only, points_only, both, unsorted };

DistillConfig variant_config(Variant v, std::uint64_t seed) {
  DistillConfig cfg = desk_config(seed);
  switch (v) {
    case Variant::neither: cfg.iterations = 0; cfg.rotation = RotationMode::off; break;
    case Variant::theta_only: cfg.optimize_points = false; break;
    case Variant::points_only: cfg.rotation = RotationMode::off; break;
    case Variant::both: break;
    case Variant::unsorted: cfg.alignment = AlignmentStrategy::unsorted; break;
  }
  return cfg;
}

struct VariantRun {
  DistillResult result;
  double accuracy = 0.0;
  double distill_seconds = 0.0;
  double eval_seconds = 0.0;
};

// Rotated-regime runs keyed by (seed, variant), computed on first use.
class RotatedRuns {
 public:
  const VariantRun& get(std::uint64_t seed, Variant v, bool with_eval) {
    if (!splits_.count(seed)) splits_.emplace(seed, desk_toy(seed, RotationRegime::rotated));
    const ToySplit& split = splits_.at(seed);
    auto key = std::make_pair(seed, v);
    if (!runs_.count(key)) {
      VariantRun run;
      const auto t0 = std::chrono::steady_clock::now();
      run.result = run_distillation(split.train, variant_config(v, seed));
      run.distill_seconds = seconds_since(t0);
      runs_.emplace(key, std::move(run));
    }
    VariantRun& run = runs_.at(key);
    if (with_eval && run.eval_seconds == 0.0) {
      const auto t0 = std::chrono::steady_clock::now();
      run.accuracy = repeated_eval(bake_rotations(run.result.set), split.test, desk_eval(seed)).mean;
      run.eval_seconds = seconds_since(t0);
    }
    return run;
  }

  const ToySplit& split(std::uint64_t seed) const { return splits_.at(seed); }

 private:
  std::map<std::uint64_t, ToySplit> splits_;
  std::map<std::pair<std::uint64_t, Variant>, VariantRun> runs_;
};

RotatedRuns& rotated_runs() {
  static RotatedRuns runs;
  return runs;
}

// Loss of a finished set under four fresh extractors and batches that no
// training iteration used. Both runs being compared see the same ones.
double final_training_loss(const SyntheticSet& s, const LabeledDataset& ds, std::uint64_t seed) {
  const DistillConfig cfg = desk_config(seed);
  double total = 0.0;
  for (std::size_t k = 0; k < 4; ++k) total += evaluate_loss(s, ds, cfg, iteration_seed(seed, cfg.iterations + k));
  return total / 4.0;
}

Outcome rotation_special_case() {
  // (a) exact
  const ToySplit small = [] {
    ToySpec spec;
    spec.regime = RotationRegime::rotated;
    spec.train_per_class = 20;
    spec.test_per_class = 1;
    spec.seed = 3;
    return gen_toy(spec);
  }();
  DistillConfig off = desk_config(3);
  off.iterations = 25;
  off.rotation = RotationMode::off;
  DistillConfig frozen = off;
  frozen.rotation = RotationMode::frozen;
  const DistillResult a = run_distillation(small.train, off);
  const DistillResult b = run_distillation(small.train, frozen);
  bool identical = a.loss_trace == b.loss_trace;
  for (std::size_t c = 0; c < a.set.num_classes(); ++c)
    for (std::size_t j = 0; j < a.set.ppc(); ++j)
      identical = identical && a.set.points[c][j] == b.set.points[c][j] && b.set.angles[c][j] == RotationParams{};

  // (b) empirical
  int wins = 0;
  double secs = 0.0;
  std::string losses;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    const VariantRun& joint = rotated_runs().get(seed, Variant::both, false);
    const VariantRun& s_only = rotated_runs().get(seed, Variant::points_only, false);
    secs += joint.distill_seconds + s_only.distill_seconds;
    const LabeledDataset& train = rotated_runs().split(seed).train;
    const double lj = final_training_loss(joint.result.set, train, seed);
    const double ls = final_training_loss(s_only.result.set, train, seed);
    wins += lj <= ls ? 1 : 0;
    losses += fmt(" %.4g/%.4g", lj, ls);
  }
  return {identical && wins >= 4 && secs <= 900.0,
          fmt("(a) off vs frozen bit-identical: %s; (b) joint <= S-only in %d/5 seeds (joint/S-only:%s), %.0f s",
              identical ? "yes" : "no", wins, losses.c_str(), secs)};
}

Outcome toy_distillation() {
  int wins = 0;
  double secs = 0.0;
  std::string accs;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const ToySplit split = desk_toy(seed, RotationRegime::mixed);
    const DistillResult r = run_distillation(split.train, desk_config(seed));
    const double distilled = repeated_eval(bake_rotations(r.set), split.test, desk_eval(seed)).mean;
    const LabeledDataset random = select_random(split.train, 3, seed).subset(split.train);
    const double baseline = repeated_eval(random, split.test, desk_eval(seed)).mean;
    secs += seconds_since(t0);
    wins += distilled - baseline >= 0.05 ? 1 : 0;
    accs += fmt(" %.3f/%.3f", distilled, baseline);
  }
  return {wins >= 4 && secs <= 1200.0,
          fmt("distilled beats random by >= 5 pp in %d/5 seeds (distilled/random:%s), %.0f s", wins, accs.c_str(),
              secs)};
}

Outcome alignment_ablation() {
  int wins = 0;
  std::string accs;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    const double sorted = rotated_runs().get(seed, Variant::both, true).accuracy;
    const double unsorted = rotated_runs().get(seed, Variant::unsorted, true).accuracy;
    wins += sorted >= unsorted ? 1 : 0;
    accs += fmt(" %.3f/%.3f", sorted, unsorted);
  }
  return {wins >= 4, fmt("channel_sorted >= unsorted in %d/5 seeds (sorted/unsorted:%s)", wins, accs.c_str())};
}

Outcome rotation_grid() {
  const Variant rows[] = {Variant::neither, Variant::theta_only, Variant::points_only, Variant::both};
  int wins = 0;
  std::string accs;
  for (std::uint64_t seed = 0; seed < kSeeds; ++seed) {
    double acc[4];
    for (int i = 0; i < 4; ++i) acc[i] = rotated_runs().get(seed, rows[i], true).accuracy;
    wins += acc[3] >= std::max({acc[0], acc[1], acc[2]}) ? 1 : 0;
    accs += fmt(" [%.3f %.3f %.3f %.3f]", acc[0], acc[1], acc[2], acc[3]);
  }
  return {wins >= 3,
          fmt("both is highest in %d/5 seeds (neither/theta/S/both:%s)", wins, accs.c_str())};
}

Outcome coreset_equality() {
  std::vector<LabeledDataset> datasets;
  for (auto regime : {RotationRegime::aligned, RotationRegime::rotated, RotationRegime::mixed})
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      ToySpec spec;
      spec.regime = regime;
      spec.train_per_class = 15;
      spec.test_per_class = 1;
      spec.points = 64;
      spec.seed = seed;
      datasets.push_back(gen_toy(spec).train);
    }
  for (std::uint64_t seed = 0; seed < 6; ++seed)
    datasets.push_back(testing::random_dataset(100 + seed, 3 + static_cast<int>(seed % 3), 5 + seed, 24));

  std::size_t equal = 0;
  for (std::size_t i = 0; i < datasets.size(); ++i) {
    ExtractorConfig ext;
    if (i % 2 == 1) ext.widths = {3, 16, 8};
    const auto h = select(SelectionMethod::herding, datasets[i], 1, i, ext).selected;
    const auto k = select(SelectionMethod::kcenter, datasets[i], 1, i, ext).selected;
    equal += h == k ? 1 : 0;
  }
  return {equal == datasets.size(), fmt("herding == k-center at PPC=1 on %zu/%zu datasets", equal, datasets.size())};
}

Outcome rotation_operator() {
  const bool identity = rotation_matrix({}) == Mat3::Identity();
  Rng rng(13);
  double ortho = 0.0, det = 0.0, deriv = 0.0;
  const double h = 1e-5;
  for (int i = 0; i < 1000; ++i) {
    const RotationParams t{rng.uniform(-2 * std::numbers::pi, 2 * std::numbers::pi),
                           rng.uniform(-2 * std::numbers::pi, 2 * std::numbers::pi),
                           rng.uniform(-2 * std::numbers::pi, 2 * std::numbers::pi)};
    const Mat3 r = rotation_matrix(t);
    ortho = std::max(ortho, (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff());
    det = std::max(det, std::abs(r.determinant() - 1.0));
    const auto d = d_rotation_d_theta(t);
    for (std::size_t k = 0; k < 3; ++k) {
      RotationParams up = t, down = t;
      up[k] += h;
      down[k] -= h;
      const Mat3 fd = (rotation_matrix(up) - rotation_matrix(down)) / (2 * h);
      deriv = std::max(deriv, (fd - d[k]).cwiseAbs().maxCoeff());
    }
  }
  return {identity && ortho <= 1e-12 && det <= 1e-12 && deriv <= 1e-8,
          fmt("R(0)=I %s; 1000 angles: |RtR-I| %.2g, |det-1| %.2g, dR vs FD %.2g", identity ? "exact" : "NOT exact",
              ortho, det, deriv)};
}

int run_cli(const std::string& args, const fs::path& dir) {
  const std::string cmd = "cd '" + dir.string() + "' && '" PCDISTILL_BIN "' " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism() {
  testing::TempDir dir("acceptance");
  if (run_cli("gen-toy --out-dir toy --train-per-class 20 --test-per-class 2 --points 128 --regime mixed --seed 8",
              dir.path) != 0)
    return {false, "gen-toy failed"};
  const std::string distill =
      "distill --train ../toy/train.pcds --ppc 3 --iterations 20 --seed 8 --lr-points 10 --set widths=3,32,64,32";
  for (const char* sub : {"one", "two", "threaded"}) {
    fs::create_directories(dir.path / sub);
    const std::string extra = std::string(sub) == "threaded" ? " --jobs 2" : "";
    if (run_cli(distill + extra + " --out d.pcds", dir.path / sub) != 0) return {false, fmt("distill %s failed", sub)};
  }
  const bool same_set = read_file(dir.path / "one/d.pcds") == read_file(dir.path / "two/d.pcds");
  const bool same_trace = read_file(dir.path / "one/d.pcds.loss.csv") == read_file(dir.path / "two/d.pcds.loss.csv");
  const auto a = nlohmann::json::parse(read_file(dir.path / "one/d.pcds.manifest.json"))["loss_trace"];
  const auto t = nlohmann::json::parse(read_file(dir.path / "threaded/d.pcds.manifest.json"))["loss_trace"];
  double worst = a.size() == t.size() && a.size() == 20 ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(a.size(), t.size()); ++i)
    worst = std::max(worst, std::abs(a[i].get<double>() - t[i].get<double>()));
  return {same_set && same_trace && worst <= 1e-9,
          fmt("PCDS bytes identical: %s; loss trace identical: %s; --jobs 2 max loss difference %.2g",
              same_set ? "yes" : "no", same_trace ? "yes" : "no", worst)};
}

Outcome format_robustness() {
  const std::vector<std::string> valid = {
      "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n",
      "OFF3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n",
      "OFF\n# square\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n",
      "COFF\n3 1 0\n0 0 0 255 0 0 255\n1 0 0 0 255 0 255\n0 1 0 0 0 255 255\n3 0 1 2\n",
  };
  std::size_t accepted = 0;
  for (const std::string& text : valid) {
    try {
      parse_off(text);
      ++accepted;
    } catch (const Error&) {
    }
  }
  const std::vector<std::string> invalid = {
      "PLY\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n",
      "OFF\n3 1 0\n0 0 0\n1 x 0\n0 1 0\n3 0 1 2\n",
      "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 5\n",
      "OFF\n3 2 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n",
      "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n2 0 1\n",
      "OFF\nthree 1 0\n",
  };
  std::size_t rejected = 0;
  for (const std::string& text : invalid) {
    try {
      parse_off(text);
    } catch (const Error& e) {
      if (e.domain() == ErrorDomain::parse && std::string(e.what()).find("line ") != std::string::npos) ++rejected;
    }
  }

  Rng rng(14);
  LabeledDataset ds = testing::random_dataset(15, 3, 4, 37);
  ds.class_names[1] = "chaise longue";
  ds.clouds[2].points(0, 0) = -0.0;
  ds.clouds[3].points(1, 1) = 5e-324;
  const std::string bytes = encode_pcds(ds);
  const LabeledDataset back = decode_pcds(bytes);
  bool exact = encode_pcds(back) == bytes && back.labels == ds.labels && back.class_names == ds.class_names;
  // Coordinates are stored as float32: decoding must give back exactly the
  // float-rounded inputs, bit for bit.
  for (std::size_t i = 0; i < ds.size(); ++i)
    for (Eigen::Index k = 0; k < ds.clouds[i].points.size(); ++k) {
      const double want = static_cast<float>(ds.clouds[i].points.data()[k]);
      const double got = back.clouds[i].points.data()[k];
      exact = exact && std::memcmp(&want, &got, sizeof(double)) == 0;
    }

  const Matrix pts = testing::random_matrix(rng, 1000, 3, -3.0, 3.0);
  const auto codes = morton_codes(pts);
  const Eigen::RowVector3d lo = pts.colwise().minCoeff(), hi = pts.colwise().maxCoeff();
  std::size_t morton_ok = 0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    std::uint32_t oracle = 0;
    for (int k = 0; k < 3; ++k) {
      const double t = (pts(i, k) - lo(k)) / (hi(k) - lo(k));
      const auto q = static_cast<std::uint32_t>(std::clamp(std::floor(t * 1024.0), 0.0, 1023.0));
      for (int b = 0; b < 10; ++b) oracle |= ((q >> b) & 1u) << (3 * b + k);
    }
    morton_ok += codes[static_cast<std::size_t>(i)] == oracle ? 1 : 0;
  }
  return {accepted == valid.size() && rejected == invalid.size() && exact && morton_ok == 1000,
          fmt("OFF accepted %zu/%zu valid, rejected %zu/%zu invalid with line numbers; PCDS round trip %s; "
              "Morton %zu/1000",
              accepted, valid.size(), rejected, invalid.size(), exact ? "bit-exact" : "NOT exact", morton_ok)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient oracle", gradient_oracle},
      {"loss identities", loss_identities},
      {"permutation invariance", permutation_invariance},
      {"rotation special case and joint descent", rotation_special_case},
      {"toy distillation beats random selection", toy_distillation},
      {"alignment ablation direction", alignment_ablation},
      {"rotation ablation grid", rotation_grid},
      {"coreset equality at PPC=1", coreset_equality},
      {"rotation operator", rotation_operator},
      {"determinism", determinism},
      {"format robustness", format_robustness},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::printf("%s %2d %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
