// pcdistill: point-cloud dataset distillation command-line tool.
//
// Exit codes: 0 success, 1 validation/input error, 2 divergence.
// Errors are printed as a single line "ERROR <domain>: message".

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "pcd/cli.hpp"
#include "pcd/coreset.hpp"
#include "pcd/distill.hpp"
#include "pcd/error.hpp"
#include "pcd/evalh.hpp"
#include "pcd/gradcheck_suites.hpp"
#include "pcd/pcdata.hpp"
#include "pcd/random.hpp"

namespace fs = std::filesystem;
using namespace pcd;

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// --set key=value pairs, applied last.
ConfigMap parse_sets(const std::vector<std::string>& sets) {
  ConfigMap out;
  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    require(eq != std::string::npos && eq > 0, ErrorDomain::config,
            "--set expects key=value, got '" + s + "'");
    out[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return out;
}

ConfigMap load_config(const std::string& path) {
  return path.empty() ? ConfigMap{} : parse_config(read_file(path));
}

void write_manifest(const RunManifest& m, const fs::path& path) {
  write_file(path, m.to_json().dump(2) + "\n");
}

std::string file_digest(const fs::path& p) { return digest_hex(read_file(p)); }

// ---- gen-toy ---------------------------------------------------------------

struct GenToyArgs {
  std::string spec, out_dir = ".";
  std::optional<std::string> shapes, regime;
  std::optional<std::size_t> train_per_class, test_per_class, points;
  std::optional<double> jitter;
  std::optional<std::uint64_t> seed;
};

int gen_toy_cmd(const GenToyArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  ConfigMap overlay;
  if (a.shapes) overlay["shapes"] = *a.shapes;
  if (a.regime) overlay["regime"] = *a.regime;
  if (a.train_per_class) overlay["train_per_class"] = std::to_string(*a.train_per_class);
  if (a.test_per_class) overlay["test_per_class"] = std::to_string(*a.test_per_class);
  if (a.points) overlay["points"] = std::to_string(*a.points);
  if (a.jitter) overlay["jitter"] = format_double(*a.jitter);
  if (a.seed) overlay["seed"] = std::to_string(*a.seed);
  ToySpec spec;
  apply_config(merge(load_config(a.spec), overlay), &spec, nullptr, nullptr);

  const ToySplit split = gen_toy(spec);
  fs::create_directories(a.out_dir);
  const fs::path train = fs::path(a.out_dir) / "train.pcds";
  const fs::path test = fs::path(a.out_dir) / "test.pcds";
  write_dataset(split.train, train);
  write_dataset(split.test, test);

  RunManifest m;
  m.command = "gen-toy";
  m.config = to_config_map(spec);
  m.outputs[train.string()] = file_digest(train);
  m.outputs[test.string()] = file_digest(test);
  m.wall_seconds = seconds_since(t0);
  write_manifest(m, fs::path(a.out_dir) / "gen-toy.manifest.json");
  std::printf("%s %s\n", train.c_str(), m.outputs[train.string()].get<std::string>().c_str());
  std::printf("%s %s\n", test.c_str(), m.outputs[test.string()].get<std::string>().c_str());
  return 0;
}

// ---- import-off ------------------------------------------------------------

int import_off_cmd(const std::string& dir, std::size_t points, std::uint64_t seed,
                   const std::string& out) {
  const auto t0 = std::chrono::steady_clock::now();
  require(fs::is_directory(dir), ErrorDomain::io, "not a directory: " + dir);
  std::vector<fs::path> classes;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) classes.push_back(e.path());
  std::sort(classes.begin(), classes.end());
  require(!classes.empty(), ErrorDomain::data, "no class subdirectories in " + dir);

  LabeledDataset ds;
  RunManifest m;
  std::size_t item = 0;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    ds.class_names.push_back(classes[c].filename().string());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(classes[c]))
      if (e.is_regular_file() && e.path().extension() == ".off") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const fs::path& f : files) {
      const std::string text = read_file(f);
      Mesh mesh;
      try {
        mesh = parse_off(text);
      } catch (const Error& e) {
        fail(e.domain(), f.string() + ": " + e.what());
      }
      ds.push_back(sample_mesh_surface(mesh, points, derive_seed(seed, Stream::points, item++)),
                   static_cast<int>(c));
      m.inputs[f.string()] = digest_hex(text);
    }
  }
  require(ds.size() > 0, ErrorDomain::data, "no .off files found under " + dir);
  write_dataset(ds, out);

  m.command = "import-off";
  m.config = {{"dir", dir}, {"points", std::to_string(points)}, {"seed", std::to_string(seed)}};
  m.outputs[out] = file_digest(out);
  m.wall_seconds = seconds_since(t0);
  write_manifest(m, out + ".manifest.json");
  std::printf("%s %zu items, %zu classes\n", out.c_str(), ds.size(), ds.class_names.size());
  return 0;
}

// ---- coreset ---------------------------------------------------------------

int coreset_cmd(const std::string& dataset, const std::string& method, std::size_t ppc,
                std::uint64_t seed, const std::string& out, std::string index_out,
                const std::vector<std::string>& sets) {
  const auto t0 = std::chrono::steady_clock::now();
  DistillConfig d;  // only the extractor keys matter here
  apply_config(parse_sets(sets), nullptr, &d, nullptr);
  const LabeledDataset ds = read_dataset(dataset);
  const SelectionResult sel = select(parse_selection(method), ds, ppc, seed, d.extractor);
  if (index_out.empty()) index_out = out + ".idx";
  write_file(index_out, sel.to_index_file());
  write_dataset(sel.subset(ds), out);

  RunManifest m;
  m.command = "coreset";
  m.config = to_config_map(d);
  m.config["method"] = method;
  m.config["ppc"] = std::to_string(ppc);
  m.config["seed"] = std::to_string(seed);
  m.inputs[dataset] = file_digest(dataset);
  m.outputs[out] = file_digest(out);
  m.outputs[index_out] = file_digest(index_out);
  m.wall_seconds = seconds_since(t0);
  write_manifest(m, out + ".manifest.json");
  std::fputs(sel.to_index_file().c_str(), stdout);
  return 0;
}

// ---- distill ---------------------------------------------------------------

struct DistillArgs {
  std::string config, train, test, out = "distilled.pcds", manifest, trace;
  std::optional<std::size_t> ppc, iterations, jobs;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda1, lambda2, lr_points;
  std::optional<std::string> init, alignment, rotation;
  std::vector<std::string> sets;
};

int distill_cmd(const DistillArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  ConfigMap overlay;
  if (a.ppc) overlay["ppc"] = std::to_string(*a.ppc);
  if (a.iterations) overlay["iterations"] = std::to_string(*a.iterations);
  if (a.jobs) overlay["jobs"] = std::to_string(*a.jobs);
  if (a.seed) overlay["seed"] = std::to_string(*a.seed);
  if (a.lambda1) overlay["lambda1"] = format_double(*a.lambda1);
  if (a.lambda2) overlay["lambda2"] = format_double(*a.lambda2);
  if (a.lr_points) overlay["lr_points"] = format_double(*a.lr_points);
  if (a.init) overlay["init"] = *a.init;
  if (a.alignment) overlay["alignment"] = *a.alignment;
  if (a.rotation) overlay["rotation"] = *a.rotation;
  const ConfigMap resolved = merge(merge(load_config(a.config), overlay), parse_sets(a.sets));

  DistillConfig cfg;
  EvalConfig ecfg;
  ecfg.repeats = 1;
  apply_config(resolved, nullptr, &cfg, &ecfg);
  // Materialize the loss weights so the manifest shows the values in effect.
  const LossWeights w = cfg.loss_weights();
  cfg.lambda1 = w.lambda1;
  cfg.lambda2 = w.lambda2;

  const LabeledDataset train = read_dataset(a.train);
  std::optional<LabeledDataset> test;
  if (!a.test.empty()) test = read_dataset(a.test);

  ProgressSink sink;
  if (test) {
    sink.evaluate = [&](std::size_t, const SyntheticSet& s) {
      return repeated_eval(bake_rotations(s), *test, ecfg).mean;
    };
  }
  const DistillResult res = run_distillation(train, cfg, sink);
  const LabeledDataset out = bake_rotations(res.set);
  write_dataset(out, a.out);

  const std::string trace_path = a.trace.empty() ? a.out + ".loss.csv" : a.trace;
  std::string trace = "iteration,loss\n";
  for (std::size_t i = 0; i < res.loss_trace.size(); ++i)
    trace += std::to_string(i) + "," + format_double(res.loss_trace[i]) + "\n";
  write_file(trace_path, trace);

  RunManifest m;
  m.command = "distill";
  m.config = to_config_map(cfg);
  if (test) m.config = merge(m.config, to_config_map(ecfg));
  m.inputs[a.train] = file_digest(a.train);
  if (test) m.inputs[a.test] = file_digest(a.test);
  m.outputs[a.out] = file_digest(a.out);
  m.outputs[trace_path] = file_digest(trace_path);
  m.extra["loss_trace"] = res.loss_trace;
  nlohmann::json evals = nlohmann::json::array();
  for (const EvalCheckpoint& e : res.eval_trace)
    evals.push_back({{"iteration", e.iteration}, {"accuracy", e.accuracy}});
  m.extra["eval_checkpoints"] = evals;
  m.wall_seconds = seconds_since(t0);
  write_manifest(m, a.manifest.empty() ? a.out + ".manifest.json" : a.manifest);

  std::printf("lambda1=%s lambda2=%s final_loss=%s\n", format_double(w.lambda1).c_str(),
              format_double(w.lambda2).c_str(), format_double(res.loss_trace.back()).c_str());
  for (const EvalCheckpoint& e : res.eval_trace)
    std::printf("eval iteration=%zu accuracy=%.4f\n", e.iteration, e.accuracy);
  return 0;
}

// ---- eval ------------------------------------------------------------------

struct EvalArgs {
  std::string config, train, test, report, csv, dataset_name, method = "unknown";
  std::optional<std::size_t> repeats, epochs, jobs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> augmentation;
  std::vector<std::string> sets;
};

int eval_cmd(const EvalArgs& a) {
  const auto t0 = std::chrono::steady_clock::now();
  ConfigMap overlay;
  if (a.repeats) overlay["eval_repeats"] = std::to_string(*a.repeats);
  if (a.epochs) overlay["eval_epochs"] = std::to_string(*a.epochs);
  if (a.jobs) overlay["eval_jobs"] = std::to_string(*a.jobs);
  if (a.seed) overlay["eval_seed"] = std::to_string(*a.seed);
  if (a.augmentation) overlay["eval_augmentation"] = *a.augmentation;
  EvalConfig cfg;
  apply_config(merge(merge(load_config(a.config), overlay), parse_sets(a.sets)), nullptr, nullptr, &cfg);

  const LabeledDataset train = read_dataset(a.train);
  const LabeledDataset test = read_dataset(a.test);
  const EvalReport report = repeated_eval(train, test, cfg);

  const std::string report_path = a.report.empty() ? a.train + ".eval.json" : a.report;
  write_file(report_path, report.to_json() + "\n");
  const std::string name = a.dataset_name.empty() ? fs::path(a.test).stem().string() : a.dataset_name;
  const std::size_t ppc = train.size() / static_cast<std::size_t>(train.num_classes());
  const std::string row = csv_row(name, a.method, ppc, cfg.seed, report);
  if (!a.csv.empty()) {
    const bool fresh = !fs::exists(a.csv);
    std::ofstream f(a.csv, std::ios::app);
    require(static_cast<bool>(f), ErrorDomain::io, "cannot open " + a.csv);
    if (fresh) f << kCsvHeader << "\n";
    f << row << "\n";
  }

  RunManifest m;
  m.command = "eval";
  m.config = to_config_map(cfg);
  m.inputs[a.train] = file_digest(a.train);
  m.inputs[a.test] = file_digest(a.test);
  m.outputs[report_path] = file_digest(report_path);
  m.wall_seconds = seconds_since(t0);
  write_manifest(m, report_path + ".manifest.json");
  std::printf("%s\n%s\n", std::string(kCsvHeader).c_str(), row.c_str());
  return 0;
}

// ---- export-ply ------------------------------------------------------------

int export_ply_cmd(const std::string& dataset, const std::string& out_dir, const std::string& axis) {
  const auto t0 = std::chrono::steady_clock::now();
  const Axis ax = parse_axis(axis);
  const LabeledDataset ds = read_dataset(dataset);
  fs::create_directories(out_dir);
  RunManifest m;
  std::vector<std::size_t> seen(ds.class_names.size(), 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto c = static_cast<std::size_t>(ds.labels[i]);
    const fs::path p = fs::path(out_dir) / (ds.class_names[c] + "_" + std::to_string(seen[c]++) + ".ply");
    export_ply(ds.clouds[i], p, ax);
    m.outputs[p.string()] = file_digest(p);
  }
  m.command = "export-ply";
  m.config = {{"color_axis", axis}};
  m.inputs[dataset] = file_digest(dataset);
  m.wall_seconds = seconds_since(t0);
  write_manifest(m, fs::path(out_dir) / "export-ply.manifest.json");
  std::printf("%zu files written to %s\n", ds.size(), out_dir.c_str());
  return 0;
}

// ---- gradcheck -------------------------------------------------------------

int gradcheck_cmd(const std::string& profile, std::uint64_t seed) {
  require(profile == "small" || profile == "full", ErrorDomain::config,
          "profile must be small or full");
  const auto results = run_gradcheck_suites(
      profile == "full" ? GradcheckProfile::full : GradcheckProfile::small, seed);
  bool ok = true;
  std::printf("%-16s %9s %9s %12s %10s  %s\n", "suite", "instances", "excluded", "max_rel_err",
              "tolerance", "result");
  for (const SuiteResult& r : results) {
    std::printf("%-16s %9zu %9zu %12.3e %10.0e  %s\n", r.name.c_str(), r.instances, r.excluded,
                r.max_rel_error, r.tolerance, r.pass ? "PASS" : "FAIL");
    ok = ok && r.pass;
  }
  if (!ok) std::printf("ERROR contract: gradient check failed\n");
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Point-cloud dataset distillation"};
  app.require_subcommand(1);

  GenToyArgs toy;
  auto* gen = app.add_subcommand("gen-toy", "generate the synthetic toy shape dataset");
  gen->add_option("--spec", toy.spec, "key = value file with toy settings");
  gen->add_option("--out-dir", toy.out_dir, "directory for train.pcds and test.pcds");
  gen->add_option("--shapes", toy.shapes, "comma-separated shape list");
  gen->add_option("--regime", toy.regime, "aligned|mixed|rotated");
  gen->add_option("--train-per-class", toy.train_per_class);
  gen->add_option("--test-per-class", toy.test_per_class);
  gen->add_option("--points", toy.points);
  gen->add_option("--jitter", toy.jitter);
  gen->add_option("--seed", toy.seed);

  std::string off_dir, off_out = "imported.pcds";
  std::size_t off_points = 1024;
  std::uint64_t off_seed = 0;
  auto* imp = app.add_subcommand("import-off", "sample OFF meshes (one subdirectory per class)");
  imp->add_option("--dir", off_dir)->required();
  imp->add_option("--points", off_points);
  imp->add_option("--seed", off_seed);
  imp->add_option("--out", off_out);

  std::string cs_dataset, cs_method = "random", cs_out = "coreset.pcds", cs_index;
  std::size_t cs_ppc = 1;
  std::uint64_t cs_seed = 0;
  std::vector<std::string> cs_sets;
  auto* cs = app.add_subcommand("coreset", "select a coreset baseline");
  cs->add_option("--dataset", cs_dataset)->required();
  cs->add_option("--method", cs_method, "random|herding|kcenter");
  cs->add_option("--ppc", cs_ppc);
  cs->add_option("--seed", cs_seed);
  cs->add_option("--out", cs_out);
  cs->add_option("--index-out", cs_index);
  cs->add_option("--set", cs_sets, "key=value extractor override");

  DistillArgs da;
  auto* dist = app.add_subcommand("distill", "distill a synthetic set");
  dist->add_option("--config", da.config);
  dist->add_option("--train", da.train)->required();
  dist->add_option("--test", da.test, "evaluate checkpoints against this set");
  dist->add_option("--out", da.out);
  dist->add_option("--manifest", da.manifest);
  dist->add_option("--trace", da.trace);
  dist->add_option("--ppc", da.ppc);
  dist->add_option("--iterations", da.iterations);
  dist->add_option("--jobs", da.jobs);
  dist->add_option("--seed", da.seed);
  dist->add_option("--lambda1", da.lambda1);
  dist->add_option("--lambda2", da.lambda2);
  dist->add_option("--lr-points", da.lr_points);
  dist->add_option("--init", da.init);
  dist->add_option("--alignment", da.alignment);
  dist->add_option("--rotation", da.rotation);
  dist->add_option("--set", da.sets, "key=value override");

  EvalArgs ea;
  auto* ev = app.add_subcommand("eval", "train classifiers and report test accuracy");
  ev->add_option("--config", ea.config);
  ev->add_option("--train", ea.train)->required();
  ev->add_option("--test", ea.test)->required();
  ev->add_option("--report", ea.report);
  ev->add_option("--csv", ea.csv, "append a CSV row here");
  ev->add_option("--dataset-name", ea.dataset_name);
  ev->add_option("--method", ea.method);
  ev->add_option("--repeats", ea.repeats);
  ev->add_option("--epochs", ea.epochs);
  ev->add_option("--jobs", ea.jobs);
  ev->add_option("--seed", ea.seed);
  ev->add_option("--augmentation", ea.augmentation);
  ev->add_option("--set", ea.sets, "key=value override");

  std::string ply_dataset, ply_dir = "ply", ply_axis = "y";
  auto* ply = app.add_subcommand("export-ply", "write each cloud as an ASCII PLY file");
  ply->add_option("--dataset", ply_dataset)->required();
  ply->add_option("--out-dir", ply_dir);
  ply->add_option("--color-axis", ply_axis);

  std::string gc_profile = "small";
  std::uint64_t gc_seed = 7;
  auto* gc = app.add_subcommand("gradcheck", "finite-difference checks of every gradient");
  gc->add_option("--profile", gc_profile, "small|full");
  gc->add_option("--seed", gc_seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::fprintf(stderr, "ERROR config: %s\n", e.what());
    return 1;
  }

  try {
    if (*gen) return gen_toy_cmd(toy);
    if (*imp) return import_off_cmd(off_dir, off_points, off_seed, off_out);
    if (*cs) return coreset_cmd(cs_dataset, cs_method, cs_ppc, cs_seed, cs_out, cs_index, cs_sets);
    if (*dist) return distill_cmd(da);
    if (*ev) return eval_cmd(ea);
    if (*ply) return export_ply_cmd(ply_dataset, ply_dir, ply_axis);
    if (*gc) return gradcheck_cmd(gc_profile, gc_seed);
  } catch (const Error& e) {
    std::fprintf(stderr, "ERROR %s: %s\n", std::string(domain_name(e.domain())).c_str(), e.what());
    return e.domain() == ErrorDomain::divergence ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "ERROR io: %s\n", e.what());
    return 1;
  }
  return 1;
}
