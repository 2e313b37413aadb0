#include <sys/wait.h>

#include <cstdlib>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "support.hpp"

#include "pcd/cli.hpp"
#include "pcd/error.hpp"

using namespace pcd;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string err;
};

Run run(const std::string& args, const fs::path& dir) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.string() + "' && '" PCDISTILL_BIN "' " + args + " > /dev/null 2> '" +
                          err.string() + "'";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = read_file(err);
  return r;
}

}  // namespace

TEST_CASE("config parsing") {
  const ConfigMap m = parse_config("# comment\nppc = 3\n\n lr_points=0.5 # trailing\nalignment = morton\n");
  CHECK(m.at("ppc") == "3");
  CHECK(m.at("lr_points") == "0.5");
  CHECK(m.at("alignment") == "morton");
  try {
    parse_config("ppc = 3\nthis line is broken\n");
    FAIL("expected a config error");
  } catch (const Error& e) {
    CHECK(e.domain() == ErrorDomain::config);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK(merge({{"a", "1"}, {"b", "2"}}, {{"b", "3"}}) == ConfigMap{{"a", "1"}, {"b", "3"}});
}

TEST_CASE("apply_config") {
  DistillConfig d;
  EvalConfig e;
  apply_config({{"ppc", "10"}, {"lambda1", "auto"}, {"lambda2", "0.5"}, {"widths", "3,8,4"},
                {"lr_theta_y", "2"}, {"eval_repeats", "2"}, {"rotation", "frozen"}},
               nullptr, &d, &e);
  CHECK(d.ppc == 10);
  CHECK(!d.lambda1.has_value());
  CHECK(d.loss_weights().lambda1 == 0.02);
  CHECK(d.loss_weights().lambda2 == 0.5);
  CHECK(d.extractor.widths == std::vector<std::size_t>{3, 8, 4});
  CHECK(d.lr_theta[1] == 2.0);
  CHECK(d.rotation == RotationMode::frozen);
  CHECK(e.repeats == 2);

  CHECK_THROWS_AS(apply_config({{"no_such_key", "1"}}, nullptr, &d, nullptr), Error);
  CHECK_THROWS_AS(apply_config({{"ppc", "three"}}, nullptr, &d, nullptr), Error);
  CHECK_THROWS_AS(apply_config({{"alignment", "sideways"}}, nullptr, &d, nullptr), Error);
}

TEST_CASE("materialized configs reproduce themselves") {
  DistillConfig d;
  d.lr_points = 0.1 + 0.2;  // not exactly representable in short decimal
  d.seed = 123456789012345ULL;
  d.alignment = AlignmentStrategy::axis_z;
  const ConfigMap m = to_config_map(d);
  DistillConfig back;
  apply_config(m, nullptr, &back, nullptr);
  CHECK(to_config_map(back) == m);
  CHECK(back.lr_points == d.lr_points);

  ToySpec t;
  t.shapes = {ShapeKind::torus, ShapeKind::plane};
  ToySpec tb;
  apply_config(to_config_map(t), &tb, nullptr, nullptr);
  CHECK(to_config_map(tb) == to_config_map(t));

  EvalConfig e;
  e.augmentation = Augmentation::random_rotation;
  EvalConfig eb;
  apply_config(to_config_map(e), nullptr, nullptr, &eb);
  CHECK(to_config_map(eb) == to_config_map(e));
  CHECK(format_double(0.006) == "0.006");
}

TEST_CASE("digests and manifests") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(digest_hex("a") == "fnv1a64:af63dc4c8601ec8c");

  RunManifest m;
  m.command = "distill";
  m.config = {{"ppc", "3"}};
  m.inputs["x.pcds"] = digest_hex("x");
  m.extra["loss_trace"] = std::vector<double>{0.5, 0.25};
  m.wall_seconds = 1.25;
  const RunManifest back = RunManifest::from_json(m.to_json());
  CHECK(back.command == m.command);
  CHECK(back.config == m.config);
  CHECK(back.inputs == m.inputs);
  CHECK(back.to_json()["loss_trace"] == m.extra["loss_trace"]);
}

TEST_CASE("command-line tool") {
  testing::TempDir dir("cli");
  const std::string small = "--train-per-class 4 --test-per-class 2 --points 32 --seed 5";
  REQUIRE(run("gen-toy --out-dir a " + small, dir.path).code == 0);
  REQUIRE(run("gen-toy --out-dir b " + small, dir.path).code == 0);
  CHECK(read_file(dir.path / "a/train.pcds") == read_file(dir.path / "b/train.pcds"));
  CHECK(read_file(dir.path / "a/test.pcds") == read_file(dir.path / "b/test.pcds"));

  REQUIRE(run("distill --train a/train.pcds --ppc 3 --iterations 2 --set widths=3,8,8 --out d.pcds",
              dir.path).code == 0);
  const auto manifest = nlohmann::json::parse(read_file(dir.path / "d.pcds.manifest.json"));
  CHECK(manifest["config"]["lambda1"] == "0.006");
  CHECK(manifest["config"]["lambda2"] == "0.003");
  CHECK(manifest["loss_trace"].size() == 2);
  CHECK(fs::exists(dir.path / "d.pcds.loss.csv"));

  // Precedence: defaults < config file < flags < --set.
  {
    std::ofstream f(dir.path / "run.cfg");
    f << "ppc = 2\niterations = 1\nseed = 4\nwidths = 3,8,8\n";
  }
  REQUIRE(run("distill --config run.cfg --train a/train.pcds --seed 9 --out e.pcds --set iterations=2",
              dir.path).code == 0);
  const auto m2 = nlohmann::json::parse(read_file(dir.path / "e.pcds.manifest.json"));
  CHECK(m2["config"]["ppc"] == "2");
  CHECK(m2["config"]["seed"] == "9");
  CHECK(m2["config"]["iterations"] == "2");
  CHECK(m2["config"]["lambda1"] == "0.002");

  REQUIRE(run("coreset --dataset a/train.pcds --method kcenter --ppc 2 --out k.pcds", dir.path).code == 0);
  CHECK(SelectionResult::from_index_file(read_file(dir.path / "k.pcds.idx")).selected.size() == 4);

  REQUIRE(run("eval --train k.pcds --test a/test.pcds --repeats 2 --epochs 3 --csv t.csv --method kcenter",
              dir.path).code == 0);
  const std::string csv = read_file(dir.path / "t.csv");
  CHECK(csv.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
  CHECK(csv.find(",kcenter,2,") != std::string::npos);

  REQUIRE(run("export-ply --dataset k.pcds --out-dir ply --color-axis z", dir.path).code == 0);
  CHECK(fs::exists(dir.path / "ply/sphere_0.ply"));

  std::string bytes = read_file(dir.path / "k.pcds");
  bytes[0] = 'X';
  write_file(dir.path / "bad.pcds", bytes);
  const Run bad = run("eval --train bad.pcds --test a/test.pcds", dir.path);
  CHECK(bad.code == 1);
  CHECK(bad.err.rfind("ERROR format:", 0) == 0);

  const Run unknown = run("eval --train k.pcds --test a/test.pcds --frobnicate 1", dir.path);
  CHECK(unknown.code == 1);
  CHECK(unknown.err.rfind("ERROR config:", 0) == 0);

  const Run key = run("distill --train a/train.pcds --set bogus=1", dir.path);
  CHECK(key.code == 1);
  CHECK(key.err.rfind("ERROR config:", 0) == 0);

  const Run diverge = run("distill --train a/train.pcds --iterations 3 --lr-points 1e300 --set widths=3,8,8 --out x.pcds",
                          dir.path);
  CHECK(diverge.code == 2);
  CHECK(diverge.err.rfind("ERROR divergence:", 0) == 0);

  fs::create_directories(dir.path / "meshes/box");
  fs::create_directories(dir.path / "meshes/tri");
  write_file(dir.path / "meshes/tri/a.off", "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
  write_file(dir.path / "meshes/box/b.off", "OFF4 2 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2\n3 0 2 3\n");
  REQUIRE(run("import-off --dir meshes --points 50 --out m.pcds", dir.path).code == 0);
  const LabeledDataset imported = read_dataset(dir.path / "m.pcds");
  CHECK(imported.class_names == std::vector<std::string>{"box", "tri"});
  CHECK(imported.points_per_cloud() == 50);
  write_file(dir.path / "meshes/tri/c.off", "OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 9\n");
  const Run broken = run("import-off --dir meshes --out m2.pcds", dir.path);
  CHECK(broken.code == 1);
  CHECK(broken.err.rfind("ERROR parse:", 0) == 0);
  CHECK(broken.err.find("line 6") != std::string::npos);
}
