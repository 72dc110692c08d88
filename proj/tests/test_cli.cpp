#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "dfcn/bundle.hpp"
#include "dfcn/commands.hpp"
#include "dfcn/errors.hpp"
#include "support.hpp"

using namespace dfcn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("dfcn_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct Run {
  int code;
  std::string out, err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "dfcn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path tiny_config_file(const fs::path& dir, nlohmann::json extra = nlohmann::json::object()) {
  nlohmann::json j = config_to_json(test::tiny_config());
  j.update(extra);
  write_text(dir / "config.json", j.dump());
  return dir / "config.json";
}

}  // namespace

TEST_CASE("text formats") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333333333");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");

  const auto dir = scratch("formats");
  write_text(dir / "bad.csv", "1,2\n3,x\n");
  try {
    read_matrix_csv(dir / "bad.csv");
    FAIL("expected parse error");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("bad.csv:2") != std::string::npos);
  }
  write_text(dir / "ragged.csv", "1,2\n3\n");
  CHECK_THROWS_AS(read_matrix_csv(dir / "ragged.csv"), ValidationError);
  write_text(dir / "header.csv", "a,b\n1,2\n");
  CHECK(read_matrix_csv(dir / "header.csv") == Matrix{{1, 2}});
  CHECK_THROWS_AS(read_matrix_csv(dir / "absent.csv"), IoError);
}

TEST_CASE("prepare a toy bundle and read it back") {
  const auto dir = scratch("prepare");
  const Matrix x{{0.1, 1e-300}, {-2.5, 3.0}, {1.0 / 3.0, 0.0}, {7.0, -0.125}};
  write_text(dir / "attrs.csv", matrix_to_csv(x));
  write_text(dir / "edges.txt", "# toy\n0 1\n1 2\n2 3\n3 0\n");
  write_text(dir / "labels.txt", "0\n0\n1\n1\n");
  write_text(dir / "meta.json", R"({"n": 4, "d": 2, "k": 2, "labels_file": "labels.txt"})");

  const Run r = cli({"prepare", "--attributes", (dir / "attrs.csv").string(), "--edges", (dir / "edges.txt").string(),
                     "--meta", (dir / "meta.json").string(), "--out", (dir / "bundle").string()});
  REQUIRE(r.code == kExitOk);
  const GraphData g = read_bundle(dir / "bundle");
  CHECK(test::bitwise_equal(g.x, x));
  CHECK(g.adjacency == adjacency_from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}));
  CHECK(*g.labels == Labels{0, 0, 1, 1});
  CHECK(g.k == 2);

  SUBCASE("tampering is detected") {
    write_text(dir / "bundle" / "labels.txt", "0\n1\n1\n1\n");
    CHECK_THROWS_AS(read_bundle(dir / "bundle"), IoError);
    CHECK(cli({"eval", (dir / "bundle").string(), "--labels", (dir / "labels.txt").string()}).code == kExitIo);
  }
  SUBCASE("eval worked example") {
    write_text(dir / "pred.txt", "1\n1\n1\n0\n");
    const Run e = cli({"eval", (dir / "bundle").string(), "--labels", (dir / "pred.txt").string()});
    REQUIRE(e.code == kExitOk);
    const auto j = nlohmann::json::parse(e.out);
    CHECK(j["acc"] == 0.75);
  }
  SUBCASE("dimension mismatch names the field") {
    write_text(dir / "meta.json", R"({"n": 5, "d": 2, "k": 2})");
    const Run bad = cli({"prepare", "--attributes", (dir / "attrs.csv").string(), "--edges",
                         (dir / "edges.txt").string(), "--meta", (dir / "meta.json").string(), "--out",
                         (dir / "b2").string()});
    CHECK(bad.code == kExitValidation);
    CHECK(bad.err.find("'n'") != std::string::npos);
  }
}

TEST_CASE("prepare with a kNN graph") {
  const auto dir = scratch("knn");
  Matrix x = test::random_matrix(100, 3, 5);
  for (std::size_t i = 50; i < 100; ++i) x(i, 0) += 6.0;
  write_text(dir / "attrs.csv", matrix_to_csv(x));
  write_text(dir / "meta.json", R"({"n": 100, "d": 3, "k": 2})");
  PrepareOptions opt;
  opt.attributes = dir / "attrs.csv";
  opt.meta = dir / "meta.json";
  opt.knn = 5;
  opt.out = dir / "bundle";
  const GraphData g = cmd_prepare(opt);
  for (std::size_t i = 0; i < 100; ++i) CHECK(g.adjacency.row_ptr[i + 1] - g.adjacency.row_ptr[i] >= 5);
  CHECK(!g.labels.has_value());

  opt.edges = dir / "edges.txt";
  CHECK_THROWS_AS(cmd_prepare(opt), ParameterError);
}

TEST_CASE("synth") {
  const auto dir = scratch("synth");
  REQUIRE(cli({"synth", "--sizes", "4,6", "--p-in", "0.9", "--p-out", "0", "--dim", "3", "--seed", "5", "--out",
               (dir / "a").string()})
              .code == kExitOk);
  REQUIRE(cli({"synth", "--sizes", "4,6", "--p-in", "0.9", "--p-out", "0", "--dim", "3", "--seed", "5", "--out",
               (dir / "b").string()})
              .code == kExitOk);
  CHECK(read_text(dir / "a" / "manifest.json") == read_text(dir / "b" / "manifest.json"));
  const GraphData g = read_bundle(dir / "a");
  CHECK(std::count(g.labels->begin(), g.labels->end(), 0) == 4);
  CHECK(std::count(g.labels->begin(), g.labels->end(), 1) == 6);
  for (const auto& [u, v] : edges_of(g.adjacency)) CHECK((*g.labels)[u] == (*g.labels)[v]);

  CHECK(cli({"synth", "--p-in", "0.1", "--p-out", "0.2", "--out", (dir / "c").string()}).code == kExitValidation);
  CHECK(cli({"synth", "--blocks", "3", "--sizes", "4,6", "--out", (dir / "d").string()}).code == kExitValidation);
}

TEST_CASE("train, eval and determinism") {
  const auto dir = scratch("train");
  SbmSpec spec;
  spec.sizes = {10, 10, 10};
  spec.attr_dim = 5;
  spec.seed = 2;
  write_bundle(dir / "bundle", sbm_synthesize(spec));
  const auto cfg = tiny_config_file(dir);

  for (const char* out : {"r1", "r2"}) {
    const Run r = cli({"train", (dir / "bundle").string(), "--config", cfg.string(), "--out", (dir / out).string()});
    REQUIRE(r.code == kExitOk);
  }
  for (const char* f : {"losses.csv", "labels.csv", "fusion.csv", "report.json", "embedding.csv", "checkpoint.bin"})
    CHECK(read_text(dir / "r1" / f) == read_text(dir / "r2" / f));
  for (const char* f : {"checkpoint.json", "run_manifest.json"}) CHECK(fs::exists(dir / "r1" / f));

  const auto report = nlohmann::json::parse(read_text(dir / "r1" / "report.json"));
  const Run from_labels = cli({"eval", (dir / "bundle").string(), "--labels", (dir / "r1" / "labels.csv").string()});
  const Run from_ckpt =
      cli({"eval", (dir / "bundle").string(), "--checkpoint", (dir / "r1" / "checkpoint.json").string()});
  REQUIRE(from_labels.code == kExitOk);
  REQUIRE(from_ckpt.code == kExitOk);
  CHECK(nlohmann::json::parse(from_labels.out) == report["metrics"]);
  CHECK(nlohmann::json::parse(from_ckpt.out) == report["metrics"]);

  // Relabeled predictions score the same.
  Labels pred = read_labels(dir / "r1" / "labels.csv");
  for (int& l : pred) l = (l + 1) % 3;
  write_text(dir / "perm.csv", labels_to_text(pred));
  const auto permuted = nlohmann::json::parse(cli({"eval", (dir / "bundle").string(), "--labels",
                                                   (dir / "perm.csv").string()}).out);
  CHECK(permuted["acc"] == report["metrics"]["acc"]);
  CHECK(permuted["nmi"] == report["metrics"]["nmi"]);

  SUBCASE("DFCN_SEED overrides the config seed") {
    setenv("DFCN_SEED", "17", 1);
    CHECK(resolve_config(cfg).seed == 17);
    setenv("DFCN_SEED", "seventeen", 1);
    CHECK_THROWS_AS(resolve_config(cfg), ParameterError);
    unsetenv("DFCN_SEED");
    CHECK(resolve_config(cfg).seed == 0);
  }
  SUBCASE("ablation shorthand") {
    CHECK(!resolve_config(cfg, "no-fusion").fusion);
    CHECK(resolve_config(cfg, "single-kl").supervision == Supervision::single);
    CHECK(resolve_config(cfg, "la-only").igae_loss == IgaeLossMode::a_only);
    CHECK(cli({"train", (dir / "bundle").string(), "--ablate", "nope", "--out", (dir / "x").string()}).code ==
          kExitValidation);
    CHECK(cli({"train", (dir / "bundle").string(), "--config", cfg.string(), "--ablate", "no-fusion", "--out",
               (dir / "nf").string()})
              .code == kExitOk);
  }
}

TEST_CASE("exit codes") {
  const auto dir = scratch("exit");
  write_bundle(dir / "bundle", test::small_sbm(2, 6, 3, 1));
  CHECK(cli({"train", (dir / "missing").string(), "--out", (dir / "o").string()}).code == kExitIo);
  CHECK(cli({"train", (dir / "bundle").string(), "--config", tiny_config_file(dir, {{"lamda", 1}}).string(), "--out",
             (dir / "o").string()})
            .code == kExitValidation);
  CHECK(cli({"bogus"}).code == kExitValidation);

  const Run div = cli({"train", (dir / "bundle").string(), "--config",
                       tiny_config_file(dir, {{"lr", 1e300}}).string(), "--out", (dir / "div").string()});
  CHECK(div.code == kExitDivergence);
  const auto report = nlohmann::json::parse(read_text(dir / "div" / "report.json"));
  CHECK(report["status"] == "diverged");
  CHECK(fs::exists(dir / "div" / "losses.csv"));
}

TEST_CASE("sweep echoes requested values") {
  const auto dir = scratch("sweep");
  write_bundle(dir / "bundle", test::small_sbm(2, 6, 3, 1));
  const auto cfg = tiny_config_file(dir);
  const Run r = cli({"sweep", (dir / "bundle").string(), "--config", cfg.string(), "--param", "lambda", "--values",
                     "0.01,0.1,1,10,1e2", "--out", (dir / "sweep.csv").string()});
  REQUIRE(r.code == kExitOk);
  const std::string csv = read_text(dir / "sweep.csv");
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "param,value,acc,nmi,ari,f1,final_loss");
  std::vector<std::string> values;
  while (std::getline(in, line)) values.push_back(line.substr(7, line.find(',', 7) - 7));
  CHECK(values == std::vector<std::string>{"0.01", "0.1", "1", "10", "1e2"});

  const Run again = cli({"sweep", (dir / "bundle").string(), "--config", cfg.string(), "--param", "lambda",
                         "--values", "0.01,0.1,1,10,1e2"});
  CHECK(again.out == csv);
  CHECK(cli({"sweep", (dir / "bundle").string(), "--param", "beta", "--values", "1"}).code == kExitValidation);
}
