#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "crossview/checkpoint.hpp"
#include "crossview/commands.hpp"
#include "crossview/export.hpp"
#include "doctest.h"
#include "json.hpp"
#include "support/test_support.hpp"

using namespace crossview;
using crossview::testing::TempDir;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

RunConfig small_config(const std::filesystem::path& out) {
  RunConfig c;
  c.world.num_records = 300;
  c.world.num_classes = 6;
  c.model.backbone_widths = {32, 32};
  c.model.head_hidden = 16;
  c.train.epochs = 2;
  c.train.pretrain_epochs = 2;
  c.heatmap_rows = 6;
  c.heatmap_cols = 12;
  c.out_dir = out;
  return c;
}

void run_pipeline(const RunConfig& c) {
  cmd_generate(c);
  cmd_train(c);
  cmd_eval(c);
}

int run_cli(const std::string& args) {
  const char* cli = std::getenv("CROSSVIEW_CLI");
  REQUIRE_MESSAGE(cli != nullptr, "CROSSVIEW_CLI is not set");
  const int status = std::system((std::string(cli) + " " + args + " >/dev/null 2>&1").c_str());
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("run config parsing") {
  const RunConfig d = parse_run_config("{}");
  CHECK(d.seed == 7);
  CHECK(d.model.head_hidden == 1024);
  CHECK(d.thresholds == default_thresholds());

  const RunConfig c = parse_run_config(R"({"seed": 11, "train": {"lr": 0.01, "weight_decay_mode": "decoupled"},
                                          "world": {"scene_dim": 5}})");
  CHECK(c.seed == 11);
  CHECK(c.train.lr == 0.01);
  CHECK(c.train.decay_mode == WeightDecayMode::decoupled);
  CHECK(model_config(c).scene_dim == 5);

  const auto expect_error = [](const std::string& text, const std::string& fragment) {
    try {
      parse_run_config(text);
      FAIL("expected a config error for " << text);
    } catch (const std::invalid_argument& e) {
      CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
    }
  };
  expect_error(R"({"train": {"learning_rate": 0.1}})", "train.learning_rate");
  expect_error(R"({"train": {"epochs": "six"}})", "train.epochs");
  expect_error(R"({"model": {"backbone_widths": 3}})", "model.backbone_widths");
  expect_error(R"({"bogus": 1})", "bogus");
  expect_error(R"({"train": {"weight_decay_mode": "sideways"}})", "weight_decay_mode");
  expect_error(R"({"train": {"head_loss_weights": [1, 2]}})", "head_loss_weights");
  expect_error("{not json", "invalid JSON");

  // Dump and re-parse.
  CHECK(dump_run_config(parse_run_config(dump_run_config(c))) == dump_run_config(c));
}

TEST_CASE("desk-scale config file parses") {
  const char* path = std::getenv("CROSSVIEW_DESK_CONFIG");
  REQUIRE(path != nullptr);
  const RunConfig c = load_run_config(path);
  CHECK(c.world.num_records == 2000);
  CHECK(c.world.num_classes == 20);
  CHECK(c.model.head_hidden == 64);
  CHECK(c.train.epochs == 6);
  CHECK(c.train.batch_size == 32);
  CHECK(c.split.train == 0.93);
}

TEST_CASE("stage seeds are distinct and stable") {
  const StageSeeds a = stage_seeds(7), b = stage_seeds(7), c = stage_seeds(8);
  CHECK(a.world == b.world);
  CHECK(a.train == b.train);
  const std::set<std::uint64_t> distinct{a.world, a.split, a.init, a.pretrain, a.train};
  CHECK(distinct.size() == 5);
  CHECK(a.world != c.world);
}

TEST_CASE("pipeline writes its outputs and reproduces them byte for byte") {
  TempDir dir("pipeline");
  const RunConfig c1 = small_config(dir.path() / "a");
  const RunConfig c2 = small_config(dir.path() / "b");
  const GenerateSummary g = cmd_generate(c1);
  CHECK(g.records == 300);
  CHECK(g.train + g.val + g.test == 300);
  const TrainSummary t = cmd_train(c1);
  CHECK(t.history.size() == 2);
  CHECK(t.final_kl < t.initial_kl);
  const EvalSummary e = cmd_eval(c1);
  for (const auto& curve : e.curves) CHECK(curve.points.back().accuracy == 1.0);
  run_pipeline(c2);

  const OutputPaths a{c1.out_dir}, b{c2.out_dir};
  for (const auto& [pa, pb] : std::vector<std::pair<std::filesystem::path, std::filesystem::path>>{
           {a.dataset(), b.dataset()},
           {a.split(), b.split()},
           {a.checkpoint(), b.checkpoint()},
           {a.history(), b.history()},
           {a.pretrain_history(), b.pretrain_history()},
           {a.nll_report(), b.nll_report()},
           {a.curve(Head::scene), b.curve(Head::scene)},
           {a.curve(Head::image), b.curve(Head::image)},
           {a.curve(Head::counts), b.curve(Head::counts)}}) {
    REQUIRE(std::filesystem::exists(pa));
    CHECK_MESSAGE(slurp(pa) == slurp(pb), pa.filename().string());
  }
  CHECK(slurp(a.history()).rfind("epoch,train_scene_nll,train_image_nll,train_counts_nll,train_total_nll,", 0) == 0);
  CHECK(slurp(a.curve(Head::scene)).rfind("threshold,accuracy\n0.01,", 0) == 0);

  // A different seed changes the outputs.
  RunConfig c3 = small_config(dir.path() / "c");
  c3.seed = 8;
  run_pipeline(c3);
  CHECK(slurp(OutputPaths{c3.out_dir}.dataset()) != slurp(a.dataset()));
}

TEST_CASE("query commands and their files") {
  TempDir dir("queries");
  const RunConfig c = small_config(dir.path());
  run_pipeline(c);
  const OutputPaths out{c.out_dir};
  const std::string dataset_before = slurp(out.dataset());
  const std::string model_before = slurp(out.checkpoint());

  const auto hits = cmd_retrieve(c, 5, Head::scene, 3);
  REQUIRE(hits.size() == 3);
  CHECK(hits[0].score >= hits[2].score);
  const std::string csv = slurp(out.retrieval(5, Head::scene));
  CHECK(csv.rfind("id,lat,lon,score\n" + std::to_string(hits[0].id) + ",", 0) == 0);

  try {
    cmd_retrieve(c, 5, Head::scene, 301);
    FAIL("expected a CommandError");
  } catch (const CommandError& e) {
    CHECK(e.stage() == "retrieve");
    const std::string msg = e.what();
    CHECK(msg.find("k = 301") != std::string::npos);
    CHECK(msg.find("|db| = 300") != std::string::npos);
  }
  CHECK_THROWS_AS(cmd_retrieve(c, 9999, Head::scene, 3), CommandError);

  const auto search = cmd_search(c, parse_label("counts:1"), parse_label("scene:0"), 10);
  CHECK(search.ordered.size() == 10);
  CHECK(slurp(out.search()).rfind("id,lat,lon,score,secondary_score\n", 0) == 0);
  CHECK_THROWS_AS(cmd_search(c, parse_label("counts:99"), parse_label("scene:0"), 10), CommandError);
  CHECK_THROWS_AS(parse_label("counts"), std::invalid_argument);
  CHECK_THROWS_AS(parse_label("counts:-1"), std::invalid_argument);
  CHECK_THROWS_AS(parse_label("roads:1"), std::invalid_argument);

  const Heatmap map = cmd_heatmap(c, 5, Head::image);
  const auto stem = out.heatmap_stem(5, Head::image).string();
  std::istringstream pgm(slurp(stem + ".pgm"));
  std::string magic;
  std::size_t cols = 0, rows = 0;
  int maxval = 0;
  pgm >> magic >> cols >> rows >> maxval;
  CHECK(magic == "P2");
  CHECK(cols == 12);
  CHECK(rows == 6);
  CHECK(maxval == 255);
  int lo = 255, hi = 0, n = 0;
  for (int v; pgm >> v; ++n) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(n == 72);
  CHECK(lo == 0);
  CHECK(hi == 255);
  CHECK(heatmap_gray_levels(map).size() == 72);

  const auto side = nlohmann::json::parse(slurp(stem + ".json"));
  CHECK(side.at("rows") == 6);
  CHECK(side.at("cols") == 12);
  CHECK(side.at("bbox").at("lat_max") == 49.0);
  CHECK(side.at("fill").get<double>() == map.fill);

  std::ifstream raw(stem + ".csv");
  std::size_t lines = 0;
  for (std::string s; std::getline(raw, s);) ++lines;
  CHECK(lines == 6);

  CHECK(slurp(out.dataset()) == dataset_before);
  CHECK(slurp(out.checkpoint()) == model_before);
}

TEST_CASE("commands report missing inputs by stage") {
  TempDir dir("missing");
  const RunConfig c = small_config(dir.path());
  try {
    cmd_train(c);
    FAIL("expected a CommandError");
  } catch (const CommandError& e) {
    CHECK(e.stage() == "load-dataset");
  }
  cmd_generate(c);
  try {
    cmd_eval(c);
    FAIL("expected a CommandError");
  } catch (const CommandError& e) {
    CHECK(e.stage() == "load-checkpoint");
  }
  RunConfig mismatch = c;
  mismatch.world.scene_dim = 3;
  CHECK_THROWS_AS(cmd_train(mismatch), CommandError);
}

TEST_CASE("command-line exit codes") {
  TempDir dir("cli");
  const std::string base = "--out-dir " + (dir.path() / "o").string() +
                           " --num-records 200 --num-classes 5 --epochs 1 --pretrain-epochs 1 --head-hidden 8";
  CHECK(run_cli(base + " generate") == 0);
  CHECK(run_cli(base + " train") == 0);
  CHECK(run_cli(base + " eval") == 0);
  CHECK(run_cli(base + " retrieve --query-id 3 -k 2") == 0);
  CHECK(run_cli(base + " retrieve --query-id 3 -k 500") == 1);
  CHECK(run_cli(base + " heatmap --query-id 3 --head counts --rows 4 --cols 8") == 0);
  CHECK(run_cli(base + " search --primary scene:0 --secondary image:1 --top-n 5") == 0);
  CHECK(run_cli(base + " --weight-decay-mode sideways train") == 2);
  CHECK(run_cli("frobnicate") != 0);

  std::ofstream(dir.path() / "bad.json") << R"({"train": {"epochz": 3}})";
  CHECK(run_cli("--config " + (dir.path() / "bad.json").string() + " generate") == 2);
  CHECK(std::filesystem::exists(dir.path() / "o" / "retrieve_3_scene.csv"));
  CHECK(std::filesystem::exists(dir.path() / "o" / "heatmap_3_counts.pgm"));
}
