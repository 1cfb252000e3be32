#include <doctest.h>

#include <filesystem>

#include "sqrl/config.hpp"
#include "sqrl/report.hpp"

using namespace sqrl;

TEST_CASE("metrics.csv: exact header, value round-trip, embedded hash") {
  GameMetrics m;
  m.game = "S1";
  m.num_actions = 4;
  m.avg_traj_len = 120.5;
  m.avg_steps_first_reward = 3.25;
  m.image_entropy = 0.12345678901;
  m.compression_ratio = 235.2;
  m.feature_count = 1.5;

  const auto dir = std::filesystem::temp_directory_path() / "sqrl_report_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "metrics.csv").string();
  write_metrics_csv({m}, path, "aaaabbbbccccdddd");

  const std::string text = read_text(path);
  CHECK(text.rfind("game,num_actions,avg_traj_len,avg_steps_first_reward,image_entropy,"
                   "compression_ratio,feature_count\n", 0) == 0);
  CHECK(text.find("# config_hash=aaaabbbbccccdddd") != std::string::npos);

  std::string hash;
  auto rows = read_metrics_csv(path, &hash);
  REQUIRE(rows.size() == 1);
  CHECK(hash == "aaaabbbbccccdddd");
  CHECK(rows[0].game == "S1");
  CHECK(rows[0].num_actions == 4);
  CHECK(rows[0].image_entropy == m.image_entropy);  // shortest-round-trip format
  CHECK(rows[0].compression_ratio == m.compression_ratio);
}

TEST_CASE("scores.csv round-trip") {
  std::vector<ScoreRow> rows = {{"S1", "dt", 123, 0, 3.0, 57.25}, {"S1", "dm", 123, 1, 2.0, 31.5}};
  const auto dir = std::filesystem::temp_directory_path() / "sqrl_report_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "scores.csv").string();
  write_scores_csv(rows, path, "0000000000000001");
  std::string hash;
  auto back = read_scores_csv(path, &hash);
  REQUIRE(back.size() == 2);
  CHECK(hash == "0000000000000001");
  CHECK(back[0].game == "S1");
  CHECK(back[0].model == "dt");
  CHECK(back[0].seed == 123);
  CHECK(back[1].episode == 1);
  CHECK(back[1].raw_score == 2.0);
  CHECK(back[1].normalized_score == 31.5);
}

TEST_CASE("format_double round-trips exactly") {
  for (double v : {0.0, 1.0, -3.5, 0.1, 1e-9, 123456789.123456, 2.2250738585072014e-308}) {
    const std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("run config: profiles validate, hashing is stable and sensitive") {
  RunConfig ci = profile_config("ci");
  ci.validate();
  CHECK(ci.suite.size() == 3);
  RunConfig paper = profile_config("paper");
  paper.validate();
  CHECK(paper.suite.size() == 12);
  CHECK(paper.grid.contexts == std::vector<int>{10, 30, 50});
  CHECK(paper.train.batch_size == 256);
  CHECK(paper.model.d_model == 128);
  CHECK(paper.model.n_layers == 6);
  CHECK(paper.train.lr == 6e-4);
  CHECK(paper.train.weight_decay == 0.1);
  CHECK(paper.train.max_epochs == 5);

  CHECK(ci.config_hash() == profile_config("ci").config_hash());
  RunConfig tweaked = ci;
  tweaked.global_seed = 2;
  CHECK(tweaked.config_hash() != ci.config_hash());
  CHECK(ci.config_hash().size() == 16);
  CHECK_THROWS_AS(profile_config("nope"), ConfigError);
}

TEST_CASE("run config file round-trip preserves the hash") {
  RunConfig ci = profile_config("ci");
  const auto dir = std::filesystem::temp_directory_path() / "sqrl_report_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "config.json").string();
  save_run_config(ci, path);
  RunConfig back = load_run_config(path);
  CHECK(back.config_hash() == ci.config_hash());
  CHECK(back.suite.size() == ci.suite.size());
  CHECK(back.eval.episodes == ci.eval.episodes);
}

TEST_CASE("analysis report JSON carries all three sections") {
  RegressionReport reg;
  reg.rmse_mean = 1.5;
  reg.rmse_std = 0.5;
  reg.fold_rmse = {1.0, 2.0};
  reg.importances = {0.6, 0.4};
  reg.feature_names = {"a", "b"};
  ShapReport shap;
  shap.feature_names = {"a", "b"};
  shap.mean_abs = {0.1, 0.2};
  shap.values = {{0.1, -0.2}};
  shap.base_values = {0.3};
  shap.n_permutations = 10;
  CorrelationMatrix corr = pearson_matrix({"x", "y"}, {{1, 2, 3}, {2, 4, 6.1}});
  const std::string json = analysis_report_json(reg, shap, corr, "ffffeeeeddddcccc");
  CHECK(json.find("\"config_hash\": \"ffffeeeeddddcccc\"") != std::string::npos);
  CHECK(json.find("\"rmse_mean\"") != std::string::npos);
  CHECK(json.find("\"mean_abs\"") != std::string::npos);
  CHECK(json.find("\"correlation\"") != std::string::npos);
  CHECK(json.find("very strong") != std::string::npos);
}

TEST_CASE("svg renderings are well-formed enough to ship") {
  const std::string bar = svg_bar_chart("importances", {"alpha", "beta"}, {0.7, -0.3});
  CHECK(bar.rfind("<svg", 0) == 0);
  CHECK(bar.find("</svg>") != std::string::npos);
  CHECK(bar.find("alpha") != std::string::npos);
  const std::string heat = svg_heatmap("corr", {"x", "y"}, {1.0, -0.5, -0.5, 1.0});
  CHECK(heat.rfind("<svg", 0) == 0);
  CHECK(heat.find("rgb(") != std::string::npos);
  CHECK(heat.find("</svg>") != std::string::npos);
}

TEST_CASE("baselines csv round-trip") {
  const auto dir = std::filesystem::temp_directory_path() / "sqrl_report_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "baselines.csv").string();
  write_baselines_csv({{"Breakout", 1.7, 30.5}}, path, "h");
  auto rows = read_baselines_csv(path);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].game == "Breakout");
  CHECK(rows[0].random_score == 1.7);
  CHECK(rows[0].human_score == 30.5);
}
