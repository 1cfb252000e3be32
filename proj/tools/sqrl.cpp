// sqrl: offline sequence-modeling RL lab.
//
// Pipeline stages (each one subcommand, each rerunnable and deterministic):
//   gen-suite -> stats -> train -> eval -> fuse -> analyze -> report
// Every artifact embeds the hash of the run configuration that produced it;
// downstream stages refuse inputs whose hashes disagree.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>

#include <json.hpp>

#include "sqrl/config.hpp"
#include "sqrl/dataset_io.hpp"
#include "sqrl/eval_stats.hpp"
#include "sqrl/fusion.hpp"
#include "sqrl/metrics.hpp"
#include "sqrl/nn/checkpoint.hpp"
#include "sqrl/nn/gradcheck.hpp"
#include "sqrl/nn/train.hpp"
#include "sqrl/report.hpp"
#include "sqrl/rollout.hpp"

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;
using namespace sqrl;

namespace {

// Deletes this invocation's outputs if the stage throws midway.
class OutputTracker {
 public:
  void add(const std::string& path) { paths_.push_back(path); }
  void keep() { paths_.clear(); }
  ~OutputTracker() {
    for (const auto& p : paths_) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }

 private:
  std::vector<std::string> paths_;
};

struct CommonOpts {
  std::string config_path;
  std::string profile = "ci";
};

RunConfig resolve_config(const CommonOpts& opts) {
  RunConfig cfg = opts.config_path.empty() ? profile_config(opts.profile)
                                           : load_run_config(opts.config_path);
  cfg.validate();
  return cfg;
}

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "run configuration JSON");
  cmd->add_option("--profile", opts.profile, "built-in profile: ci or paper")
      ->check(CLI::IsMember({"ci", "paper"}));
}

const GameSpec& find_game(const RunConfig& cfg, const std::string& name) {
  for (const auto& g : cfg.suite)
    if (g.name == name) return g;
  throw ConfigError("game '" + name + "' is not in the configured suite");
}

std::string dataset_path(const std::string& dir, const std::string& game) {
  return (fs::path(dir) / (game + ".sqrl")).string();
}

TrajectoryDataset load_game_dataset(const RunConfig& cfg, const std::string& dir,
                                    const std::string& game) {
  std::string trailer;
  TrajectoryDataset ds = read_dataset(dataset_path(dir, game), &trailer);
  if (!trailer.empty()) {
    Json t = Json::parse(trailer, nullptr, false);
    if (!t.is_discarded() && t.contains("config_hash") &&
        t["config_hash"].get<std::string>() != cfg.config_hash())
      throw DataError("dataset " + game + " was produced by a different config (hash mismatch)");
  }
  return ds;
}

// ---------------------------------------------------------------------------
// gen-suite

int cmd_gen_suite(const CommonOpts& common, const std::string& out_dir) {
  RunConfig cfg = resolve_config(common);
  const std::string hash = cfg.config_hash();
  fs::create_directories(out_dir);
  OutputTracker tracker;

  Json manifest;
  manifest["config_hash"] = hash;
  manifest["games"] = Json::array();

  struct KnobRow {
    std::string game;
    double texture, entropy;
    int sparsity;
    double first_reward;
  };
  std::vector<KnobRow> knobs;

  for (size_t gi = 0; gi < cfg.suite.size(); ++gi) {
    const GameSpec& spec = cfg.suite[gi];
    const uint64_t seed = cfg.global_seed * 1000003ull + gi;
    TrajectoryDataset ds =
        generate_dataset(spec, DataPolicy::kScriptedExpert, cfg.data.policy_epsilon,
                         cfg.data.episodes, seed);
    if (cfg.data.sample_fraction < 1.0) ds = sample_fraction(ds, cfg.data.sample_fraction, seed + 1);
    if (cfg.data.clip_rewards) clip_rewards_sign(ds);
    const std::string path = dataset_path(out_dir, spec.name);
    Json trailer;
    trailer["config_hash"] = hash;
    write_dataset(ds, path, trailer.dump());
    tracker.add(path);

    // Knob verification sample: frame entropy and steps-to-first-reward.
    Rng pick(seed + 2);
    double entropy_sum = 0.0;
    const int sample = 32;
    const size_t total = ds.total_transitions();
    std::vector<size_t> starts(ds.episodes.size());
    size_t acc = 0;
    for (size_t i = 0; i < ds.episodes.size(); ++i) {
      starts[i] = acc;
      acc += ds.episodes[i].length();
    }
    for (int s = 0; s < sample; ++s) {
      size_t flat = pick.next_below(total);
      size_t ep = 0;
      while (ep + 1 < starts.size() && starts[ep + 1] <= flat) ++ep;
      entropy_sum += image_entropy(ds.episodes[ep].frames[flat - starts[ep]]);
    }
    DatasetStats st = dataset_statistics(ds);
    knobs.push_back({spec.name, spec.texture_level, entropy_sum / sample, spec.reward_sparsity,
                     st.steps_first_reward_defined ? st.avg_steps_first_reward : -1.0});

    Json g;
    g["name"] = spec.name;
    g["episodes"] = ds.episodes.size();
    g["transitions"] = total;
    g["max_return"] = ds.max_return;
    manifest["games"].push_back(std::move(g));
    std::cerr << "generated " << spec.name << ": " << ds.episodes.size() << " episodes, "
              << total << " transitions, max return " << ds.max_return << "\n";
  }

  // Knob monotonicity across the suite (informative table, hard failure).
  std::vector<KnobRow> by_texture = knobs, by_sparsity = knobs;
  std::sort(by_texture.begin(), by_texture.end(),
            [](const KnobRow& a, const KnobRow& b) { return a.texture < b.texture; });
  std::sort(by_sparsity.begin(), by_sparsity.end(),
            [](const KnobRow& a, const KnobRow& b) { return a.sparsity < b.sparsity; });
  for (size_t i = 0; i + 1 < by_texture.size(); ++i) {
    if (by_texture[i].texture < by_texture[i + 1].texture &&
        by_texture[i].entropy > by_texture[i + 1].entropy)
      throw NumericError("suite entropy is not monotone in texture_level (" + by_texture[i].game +
                         " vs " + by_texture[i + 1].game + ")");
  }
  for (size_t i = 0; i + 1 < by_sparsity.size(); ++i) {
    if (by_sparsity[i].first_reward < 0 || by_sparsity[i + 1].first_reward < 0) continue;
    if (by_sparsity[i].sparsity < by_sparsity[i + 1].sparsity &&
        by_sparsity[i].first_reward > by_sparsity[i + 1].first_reward)
      throw NumericError("suite steps-to-first-reward is not monotone in reward_sparsity (" +
                         by_sparsity[i].game + " vs " + by_sparsity[i + 1].game + ")");
  }

  const std::string manifest_path = (fs::path(out_dir) / "suite.json").string();
  write_text_atomic(manifest_path, manifest.dump(2) + "\n");
  tracker.add(manifest_path);
  tracker.keep();
  std::cerr << "suite written to " << out_dir << " (config " << hash << ")\n";
  return 0;
}

// ---------------------------------------------------------------------------
// stats

int cmd_stats(const CommonOpts& common, const std::string& data_dir, int frames, uint64_t seed,
              const std::string& out_path) {
  RunConfig cfg = resolve_config(common);
  OutputTracker tracker;
  std::vector<GameMetrics> rows;
  for (const auto& spec : cfg.suite) {
    TrajectoryDataset ds = load_game_dataset(cfg, data_dir, spec.name);
    rows.push_back(aggregate_metrics(ds, static_cast<size_t>(frames), seed));
    std::cerr << "metrics " << spec.name << ": entropy " << rows.back().image_entropy
              << ", ratio " << rows.back().compression_ratio << ", features "
              << rows.back().feature_count << "\n";
  }
  write_metrics_csv(rows, out_path, cfg.config_hash());
  tracker.add(out_path);
  tracker.keep();
  return 0;
}

// ---------------------------------------------------------------------------
// train

int cmd_train(const CommonOpts& common, const std::string& model_name, const std::string& game,
              int context, uint64_t seed, const std::string& data_dir, const std::string& out_path,
              const std::string& fusion_map_path) {
  RunConfig cfg = resolve_config(common);
  find_game(cfg, game);
  TrajectoryDataset ds = load_game_dataset(cfg, data_dir, game);

  std::string fusion_map_json;
  if (!fusion_map_path.empty()) {
    FusionMap map = FusionMap::from_json(read_text(fusion_map_path));
    ds = relabel_dataset(ds, map);
    fusion_map_json = map.to_json();
  }

  ModelConfig mc = cfg.model;
  mc.arch = arch_from_name(model_name);
  mc.context = context;
  mc.action_space_size = ds.action_space_size;
  mc.validate();
  TrainConfig tc = cfg.train;
  tc.seed = seed;

  nn::SequenceModel<float> model(mc);
  model.init(seed);
  std::cerr << "training " << model_name << " on " << game << " (K=" << context << ", "
            << nn::total_parameters(model.params()) << " params, "
            << ds.total_transitions() << " transitions)\n";
  auto log = nn::train_model(model, tc, ds);

  OutputTracker tracker;
  CheckpointMeta meta;
  meta.game = game;
  meta.max_return = ds.max_return;
  meta.train_seed = seed;
  meta.config_hash = cfg.config_hash();
  meta.fusion_map_json = fusion_map_json;
  save_checkpoint(model, meta, out_path);
  tracker.add(out_path);

  std::ostringstream losses;
  losses << "epoch,step,loss,lr\n";
  for (const auto& row : log)
    losses << row.epoch << "," << row.step << "," << format_double(row.loss) << ","
           << format_double(row.lr) << "\n";
  losses << "# config_hash=" << cfg.config_hash() << "\n";
  const std::string log_path = out_path + ".loss.csv";
  write_text_atomic(log_path, losses.str());
  tracker.add(log_path);
  tracker.keep();

  double epoch_mean = 0.0;
  int count = 0;
  for (const auto& row : log)
    if (row.epoch == tc.max_epochs - 1) epoch_mean += row.loss, ++count;
  std::cerr << "final-epoch mean loss " << (count ? epoch_mean / count : 0.0) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const CommonOpts& common, const std::vector<std::string>& ckpts, int episodes,
             uint64_t seed, const std::string& target, const std::string& select,
             double temperature, const std::string& baselines_path, const std::string& out_path) {
  RunConfig cfg = resolve_config(common);
  const std::string hash = cfg.config_hash();

  std::map<std::string, NormalizationBaseline> baselines;
  if (!baselines_path.empty()) {
    for (const auto& row : read_baselines_csv(baselines_path))
      baselines[row.game] = {row.game, row.random_score, row.human_score};
  }

  std::vector<ScoreRow> rows;
  Json summary;
  summary["config_hash"] = hash;
  summary["entries"] = Json::array();
  OutputTracker tracker;

  for (const auto& ckpt_path : ckpts) {
    LoadedCheckpoint ck = load_checkpoint(ckpt_path);
    if (!ck.meta.config_hash.empty() && ck.meta.config_hash != hash)
      throw DataError("checkpoint " + ckpt_path + " was produced by a different config");
    const GameSpec& spec = find_game(cfg, ck.meta.game);

    std::unique_ptr<FusionMap> map;
    if (!ck.meta.fusion_map_json.empty())
      map = std::make_unique<FusionMap>(FusionMap::from_json(ck.meta.fusion_map_json));

    NormalizationBaseline baseline;
    auto it = baselines.find(spec.name);
    if (it != baselines.end()) {
      baseline = it->second;
    } else {
      baseline = synth_baseline(spec, cfg.eval.baseline_episodes, cfg.global_seed * 7919ull);
      baselines[spec.name] = baseline;
    }

    EvalConfig ec;
    ec.episodes = episodes;
    ec.argmax = select == "argmax";
    ec.temperature = temperature;
    ec.max_steps = cfg.eval.max_steps;
    if (target == "auto") {
      ec.target_return = expected_return(ck.meta.max_return);
      if (ec.target_return == 0.0)
        std::cerr << "warning: dataset max return is 0; evaluation target is 0\n";
    } else {
      ec.target_return = std::strtod(target.c_str(), nullptr);
    }
    ec.validate();

    const std::string model_name = arch_name(ck.config.arch);
    EvalOutcome outcome = evaluate_model(*ck.model, spec, map.get(), ec,
                                         seed ^ fnv1a64(spec.name + "/" + model_name));
    std::vector<double> normalized;
    for (int ep = 0; ep < episodes; ++ep) {
      const double raw = outcome.raw_returns[static_cast<size_t>(ep)];
      const double norm = normalized_score(raw, baseline);
      normalized.push_back(norm);
      rows.push_back({spec.name, model_name, seed, ep, raw, norm});
    }
    auto raw_summary = summarize(outcome.raw_returns);
    auto norm_summary = summarize(normalized);
    auto filtered = remove_outliers(normalized);
    auto filtered_summary = summarize(filtered.filtered);

    Json e;
    e["game"] = spec.name;
    e["model"] = model_name;
    e["context"] = ck.config.context;
    e["seed"] = seed;
    e["episodes"] = episodes;
    e["target_return"] = ec.target_return;
    e["baseline"] = {{"random", baseline.random_score}, {"human", baseline.human_score}};
    e["raw"] = {{"mean", raw_summary.mean}, {"std", raw_summary.stddev}};
    e["normalized"] = {{"mean", norm_summary.mean}, {"std", norm_summary.stddev}};
    e["normalized_filtered"] = {{"mean", filtered_summary.mean},
                                {"std", filtered_summary.stddev},
                                {"removed_indices", filtered.removed_indices}};
    summary["entries"].push_back(std::move(e));
    std::cerr << spec.name << "/" << model_name << ": raw " << raw_summary.mean << " +- "
              << raw_summary.stddev << ", normalized " << norm_summary.mean << " +- "
              << norm_summary.stddev << "\n";
  }

  write_scores_csv(rows, out_path, hash);
  tracker.add(out_path);
  const std::string summary_path =
      (fs::path(out_path).parent_path() / (fs::path(out_path).stem().string() + "_summary.json"))
          .string();
  write_text_atomic(summary_path, summary.dump(2) + "\n");
  tracker.add(summary_path);
  tracker.keep();
  return 0;
}

// ---------------------------------------------------------------------------
// fuse

int cmd_fuse(const CommonOpts& common, const std::string& data_dir, const std::string& game,
             const std::string& strategy, int target_count, const std::string& map_in,
             const std::string& map_out, const std::string& data_out) {
  RunConfig cfg = resolve_config(common);
  TrajectoryDataset ds = load_game_dataset(cfg, data_dir, game);

  FusionMap map;
  if (strategy == "simple") {
    map = simple_fusion_map(ds.action_names);
  } else if (strategy == "frequency") {
    if (target_count < 1) throw ConfigError("--target is required for frequency fusion");
    map = frequency_fusion_map(ds.action_names, last_percent_distribution(ds, 0.01), target_count);
  } else if (strategy == "file") {
    if (map_in.empty()) throw ConfigError("--map is required for file fusion");
    map = FusionMap::from_json(read_text(map_in));
  } else {
    throw ConfigError("unknown fusion strategy '" + strategy + "'");
  }

  OutputTracker tracker;
  Json map_json = Json::parse(map.to_json());
  map_json["config_hash"] = cfg.config_hash();
  write_text_atomic(map_out, map_json.dump(2) + "\n");
  tracker.add(map_out);

  TrajectoryDataset fused = relabel_dataset(ds, map);
  Json trailer;
  trailer["config_hash"] = cfg.config_hash();
  const std::string fused_path =
      data_out.empty() ? (fs::path(data_dir) / (game + "_fused.sqrl")).string() : data_out;
  write_dataset(fused, fused_path, trailer.dump());
  tracker.add(fused_path);
  tracker.keep();
  std::cerr << "fused " << game << ": " << ds.action_space_size << " -> " << map.fused_count()
            << " actions\n";
  return 0;
}

// ---------------------------------------------------------------------------
// analyze

struct AnalysisInputs {
  FeatureMatrix X;
  std::vector<double> y;  // per game: dt normalized mean - dm normalized mean
};

AnalysisInputs build_analysis_inputs(const std::vector<GameMetrics>& metrics,
                                     const std::vector<ScoreRow>& scores) {
  std::map<std::string, std::map<std::string, std::pair<double, size_t>>> sums;
  for (const auto& r : scores) {
    auto& cell = sums[r.game][r.model];
    cell.first += r.normalized_score;
    cell.second += 1;
  }
  AnalysisInputs in;
  in.X.col_labels = GameMetrics::feature_names();
  for (const auto& m : metrics) {
    auto git = sums.find(m.game);
    if (git == sums.end() || !git->second.count("dt") || !git->second.count("dm"))
      throw DataError("scores.csv lacks dt/dm rows for game " + m.game);
    const auto& dt = git->second.at("dt");
    const auto& dm = git->second.at("dm");
    in.X.row_labels.push_back(m.game);
    auto vals = m.feature_values();
    in.X.values.insert(in.X.values.end(), vals.begin(), vals.end());
    in.y.push_back(dt.first / static_cast<double>(dt.second) -
                   dm.first / static_cast<double>(dm.second));
  }
  in.X.validate();
  return in;
}

int cmd_analyze(const CommonOpts& common, const std::string& metrics_path,
                const std::string& scores_path, int trees, int folds, uint64_t seed,
                const std::string& out_dir) {
  RunConfig cfg = resolve_config(common);
  const std::string hash = cfg.config_hash();
  std::string mhash, shash;
  auto metrics = read_metrics_csv(metrics_path, &mhash);
  auto scores = read_scores_csv(scores_path, &shash);
  if (!mhash.empty() && mhash != hash)
    throw DataError("metrics.csv was produced by a different config");
  if (!shash.empty() && shash != hash)
    throw DataError("scores.csv was produced by a different config");

  AnalysisInputs in = build_analysis_inputs(metrics, scores);

  ForestConfig fc;
  fc.n_trees = trees;
  fc.k_folds = folds;
  fc.seed = seed;
  RandomForest full;
  RegressionReport reg = random_forest_cv(in.X, in.y, fc, &full);
  ShapReport shap = shap_values(full, in.X, cfg.analysis.shap_permutations, seed + 1);

  std::vector<std::string> corr_labels = {"perf_diff"};
  std::vector<std::vector<double>> corr_cols = {in.y};
  for (size_t f = 0; f < in.X.cols(); ++f) {
    corr_labels.push_back(in.X.col_labels[f]);
    std::vector<double> col(in.X.rows());
    for (size_t r = 0; r < in.X.rows(); ++r) col[r] = in.X.at(r, f);
    corr_cols.push_back(std::move(col));
  }
  CorrelationMatrix corr = pearson_matrix(corr_labels, corr_cols);

  fs::create_directories(out_dir);
  OutputTracker tracker;
  const std::string report_path = (fs::path(out_dir) / "report.json").string();
  write_text_atomic(report_path, analysis_report_json(reg, shap, corr, hash));
  tracker.add(report_path);

  const std::string hash_comment = "<!-- config_hash=" + hash + " -->\n";
  const std::string imp_path = (fs::path(out_dir) / "feature_importance.svg").string();
  write_text_atomic(imp_path, hash_comment + svg_bar_chart("Random-forest feature importance",
                                                           reg.feature_names, reg.importances));
  tracker.add(imp_path);
  const std::string shap_path = (fs::path(out_dir) / "shap_importance.svg").string();
  write_text_atomic(shap_path, hash_comment + svg_bar_chart("Mean |SHAP| per feature",
                                                            shap.feature_names, shap.mean_abs));
  tracker.add(shap_path);
  const std::string corr_path = (fs::path(out_dir) / "correlation_matrix.svg").string();
  write_text_atomic(corr_path, hash_comment + svg_heatmap("Pearson correlation", corr.labels, corr.r));
  tracker.add(corr_path);
  tracker.keep();

  std::cerr << "rmse " << reg.rmse_mean << " +- " << reg.rmse_std << "\n";
  for (size_t f = 0; f < reg.feature_names.size(); ++f)
    std::cerr << "  importance " << reg.feature_names[f] << " = " << reg.importances[f] << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const CommonOpts& common, const std::string& dir, const std::string& format) {
  RunConfig cfg = resolve_config(common);
  const std::string hash = cfg.config_hash();

  // Collect the hashes of everything present and refuse mismatches.
  auto check_hash = [&](const std::string& file_hash, const std::string& what) {
    if (!file_hash.empty() && file_hash != hash)
      throw DataError(what + " was produced by a different config (expected " + hash + ", got " +
                      file_hash + ")");
  };

  const std::string report_json_path = (fs::path(dir) / "analysis" / "report.json").string();
  if (!fs::exists(report_json_path)) throw DataError("missing " + report_json_path);
  Json report = Json::parse(read_text(report_json_path), nullptr, false);
  if (report.is_discarded()) throw DataError("malformed report.json");
  check_hash(report.value("config_hash", std::string()), "report.json");

  std::string mhash, shash;
  std::vector<GameMetrics> metrics;
  const std::string metrics_path = (fs::path(dir) / "metrics.csv").string();
  if (fs::exists(metrics_path)) {
    metrics = read_metrics_csv(metrics_path, &mhash);
    check_hash(mhash, "metrics.csv");
  }
  const std::string scores_path = (fs::path(dir) / "scores.csv").string();
  std::vector<ScoreRow> scores;
  if (fs::exists(scores_path)) {
    scores = read_scores_csv(scores_path, &shash);
    check_hash(shash, "scores.csv");
  }

  const fs::path out_dir = fs::path(dir) / "report";
  fs::create_directories(out_dir);
  OutputTracker tracker;

  const auto& reg = report.at("regression");
  std::vector<std::string> feature_names = reg.at("feature_names").get<std::vector<std::string>>();
  std::vector<double> importances = reg.at("importances").get<std::vector<double>>();
  const auto& shap = report.at("shap");
  std::vector<double> mean_abs = shap.at("mean_abs").get<std::vector<double>>();
  const auto& corr = report.at("correlation");
  std::vector<std::string> corr_labels = corr.at("labels").get<std::vector<std::string>>();
  std::vector<double> corr_r;
  for (const auto& row : corr.at("r"))
    for (const auto& v : row) corr_r.push_back(v.is_null() ? std::nan("") : v.get<double>());

  if (format == "csv") {
    std::ostringstream imp;
    imp << "feature,mdi_importance,mean_abs_shap\n";
    for (size_t f = 0; f < feature_names.size(); ++f)
      imp << feature_names[f] << "," << format_double(importances[f]) << ","
          << format_double(mean_abs[f]) << "\n";
    imp << "# config_hash=" << hash << "\n";
    const std::string p = (out_dir / "importance.csv").string();
    write_text_atomic(p, imp.str());
    tracker.add(p);

    std::ostringstream cm;
    cm << "label";
    for (const auto& l : corr_labels) cm << "," << l;
    cm << "\n";
    const size_t d = corr_labels.size();
    for (size_t a = 0; a < d; ++a) {
      cm << corr_labels[a];
      for (size_t b = 0; b < d; ++b) {
        cm << ",";
        if (!std::isnan(corr_r[a * d + b])) cm << format_double(corr_r[a * d + b]);
      }
      cm << "\n";
    }
    cm << "# config_hash=" << hash << "\n";
    const std::string pc = (out_dir / "correlation.csv").string();
    write_text_atomic(pc, cm.str());
    tracker.add(pc);
  } else if (format == "json") {
    Json out;
    out["config_hash"] = hash;
    out["regression"] = reg;
    out["shap_mean_abs"] = mean_abs;
    if (!scores.empty()) {
      std::map<std::string, std::map<std::string, std::vector<double>>> by_game;
      for (const auto& r : scores) by_game[r.game][r.model].push_back(r.normalized_score);
      Json table = Json::array();
      for (const auto& [game, models] : by_game) {
        Json row;
        row["game"] = game;
        for (const auto& [model, vals] : models) {
          auto s = summarize(vals);
          auto filtered = remove_outliers(vals);
          auto fs_ = summarize(filtered.filtered);
          row[model] = {{"mean", s.mean},
                        {"std", s.stddev},
                        {"filtered_mean", fs_.mean},
                        {"filtered_std", fs_.stddev}};
        }
        table.push_back(std::move(row));
      }
      out["normalized_scores"] = std::move(table);
    }
    const std::string p = (out_dir / "summary.json").string();
    write_text_atomic(p, out.dump(2) + "\n");
    tracker.add(p);
  } else if (format == "svg") {
    const std::string hash_comment = "<!-- config_hash=" + hash + " -->\n";
    const std::string p1 = (out_dir / "feature_importance.svg").string();
    write_text_atomic(p1, hash_comment + svg_bar_chart("Random-forest feature importance",
                                                       feature_names, importances));
    tracker.add(p1);
    const std::string p2 = (out_dir / "shap_importance.svg").string();
    write_text_atomic(p2, hash_comment + svg_bar_chart("Mean |SHAP| per feature", feature_names, mean_abs));
    tracker.add(p2);
    const std::string p3 = (out_dir / "correlation_matrix.svg").string();
    write_text_atomic(p3, hash_comment + svg_heatmap("Pearson correlation", corr_labels, corr_r));
    tracker.add(p3);
  } else {
    throw ConfigError("unknown report format '" + format + "'");
  }
  tracker.keep();
  return 0;
}

// ---------------------------------------------------------------------------
// convert (container <-> JSONL debug format, by extension)

int cmd_convert(const std::string& in_path, const std::string& out_path) {
  const bool in_jsonl = in_path.ends_with(".jsonl");
  const bool out_jsonl = out_path.ends_with(".jsonl");
  TrajectoryDataset ds = in_jsonl ? read_dataset_jsonl(in_path) : read_dataset(in_path);
  OutputTracker tracker;
  if (out_jsonl)
    write_dataset_jsonl(ds, out_path);
  else
    write_dataset(ds, out_path);
  tracker.add(out_path);
  tracker.keep();
  std::cerr << "converted " << ds.episodes.size() << " episodes\n";
  return 0;
}

// ---------------------------------------------------------------------------
// gradcheck (maintenance utility surfaced on the CLI)

int cmd_gradcheck(const std::string& model_name, uint64_t seed, bool f64) {
  ModelConfig cfg;
  cfg.arch = arch_from_name(model_name);
  cfg.n_layers = 2;
  cfg.d_model = 32;
  cfg.context = 4;
  cfg.n_heads = 4;
  cfg.ssm_state_dim = 16;
  cfg.action_space_size = 6;
  cfg.max_timestep = 64;
  auto print = [&](const nn::GradCheckResult& r, const char* label, double tol) {
    std::cout << label << " max rel err " << r.max_rel_err << " (worst " << r.worst_param << ")\n";
    return r.max_rel_err < tol ? 0 : 4;
  };
  if (f64) return print(nn::gradient_check<double>(cfg, seed), "f64", 1e-6);
  return print(nn::gradient_check<float>(cfg, seed), "f32", 1e-3);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"offline sequence-modeling RL lab"};
  app.require_subcommand(1);

  CommonOpts c_gen, c_stats, c_train, c_eval, c_fuse, c_analyze, c_report;

  auto* gen = app.add_subcommand("gen-suite", "generate the synthetic game suite + datasets");
  std::string gen_out = "runs/suite";
  add_common(gen, c_gen);
  gen->add_option("--out", gen_out, "output directory");

  auto* stats = app.add_subcommand("stats", "per-game characteristic metrics");
  std::string stats_data, stats_out = "metrics.csv";
  int stats_frames = 1000;
  uint64_t stats_seed = 1;
  bool stats_frames_set = false, stats_seed_set = false;
  add_common(stats, c_stats);
  stats->add_option("--data", stats_data, "suite directory")->required();
  stats->add_option("--frames", stats_frames)->each([&](const std::string&) { stats_frames_set = true; });
  stats->add_option("--seed", stats_seed)->each([&](const std::string&) { stats_seed_set = true; });
  stats->add_option("--out", stats_out);

  auto* train = app.add_subcommand("train", "offline training");
  std::string tr_model, tr_game, tr_data, tr_out, tr_map;
  int tr_context = 10;
  uint64_t tr_seed = 123;
  add_common(train, c_train);
  train->add_option("--model", tr_model, "dt or dm")->required()->check(CLI::IsMember({"dt", "dm"}));
  train->add_option("--game", tr_game)->required();
  train->add_option("--context", tr_context);
  train->add_option("--seed", tr_seed);
  train->add_option("--data", tr_data, "suite directory")->required();
  train->add_option("--out", tr_out, "checkpoint path")->required();
  train->add_option("--map", tr_map, "fusion map JSON: train in the fused action space");

  auto* eval = app.add_subcommand("eval", "return-conditioned rollouts + normalized scores");
  std::vector<std::string> ev_ckpts;
  int ev_episodes = 10;
  uint64_t ev_seed = 123;
  std::string ev_target = "auto", ev_select = "sample", ev_baselines, ev_out = "scores.csv";
  double ev_temperature = 1.0;
  add_common(eval, c_eval);
  eval->add_option("--ckpt", ev_ckpts, "checkpoint file (repeatable)")->required();
  eval->add_option("--episodes", ev_episodes);
  eval->add_option("--seed", ev_seed);
  eval->add_option("--target", ev_target, "auto or a number");
  eval->add_option("--select", ev_select)->check(CLI::IsMember({"sample", "argmax"}));
  eval->add_option("--temperature", ev_temperature);
  eval->add_option("--baselines", ev_baselines, "baseline CSV (game,random_score,human_score)");
  eval->add_option("--out", ev_out);

  auto* fuse = app.add_subcommand("fuse", "build a fusion map and relabel a dataset");
  std::string fu_data, fu_game, fu_strategy = "simple", fu_map_in, fu_map_out, fu_data_out;
  int fu_target = 0;
  add_common(fuse, c_fuse);
  fuse->add_option("--data", fu_data)->required();
  fuse->add_option("--game", fu_game)->required();
  fuse->add_option("--strategy", fu_strategy)->check(CLI::IsMember({"simple", "frequency", "file"}));
  fuse->add_option("--target", fu_target, "group count for frequency fusion");
  fuse->add_option("--map", fu_map_in, "map JSON for file strategy");
  fuse->add_option("--map-out", fu_map_out)->required();
  fuse->add_option("--data-out", fu_data_out, "relabeled container (default <data>/<game>_fused.sqrl)");

  auto* analyze = app.add_subcommand("analyze", "random forest + SHAP + correlation battery");
  std::string an_metrics, an_scores, an_out = "analysis";
  int an_trees = 1000, an_folds = 6;
  uint64_t an_seed = 1;
  bool an_trees_set = false, an_folds_set = false;
  add_common(analyze, c_analyze);
  analyze->add_option("--metrics", an_metrics)->required();
  analyze->add_option("--scores", an_scores)->required();
  analyze->add_option("--trees", an_trees)->each([&](const std::string&) { an_trees_set = true; });
  analyze->add_option("--folds", an_folds)->each([&](const std::string&) { an_folds_set = true; });
  analyze->add_option("--seed", an_seed);
  analyze->add_option("--out", an_out);

  auto* report = app.add_subcommand("report", "regenerate tables/figures from run artifacts");
  std::string rp_dir, rp_format = "json";
  add_common(report, c_report);
  report->add_option("--dir", rp_dir)->required();
  report->add_option("--format", rp_format)->check(CLI::IsMember({"csv", "json", "svg"}));

  auto* convert = app.add_subcommand("convert", "convert datasets between .sqrl and .jsonl");
  std::string cv_in, cv_out;
  convert->add_option("--in", cv_in)->required();
  convert->add_option("--out", cv_out)->required();

  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
  std::string gc_model = "dt";
  uint64_t gc_seed = 1;
  bool gc_f64 = false;
  gradcheck->add_option("--model", gc_model)->check(CLI::IsMember({"dt", "dm"}));
  gradcheck->add_option("--seed", gc_seed);
  gradcheck->add_flag("--f64", gc_f64, "run the double-precision variant");

  try {
    app.parse(argc, argv);
    if (gen->parsed()) return cmd_gen_suite(c_gen, gen_out);
    if (stats->parsed()) {
      RunConfig cfg = resolve_config(c_stats);
      return cmd_stats(c_stats, stats_data, stats_frames_set ? stats_frames : cfg.stats_frames,
                       stats_seed_set ? stats_seed : cfg.global_seed, stats_out);
    }
    if (train->parsed()) return cmd_train(c_train, tr_model, tr_game, tr_context, tr_seed, tr_data, tr_out, tr_map);
    if (eval->parsed())
      return cmd_eval(c_eval, ev_ckpts, ev_episodes, ev_seed, ev_target, ev_select, ev_temperature,
                      ev_baselines, ev_out);
    if (fuse->parsed())
      return cmd_fuse(c_fuse, fu_data, fu_game, fu_strategy, fu_target, fu_map_in, fu_map_out, fu_data_out);
    if (analyze->parsed()) {
      RunConfig cfg = resolve_config(c_analyze);
      return cmd_analyze(c_analyze, an_metrics, an_scores, an_trees_set ? an_trees : cfg.analysis.n_trees,
                         an_folds_set ? an_folds : cfg.analysis.k_folds, an_seed, an_out);
    }
    if (report->parsed()) return cmd_report(c_report, rp_dir, rp_format);
    if (convert->parsed()) return cmd_convert(cv_in, cv_out);
    if (gradcheck->parsed()) return cmd_gradcheck(gc_model, gc_seed, gc_f64);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return 0;  // --help
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
