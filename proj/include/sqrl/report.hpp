#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqrl/analysis.hpp"
#include "sqrl/metrics.hpp"

namespace sqrl {

// All artifact writers are atomic (tmp file + rename) and embed the producing
// config hash: CSVs carry a trailing "# config_hash=..." comment line, JSON
// artifacts a "config_hash" field.

void write_text_atomic(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

std::string format_double(double v);  // shortest round-trip-stable decimal

// metrics.csv
void write_metrics_csv(const std::vector<GameMetrics>& rows, const std::string& path,
                       const std::string& config_hash);
std::vector<GameMetrics> read_metrics_csv(const std::string& path, std::string* config_hash = nullptr);

// scores.csv
struct ScoreRow {
  std::string game;
  std::string model;  // "dt" or "dm"
  uint64_t seed = 0;
  int episode = 0;
  double raw_score = 0.0;
  double normalized_score = 0.0;
};
void write_scores_csv(const std::vector<ScoreRow>& rows, const std::string& path,
                      const std::string& config_hash);
std::vector<ScoreRow> read_scores_csv(const std::string& path, std::string* config_hash = nullptr);

// baselines.csv: game,random_score,human_score
struct BaselineRow {
  std::string game;
  double random_score = 0.0;
  double human_score = 0.0;
};
void write_baselines_csv(const std::vector<BaselineRow>& rows, const std::string& path,
                         const std::string& config_hash);
std::vector<BaselineRow> read_baselines_csv(const std::string& path, std::string* config_hash = nullptr);

// Full analysis report (regression + SHAP + correlation) as one JSON file.
std::string analysis_report_json(const RegressionReport& reg, const ShapReport& shap,
                                 const CorrelationMatrix& corr, const std::string& config_hash);

// Figure analogs.
std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values);
std::string svg_heatmap(const std::string& title, const std::vector<std::string>& labels,
                        const std::vector<double>& matrix);  // labels.size()^2 values in [-1,1]

}  // namespace sqrl
