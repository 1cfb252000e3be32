#include "sqrl/report.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sqrl {

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw DataError("cannot open for write: " + tmp);
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!os) throw DataError("write failed: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw DataError("rename failed for " + path + ": " + ec.message());
}

std::string read_text(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open: " + path);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

std::string format_double(double v) {
  // Shortest representation that round-trips; keeps CSV output bit-stable.
  for (int prec = 1; prec <= 17; ++prec) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    double back = std::strtod(buf, nullptr);
    if (back == v) return buf;
  }
  return "0";
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

struct CsvDoc {
  std::vector<std::vector<std::string>> rows;  // without header
  std::string header;
  std::string config_hash;
};

CsvDoc parse_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open: " + path);
  CsvDoc doc;
  std::string line;
  bool first = true;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      auto pos = line.find("config_hash=");
      if (pos != std::string::npos) doc.config_hash = line.substr(pos + 12);
      continue;
    }
    if (first) {
      doc.header = line;
      first = false;
    } else {
      doc.rows.push_back(split_csv_line(line));
    }
  }
  if (first) throw DataError("empty CSV: " + path);
  return doc;
}

double to_double(const std::string& s, const std::string& path) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw DataError("bad numeric field '" + s + "' in " + path);
  return v;
}

constexpr const char* kMetricsHeader =
    "game,num_actions,avg_traj_len,avg_steps_first_reward,image_entropy,compression_ratio,feature_count";
constexpr const char* kScoresHeader = "game,model,seed,episode,raw_score,normalized_score";
constexpr const char* kBaselinesHeader = "game,random_score,human_score";

}  // namespace

void write_metrics_csv(const std::vector<GameMetrics>& rows, const std::string& path,
                       const std::string& config_hash) {
  std::ostringstream os;
  os << kMetricsHeader << "\n";
  for (const auto& m : rows) {
    os << m.game << "," << m.num_actions << "," << format_double(m.avg_traj_len) << ","
       << format_double(m.avg_steps_first_reward) << "," << format_double(m.image_entropy) << ","
       << format_double(m.compression_ratio) << "," << format_double(m.feature_count) << "\n";
  }
  os << "# config_hash=" << config_hash << "\n";
  write_text_atomic(path, os.str());
}

std::vector<GameMetrics> read_metrics_csv(const std::string& path, std::string* config_hash) {
  CsvDoc doc = parse_csv(path);
  if (doc.header != kMetricsHeader) throw DataError("unexpected metrics.csv header in " + path);
  std::vector<GameMetrics> out;
  for (const auto& r : doc.rows) {
    if (r.size() != 7) throw DataError("bad metrics row in " + path);
    GameMetrics m;
    m.game = r[0];
    m.num_actions = static_cast<int>(to_double(r[1], path));
    m.avg_traj_len = to_double(r[2], path);
    m.avg_steps_first_reward = to_double(r[3], path);
    m.image_entropy = to_double(r[4], path);
    m.compression_ratio = to_double(r[5], path);
    m.feature_count = to_double(r[6], path);
    out.push_back(std::move(m));
  }
  if (config_hash) *config_hash = doc.config_hash;
  return out;
}

void write_scores_csv(const std::vector<ScoreRow>& rows, const std::string& path,
                      const std::string& config_hash) {
  std::ostringstream os;
  os << kScoresHeader << "\n";
  for (const auto& r : rows) {
    os << r.game << "," << r.model << "," << r.seed << "," << r.episode << ","
       << format_double(r.raw_score) << "," << format_double(r.normalized_score) << "\n";
  }
  os << "# config_hash=" << config_hash << "\n";
  write_text_atomic(path, os.str());
}

std::vector<ScoreRow> read_scores_csv(const std::string& path, std::string* config_hash) {
  CsvDoc doc = parse_csv(path);
  if (doc.header != kScoresHeader) throw DataError("unexpected scores.csv header in " + path);
  std::vector<ScoreRow> out;
  for (const auto& r : doc.rows) {
    if (r.size() != 6) throw DataError("bad scores row in " + path);
    ScoreRow s;
    s.game = r[0];
    s.model = r[1];
    s.seed = static_cast<uint64_t>(std::strtoull(r[2].c_str(), nullptr, 10));
    s.episode = static_cast<int>(to_double(r[3], path));
    s.raw_score = to_double(r[4], path);
    s.normalized_score = to_double(r[5], path);
    out.push_back(std::move(s));
  }
  if (config_hash) *config_hash = doc.config_hash;
  return out;
}

void write_baselines_csv(const std::vector<BaselineRow>& rows, const std::string& path,
                         const std::string& config_hash) {
  std::ostringstream os;
  os << kBaselinesHeader << "\n";
  for (const auto& r : rows)
    os << r.game << "," << format_double(r.random_score) << "," << format_double(r.human_score) << "\n";
  os << "# config_hash=" << config_hash << "\n";
  write_text_atomic(path, os.str());
}

std::vector<BaselineRow> read_baselines_csv(const std::string& path, std::string* config_hash) {
  CsvDoc doc = parse_csv(path);
  if (doc.header != kBaselinesHeader) throw DataError("unexpected baselines header in " + path);
  std::vector<BaselineRow> out;
  for (const auto& r : doc.rows) {
    if (r.size() != 3) throw DataError("bad baselines row in " + path);
    out.push_back({r[0], to_double(r[1], path), to_double(r[2], path)});
  }
  if (config_hash) *config_hash = doc.config_hash;
  return out;
}

std::string analysis_report_json(const RegressionReport& reg, const ShapReport& shap,
                                 const CorrelationMatrix& corr, const std::string& config_hash) {
  nlohmann::ordered_json j;
  j["config_hash"] = config_hash;
  j["regression"] = {{"rmse_mean", reg.rmse_mean},
                     {"rmse_std", reg.rmse_std},
                     {"fold_rmse", reg.fold_rmse},
                     {"feature_names", reg.feature_names},
                     {"importances", reg.importances},
                     {"n_trees", reg.config.n_trees},
                     {"k_folds", reg.config.k_folds},
                     {"bootstrap", reg.config.bootstrap},
                     {"seed", reg.config.seed}};
  j["shap"] = {{"feature_names", shap.feature_names},
               {"mean_abs", shap.mean_abs},
               {"values", shap.values},
               {"base_values", shap.base_values},
               {"n_permutations", shap.n_permutations},
               {"seed", shap.seed}};
  nlohmann::ordered_json corr_j;
  corr_j["labels"] = corr.labels;
  corr_j["r"] = nlohmann::ordered_json::array();
  corr_j["category"] = nlohmann::ordered_json::array();
  const size_t d = corr.labels.size();
  for (size_t a = 0; a < d; ++a) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    nlohmann::ordered_json cats = nlohmann::ordered_json::array();
    for (size_t b = 0; b < d; ++b) {
      if (corr.defined[a * d + b]) {
        row.push_back(corr.at(a, b));
        cats.push_back(categorize_correlation(corr.at(a, b)));
      } else {
        row.push_back(nullptr);
        cats.push_back("undefined");
      }
    }
    corr_j["r"].push_back(std::move(row));
    corr_j["category"].push_back(std::move(cats));
  }
  j["correlation"] = std::move(corr_j);
  return j.dump(2) + "\n";
}

namespace {

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values) {
  if (labels.size() != values.size()) throw DataError("bar chart label/value mismatch");
  const double width = 640.0, height = 360.0, margin_l = 170.0, margin_t = 50.0, bar_gap = 8.0;
  const double plot_w = width - margin_l - 30.0;
  const double bar_h = (height - margin_t - 20.0) / static_cast<double>(labels.size()) - bar_gap;
  double vmax = 1e-12;
  for (double v : values) vmax = std::max(vmax, std::abs(v));
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\">\n";
  os << "<text x=\"20\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\">" << xml_escape(title)
     << "</text>\n";
  for (size_t i = 0; i < labels.size(); ++i) {
    const double y = margin_t + static_cast<double>(i) * (bar_h + bar_gap);
    const double w = plot_w * std::abs(values[i]) / vmax;
    os << "<text x=\"" << svg_num(margin_l - 8) << "\" y=\"" << svg_num(y + bar_h * 0.7)
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(labels[i])
       << "</text>\n";
    os << "<rect x=\"" << svg_num(margin_l) << "\" y=\"" << svg_num(y) << "\" width=\"" << svg_num(w)
       << "\" height=\"" << svg_num(bar_h) << "\" fill=\"" << (values[i] >= 0 ? "#4878a8" : "#a84848")
       << "\"/>\n";
    os << "<text x=\"" << svg_num(margin_l + w + 6) << "\" y=\"" << svg_num(y + bar_h * 0.7)
       << "\" font-family=\"sans-serif\" font-size=\"11\">" << format_double(values[i]) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string svg_heatmap(const std::string& title, const std::vector<std::string>& labels,
                        const std::vector<double>& matrix) {
  const size_t d = labels.size();
  if (matrix.size() != d * d) throw DataError("heatmap matrix size mismatch");
  const double cell = 48.0, margin_l = 150.0, margin_t = 140.0;
  const double width = margin_l + cell * static_cast<double>(d) + 30.0;
  const double height = margin_t + cell * static_cast<double>(d) + 30.0;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\">\n";
  os << "<text x=\"20\" y=\"28\" font-family=\"sans-serif\" font-size=\"16\">" << xml_escape(title)
     << "</text>\n";
  for (size_t a = 0; a < d; ++a) {
    os << "<text x=\"" << svg_num(margin_l - 8) << "\" y=\"" << svg_num(margin_t + cell * (a + 0.6))
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << xml_escape(labels[a])
       << "</text>\n";
    os << "<text x=\"" << svg_num(margin_l + cell * (a + 0.5)) << "\" y=\"" << svg_num(margin_t - 8)
       << "\" text-anchor=\"start\" font-family=\"sans-serif\" font-size=\"11\" transform=\"rotate(-60 "
       << svg_num(margin_l + cell * (a + 0.5)) << " " << svg_num(margin_t - 8) << ")\">"
       << xml_escape(labels[a]) << "</text>\n";
  }
  for (size_t a = 0; a < d; ++a) {
    for (size_t b = 0; b < d; ++b) {
      const double v = matrix[a * d + b];
      int rch, gch, bch;
      if (std::isnan(v)) {
        rch = gch = bch = 200;
      } else if (v >= 0) {  // white -> red
        rch = 255;
        gch = bch = static_cast<int>(255.0 * (1.0 - v));
      } else {  // white -> blue
        bch = 255;
        rch = gch = static_cast<int>(255.0 * (1.0 + v));
      }
      os << "<rect x=\"" << svg_num(margin_l + cell * static_cast<double>(b)) << "\" y=\""
         << svg_num(margin_t + cell * static_cast<double>(a)) << "\" width=\"" << svg_num(cell)
         << "\" height=\"" << svg_num(cell) << "\" fill=\"rgb(" << rch << "," << gch << "," << bch
         << ")\" stroke=\"#888\"/>\n";
      os << "<text x=\"" << svg_num(margin_l + cell * (static_cast<double>(b) + 0.5)) << "\" y=\""
         << svg_num(margin_t + cell * (static_cast<double>(a) + 0.6))
         << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">"
         << (std::isnan(v) ? std::string("n/a") : svg_num(v)) << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace sqrl
