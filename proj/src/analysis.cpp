#include "sqrl/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "sqrl/rng.hpp"

namespace sqrl {

void FeatureMatrix::validate() const {
  if (values.size() != rows() * cols()) throw DataError("feature matrix shape mismatch");
  for (double v : values)
    if (!std::isfinite(v)) throw DataError("feature matrix contains a non-finite value");
}

namespace {

double subset_mean(const std::vector<double>& y, const std::vector<size_t>& idx) {
  double s = 0.0;
  for (size_t i : idx) s += y[i];
  return s / static_cast<double>(idx.size());
}

// Sum of squared errors around the subset mean.
double subset_sse(const std::vector<double>& y, const std::vector<size_t>& idx) {
  double m = subset_mean(y, idx);
  double s = 0.0;
  for (size_t i : idx) s += (y[i] - m) * (y[i] - m);
  return s;
}

struct BestSplit {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  double sse_after = 0.0;
};

BestSplit find_best_split(const FeatureMatrix& X, const std::vector<double>& y,
                          const std::vector<size_t>& idx) {
  BestSplit best;
  const size_t d = X.cols();
  std::vector<std::pair<double, size_t>> col(idx.size());
  for (size_t f = 0; f < d; ++f) {
    for (size_t i = 0; i < idx.size(); ++i) col[i] = {X.at(idx[i], f), idx[i]};
    std::sort(col.begin(), col.end());
    // Prefix sums over the sorted order give O(n) split evaluation.
    double total_sum = 0.0;
    for (auto& [xv, yi] : col) total_sum += y[yi];
    double left_sum = 0.0;
    size_t left_n = 0;
    for (size_t i = 0; i + 1 < col.size(); ++i) {
      left_sum += y[col[i].second];
      ++left_n;
      if (col[i].first == col[i + 1].first) continue;  // need distinct values
      const double threshold = 0.5 * (col[i].first + col[i + 1].first);
      const double right_sum = total_sum - left_sum;
      const size_t right_n = col.size() - left_n;
      // SSE = sum(y^2) - n*mean^2 per side; sum(y^2) is shared, so comparing
      // -sum^2/n terms is enough.
      double score = -(left_sum * left_sum) / static_cast<double>(left_n) -
                     (right_sum * right_sum) / static_cast<double>(right_n);
      if (!best.found || score < best.sse_after) {
        best.found = true;
        best.feature = static_cast<int>(f);
        best.threshold = threshold;
        best.sse_after = score;
      }
    }
  }
  return best;
}

int grow(RegressionTree& tree, const FeatureMatrix& X, const std::vector<double>& y,
         std::vector<size_t> idx) {
  const int node_id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  tree.nodes[static_cast<size_t>(node_id)].value = subset_mean(y, idx);

  if (idx.size() < 2) return node_id;
  const double sse_here = subset_sse(y, idx);
  if (sse_here <= 0.0) return node_id;  // already pure

  BestSplit best = find_best_split(X, y, idx);
  if (!best.found) return node_id;  // all feature values identical

  std::vector<size_t> left_idx, right_idx;
  for (size_t i : idx) {
    if (X.at(i, static_cast<size_t>(best.feature)) <= best.threshold)
      left_idx.push_back(i);
    else
      right_idx.push_back(i);
  }
  const double sse_children = subset_sse(y, left_idx) + subset_sse(y, right_idx);
  const double decrease = sse_here - sse_children;
  if (decrease <= 0.0) return node_id;

  tree.importance_raw[static_cast<size_t>(best.feature)] += decrease;
  tree.nodes[static_cast<size_t>(node_id)].feature = best.feature;
  tree.nodes[static_cast<size_t>(node_id)].threshold = best.threshold;
  int left = grow(tree, X, y, std::move(left_idx));
  tree.nodes[static_cast<size_t>(node_id)].left = left;
  int right = grow(tree, X, y, std::move(right_idx));
  tree.nodes[static_cast<size_t>(node_id)].right = right;
  return node_id;
}

}  // namespace

double RegressionTree::predict(const double* x) const {
  int cur = 0;
  for (;;) {
    const TreeNode& n = nodes[static_cast<size_t>(cur)];
    if (n.feature < 0) return n.value;
    cur = x[n.feature] <= n.threshold ? n.left : n.right;
  }
}

std::vector<double> RegressionTree::normalized_importance() const {
  std::vector<double> imp = importance_raw;
  double total = 0.0;
  for (double v : imp) total += v;
  if (total > 0.0)
    for (double& v : imp) v /= total;
  return imp;
}

RegressionTree fit_tree(const FeatureMatrix& X, const std::vector<double>& y,
                        const std::vector<size_t>& sample_indices) {
  if (sample_indices.empty()) throw DataError("fit_tree on empty sample");
  if (y.size() != X.rows()) throw DataError("fit_tree target length mismatch");
  RegressionTree tree;
  tree.importance_raw.assign(X.cols(), 0.0);
  grow(tree, X, y, sample_indices);
  return tree;
}

RandomForest fit_forest(const FeatureMatrix& X, const std::vector<double>& y, int n_trees,
                        bool bootstrap, uint64_t seed) {
  RandomForest forest;
  forest.trees.reserve(static_cast<size_t>(n_trees));
  const size_t n = X.rows();
  for (int t = 0; t < n_trees; ++t) {
    std::vector<size_t> sample(n);
    if (bootstrap) {
      Rng rng = Rng::derive(seed, static_cast<uint64_t>(t));
      for (size_t i = 0; i < n; ++i) sample[i] = static_cast<size_t>(rng.next_below(n));
    } else {
      for (size_t i = 0; i < n; ++i) sample[i] = i;
    }
    forest.trees.push_back(fit_tree(X, y, sample));
  }
  return forest;
}

double RandomForest::predict(const double* x) const {
  double s = 0.0;
  for (const auto& t : trees) s += t.predict(x);
  return s / static_cast<double>(trees.size());
}

RegressionReport random_forest_cv(const FeatureMatrix& X, const std::vector<double>& y,
                                  const ForestConfig& config, RandomForest* out_full_forest) {
  X.validate();
  const size_t n = X.rows();
  if (y.size() != n) throw DataError("target length mismatch");
  if (n < 2) throw DataError("need at least 2 rows");
  const size_t k = static_cast<size_t>(config.k_folds);
  if (k < 2 || k > n) throw ConfigError("k_folds must be in [2, n]");

  std::vector<size_t> perm(n);
  for (size_t i = 0; i < n; ++i) perm[i] = i;
  Rng rng = Rng::derive(config.seed, 0xf01d5ull);
  rng.shuffle(perm);

  RegressionReport report;
  report.config = config;
  report.feature_names = X.col_labels;

  size_t cursor = 0;
  for (size_t fold = 0; fold < k; ++fold) {
    const size_t fold_size = n / k + (fold < n % k ? 1 : 0);
    std::vector<bool> in_test(n, false);
    for (size_t i = 0; i < fold_size; ++i) in_test[perm[cursor + i]] = true;
    cursor += fold_size;

    FeatureMatrix Xtr;
    Xtr.col_labels = X.col_labels;
    std::vector<double> ytr;
    for (size_t i = 0; i < n; ++i) {
      if (in_test[i]) continue;
      Xtr.row_labels.push_back(X.row_labels[i]);
      auto row = X.row(i);
      Xtr.values.insert(Xtr.values.end(), row.begin(), row.end());
      ytr.push_back(y[i]);
    }
    RandomForest forest =
        fit_forest(Xtr, ytr, config.n_trees, config.bootstrap, Rng::derive(config.seed, fold).next_u64());
    double se = 0.0;
    size_t n_test = 0;
    for (size_t i = 0; i < n; ++i) {
      if (!in_test[i]) continue;
      auto row = X.row(i);
      double err = forest.predict(row.data()) - y[i];
      se += err * err;
      ++n_test;
    }
    report.fold_rmse.push_back(std::sqrt(se / static_cast<double>(n_test)));
  }

  double mean = 0.0;
  for (double v : report.fold_rmse) mean += v;
  mean /= static_cast<double>(k);
  double var = 0.0;
  for (double v : report.fold_rmse) var += (v - mean) * (v - mean);
  report.rmse_mean = mean;
  report.rmse_std = k > 1 ? std::sqrt(var / static_cast<double>(k - 1)) : 0.0;

  // Refit on everything for the importances.
  RandomForest full = fit_forest(X, y, config.n_trees, config.bootstrap,
                                 Rng::derive(config.seed, 0xf111ull).next_u64());
  std::vector<double> imp(X.cols(), 0.0);
  size_t contributing = 0;
  for (const auto& tree : full.trees) {
    auto ti = tree.normalized_importance();
    double tsum = 0.0;
    for (double v : ti) tsum += v;
    if (tsum <= 0.0) continue;  // single-leaf tree
    for (size_t f = 0; f < imp.size(); ++f) imp[f] += ti[f];
    ++contributing;
  }
  if (contributing > 0) {
    double total = 0.0;
    for (double v : imp) total += v;
    for (double& v : imp) v /= total;
  } else {
    // Constant target: no splits anywhere; report a uniform attribution so
    // that the sum-to-one contract holds.
    imp.assign(X.cols(), 1.0 / static_cast<double>(X.cols()));
  }
  report.importances = std::move(imp);
  if (out_full_forest) *out_full_forest = std::move(full);
  return report;
}

ShapReport shap_values(const RandomForest& forest, const FeatureMatrix& X, int n_permutations,
                       uint64_t seed) {
  X.validate();
  if (forest.trees.empty()) throw DataError("shap_values needs a fitted forest");
  if (n_permutations < 1) throw ConfigError("n_permutations must be >= 1");
  const size_t n = X.rows();
  const size_t d = X.cols();

  ShapReport report;
  report.feature_names = X.col_labels;
  report.n_permutations = n_permutations;
  report.seed = seed;
  report.values.assign(n, std::vector<double>(d, 0.0));
  report.base_values.assign(n, 0.0);
  report.mean_abs.assign(d, 0.0);

  std::vector<size_t> order(d);
  std::vector<double> hybrid(d);
  for (size_t i = 0; i < n; ++i) {
    Rng rng = Rng::derive(seed, i);
    const std::vector<double> xi = X.row(i);
    double base_sum = 0.0;
    for (int p = 0; p < n_permutations; ++p) {
      const size_t zi = static_cast<size_t>(rng.next_below(n));
      for (size_t f = 0; f < d; ++f) order[f] = f;
      rng.shuffle(order);
      hybrid = X.row(zi);
      double prev = forest.predict(hybrid.data());
      base_sum += prev;
      for (size_t f : order) {
        hybrid[f] = xi[f];
        const double cur = forest.predict(hybrid.data());
        report.values[i][f] += cur - prev;
        prev = cur;
      }
    }
    const double inv = 1.0 / static_cast<double>(n_permutations);
    for (size_t f = 0; f < d; ++f) report.values[i][f] *= inv;
    report.base_values[i] = base_sum * inv;
  }
  for (size_t f = 0; f < d; ++f) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += std::abs(report.values[i][f]);
    report.mean_abs[f] = s / static_cast<double>(n);
  }
  return report;
}

CorrelationMatrix pearson_matrix(const std::vector<std::string>& labels,
                                 const std::vector<std::vector<double>>& columns) {
  if (labels.size() != columns.size()) throw DataError("pearson label/column count mismatch");
  if (columns.empty()) throw DataError("pearson needs at least one column");
  const size_t n = columns[0].size();
  if (n < 2) throw DataError("pearson needs at least 2 rows");
  for (const auto& c : columns)
    if (c.size() != n) throw DataError("pearson columns have differing lengths");

  const size_t d = labels.size();
  std::vector<double> mean(d, 0.0), norm(d, 0.0);
  std::vector<bool> constant(d, false);
  for (size_t c = 0; c < d; ++c) {
    for (double v : columns[c]) mean[c] += v;
    mean[c] /= static_cast<double>(n);
    for (double v : columns[c]) norm[c] += (v - mean[c]) * (v - mean[c]);
    constant[c] = norm[c] == 0.0;
    norm[c] = std::sqrt(norm[c]);
  }

  CorrelationMatrix m;
  m.labels = labels;
  m.r.assign(d * d, 0.0);
  m.defined.assign(d * d, true);
  for (size_t a = 0; a < d; ++a) {
    for (size_t b = a; b < d; ++b) {
      double r;
      bool defined = true;
      if (a == b) {
        r = 1.0;
        defined = !constant[a];
      } else if (constant[a] || constant[b]) {
        r = std::numeric_limits<double>::quiet_NaN();
        defined = false;
      } else {
        double cov = 0.0;
        for (size_t i = 0; i < n; ++i) cov += (columns[a][i] - mean[a]) * (columns[b][i] - mean[b]);
        r = cov / (norm[a] * norm[b]);
        r = std::clamp(r, -1.0, 1.0);
      }
      m.r[a * d + b] = r;
      m.r[b * d + a] = r;
      m.defined[a * d + b] = defined;
      m.defined[b * d + a] = defined;
    }
  }
  return m;
}

std::string categorize_correlation(double r) {
  if (std::isnan(r)) return "undefined";
  const double a = std::abs(r);
  if (a > 1.0) throw NumericError("correlation out of [-1,1]");
  if (a < 0.10) return "negligible";
  if (a < 0.40) return "weak";
  if (a < 0.70) return "moderate";
  if (a < 0.90) return "strong";
  return "very strong";
}

}  // namespace sqrl
