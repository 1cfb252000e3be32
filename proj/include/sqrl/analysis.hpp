#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sqrl/common.hpp"

namespace sqrl {

// Row-major n x d feature matrix with labels.
struct FeatureMatrix {
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<double> values;  // n * d

  size_t rows() const { return row_labels.size(); }
  size_t cols() const { return col_labels.size(); }
  double at(size_t r, size_t c) const { return values[r * cols() + c]; }
  std::vector<double> row(size_t r) const {
    return {values.begin() + static_cast<long>(r * cols()), values.begin() + static_cast<long>((r + 1) * cols())};
  }
  void validate() const;
};

// CART regression tree: variance-reduction splits over all features, grown to
// purity (min split 2, min leaf 1), midpoint thresholds, ties resolved toward
// the lowest feature index then the lowest threshold.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  double value = 0.0;  // leaf prediction (train-sample mean)
  int left = -1;
  int right = -1;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;
  std::vector<double> importance_raw;  // per-feature summed impurity decrease

  double predict(const double* x) const;
  // Per-tree MDI, normalized to sum 1 (all-zero when no splits).
  std::vector<double> normalized_importance() const;
};

RegressionTree fit_tree(const FeatureMatrix& X, const std::vector<double>& y,
                        const std::vector<size_t>& sample_indices);

struct ForestConfig {
  int n_trees = 1000;
  int k_folds = 6;
  bool bootstrap = true;
  uint64_t seed = 0;
};

struct RandomForest {
  std::vector<RegressionTree> trees;
  double predict(const double* x) const;  // arithmetic mean over trees
};

RandomForest fit_forest(const FeatureMatrix& X, const std::vector<double>& y, int n_trees,
                        bool bootstrap, uint64_t seed);

struct RegressionReport {
  double rmse_mean = 0.0;
  double rmse_std = 0.0;  // k-1 denominator
  std::vector<double> fold_rmse;
  std::vector<double> importances;  // per feature, sums to 1
  std::vector<std::string> feature_names;
  ForestConfig config;
};

// Shuffled k-fold CV followed by a full-data refit for MDI importances.
// `out_full_forest`, when given, receives the refit forest (the SHAP input).
RegressionReport random_forest_cv(const FeatureMatrix& X, const std::vector<double>& y,
                                  const ForestConfig& config,
                                  RandomForest* out_full_forest = nullptr);

struct ShapReport {
  std::vector<std::vector<double>> values;  // [instance][feature]
  std::vector<double> mean_abs;             // per feature
  std::vector<double> base_values;          // per instance: mean prediction over its sampled backgrounds
  std::vector<std::string> feature_names;
  int n_permutations = 0;
  uint64_t seed = 0;
};

// Interventional permutation-sampling Shapley estimate against the full X as
// background. Per instance, sum(values) + base_value telescopes exactly to
// the model prediction.
ShapReport shap_values(const RandomForest& forest, const FeatureMatrix& X, int n_permutations,
                       uint64_t seed);

struct CorrelationMatrix {
  std::vector<std::string> labels;
  std::vector<double> r;  // labels.size()^2, symmetric, unit diagonal
  std::vector<bool> defined;  // false where a column is constant

  double at(size_t i, size_t j) const { return r[i * labels.size() + j]; }
};

// Pairwise Pearson correlation of named columns (each the same length).
CorrelationMatrix pearson_matrix(const std::vector<std::string>& labels,
                                 const std::vector<std::vector<double>>& columns);

// |r| bins: negligible < 0.10 <= weak < 0.40 <= moderate < 0.70 <= strong
// < 0.90 <= very strong.
std::string categorize_correlation(double r);

}  // namespace sqrl
