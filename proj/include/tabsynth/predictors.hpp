/*
 * Copyright 2026 The tabsynth authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tabsynth/schema.hpp"
#include "tabsynth/util.hpp"

namespace tabsynth {

// Downstream count predictors: gradient-boosted regression trees on the
// encoded features, a zero-inflated Poisson regression baseline, and
// MSE/RMSE evaluation overall and on the non-zero stratum. Both models
// treat the target column and the synthetic-provenance marker as
// non-features.

struct GbtConfig {
  std::size_t n_trees = 300;  // 0 is legal: base prediction only
  std::size_t max_depth = 5;
  double learning_rate = 0.1;
  std::size_t min_leaf = 5;

  void validate() const;  // throws Error(config)
};

// One tree node; feature -1 marks a leaf. Rows with encoded feature value
// strictly below the threshold go left.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

// Squared-error boosted ensemble. prediction = base + lr * sum of leaf
// values. feature_schema carries the fitted standardization, so a saved
// model encodes unseen tables exactly as at training time.
struct GbtModel {
  GbtConfig config;
  double base_prediction = 0.0;
  std::vector<std::vector<TreeNode>> trees;  // node 0 is each tree's root
  std::vector<ColumnSchema> feature_schema;
  std::string target_column;
};

// Trains with exhaustive split search over per-feature quantile bins (256
// candidate thresholds). Deterministic; the training MSE after each round
// is appended to mse_log when given and never increases.
GbtModel train_gbt(const Table& table, const GbtConfig& config,
                   std::uint64_t seed, std::vector<double>* mse_log = nullptr);
// One prediction per row, invariant to row order. Unknown feature columns
// in the model or kind/category mismatches throw Error(schema); extra
// columns in the table are ignored.
std::vector<double> predict_gbt(const GbtModel& model, const Table& table);

void save_gbt(const GbtModel& model, const std::string& path);
GbtModel load_gbt(const std::string& path);

struct GridCell {
  GbtConfig config;
  std::vector<double> fold_mse;
  double mean_mse = 0.0;
};

struct GridSearchResult {
  GbtConfig best;
  std::vector<GridCell> cells;  // one per grid entry, in grid order
};

// n_trees {100, 300} x max_depth {3, 5} x learning_rate {0.05, 0.1},
// min_leaf 5.
std::vector<GbtConfig> default_gbt_grid();

// Seeded k-fold cross-validation over the grid; returns the config with
// the lowest mean validation MSE (ties keep the earliest grid entry).
GridSearchResult grid_search(const Table& table,
                             const std::vector<GbtConfig>& grid,
                             std::size_t folds, std::uint64_t seed);

struct AccuracyReport {
  double mse_overall = 0.0;
  double rmse_overall = 0.0;
  double mse_nonzero = 0.0;
  double rmse_nonzero = 0.0;
  std::size_t n_overall = 0;
  std::size_t n_nonzero = 0;
};

// MSE/RMSE over all rows and over rows with target != 0. The non-zero
// stratum reports zeros when it is empty.
AccuracyReport evaluate(const std::vector<double>& predictions,
                        const std::vector<double>& targets);
std::string accuracy_report_text(const AccuracyReport& report);
// Header line plus one value row.
std::string accuracy_report_csv(const AccuracyReport& report);

struct ZipFitConfig {
  std::size_t max_iter = 200;
  double tol = 1e-6;  // stop when the log-likelihood gain drops below this

  void validate() const;
};

// Zero-inflated Poisson regression: p = sigmoid(zero link), lambda =
// exp(rate link), both linear in the standardized numeric features (same
// population moments the table simulator uses, stored for prediction).
// Standard errors come from the inverse numerical Hessian of the
// log-likelihood at the optimum; se[0] belongs to the intercept.
struct ZipModel {
  std::vector<std::string> feature_names;
  std::vector<double> feature_means;
  std::vector<double> feature_stds;
  double zero_intercept = 0.0;
  std::vector<double> zero_weights;
  double rate_intercept = 0.0;
  std::vector<double> rate_weights;
  std::vector<double> zero_se;
  std::vector<double> rate_se;
  double log_lik = 0.0;
};

// Per-row mixture components.
struct ZipComponents {
  std::vector<double> p;       // structural-zero probability, in (0, 1)
  std::vector<double> lambda;  // Poisson rate, > 0
};

// Maximum likelihood via EM: latent structural-zero responsibilities, one
// ridge-damped weighted least-squares step per part, step-halved so the
// observed log-likelihood never decreases. The trajectory is appended to
// ll_log when given. Throws Error(training) when max_iter passes without
// convergence and Error(validation) on an all-zero or non-count target.
ZipModel fit_zip(const Table& table, const ZipFitConfig& config = {},
                 std::vector<double>* ll_log = nullptr);

ZipComponents zip_components(const ZipModel& model, const Table& table);
// Expected count per row: (1 - p) * lambda. Never negative.
std::vector<double> zip_predict(const ZipModel& model, const Table& table);

void save_zip(const ZipModel& model, const std::string& path);
ZipModel load_zip(const std::string& path);

}  // namespace tabsynth
