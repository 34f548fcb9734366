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
#include <utility>
#include <vector>

#include "tabsynth/schema.hpp"
#include "tabsynth/util.hpp"

namespace tabsynth {

// Synthetic-data quality metrics. All of them are pure functions of two
// tables sharing a schema: a detection score (how well a classifier tells
// the tables apart), support-coverage fidelity/diversity scores, pairwise
// correlation differences, and plot-ready density exports.

// Binary logistic regression trained by full-batch gradient descent.
// Deterministic: zero init, fixed iteration count.
struct LogisticClassifier {
  std::vector<double> weights;
  double intercept = 0.0;

  static LogisticClassifier fit(const Matrix& x, const std::vector<int>& y,
                                std::size_t iterations = 500,
                                double lr = 0.1);
  // Probability of class 1; always in (0, 1).
  double predict(const double* row, std::size_t width) const;
};

// Rank-based ROC AUC with ties counted half. Throws unless both classes
// are present.
double auc(const std::vector<int>& labels, const std::vector<double>& scores);

// Detection score: label rows real=0/synthetic=1, k-fold cross-validate a
// logistic classifier on the pooled standardized encoding, average the
// validation AUC, and map through 1 - (max(auc, 0.5) * 2 - 1). 1 means
// indistinguishable, 0 means perfectly separable. Fold assignment hashes
// row content, so the score is invariant under row shuffling.
double c2st(const Table& real, const Table& synthetic, std::size_t folds = 5,
            std::uint64_t seed = 0);

// Grid 0.05, 0.10, ..., 0.95.
std::vector<double> default_support_grid();

// Fraction of probe points inside the support owner's centroid ball at each
// quantile level, aggregated as clamp(1 - 2 * mean |P_level - level|).
// alpha_precision grows the ball on the real data and probes with synthetic
// points; beta_recall swaps the roles, so alpha_precision(a, b) equals
// beta_recall(b, a) identically.
double alpha_precision(const Table& real, const Table& synthetic,
                       const std::vector<double>& grid = {});
double beta_recall(const Table& real, const Table& synthetic,
                   const std::vector<double>& grid = {});

// Pairwise correlation difference |corr_synth - corr_real| / 2 on numeric
// encodings (discrete cells as value-map indices). Columns with zero
// variance in either table contribute zero entries and are listed.
struct PcdResult {
  Matrix matrix;  // symmetric, zero diagonal, entries in [0, 1]
  double mean = 0.0;  // over off-diagonal pairs
  std::vector<std::string> zero_variance;
};
PcdResult pcd(const Table& real, const Table& synthetic);

// One exported density file: a per-column histogram or a 2-D joint grid,
// with the total-variation distance between the normalized real and
// synthetic counts.
struct DensityFile {
  std::string name;  // column, or "a|b" for a joint pair
  std::string path;
  double tv = 0.0;
};

// Writes aligned real/synthetic histograms as CSV under out_dir. Discrete
// columns get one bin per category; real-valued columns get `bins`
// equal-width bins over the union range. File names derive from column
// names lowercased with every character outside [a-z0-9] replaced by '_'.
std::vector<DensityFile> density_export(
    const Table& real, const Table& synthetic,
    const std::vector<std::string>& columns,
    const std::vector<std::pair<std::string, std::string>>& joint_pairs,
    std::size_t bins, const std::string& out_dir);

struct QualityConfig {
  std::size_t c2st_folds = 5;
  std::uint64_t seed = 0;
  std::vector<double> support_grid;  // empty = default_support_grid()
  std::size_t bins = 30;
  std::vector<std::string> density_columns;  // empty = every column
  std::vector<std::pair<std::string, std::string>> joint_pairs;
};

struct QualityReport {
  double c2st = 0.0;
  double alpha_precision = 0.0;
  double beta_recall = 0.0;
  double pcd_mean = 0.0;
  Matrix pcd_matrix;
  std::vector<std::string> pcd_zero_variance;
  std::vector<DensityFile> density_files;
};

// Runs every metric; density files land under out_dir (skipped when
// out_dir is empty).
QualityReport evaluate_quality(const Table& real, const Table& synthetic,
                               const QualityConfig& config,
                               const std::string& out_dir = "");

std::string quality_report_json(const QualityReport& report);

}  // namespace tabsynth
