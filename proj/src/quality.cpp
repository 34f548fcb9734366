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
#include "tabsynth/quality.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace tabsynth {

namespace {

void require_same_schema(const Table& a, const Table& b) {
  bool ok = a.schema.size() == b.schema.size();
  for (std::size_t i = 0; ok && i < a.schema.size(); ++i)
    ok = a.schema[i].name == b.schema[i].name &&
         a.schema[i].kind == b.schema[i].kind &&
         a.schema[i].value_map == b.schema[i].value_map;
  if (!ok)
    throw Error(ErrorCategory::validation,
                "tables do not share a schema; quality metrics compare "
                "like against like");
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Stamps per-column moments from the table's own rows. Unlike the strict
// fitting path this tolerates constant real columns (scale 1), which a
// degenerate support owner such as a single repeated point produces.
void stamp_moments(Table& t) {
  const double n = static_cast<double>(t.n_rows());
  for (std::size_t c = 0; c < t.n_cols(); ++c) {
    ColumnSchema& col = t.schema[c];
    if (col.discrete()) continue;
    double mean = 0.0;
    for (double v : t.cells[c]) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : t.cells[c]) var += (v - mean) * (v - mean);
    var /= n;
    const double sd = std::sqrt(var);
    col.mean = mean;
    col.std_dev = sd > 1e-12 ? sd : 1.0;
    col.standardized = true;
  }
}

// Stable per-row key: text cells joined with an unprintable separator.
std::string row_key(const Table& t, std::size_t row) {
  std::string key;
  for (std::size_t c = 0; c < t.n_cols(); ++c) {
    key += t.cell_text(c, row);
    key += '\x1f';
  }
  return key;
}

// Canonical row order: sort by seeded content hash, ties by content. Every
// downstream computation (pooled moments, fold membership, gradient sums)
// walks rows in this order, so the detection score is bit-identical under
// row shuffling of either input; bit-identical duplicate rows are
// interchangeable.
std::vector<std::size_t> canonical_order(const Table& t, std::uint64_t seed) {
  std::vector<std::pair<std::uint64_t, std::string>> keyed(t.n_rows());
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    std::string key = row_key(t, r);
    keyed[r] = {fnv1a64(key.data(), key.size(), 0xcbf29ce484222325ull ^ seed),
                std::move(key)};
  }
  std::vector<std::size_t> order(t.n_rows());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return keyed[a] < keyed[b];
  });
  return order;
}

}  // namespace

LogisticClassifier LogisticClassifier::fit(const Matrix& x,
                                           const std::vector<int>& y,
                                           std::size_t iterations, double lr) {
  if (x.rows == 0 || x.rows != y.size())
    throw Error(ErrorCategory::validation,
                "classifier needs one label per row");
  LogisticClassifier clf;
  clf.weights.assign(x.cols, 0.0);
  std::vector<double> grad(x.cols);
  const double inv_n = 1.0 / static_cast<double>(x.rows);
  for (std::size_t it = 0; it < iterations; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    double grad_b = 0.0;
    for (std::size_t r = 0; r < x.rows; ++r) {
      const double* row = x.row(r);
      double z = clf.intercept;
      for (std::size_t c = 0; c < x.cols; ++c) z += clf.weights[c] * row[c];
      const double err = sigmoid(z) - static_cast<double>(y[r]);
      for (std::size_t c = 0; c < x.cols; ++c) grad[c] += err * row[c];
      grad_b += err;
    }
    for (std::size_t c = 0; c < x.cols; ++c)
      clf.weights[c] -= lr * grad[c] * inv_n;
    clf.intercept -= lr * grad_b * inv_n;
  }
  return clf;
}

double LogisticClassifier::predict(const double* row, std::size_t width) const {
  if (width != weights.size())
    throw Error(ErrorCategory::validation, "feature width mismatch");
  double z = intercept;
  for (std::size_t c = 0; c < width; ++c) z += weights[c] * row[c];
  return sigmoid(z);
}

double auc(const std::vector<int>& labels, const std::vector<double>& scores) {
  if (labels.size() != scores.size() || labels.empty())
    throw Error(ErrorCategory::validation,
                "auc needs one label per score");
  std::size_t n_pos = 0;
  for (int l : labels) n_pos += l != 0;
  const std::size_t n_neg = labels.size() - n_pos;
  if (n_pos == 0 || n_neg == 0)
    throw Error(ErrorCategory::validation,
                "auc is undefined with a single class");
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });
  // Average ranks across ties, then the Mann-Whitney identity.
  double pos_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t k = i; k < j; ++k)
      if (labels[order[k]] != 0) pos_rank_sum += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double c2st(const Table& real, const Table& synthetic, std::size_t folds,
            std::uint64_t seed) {
  require_same_schema(real, synthetic);
  if (folds < 2)
    throw Error(ErrorCategory::config, "cross-validation needs >= 2 folds");
  if (real.n_rows() < folds || synthetic.n_rows() < folds)
    throw Error(ErrorCategory::validation,
                "fewer rows than folds in one of the tables");

  // Pool real before synthetic, each in canonical order; folds are dealt
  // round-robin per class so every fold sees both labels.
  Table pool = real.take_rows(canonical_order(real, seed));
  {
    Table s = synthetic.take_rows(canonical_order(synthetic, seed));
    std::vector<double> row(s.n_cols());
    for (std::size_t r = 0; r < s.n_rows(); ++r) {
      for (std::size_t c = 0; c < s.n_cols(); ++c) row[c] = s.cells[c][r];
      pool.append_row(row);
    }
  }
  stamp_moments(pool);
  Matrix x = encode(pool).values;
  const std::size_t n_real = real.n_rows();
  std::vector<int> y(x.rows, 0);
  std::vector<std::size_t> fold(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) {
    y[r] = r < n_real ? 0 : 1;
    fold[r] = (r < n_real ? r : r - n_real) % folds;
  }

  double auc_sum = 0.0;
  for (std::size_t k = 0; k < folds; ++k) {
    std::vector<std::size_t> train_rows, val_rows;
    for (std::size_t r = 0; r < x.rows; ++r)
      (fold[r] == k ? val_rows : train_rows).push_back(r);
    Matrix xt(train_rows.size(), x.cols);
    std::vector<int> yt(train_rows.size());
    for (std::size_t r = 0; r < train_rows.size(); ++r) {
      std::copy(x.row(train_rows[r]), x.row(train_rows[r]) + x.cols,
                xt.row(r));
      yt[r] = y[train_rows[r]];
    }
    LogisticClassifier clf = LogisticClassifier::fit(xt, yt);
    std::vector<int> yv(val_rows.size());
    std::vector<double> pv(val_rows.size());
    for (std::size_t r = 0; r < val_rows.size(); ++r) {
      yv[r] = y[val_rows[r]];
      pv[r] = clf.predict(x.row(val_rows[r]), x.cols);
    }
    auc_sum += auc(yv, pv);
  }
  const double mean_auc = auc_sum / static_cast<double>(folds);
  const double score = 1.0 - (std::max(mean_auc, 0.5) * 2.0 - 1.0);
  return std::clamp(score, 0.0, 1.0);
}

std::vector<double> default_support_grid() {
  std::vector<double> grid;
  for (int i = 1; i <= 19; ++i) grid.push_back(0.05 * i);
  return grid;
}

namespace {

// Fraction of probe points inside the owner's centroid ball at each grid
// level, where the ball radius is the level-quantile of owner distances.
// Distances live in the owner's standardized encoded space.
double support_coverage(const Table& owner, const Table& probe,
                        std::vector<double> grid) {
  require_same_schema(owner, probe);
  if (owner.n_rows() == 0 || probe.n_rows() == 0)
    throw Error(ErrorCategory::validation,
                "support coverage needs nonempty tables");
  if (grid.empty()) grid = default_support_grid();
  for (double g : grid)
    if (!(g > 0.0) || !(g <= 1.0))
      throw Error(ErrorCategory::config,
                  "support grid levels must lie in (0, 1]");

  Table o = owner;
  stamp_moments(o);
  Table p = probe;
  adopt_schema(o, p);
  Matrix xo = encode(o).values;
  Matrix xp = encode(p).values;

  std::vector<double> centroid(xo.cols, 0.0);
  for (std::size_t r = 0; r < xo.rows; ++r)
    for (std::size_t c = 0; c < xo.cols; ++c) centroid[c] += xo.at(r, c);
  for (double& v : centroid) v /= static_cast<double>(xo.rows);

  auto distances = [&centroid](const Matrix& m) {
    std::vector<double> d(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < m.cols; ++c) {
        const double diff = m.at(r, c) - centroid[c];
        s += diff * diff;
      }
      d[r] = std::sqrt(s);
    }
    return d;
  };
  std::vector<double> d_owner = distances(xo);
  std::vector<double> d_probe = distances(xp);
  std::sort(d_owner.begin(), d_owner.end());

  double dev = 0.0;
  for (double level : grid) {
    const std::size_t idx = static_cast<std::size_t>(std::ceil(
                                level * static_cast<double>(d_owner.size()))) -
                            1;
    const double radius = d_owner[std::min(idx, d_owner.size() - 1)];
    std::size_t inside = 0;
    for (double d : d_probe) inside += d <= radius;
    const double covered =
        static_cast<double>(inside) / static_cast<double>(d_probe.size());
    dev += std::abs(covered - level);
  }
  dev /= static_cast<double>(grid.size());
  return std::clamp(1.0 - 2.0 * dev, 0.0, 1.0);
}

}  // namespace

double alpha_precision(const Table& real, const Table& synthetic,
                       const std::vector<double>& grid) {
  return support_coverage(real, synthetic, grid);
}

double beta_recall(const Table& real, const Table& synthetic,
                   const std::vector<double>& grid) {
  return support_coverage(synthetic, real, grid);
}

namespace {

// Pearson correlation matrix over numeric encodings; zero-variance columns
// flagged and their correlations treated as zero.
Matrix correlation_matrix(const Table& t, std::vector<bool>& degenerate) {
  const std::size_t m = t.n_cols();
  const std::size_t n = t.n_rows();
  Matrix centered(n, m);
  degenerate.assign(m, false);
  for (std::size_t c = 0; c < m; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += t.numeric_value(c, r);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double v = t.numeric_value(c, r) - mean;
      centered.at(r, c) = v;
      var += v * v;
    }
    if (var <= 0.0) {
      degenerate[c] = true;
      continue;
    }
    const double inv = 1.0 / std::sqrt(var);
    for (std::size_t r = 0; r < n; ++r) centered.at(r, c) *= inv;
  }
  Matrix corr(m, m);
  for (std::size_t a = 0; a < m; ++a) {
    corr.at(a, a) = 1.0;
    for (std::size_t b = a + 1; b < m; ++b) {
      double s = 0.0;
      if (!degenerate[a] && !degenerate[b])
        for (std::size_t r = 0; r < n; ++r)
          s += centered.at(r, a) * centered.at(r, b);
      corr.at(a, b) = s;
      corr.at(b, a) = s;
    }
  }
  return corr;
}

}  // namespace

PcdResult pcd(const Table& real, const Table& synthetic) {
  require_same_schema(real, synthetic);
  if (real.n_rows() < 2 || synthetic.n_rows() < 2)
    throw Error(ErrorCategory::validation,
                "correlations need at least two rows per table");
  std::vector<bool> deg_r, deg_s;
  Matrix cr = correlation_matrix(real, deg_r);
  Matrix cs = correlation_matrix(synthetic, deg_s);
  const std::size_t m = real.n_cols();
  PcdResult out;
  out.matrix = Matrix(m, m);
  double sum = 0.0;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a + 1; b < m; ++b) {
      double entry = std::abs(cs.at(a, b) - cr.at(a, b)) / 2.0;
      if (deg_r[a] || deg_r[b] || deg_s[a] || deg_s[b]) entry = 0.0;
      out.matrix.at(a, b) = entry;
      out.matrix.at(b, a) = entry;
      sum += entry;
    }
  const std::size_t pairs = m * (m - 1) / 2;
  out.mean = pairs == 0 ? 0.0 : sum / static_cast<double>(pairs);
  for (std::size_t c = 0; c < m; ++c)
    if (deg_r[c] || deg_s[c]) out.zero_variance.push_back(real.schema[c].name);
  return out;
}

namespace {

std::string sanitize_name(const std::string& name) {
  std::string out;
  for (char ch : name) {
    if (ch >= 'A' && ch <= 'Z')
      out += static_cast<char>(ch - 'A' + 'a');
    else if ((ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9'))
      out += ch;
    else
      out += '_';
  }
  return out;
}

struct Binning {
  // Discrete: one bin per category. Real: equal width over the union range.
  std::size_t bins = 0;
  double lo = 0.0;
  double width = 1.0;
  bool discrete = false;

  std::size_t bin_of(double v) const {
    if (discrete) return static_cast<std::size_t>(v);
    if (width <= 0.0) return 0;
    double idx = std::floor((v - lo) / width);
    if (idx < 0.0) idx = 0.0;
    if (idx >= static_cast<double>(bins)) idx = static_cast<double>(bins - 1);
    return static_cast<std::size_t>(idx);
  }
};

Binning make_binning(const Table& real, const Table& synthetic,
                     std::size_t col, std::size_t bins) {
  Binning b;
  if (real.schema[col].discrete()) {
    b.discrete = true;
    b.bins = real.schema[col].value_map.size();
    return b;
  }
  double lo = real.cells[col].empty() ? 0.0 : real.cells[col][0];
  double hi = lo;
  for (const auto* t : {&real, &synthetic})
    for (double v : t->cells[col]) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  b.bins = hi > lo ? bins : 1;
  b.lo = lo;
  b.width = hi > lo ? (hi - lo) / static_cast<double>(b.bins) : 1.0;
  return b;
}

std::vector<std::size_t> histogram(const Table& t, std::size_t col,
                                   const Binning& b) {
  std::vector<std::size_t> counts(b.bins, 0);
  for (double v : t.cells[col]) counts[b.bin_of(v)] += 1;
  return counts;
}

double tv_distance(const std::vector<std::size_t>& a,
                   const std::vector<std::size_t>& b, std::size_t na,
                   std::size_t nb) {
  double tv = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    tv += std::abs(static_cast<double>(a[i]) / static_cast<double>(na) -
                   static_cast<double>(b[i]) / static_cast<double>(nb));
  return 0.5 * tv;
}

std::ofstream open_for_write(const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw Error(ErrorCategory::io, "cannot write " + path);
  return out;
}

std::string bin_label(const Table& t, std::size_t col, const Binning& b,
                      std::size_t bin) {
  if (b.discrete) return t.schema[col].value_map[bin];
  return format_double(b.lo + b.width * static_cast<double>(bin));
}

}  // namespace

std::vector<DensityFile> density_export(
    const Table& real, const Table& synthetic,
    const std::vector<std::string>& columns,
    const std::vector<std::pair<std::string, std::string>>& joint_pairs,
    std::size_t bins, const std::string& out_dir) {
  require_same_schema(real, synthetic);
  if (bins == 0)
    throw Error(ErrorCategory::config, "bins must be positive");
  if (real.n_rows() == 0 || synthetic.n_rows() == 0)
    throw Error(ErrorCategory::validation,
                "density export needs nonempty tables");
  std::filesystem::create_directories(out_dir);

  std::vector<DensityFile> files;
  for (const std::string& name : columns) {
    const std::size_t col = real.column_index(name);
    const Binning b = make_binning(real, synthetic, col, bins);
    auto hr = histogram(real, col, b);
    auto hs = histogram(synthetic, col, b);
    DensityFile f;
    f.name = name;
    f.path = (std::filesystem::path(out_dir) /
              ("density_" + sanitize_name(name) + ".csv"))
                 .string();
    f.tv = tv_distance(hr, hs, real.n_rows(), synthetic.n_rows());
    std::ofstream out = open_for_write(f.path);
    out << (b.discrete ? "label" : "bin_lo") << ",real_count,synthetic_count\n";
    for (std::size_t i = 0; i < b.bins; ++i)
      out << bin_label(real, col, b, i) << ',' << hr[i] << ',' << hs[i]
          << '\n';
    files.push_back(std::move(f));
  }

  for (const auto& [na, nb] : joint_pairs) {
    const std::size_t ca = real.column_index(na);
    const std::size_t cb = real.column_index(nb);
    const Binning ba = make_binning(real, synthetic, ca, bins);
    const Binning bb = make_binning(real, synthetic, cb, bins);
    std::vector<std::size_t> hr(ba.bins * bb.bins, 0);
    std::vector<std::size_t> hs(ba.bins * bb.bins, 0);
    for (std::size_t r = 0; r < real.n_rows(); ++r)
      hr[ba.bin_of(real.cells[ca][r]) * bb.bins +
         bb.bin_of(real.cells[cb][r])] += 1;
    for (std::size_t r = 0; r < synthetic.n_rows(); ++r)
      hs[ba.bin_of(synthetic.cells[ca][r]) * bb.bins +
         bb.bin_of(synthetic.cells[cb][r])] += 1;
    DensityFile f;
    f.name = na + "|" + nb;
    f.path = (std::filesystem::path(out_dir) /
              ("joint_" + sanitize_name(na) + "__" + sanitize_name(nb) +
               ".csv"))
                 .string();
    f.tv = tv_distance(hr, hs, real.n_rows(), synthetic.n_rows());
    std::ofstream out = open_for_write(f.path);
    out << "a_bin,b_bin,real_count,synthetic_count\n";
    for (std::size_t i = 0; i < ba.bins; ++i)
      for (std::size_t j = 0; j < bb.bins; ++j)
        out << bin_label(real, ca, ba, i) << ','
            << bin_label(real, cb, bb, j) << ',' << hr[i * bb.bins + j] << ','
            << hs[i * bb.bins + j] << '\n';
    files.push_back(std::move(f));
  }
  return files;
}

QualityReport evaluate_quality(const Table& real, const Table& synthetic,
                               const QualityConfig& config,
                               const std::string& out_dir) {
  QualityReport report;
  report.c2st = c2st(real, synthetic, config.c2st_folds, config.seed);
  report.alpha_precision =
      alpha_precision(real, synthetic, config.support_grid);
  report.beta_recall = beta_recall(real, synthetic, config.support_grid);
  PcdResult p = pcd(real, synthetic);
  report.pcd_matrix = std::move(p.matrix);
  report.pcd_mean = p.mean;
  report.pcd_zero_variance = std::move(p.zero_variance);
  if (!out_dir.empty()) {
    std::vector<std::string> columns = config.density_columns;
    if (columns.empty())
      for (const auto& col : real.schema) columns.push_back(col.name);
    report.density_files = density_export(real, synthetic, columns,
                                          config.joint_pairs, config.bins,
                                          out_dir);
  }
  return report;
}

std::string quality_report_json(const QualityReport& report) {
  nlohmann::ordered_json j;
  j["c2st"] = report.c2st;
  j["alpha_precision"] = report.alpha_precision;
  j["beta_recall"] = report.beta_recall;
  j["pcd_mean"] = report.pcd_mean;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (std::size_t r = 0; r < report.pcd_matrix.rows; ++r) {
    nlohmann::ordered_json row = nlohmann::ordered_json::array();
    for (std::size_t c = 0; c < report.pcd_matrix.cols; ++c)
      row.push_back(report.pcd_matrix.at(r, c));
    rows.push_back(std::move(row));
  }
  j["pcd_matrix"] = std::move(rows);
  j["pcd_zero_variance"] = report.pcd_zero_variance;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& f : report.density_files) {
    nlohmann::ordered_json entry;
    entry["name"] = f.name;
    entry["path"] = f.path;
    entry["tv"] = f.tv;
    files.push_back(std::move(entry));
  }
  j["density_files"] = std::move(files);
  return j.dump(2);
}

}  // namespace tabsynth
