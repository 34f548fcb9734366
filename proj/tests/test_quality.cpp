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
#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "tabsynth/quality.hpp"
#include "tabsynth/rng.hpp"
#include "tabsynth/simulate.hpp"

using namespace tabsynth;

namespace {

Table real_columns_table(const std::vector<std::vector<double>>& cols) {
  Table t;
  t.cells = cols;
  for (std::size_t i = 0; i < cols.size(); ++i)
    t.schema.push_back({"c" + std::to_string(i), ColumnKind::real_valued, {}});
  t.target_column = "c0";
  return t;
}

Table nominal_table(const std::vector<double>& indices,
                    std::vector<std::string> labels) {
  Table t;
  t.schema = {{"cat", ColumnKind::nominal, std::move(labels)}};
  t.target_column = "cat";
  t.cells = {indices};
  return t;
}

// Independent Pearson correlation for the hand-checked PCD oracle.
double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// Independent support-coverage computation: standardize with the owner's
// moments, grow centroid balls at each grid quantile, count probe points.
double brute_support(const std::vector<std::array<double, 2>>& owner,
                     const std::vector<std::array<double, 2>>& probe,
                     const std::vector<double>& grid) {
  std::array<double, 2> mean = {0.0, 0.0};
  for (const auto& p : owner) {
    mean[0] += p[0];
    mean[1] += p[1];
  }
  mean[0] /= double(owner.size());
  mean[1] /= double(owner.size());
  std::array<double, 2> sd = {0.0, 0.0};
  for (const auto& p : owner) {
    sd[0] += (p[0] - mean[0]) * (p[0] - mean[0]);
    sd[1] += (p[1] - mean[1]) * (p[1] - mean[1]);
  }
  sd[0] = std::sqrt(sd[0] / double(owner.size()));
  sd[1] = std::sqrt(sd[1] / double(owner.size()));
  if (sd[0] <= 1e-12) sd[0] = 1.0;
  if (sd[1] <= 1e-12) sd[1] = 1.0;

  auto standardized = [&](const std::vector<std::array<double, 2>>& pts) {
    std::vector<std::array<double, 2>> out;
    for (const auto& p : pts)
      out.push_back({(p[0] - mean[0]) / sd[0], (p[1] - mean[1]) / sd[1]});
    return out;
  };
  auto so = standardized(owner);
  auto sp = standardized(probe);
  std::array<double, 2> centroid = {0.0, 0.0};
  for (const auto& p : so) {
    centroid[0] += p[0];
    centroid[1] += p[1];
  }
  centroid[0] /= double(so.size());
  centroid[1] /= double(so.size());
  auto dist = [&](const std::array<double, 2>& p) {
    return std::hypot(p[0] - centroid[0], p[1] - centroid[1]);
  };
  std::vector<double> d_owner;
  for (const auto& p : so) d_owner.push_back(dist(p));
  std::sort(d_owner.begin(), d_owner.end());
  double dev = 0.0;
  for (double level : grid) {
    const std::size_t idx =
        static_cast<std::size_t>(std::ceil(level * double(d_owner.size()))) -
        1;
    const double radius = d_owner[idx];
    double inside = 0.0;
    for (const auto& p : sp) inside += dist(p) <= radius ? 1.0 : 0.0;
    dev += std::abs(inside / double(sp.size()) - level);
  }
  return std::clamp(1.0 - 2.0 * dev / double(grid.size()), 0.0, 1.0);
}

Table points_table(const std::vector<std::array<double, 2>>& pts) {
  Table t = real_columns_table({{}, {}});
  for (const auto& p : pts) t.append_row({p[0], p[1]});
  return t;
}

Table shuffled(const Table& t, std::uint64_t seed) {
  std::vector<std::size_t> order(t.n_rows());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(order);
  return t.take_rows(order);
}

}  // namespace

TEST_CASE("auc ranks scores") {
  CHECK(auc({0, 0, 1, 1}, {0.1, 0.2, 0.8, 0.9}) == 1.0);
  CHECK(auc({0, 0, 1, 1}, {0.9, 0.8, 0.2, 0.1}) == 0.0);
  // Brute force over label pairs: 3 of 4 correctly ordered.
  CHECK(auc({0, 0, 1, 1}, {0.1, 0.4, 0.35, 0.8}) == 0.75);
  // All scores tied: every pair counts half.
  CHECK(auc({0, 1, 0, 1}, {0.5, 0.5, 0.5, 0.5}) == 0.5);
}

TEST_CASE("auc of negated scores is the complement") {
  Rng rng(5);
  std::vector<int> labels;
  std::vector<double> scores, negated;
  for (int i = 0; i < 101; ++i) {
    labels.push_back(rng.bernoulli(0.4) ? 1 : 0);
    scores.push_back(rng.normal());
  }
  for (double s : scores) negated.push_back(-s);
  CHECK(auc(labels, scores) + auc(labels, negated) == doctest::Approx(1.0));
}

TEST_CASE("auc rejects single-class input") {
  CHECK_THROWS_AS(auc({1, 1, 1}, {0.1, 0.2, 0.3}), Error);
  CHECK_THROWS_AS(auc({0, 0}, {0.1, 0.2}), Error);
  CHECK_THROWS_AS(auc({}, {}), Error);
  CHECK_THROWS_AS(auc({0, 1}, {0.5}), Error);
}

TEST_CASE("logistic classifier separates a linear problem") {
  Matrix x(40, 1);
  std::vector<int> y(40);
  Rng rng(9);
  for (std::size_t r = 0; r < 40; ++r) {
    const bool pos = r % 2 == 0;
    x.at(r, 0) = (pos ? 2.0 : -2.0) + 0.1 * rng.normal();
    y[r] = pos ? 1 : 0;
  }
  LogisticClassifier clf = LogisticClassifier::fit(x, y);
  CHECK(clf.weights[0] > 0.0);
  for (std::size_t r = 0; r < 40; ++r) {
    const double p = clf.predict(x.row(r), 1);
    CHECK(p > 0.0);
    CHECK(p < 1.0);
    CHECK((p > 0.5) == (y[r] == 1));
  }
  CHECK_THROWS_AS(LogisticClassifier::fit(Matrix(0, 1), {}), Error);
}

TEST_CASE("detection score treats exchangeable halves as indistinguishable") {
  Table all = simulate_zip_table(4000, crash_simulator_spec(),
                                 default_crash_zip_params(), 7);
  std::vector<std::size_t> first, second;
  for (std::size_t r = 0; r < 2000; ++r) {
    first.push_back(r);
    second.push_back(2000 + r);
  }
  const double score = c2st(all.take_rows(first), all.take_rows(second));
  CHECK(score >= 0.9);
  CHECK(score <= 1.0);
}

TEST_CASE("detection score exposes a gross shift") {
  Table real = simulate_zip_table(1000, crash_simulator_spec(),
                                  default_crash_zip_params(), 8);
  Table fake = real;
  for (std::size_t c = 0; c < fake.n_cols(); ++c) {
    if (fake.schema[c].discrete()) continue;
    double mean = 0.0;
    for (double v : fake.cells[c]) mean += v;
    mean /= double(fake.n_rows());
    double var = 0.0;
    for (double v : fake.cells[c]) var += (v - mean) * (v - mean);
    const double sd = std::sqrt(var / double(fake.n_rows()));
    for (double& v : fake.cells[c]) v += 100.0 * sd;
  }
  const double score = c2st(real, fake);
  CHECK(score >= 0.0);
  CHECK(score <= 0.05);
}

TEST_CASE("detection score is invariant under row shuffling") {
  Table real = simulate_zip_table(400, crash_simulator_spec(),
                                  default_crash_zip_params(), 21);
  Table synth = simulate_zip_table(400, crash_simulator_spec(),
                                   default_crash_zip_params(), 22);
  const double base = c2st(real, synth, 5, 3);
  CHECK(c2st(shuffled(real, 1), synth, 5, 3) == base);
  CHECK(c2st(real, shuffled(synth, 2), 5, 3) == base);
  CHECK(c2st(shuffled(real, 3), shuffled(synth, 4), 5, 3) == base);
}

TEST_CASE("detection score input validation") {
  Table small = simulate_zip_table(3, crash_simulator_spec(),
                                   default_crash_zip_params(), 2);
  Table big = simulate_zip_table(10, crash_simulator_spec(),
                                 default_crash_zip_params(), 2);
  CHECK_THROWS_AS(c2st(small, big, 5), Error);
  CHECK_THROWS_AS(c2st(big, small, 5), Error);
  CHECK_THROWS_AS(c2st(big, big, 1), Error);
  Table other = real_columns_table({{1.0, 2.0}});
  CHECK_THROWS_AS(c2st(big, other), Error);
}

TEST_CASE("default support grid spans (0, 1)") {
  std::vector<double> grid = default_support_grid();
  REQUIRE(grid.size() == 19);
  CHECK(grid.front() == doctest::Approx(0.05));
  CHECK(grid.back() == doctest::Approx(0.95));
}

TEST_CASE("identical tables score near-perfect fidelity and diversity") {
  Table t = simulate_zip_table(500, crash_simulator_spec(),
                               default_crash_zip_params(), 13);
  CHECK(alpha_precision(t, t) >= 0.95);
  CHECK(beta_recall(t, t) >= 0.95);
}

TEST_CASE("far outlier synthetic data has no precision") {
  Table real = simulate_zip_table(300, crash_simulator_spec(),
                                  default_crash_zip_params(), 14);
  std::vector<std::size_t> repeat(50, 0);
  Table fake = real.take_rows(repeat);
  for (std::size_t c = 0; c < fake.n_cols(); ++c) {
    if (fake.schema[c].discrete()) continue;
    for (double& v : fake.cells[c]) v = 1e6;
  }
  CHECK(alpha_precision(real, fake) <= 0.05);
}

TEST_CASE("a collapsed generator has low recall") {
  // Real points on a radius-5 ring; synthetic mass all at the centroid.
  std::vector<std::array<double, 2>> ring;
  for (int i = 0; i < 40; ++i) {
    const double a = 2.0 * 3.14159265358979 * double(i) / 40.0;
    ring.push_back({5.0 * std::cos(a), 5.0 * std::sin(a)});
  }
  std::vector<std::array<double, 2>> center(40, {0.0, 0.0});
  const double score = beta_recall(points_table(ring), points_table(center));
  CHECK(score <= 0.5);
  CHECK(score == doctest::Approx(brute_support(center, ring,
                                               default_support_grid()))
                     .epsilon(1e-12));
}

TEST_CASE("support coverage matches a brute-force 2-D computation") {
  std::vector<std::array<double, 2>> a = {{1, 0},  {-1, 0}, {0, 1},  {0, -1},
                                          {3, 0},  {-3, 0}, {0, 3},  {0, -3},
                                          {2, 2},  {-2, 2}, {2, -2}, {-2, -2}};
  std::vector<std::array<double, 2>> b = {{0.5, 0},  {-0.5, 0}, {0, 0.5},
                                          {0, -0.5}, {2, 0},    {-2, 0},
                                          {0, 2},    {1, 1}};
  const std::vector<double> grid = {0.25, 0.5, 0.75, 1.0};
  const Table ta = points_table(a);
  const Table tb = points_table(b);
  CHECK(alpha_precision(ta, tb, grid) ==
        doctest::Approx(brute_support(a, b, grid)).epsilon(1e-12));
  CHECK(beta_recall(ta, tb, grid) ==
        doctest::Approx(brute_support(b, a, grid)).epsilon(1e-12));
}

TEST_CASE("precision and recall are exchangeable") {
  Table a = simulate_zip_table(150, crash_simulator_spec(),
                               default_crash_zip_params(), 31);
  Table b = simulate_zip_table(170, crash_simulator_spec(),
                               default_crash_zip_params(), 32);
  CHECK(alpha_precision(a, b) == beta_recall(b, a));
  CHECK(alpha_precision(b, a) == beta_recall(a, b));
  const std::vector<double> grid = {0.1, 0.6, 0.9};
  CHECK(alpha_precision(a, b, grid) == beta_recall(b, a, grid));
}

TEST_CASE("support coverage input validation") {
  Table t = simulate_zip_table(20, crash_simulator_spec(),
                               default_crash_zip_params(), 33);
  Table empty = t.take_rows({});
  CHECK_THROWS_AS(alpha_precision(t, empty), Error);
  CHECK_THROWS_AS(alpha_precision(empty, t), Error);
  CHECK_THROWS_AS(beta_recall(empty, empty), Error);
  CHECK_THROWS_AS(alpha_precision(t, t, {0.0, 0.5}), Error);
  CHECK_THROWS_AS(alpha_precision(t, t, {0.5, 1.5}), Error);
}

TEST_CASE("correlation difference vanishes on identical tables") {
  Table t = simulate_zip_table(200, crash_simulator_spec(),
                               default_crash_zip_params(), 41);
  PcdResult r = pcd(t, t);
  CHECK(r.mean == 0.0);
  for (std::size_t a = 0; a < r.matrix.rows; ++a)
    for (std::size_t b = 0; b < r.matrix.cols; ++b)
      CHECK(r.matrix.at(a, b) == 0.0);
  CHECK(r.zero_variance.empty());
}

TEST_CASE("correlation difference matrix is symmetric and bounded") {
  Table a = simulate_zip_table(150, crash_simulator_spec(),
                               default_crash_zip_params(), 42);
  Table b = simulate_zip_table(150, crash_simulator_spec(),
                               default_crash_zip_params(), 43);
  PcdResult r = pcd(a, b);
  REQUIRE(r.matrix.rows == a.n_cols());
  REQUIRE(r.matrix.cols == a.n_cols());
  double sum = 0.0;
  for (std::size_t i = 0; i < r.matrix.rows; ++i) {
    CHECK(r.matrix.at(i, i) == 0.0);
    for (std::size_t j = 0; j < r.matrix.cols; ++j) {
      CHECK(r.matrix.at(i, j) == r.matrix.at(j, i));
      CHECK(r.matrix.at(i, j) >= 0.0);
      CHECK(r.matrix.at(i, j) <= 1.0);
      if (i < j) sum += r.matrix.at(i, j);
    }
  }
  const std::size_t pairs = a.n_cols() * (a.n_cols() - 1) / 2;
  CHECK(r.mean == doctest::Approx(sum / double(pairs)).epsilon(1e-12));
}

TEST_CASE("correlation difference matches a hand computation") {
  Table real = real_columns_table({{1.0, 2.0, 3.0, 4.0, 5.0},
                                   {2.0, 1.0, 4.0, 3.0, 6.0},
                                   {0.5, -1.0, 2.5, 0.0, 1.5}});
  Table synth = real_columns_table({{2.0, 2.5, 1.0, 4.0, 3.0},
                                    {1.0, 4.0, 2.0, 2.5, 5.0},
                                    {-0.5, 1.0, 0.0, 2.0, 1.0}});
  PcdResult r = pcd(real, synth);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = i + 1; j < 3; ++j) {
      const double cr = pearson(real.cells[i], real.cells[j]);
      const double cs = pearson(synth.cells[i], synth.cells[j]);
      CHECK(r.matrix.at(i, j) ==
            doctest::Approx(std::abs(cs - cr) / 2.0).epsilon(1e-12));
    }
}

TEST_CASE("opposite perfect correlations give the maximal entry") {
  Table real = real_columns_table(
      {{1.0, 2.0, 3.0, 4.0}, {2.0, 4.0, 6.0, 8.0}});
  Table synth = real_columns_table(
      {{1.0, 2.0, 3.0, 4.0}, {-2.0, -4.0, -6.0, -8.0}});
  PcdResult r = pcd(real, synth);
  CHECK(r.matrix.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.mean == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("zero-variance columns are flagged and contribute nothing") {
  Table real = real_columns_table(
      {{1.0, 2.0, 3.0, 4.0}, {4.0, 3.0, 2.0, 1.0}, {1.0, 5.0, 2.0, 4.0}});
  Table synth = real_columns_table(
      {{2.0, 1.0, 4.0, 3.0}, {7.0, 7.0, 7.0, 7.0}, {3.0, 1.0, 4.0, 2.0}});
  PcdResult r = pcd(real, synth);
  REQUIRE(r.zero_variance == std::vector<std::string>{"c1"});
  CHECK(r.matrix.at(0, 1) == 0.0);
  CHECK(r.matrix.at(1, 2) == 0.0);
  CHECK(r.matrix.at(0, 2) > 0.0);
}

TEST_CASE("correlation difference needs two rows") {
  Table one = real_columns_table({{1.0}, {2.0}});
  CHECK_THROWS_AS(pcd(one, one), Error);
}

TEST_CASE("density export on identical tables has zero distance") {
  Table t = simulate_zip_table(300, crash_simulator_spec(),
                               default_crash_zip_params(), 51);
  const std::string dir = "quality_test_out/identical";
  auto files = density_export(t, t, {"Total_Crash", "Segment_Length"},
                              {{"Hour", "Light_Presence"}}, 30, dir);
  REQUIRE(files.size() == 3);
  for (const auto& f : files) {
    CHECK(f.tv == 0.0);
    CHECK(std::filesystem::exists(f.path));
  }
}

TEST_CASE("histogram counts are conserved") {
  Table real = simulate_zip_table(257, crash_simulator_spec(),
                                  default_crash_zip_params(), 52);
  Table synth = simulate_zip_table(301, crash_simulator_spec(),
                                   default_crash_zip_params(), 53);
  const std::string dir = "quality_test_out/conserved";
  auto files = density_export(real, synth, {"Hour", "Lane_Width"}, {}, 12,
                              dir);
  for (const auto& f : files) {
    std::ifstream in(f.path);
    REQUIRE(in.good());
    std::string line;
    std::getline(in, line);  // header
    std::size_t nr = 0, ns = 0, lines = 0;
    while (std::getline(in, line)) {
      const auto c1 = line.rfind(',');
      const auto c0 = line.rfind(',', c1 - 1);
      ns += std::stoul(line.substr(c1 + 1));
      nr += std::stoul(line.substr(c0 + 1, c1 - c0 - 1));
      ++lines;
    }
    CHECK(nr == real.n_rows());
    CHECK(ns == synth.n_rows());
    // Discrete columns get one bin per category, reals the requested count.
    if (f.name == "Hour") CHECK(lines == 24);
    if (f.name == "Lane_Width") CHECK(lines == 12);
  }
}

TEST_CASE("total variation distance matches brute force on a nominal column") {
  std::vector<double> peaked, uniform;
  for (int i = 0; i < 100; ++i) peaked.push_back(i < 80 ? 0 : (i < 90 ? 1 : 2));
  for (int i = 0; i < 100; ++i) uniform.push_back(i < 34 ? 0 : (i < 67 ? 1 : 2));
  Table real = nominal_table(peaked, {"a", "b", "c"});
  Table synth = nominal_table(uniform, {"a", "b", "c"});
  auto files = density_export(real, synth, {"cat"}, {}, 30,
                              "quality_test_out/tv");
  REQUIRE(files.size() == 1);
  const double expected =
      0.5 * (std::abs(0.80 - 0.34) + std::abs(0.10 - 0.33) +
             std::abs(0.10 - 0.33));
  CHECK(files[0].tv == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("density export validates its inputs") {
  Table t = simulate_zip_table(20, crash_simulator_spec(),
                               default_crash_zip_params(), 54);
  CHECK_THROWS_AS(density_export(t, t, {"no_such_column"}, {}, 30,
                                 "quality_test_out/bad"),
                  Error);
  CHECK_THROWS_AS(density_export(t, t, {"Hour"}, {}, 0,
                                 "quality_test_out/bad"),
                  Error);
}

TEST_CASE("constant real column collapses to a single bin") {
  Table real = real_columns_table({{3.5, 3.5, 3.5, 3.5}});
  auto files = density_export(real, real, {"c0"}, {}, 30,
                              "quality_test_out/constant");
  REQUIRE(files.size() == 1);
  std::ifstream in(files[0].path);
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 2);  // header + one bin
}

TEST_CASE("file names are sanitized") {
  Table t;
  t.schema = {{"Weird Name-2", ColumnKind::real_valued, {}}};
  t.target_column = "Weird Name-2";
  t.cells = {{1.0, 2.0, 3.0}};
  auto files = density_export(t, t, {"Weird Name-2"}, {}, 4,
                              "quality_test_out/names");
  REQUIRE(files.size() == 1);
  CHECK(files[0].path.find("density_weird_name_2.csv") != std::string::npos);
}

TEST_CASE("quality report bundles every metric") {
  Table real = simulate_zip_table(400, crash_simulator_spec(),
                                  default_crash_zip_params(), 61);
  Table synth = simulate_zip_table(400, crash_simulator_spec(),
                                   default_crash_zip_params(), 62);
  QualityConfig cfg;
  cfg.c2st_folds = 3;
  cfg.density_columns = {"Total_Crash"};
  cfg.joint_pairs = {{"AAHT", "Segment_Length"}};
  QualityReport rep =
      evaluate_quality(real, synth, cfg, "quality_test_out/report");
  CHECK(rep.c2st >= 0.0);
  CHECK(rep.c2st <= 1.0);
  CHECK(rep.alpha_precision >= 0.0);
  CHECK(rep.alpha_precision <= 1.0);
  CHECK(rep.beta_recall >= 0.0);
  CHECK(rep.beta_recall <= 1.0);
  CHECK(rep.pcd_mean >= 0.0);
  CHECK(rep.pcd_mean <= 1.0);
  REQUIRE(rep.pcd_matrix.rows == real.n_cols());
  REQUIRE(rep.density_files.size() == 2);

  // Both tables come from the same process, so they should look alike.
  CHECK(rep.c2st >= 0.5);
  CHECK(rep.pcd_mean <= 0.2);

  const auto json = nlohmann::json::parse(quality_report_json(rep));
  CHECK(json["c2st"].get<double>() == rep.c2st);
  CHECK(json["alpha_precision"].get<double>() == rep.alpha_precision);
  CHECK(json["beta_recall"].get<double>() == rep.beta_recall);
  CHECK(json["pcd_mean"].get<double>() == rep.pcd_mean);
  CHECK(json["pcd_matrix"].size() == real.n_cols());
  CHECK(json["density_files"].size() == 2);
  CHECK(json.contains("pcd_zero_variance"));
}

TEST_CASE("near-copy beats an independent-marginals shuffle") {
  // Column-wise shuffling preserves marginals but destroys the joint
  // structure; both detection and correlation metrics must notice.
  Table real = simulate_zip_table(1200, crash_simulator_spec(),
                                  default_crash_zip_params(), 71);
  std::vector<std::size_t> first, second;
  for (std::size_t r = 0; r < 600; ++r) {
    first.push_back(r);
    second.push_back(600 + r);
  }
  Table half = real.take_rows(first);
  Table copy = real.take_rows(second);
  Table independent = copy;
  Rng rng(72);
  for (std::size_t c = 0; c < independent.n_cols(); ++c) {
    std::vector<std::size_t> order(independent.n_rows());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::vector<double> cells(independent.n_rows());
    for (std::size_t i = 0; i < order.size(); ++i)
      cells[i] = independent.cells[c][order[i]];
    independent.cells[c] = std::move(cells);
  }
  CHECK(c2st(half, copy) > c2st(half, independent));
  CHECK(pcd(half, copy).mean < pcd(half, independent).mean);
}
