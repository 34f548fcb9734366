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
#include "tabsynth/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "tabsynth/rng.hpp"

namespace tabsynth {

namespace {

std::vector<std::string> numeric_labels(int lo, int hi) {
  std::vector<std::string> out;
  for (int v = lo; v <= hi; ++v) out.push_back(std::to_string(v));
  return out;
}

void validate_spec(const SimulatorSpec& spec, const ZipParams& params) {
  if (spec.columns.empty())
    throw Error(ErrorCategory::validation, "simulator spec has no columns");
  if (spec.target_cap < 2)
    throw Error(ErrorCategory::validation, "target cap must be at least 2");
  bool hour_seen = spec.hour_column.empty();
  for (const auto& col : spec.columns) {
    col.schema.validate();
    if (col.schema.name == spec.target_name)
      throw Error(ErrorCategory::validation,
                  "target name collides with explanatory column '" +
                      col.schema.name + "'");
    if (col.family == SimColumn::Family::categorical) {
      if (!col.schema.discrete())
        throw Error(ErrorCategory::validation,
                    "categorical family on non-discrete column '" +
                        col.schema.name + "'");
      if (col.probs.size() != col.schema.cardinality())
        throw Error(ErrorCategory::validation,
                    "column '" + col.schema.name + "' declares " +
                        std::to_string(col.probs.size()) + " probabilities for " +
                        std::to_string(col.schema.cardinality()) +
                        " categories");
      double total = 0.0;
      for (double p : col.probs) {
        if (p < 0.0)
          throw Error(ErrorCategory::validation,
                      "negative category probability in column '" +
                          col.schema.name + "'");
        total += p;
      }
      if (total <= 0.0)
        throw Error(ErrorCategory::validation,
                    "category probabilities of '" + col.schema.name +
                        "' sum to zero");
    } else if (col.schema.discrete()) {
      throw Error(ErrorCategory::validation,
                  "discrete column '" + col.schema.name +
                      "' needs the categorical family");
    }
    if (col.schema.name == spec.hour_column) hour_seen = true;
    if (col.hour_load != 0.0 && !hour_seen)
      throw Error(ErrorCategory::validation,
                  "column '" + col.schema.name +
                      "' loads on the hour profile before the hour column "
                      "is drawn");
  }
  if (!spec.hour_column.empty() && !hour_seen)
    throw Error(ErrorCategory::validation,
                "hour column '" + spec.hour_column + "' is not in the spec");
  for (const auto* w : {&params.zero_weights, &params.rate_weights})
    if (!w->empty() && w->size() != spec.columns.size())
      throw Error(ErrorCategory::validation,
                  "ZIP weight vector length " + std::to_string(w->size()) +
                      " does not match " + std::to_string(spec.columns.size()) +
                      " explanatory columns");
}

}  // namespace

ZipParams ZipParams::all_zero() {
  ZipParams p;
  p.zero_intercept = 1e9;  // sigmoid saturates to exactly 1
  return p;
}

ZipParams ZipParams::constant_rate(double log_rate) {
  ZipParams p;
  p.zero_intercept = -1e9;
  p.rate_intercept = log_rate;
  return p;
}

double rush_hour_profile(double hour) {
  double m = (hour - 8.0) / 2.5;
  double e = (hour - 17.0) / 3.0;
  return std::exp(-m * m) + std::exp(-e * e);
}

SimulatorSpec crash_simulator_spec() {
  SimulatorSpec spec;
  spec.target_name = "Total_Crash";
  spec.target_cap = 32;
  spec.hour_column = "Hour";

  auto add = [&](SimColumn col) { spec.columns.push_back(std::move(col)); };

  {
    SimColumn hour;
    hour.schema = {"Hour", ColumnKind::ordinal, numeric_labels(0, 23)};
    hour.family = SimColumn::Family::categorical;
    hour.probs.resize(24);
    for (int h = 0; h < 24; ++h)
      hour.probs[h] = 1.0 + 2.2 * rush_hour_profile(h);
    add(hour);
  }
  {
    SimColumn lanes;
    lanes.schema = {"Number_of_Lanes", ColumnKind::ordinal,
                    numeric_labels(2, 5)};
    lanes.family = SimColumn::Family::categorical;
    lanes.probs = {0.07, 0.40, 0.44, 0.09};
    lanes.u_load = 0.8;
    add(lanes);
  }
  {
    SimColumn light;
    light.schema = {"Light_Presence", ColumnKind::nominal, {"0", "1"}};
    light.family = SimColumn::Family::categorical;
    light.probs = {0.70, 0.30};
    light.u_load = 0.6;
    add(light);
  }
  {
    SimColumn surface;
    surface.schema = {"Surface_Type", ColumnKind::nominal, {"0", "1"}};
    surface.family = SimColumn::Family::categorical;
    surface.probs = {0.38, 0.62};
    surface.u_load = 0.4;
    add(surface);
  }
  {
    SimColumn aaht;
    aaht.schema = {"AAHT", ColumnKind::real_valued, {}};
    aaht.loc = 2.8;
    aaht.scale = 1.0;
    aaht.u_load = 1.2;
    aaht.hour_load = 1.5;
    aaht.noise = 0.8;
    aaht.lo = 0.0001;
    aaht.hi = 8.62;
    add(aaht);
  }
  {
    SimColumn len;
    len.schema = {"Segment_Length", ColumnKind::real_valued, {}};
    len.family = SimColumn::Family::lognormal;
    len.loc = std::log(0.11);
    len.scale = 0.55;
    len.v_load = 0.3;
    len.lo = 0.05;
    len.hi = 1.1;
    add(len);
  }
  {
    SimColumn lane_w;
    lane_w.schema = {"Lane_Width", ColumnKind::real_valued, {}};
    lane_w.loc = 12.4;
    lane_w.scale = 1.3;
    lane_w.u_load = -0.3;
    lane_w.lo = 11.0;
    lane_w.hi = 22.0;
    add(lane_w);
  }
  {
    SimColumn road_w;
    road_w.schema = {"Roadway_Width", ColumnKind::real_valued, {}};
    road_w.loc = 86.0;
    road_w.scale = 14.0;
    road_w.u_load = 0.9;
    road_w.noise = 0.5;
    road_w.lo = 55.0;
    road_w.hi = 132.0;
    add(road_w);
  }
  {
    SimColumn median;
    median.schema = {"Median_Width", ColumnKind::real_valued, {}};
    median.family = SimColumn::Family::lognormal;
    median.loc = std::log(45.0);
    median.scale = 0.8;
    median.v_load = 0.4;
    median.lo = 7.0;
    median.hi = 300.0;
    add(median);
  }
  for (const char* side : {"Left_Shoulder_Width", "Right_Shoulder_Width"}) {
    SimColumn shoulder;
    shoulder.schema = {side, ColumnKind::real_valued, {}};
    shoulder.loc = 8.8;
    shoulder.scale = 3.2;
    shoulder.v_load = 0.7;
    shoulder.noise = 0.7;
    shoulder.lo = 0.0;
    shoulder.hi = 12.0;
    add(shoulder);
  }
  {
    SimColumn curve;
    curve.schema = {"Curvature_degree", ColumnKind::real_valued, {}};
    curve.family = SimColumn::Family::folded;
    curve.loc = 0.0;
    curve.scale = 0.9;
    curve.v_load = 0.8;
    curve.noise = 0.6;
    curve.lo = 0.0;
    curve.hi = 4.07;
    add(curve);
  }
  {
    SimColumn grade;
    grade.schema = {"Grade_Percentage", ColumnKind::real_valued, {}};
    grade.loc = 0.0;
    grade.scale = 2.1;
    grade.v_load = 0.6;
    grade.noise = 0.8;
    grade.lo = -5.0;
    grade.hi = 5.0;
    add(grade);
  }
  return spec;
}

ZipParams default_crash_zip_params() {
  ZipParams p;
  // Column order of crash_simulator_spec: Hour, Number_of_Lanes,
  // Light_Presence, Surface_Type, AAHT, Segment_Length, Lane_Width,
  // Roadway_Width, Median_Width, Left_Shoulder_Width, Right_Shoulder_Width,
  // Curvature_degree, Grade_Percentage.
  p.zero_weights = {-0.20, 0.0, 0.0,   0.0,  -0.90, -0.50, 0.0,
                    0.0,   0.0, 0.10,  0.0,  -0.15, 0.0};
  p.zero_intercept = 1.30;
  p.rate_weights = {0.07,   0.105,  -0.07, 0.035, 0.385, 0.35, -0.07,
                    -0.035, -0.035, 0.0,   0.0,   0.175, -0.105};
  p.rate_intercept = -0.45;
  p.rush_hour_coeff = 0.35;
  p.abs_grade_coeff = -0.175;
  p.traffic_light_coeff = -0.21;
  return p;
}

ZipParams linear_crash_zip_params() {
  ZipParams p = default_crash_zip_params();
  p.rush_hour_coeff = 0.0;
  p.abs_grade_coeff = 0.0;
  p.traffic_light_coeff = 0.0;
  return p;
}

Matrix standardized_features(const Table& table) {
  std::vector<std::size_t> cols;
  std::size_t tgt = table.target_column.empty()
                        ? table.n_cols()
                        : table.column_index(table.target_column);
  for (std::size_t c = 0; c < table.n_cols(); ++c)
    if (c != tgt) cols.push_back(c);
  Matrix out(table.n_rows(), cols.size());
  for (std::size_t j = 0; j < cols.size(); ++j)
    for (std::size_t r = 0; r < table.n_rows(); ++r)
      out.at(r, j) = table.numeric_value(cols[j], r);
  std::vector<double> means, stds;
  column_moments(out, means, stds);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    double sd = stds[j] > 1e-12 ? stds[j] : 1.0;
    for (std::size_t r = 0; r < out.rows; ++r)
      out.at(r, j) = (out.at(r, j) - means[j]) / sd;
  }
  return out;
}

Table simulate_zip_table(std::size_t n_rows, const SimulatorSpec& spec,
                         const ZipParams& params, std::uint64_t seed) {
  validate_spec(spec, params);
  Rng rng(seed);

  const std::size_t m = spec.columns.size();
  Table table;
  for (const auto& col : spec.columns) table.schema.push_back(col.schema);
  {
    ColumnSchema target;
    target.name = spec.target_name;
    target.kind = ColumnKind::count;
    target.value_map =
        numeric_labels(0, static_cast<int>(spec.target_cap) - 1);
    table.schema.push_back(std::move(target));
  }
  table.target_column = spec.target_name;
  table.cells.assign(table.schema.size(), {});
  for (auto& c : table.cells) c.reserve(n_rows);

  std::size_t hour_idx = m;
  for (std::size_t i = 0; i < m; ++i)
    if (spec.columns[i].schema.name == spec.hour_column) hour_idx = i;

  // Explanatory draws. Row order: u, v, then each column in spec order.
  for (std::size_t r = 0; r < n_rows; ++r) {
    double u = rng.normal();
    double v = rng.normal();
    double hour_profile = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const SimColumn& col = spec.columns[i];
      double mix = col.u_load * u + col.v_load * v +
                   col.hour_load * hour_profile;
      double cell = 0.0;
      switch (col.family) {
        case SimColumn::Family::categorical: {
          const std::size_t c = col.probs.size();
          std::vector<double> w(c);
          double total = 0.0;
          for (std::size_t k = 0; k < c; ++k) {
            double center =
                c > 1 ? static_cast<double>(k) / static_cast<double>(c - 1) -
                            0.5
                      : 0.0;
            w[k] = col.probs[k] * std::exp(mix * center);
            total += w[k];
          }
          double pick = rng.uniform() * total;
          std::size_t k = 0;
          for (; k + 1 < c; ++k) {
            pick -= w[k];
            if (pick < 0.0) break;
          }
          cell = static_cast<double>(k);
          break;
        }
        case SimColumn::Family::uniform:
          cell = rng.uniform(col.lo, col.hi);
          break;
        case SimColumn::Family::normal:
        case SimColumn::Family::lognormal:
        case SimColumn::Family::folded: {
          double raw = col.loc + col.scale * (mix + col.noise * rng.normal());
          if (col.family == SimColumn::Family::lognormal) raw = std::exp(raw);
          if (col.family == SimColumn::Family::folded) raw = std::abs(raw);
          cell = std::min(std::max(raw, col.lo), col.hi);
          break;
        }
      }
      if (i == hour_idx)
        hour_profile =
            rush_hour_profile(table.schema[i].discrete()
                                  ? std::stod(col.schema.value_map[
                                        static_cast<std::size_t>(cell)])
                                  : cell);
      table.cells[i].push_back(cell);
    }
    table.cells[m].push_back(0.0);  // target filled below
  }

  // ZIP target on the standardized realized features.
  Matrix z = standardized_features(table);
  std::size_t grade_idx = m, aaht_idx = m, light_idx = m;
  for (std::size_t i = 0; i < m; ++i) {
    const std::string& name = spec.columns[i].schema.name;
    if (name == "Grade_Percentage") grade_idx = i;
    if (name == "AAHT") aaht_idx = i;
    if (name == "Light_Presence") light_idx = i;
  }
  const std::size_t cap = spec.target_cap - 1;
  for (std::size_t r = 0; r < n_rows; ++r) {
    double logit_p = params.zero_intercept;
    double log_rate = params.rate_intercept;
    for (std::size_t i = 0; i < m; ++i) {
      if (!params.zero_weights.empty())
        logit_p += params.zero_weights[i] * z.at(r, i);
      if (!params.rate_weights.empty())
        log_rate += params.rate_weights[i] * z.at(r, i);
    }
    if (params.rush_hour_coeff != 0.0 && hour_idx < m)
      log_rate += params.rush_hour_coeff *
                  rush_hour_profile(table.numeric_value(hour_idx, r));
    if (params.abs_grade_coeff != 0.0 && grade_idx < m)
      log_rate += params.abs_grade_coeff * std::abs(z.at(r, grade_idx));
    if (params.traffic_light_coeff != 0.0 && aaht_idx < m && light_idx < m)
      log_rate += params.traffic_light_coeff * z.at(r, aaht_idx) *
                  table.cells[light_idx][r];
    double p = 1.0 / (1.0 + std::exp(-logit_p));
    double y = 0.0;
    if (rng.uniform() >= p) {
      double rate = std::exp(std::min(log_rate, 4.0));
      y = static_cast<double>(rng.poisson(rate));
      if (y > static_cast<double>(cap)) y = static_cast<double>(cap);
    }
    table.cells[m][r] = y;
  }
  return table;
}

}  // namespace tabsynth
