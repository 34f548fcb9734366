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
#ifndef TABSYNTH_SIMULATE_HPP_
#define TABSYNTH_SIMULATE_HPP_

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tabsynth/schema.hpp"

namespace tabsynth {

// Ground-truth generator for an excess-zero count table: explanatory columns
// are drawn from declared marginals tied together by two shared latent
// factors plus an optional time-of-day profile, and the target is drawn from
// a zero-inflated Poisson whose parameters link to the standardized features.

struct SimColumn {
  enum class Family {
    normal,      // loc + scale * mix, clamped
    lognormal,   // exp(loc + scale * mix), clamped
    folded,      // |loc + scale * mix|, clamped
    uniform,     // uniform on [lo, hi], loadings ignored
    categorical  // probs tilted by the latent mix
  };

  ColumnSchema schema;
  Family family = Family::normal;
  double loc = 0.0;
  double scale = 1.0;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  std::vector<double> probs;  // categorical only, one per category
  // Loadings of the shared latent mix. hour_load multiplies the rush-hour
  // profile of the row's drawn hour column.
  double u_load = 0.0;
  double v_load = 0.0;
  double hour_load = 0.0;
  double noise = 1.0;
};

struct SimulatorSpec {
  std::vector<SimColumn> columns;  // explanatory columns, draw order
  std::string target_name = "Total_Crash";
  std::size_t target_cap = 32;  // declared target categories 0..cap-1
  // Name of the ordinal hour-of-day column feeding hour_load terms and the
  // rush-hour rate modifier; empty if none.
  std::string hour_column;
};

struct ZipParams {
  // Linear links on standardized explanatory features, in spec column
  // order. Empty weight vectors mean all-zero.
  std::vector<double> zero_weights;
  double zero_intercept = 0.0;  // logit of the structural-zero probability
  std::vector<double> rate_weights;
  double rate_intercept = 0.0;  // log of the Poisson rate

  // Smooth rate modifiers that make the log rate non-linear in the
  // features. Each one is skipped when its column is missing.
  double rush_hour_coeff = 0.0;      // * rush profile of the hour column
  double abs_grade_coeff = 0.0;      // * |z| of Grade_Percentage
  double traffic_light_coeff = 0.0;  // * z(AAHT) * Light_Presence index

  static ZipParams all_zero();                  // p = 1
  static ZipParams constant_rate(double log_rate);  // p = 0, fixed rate
};

// Two-peaked commute profile in [0, ~1.05] over hour 0..23.
double rush_hour_profile(double hour);

// Road-segment-by-hour schema: 13 explanatory columns (2 ordinal, 2 nominal,
// 9 real) and a count target, with correlated marginals.
SimulatorSpec crash_simulator_spec();
// Tuned so simulate_zip_table at n=17856 lands near 85% zero targets, with
// non-linear rate modifiers enabled.
ZipParams default_crash_zip_params();
// Same links with the non-linear modifiers removed, for fitter recovery.
ZipParams linear_crash_zip_params();

Table simulate_zip_table(std::size_t n_rows, const SimulatorSpec& spec,
                         const ZipParams& params, std::uint64_t seed);

// Standardized numeric feature matrix (population moments over this table),
// explanatory columns only, in schema order minus the target. Also used by
// the ZIP fitter so simulator and fitter agree on the feature scale.
Matrix standardized_features(const Table& table);

}  // namespace tabsynth

#endif  // TABSYNTH_SIMULATE_HPP_
