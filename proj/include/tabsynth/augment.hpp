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
#include <functional>
#include <string>
#include <vector>

#include "tabsynth/diffusion.hpp"
#include "tabsynth/schema.hpp"
#include "tabsynth/vae.hpp"

namespace tabsynth {

// Name of the 0/1 column rebalance() appends so downstream consumers can
// stratify original versus generated rows.
inline constexpr const char* kSyntheticColumn = "__synthetic";

// Oversampling arithmetic for a zero-inflated target: grow the non-zero
// stratum until it reaches ratio * (zero count).
struct RebalancePlan {
  std::size_t existing_zero = 0;
  std::size_t existing_non_zero = 0;
  double ratio = 1.0;
  std::size_t to_generate = 0;
};

// to_generate = existing_zero * ratio - existing_non_zero, clamped at 0.
// Requires non_zeros > 0: with no minority rows there is nothing to learn
// a generator from.
RebalancePlan make_rebalance_plan(std::size_t zeros, std::size_t non_zeros,
                                  double ratio = 1.0);
RebalancePlan plan_rebalance(const Table& table, double ratio = 1.0);

// Rows of the table whose target is non-zero, in original order.
Table minority_subset(const Table& table);

// Row predicate over a freshly decoded table.
using RowFilter = std::function<bool(const Table&, std::size_t row)>;
RowFilter non_zero_target_filter();

struct GenerationLog {
  std::size_t attempted = 0;
  std::size_t accepted = 0;
  double acceptance_rate() const {
    return attempted == 0 ? 1.0
                          : static_cast<double>(accepted) /
                                static_cast<double>(attempted);
  }
};

// Draws latents from the diffusion model, decodes them through the VAE, and
// keeps rows passing every filter until n survive. Gives up once 10 * n
// rows have been drawn with under half accepted.
Table generate_synthetic_rows(const VaeModel& vae,
                              const DiffusionModel& diffusion, std::size_t n,
                              std::uint64_t seed,
                              const std::vector<RowFilter>& filters = {},
                              GenerationLog* log = nullptr);

// Original rows plus enough generated non-zero rows to satisfy the plan,
// with a provenance column appended (0 original, 1 synthetic). The plan
// must describe training_table.
Table rebalance(const Table& training_table, const VaeModel& vae,
                const DiffusionModel& diffusion, const RebalancePlan& plan,
                std::uint64_t seed, GenerationLog* log = nullptr);

}  // namespace tabsynth
