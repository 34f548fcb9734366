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
#include "tabsynth/augment.hpp"

#include <algorithm>
#include <cmath>

namespace tabsynth {

RebalancePlan make_rebalance_plan(std::size_t zeros, std::size_t non_zeros,
                                  double ratio) {
  if (!(ratio > 0.0) || !std::isfinite(ratio))
    throw Error(ErrorCategory::config, "rebalance ratio must be positive");
  if (non_zeros == 0)
    throw Error(ErrorCategory::validation,
                "no minority rows: cannot plan a rebalance with zero "
                "non-zero-target records");
  RebalancePlan plan;
  plan.existing_zero = zeros;
  plan.existing_non_zero = non_zeros;
  plan.ratio = ratio;
  const double want = std::floor(static_cast<double>(zeros) * ratio);
  plan.to_generate =
      want > static_cast<double>(non_zeros)
          ? static_cast<std::size_t>(want) - non_zeros
          : 0;
  return plan;
}

namespace {

std::pair<std::size_t, std::size_t> class_counts(const Table& table) {
  const std::size_t target = table.column_index(table.target_column);
  std::size_t zeros = 0;
  for (std::size_t r = 0; r < table.n_rows(); ++r)
    zeros += table.numeric_value(target, r) == 0.0;
  return {zeros, table.n_rows() - zeros};
}

}  // namespace

RebalancePlan plan_rebalance(const Table& table, double ratio) {
  const auto [zeros, non_zeros] = class_counts(table);
  return make_rebalance_plan(zeros, non_zeros, ratio);
}

Table minority_subset(const Table& table) {
  const std::size_t target = table.column_index(table.target_column);
  std::vector<std::size_t> keep;
  for (std::size_t r = 0; r < table.n_rows(); ++r)
    if (table.numeric_value(target, r) != 0.0) keep.push_back(r);
  return table.take_rows(keep);
}

RowFilter non_zero_target_filter() {
  return [](const Table& t, std::size_t row) {
    return t.numeric_value(t.column_index(t.target_column), row) != 0.0;
  };
}

Table generate_synthetic_rows(const VaeModel& vae,
                              const DiffusionModel& diffusion, std::size_t n,
                              std::uint64_t seed,
                              const std::vector<RowFilter>& filters,
                              GenerationLog* log) {
  if (vae.latent_width() != diffusion.latent_dim())
    throw Error(ErrorCategory::validation,
                "generator mismatch: decoder expects latent width " +
                    std::to_string(vae.latent_width()) + ", sampler yields " +
                    std::to_string(diffusion.latent_dim()));
  Table out;
  out.schema = vae.schema();
  out.target_column = vae.target_column();
  out.cells.assign(out.schema.size(), {});
  GenerationLog local;
  if (n == 0) {
    if (log) *log = local;
    return out;
  }

  const std::size_t budget = 10 * n;
  std::size_t round = 0;
  while (out.n_rows() < n && local.attempted < budget) {
    const std::size_t missing = n - out.n_rows();
    // Draw a margin over what is missing so mild rejection rates do not
    // force many rounds; attempts only count rows actually examined.
    const std::size_t batch =
        std::min(budget - local.attempted, missing + missing / 4 + 16);
    Matrix latents = diffusion.sample(batch, seed + 0x9e3779b9ull * round);
    Table decoded = vae.decode_latents(latents);
    std::vector<std::size_t> keep;
    for (std::size_t r = 0;
         r < decoded.n_rows() && keep.size() < missing; ++r) {
      bool ok = true;
      for (const RowFilter& f : filters) ok = ok && f(decoded, r);
      local.attempted += 1;
      local.accepted += ok;
      if (ok) keep.push_back(r);
    }
    Table kept = decoded.take_rows(keep);
    for (std::size_t r = 0; r < kept.n_rows(); ++r) {
      std::vector<double> row(kept.n_cols());
      for (std::size_t c = 0; c < kept.n_cols(); ++c) row[c] = kept.cells[c][r];
      out.append_row(row);
    }
    ++round;
  }
  if (log) *log = local;
  if (out.n_rows() < n)
    throw Error(ErrorCategory::training,
                "generation stalled: accepted " +
                    std::to_string(local.accepted) + " of " +
                    std::to_string(local.attempted) +
                    " sampled rows (acceptance rate " +
                    format_double(local.acceptance_rate()) +
                    "), needed " + std::to_string(n));
  return out;
}

namespace {

void append_provenance(Table& table, double value) {
  const std::size_t rows = table.n_rows();
  ColumnSchema col;
  col.name = kSyntheticColumn;
  col.kind = ColumnKind::count;
  col.value_map = {"0", "1"};
  table.schema.push_back(col);
  table.cells.emplace_back(std::vector<double>(rows, value));
}

// Same columns in the same order with the same categories; standardization
// metadata is allowed to differ (the generator carries fitted moments).
void require_compatible_schema(const std::vector<ColumnSchema>& a,
                               const std::vector<ColumnSchema>& b) {
  bool ok = a.size() == b.size();
  for (std::size_t i = 0; ok && i < a.size(); ++i)
    ok = a[i].name == b[i].name && a[i].kind == b[i].kind &&
         a[i].value_map == b[i].value_map;
  if (!ok)
    throw Error(ErrorCategory::validation,
                "generator schema does not match the table being rebalanced");
}

}  // namespace

Table rebalance(const Table& training_table, const VaeModel& vae,
                const DiffusionModel& diffusion, const RebalancePlan& plan,
                std::uint64_t seed, GenerationLog* log) {
  if (training_table.has_column(kSyntheticColumn))
    throw Error(ErrorCategory::validation,
                std::string(kSyntheticColumn) + " column already present");
  require_compatible_schema(training_table.schema, vae.schema());
  const auto [zeros, non_zeros] = class_counts(training_table);
  if (zeros != plan.existing_zero || non_zeros != plan.existing_non_zero)
    throw Error(ErrorCategory::validation,
                "plan does not describe this table: expected " +
                    std::to_string(plan.existing_zero) + "/" +
                    std::to_string(plan.existing_non_zero) + " zero/non-zero, "
                    "found " + std::to_string(zeros) + "/" +
                    std::to_string(non_zeros));

  Table synthetic = generate_synthetic_rows(
      vae, diffusion, plan.to_generate, seed, {non_zero_target_filter()}, log);

  Table out = training_table;
  append_provenance(out, 0.0);
  for (std::size_t r = 0; r < synthetic.n_rows(); ++r) {
    std::vector<double> row(out.n_cols());
    for (std::size_t c = 0; c + 1 < out.n_cols(); ++c)
      row[c] = synthetic.cells[c][r];
    row[out.n_cols() - 1] = 1.0;
    out.append_row(row);
  }
  return out;
}

}  // namespace tabsynth
