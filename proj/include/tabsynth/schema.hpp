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
#ifndef TABSYNTH_SCHEMA_HPP_
#define TABSYNTH_SCHEMA_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tabsynth/util.hpp"

namespace tabsynth {

// Count and ordinal carry numeric labels; nominal labels are opaque strings.
enum class ColumnKind { count, ordinal, nominal, real_valued };

const char* column_kind_name(ColumnKind kind);
ColumnKind column_kind_from_name(const std::string& name);
bool is_discrete(ColumnKind kind);

struct ColumnSchema {
  std::string name;
  ColumnKind kind = ColumnKind::real_valued;
  // Ordered category labels for discrete kinds; cell values index into this.
  std::vector<std::string> value_map;
  // Standardization statistics, fitted from a designated split (real_valued).
  bool standardized = false;
  double mean = 0.0;
  double std_dev = 1.0;

  bool discrete() const { return is_discrete(kind); }
  std::size_t cardinality() const { return value_map.size(); }
  void validate() const;  // throws Error(schema) on a broken invariant
};

// Column-major typed table. Discrete cells hold value_map indices, real
// cells hold the raw (unstandardized) value.
struct Table {
  std::vector<ColumnSchema> schema;
  std::string target_column;
  std::vector<std::vector<double>> cells;

  std::size_t n_rows() const { return cells.empty() ? 0 : cells[0].size(); }
  std::size_t n_cols() const { return schema.size(); }
  std::size_t column_index(const std::string& name) const;  // throws if absent
  bool has_column(const std::string& name) const;

  // Numeric view used by correlation metrics and regressors: real cells as
  // is, count/ordinal cells as their parsed label, nominal cells as index.
  double numeric_value(std::size_t col, std::size_t row) const;
  // Raw label for CSV output.
  std::string cell_text(std::size_t col, std::size_t row) const;

  void append_row(const std::vector<double>& row);
  Table take_rows(const std::vector<std::size_t>& row_indices) const;
  void validate() const;
};

// Slice of the encoded matrix owned by one schema column.
struct ColumnSpan {
  std::size_t column = 0;  // index into the schema
  std::size_t offset = 0;
  std::size_t width = 0;
};

// One-hot plus standardized-real encoding. Layout places all real_valued
// columns first (schema order), then discrete columns (schema order).
struct EncodedMatrix {
  Matrix values;
  std::vector<ColumnSpan> layout;
  std::vector<ColumnSchema> schema;
  std::string target_column;

  std::size_t n_continuous() const;
  std::size_t n_discrete() const;
};

std::vector<ColumnSpan> build_layout(const std::vector<ColumnSchema>& schema);
std::size_t encoded_width(const std::vector<ColumnSchema>& schema);

// Computes real-column mean/std (population) from this table's own rows and
// stamps them on the schema. Throws on a constant column.
void fit_standardization(Table& table);
// Copies fitted statistics (and value maps) from a fitted schema.
void adopt_schema(const Table& fitted, Table& other);

EncodedMatrix encode(const Table& table);  // requires fitted real columns
Table decode_encoded(const Matrix& values,
                     const std::vector<ColumnSchema>& schema,
                     const std::string& target_column);
Table decode_encoded(const EncodedMatrix& matrix);

// Stratified split on target == 0 versus != 0; each stratum contributes
// floor(train_fraction * stratum size) rows to the training side.
std::pair<Table, Table> split(const Table& table, double train_fraction,
                              std::uint64_t seed);

Table load_csv(const std::string& csv_path, const std::string& schema_path);
void save_csv(const Table& table, const std::string& csv_path);
void save_schema(const Table& table, const std::string& schema_path);
// Parses a schema sidecar; columns without a declared value list get their
// categories inferred from data at load time.
std::vector<ColumnSchema> load_schema(const std::string& schema_path,
                                      std::string* target_column);

// Sidecar text form, also embedded in model checkpoints.
std::string schema_to_json(const std::vector<ColumnSchema>& schema,
                           const std::string& target_column);
std::vector<ColumnSchema> schema_from_json(const std::string& json_text,
                                           std::string* target_column);

// Stable content hashes used by checkpoints and manifests.
std::uint64_t schema_fingerprint(const std::vector<ColumnSchema>& schema,
                                 const std::string& target_column);
std::uint64_t table_fingerprint(const Table& table);

}  // namespace tabsynth

#endif  // TABSYNTH_SCHEMA_HPP_
