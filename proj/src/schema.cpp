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
#include "tabsynth/schema.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "tabsynth/rng.hpp"

namespace tabsynth {

namespace {

constexpr std::size_t kCountCardinalityCap = 32;

bool parse_double(const std::string& s, double* out) {
  const char* b = s.data();
  const char* e = b + s.size();
  auto res = std::from_chars(b, e, *out);
  return res.ec == std::errc() && res.ptr == e;
}

[[noreturn]] void fail(ErrorCategory cat, const std::string& msg) {
  throw Error(cat, msg);
}

}  // namespace

const char* column_kind_name(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::count: return "count";
    case ColumnKind::ordinal: return "ordinal";
    case ColumnKind::nominal: return "nominal";
    case ColumnKind::real_valued: return "real_valued";
  }
  return "?";
}

ColumnKind column_kind_from_name(const std::string& name) {
  if (name == "count") return ColumnKind::count;
  if (name == "ordinal") return ColumnKind::ordinal;
  if (name == "nominal") return ColumnKind::nominal;
  if (name == "real_valued") return ColumnKind::real_valued;
  fail(ErrorCategory::schema, "unknown column kind '" + name + "'");
}

bool is_discrete(ColumnKind kind) { return kind != ColumnKind::real_valued; }

void ColumnSchema::validate() const {
  if (name.empty()) fail(ErrorCategory::schema, "column with empty name");
  if (discrete()) {
    if (value_map.size() < 2)
      fail(ErrorCategory::schema, "discrete column '" + name +
                                      "' needs at least 2 categories, has " +
                                      std::to_string(value_map.size()));
    std::set<std::string> seen(value_map.begin(), value_map.end());
    if (seen.size() != value_map.size())
      fail(ErrorCategory::schema,
           "column '" + name + "' has duplicate category labels");
    if (kind != ColumnKind::nominal) {
      double v;
      for (const std::string& label : value_map)
        if (!parse_double(label, &v))
          fail(ErrorCategory::schema, "column '" + name + "' of kind " +
                                          column_kind_name(kind) +
                                          " has non-numeric label '" + label +
                                          "'");
    }
  } else if (standardized && !(std_dev > 0.0)) {
    fail(ErrorCategory::schema,
         "column '" + name + "' fitted with non-positive std");
  }
}

std::size_t Table::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (schema[i].name == name) return i;
  fail(ErrorCategory::schema, "no column named '" + name + "'");
}

bool Table::has_column(const std::string& name) const {
  for (const auto& c : schema)
    if (c.name == name) return true;
  return false;
}

double Table::numeric_value(std::size_t col, std::size_t row) const {
  const ColumnSchema& c = schema[col];
  double cell = cells[col][row];
  if (!c.discrete()) return cell;
  auto idx = static_cast<std::size_t>(cell);
  if (c.kind == ColumnKind::nominal) return static_cast<double>(idx);
  double v = 0.0;
  parse_double(c.value_map[idx], &v);
  return v;
}

std::string Table::cell_text(std::size_t col, std::size_t row) const {
  const ColumnSchema& c = schema[col];
  double cell = cells[col][row];
  if (!c.discrete()) return format_double(cell);
  return c.value_map[static_cast<std::size_t>(cell)];
}

void Table::append_row(const std::vector<double>& row) {
  if (cells.empty()) cells.resize(schema.size());
  if (row.size() != schema.size())
    fail(ErrorCategory::validation,
         "row width " + std::to_string(row.size()) + " does not match " +
             std::to_string(schema.size()) + " columns");
  for (std::size_t i = 0; i < row.size(); ++i) cells[i].push_back(row[i]);
}

Table Table::take_rows(const std::vector<std::size_t>& row_indices) const {
  Table out;
  out.schema = schema;
  out.target_column = target_column;
  out.cells.resize(schema.size());
  for (std::size_t c = 0; c < schema.size(); ++c) {
    out.cells[c].reserve(row_indices.size());
    for (std::size_t r : row_indices) out.cells[c].push_back(cells[c][r]);
  }
  return out;
}

void Table::validate() const {
  if (cells.size() != schema.size())
    fail(ErrorCategory::validation, "cell columns do not match schema");
  std::size_t rows = n_rows();
  for (std::size_t c = 0; c < schema.size(); ++c) {
    schema[c].validate();
    if (cells[c].size() != rows)
      fail(ErrorCategory::validation,
           "column '" + schema[c].name + "' has inconsistent row count");
    if (schema[c].discrete()) {
      for (double v : cells[c]) {
        auto idx = static_cast<std::size_t>(v);
        if (v != std::floor(v) || idx >= schema[c].cardinality())
          fail(ErrorCategory::validation,
               "column '" + schema[c].name + "' holds invalid category index");
      }
    }
  }
  if (!target_column.empty()) (void)column_index(target_column);
}

std::vector<ColumnSpan> build_layout(const std::vector<ColumnSchema>& schema) {
  std::vector<ColumnSpan> layout;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (!schema[i].discrete()) {
      layout.push_back({i, offset, 1});
      offset += 1;
    }
  for (std::size_t i = 0; i < schema.size(); ++i)
    if (schema[i].discrete()) {
      layout.push_back({i, offset, schema[i].cardinality()});
      offset += schema[i].cardinality();
    }
  return layout;
}

std::size_t encoded_width(const std::vector<ColumnSchema>& schema) {
  std::size_t w = 0;
  for (const auto& c : schema) w += c.discrete() ? c.cardinality() : 1;
  return w;
}

std::size_t EncodedMatrix::n_continuous() const {
  std::size_t n = 0;
  for (const auto& c : schema)
    if (!c.discrete()) ++n;
  return n;
}

std::size_t EncodedMatrix::n_discrete() const {
  return schema.size() - n_continuous();
}

void fit_standardization(Table& table) {
  std::size_t rows = table.n_rows();
  if (rows == 0)
    fail(ErrorCategory::validation, "cannot fit standardization on 0 rows");
  for (std::size_t c = 0; c < table.schema.size(); ++c) {
    ColumnSchema& col = table.schema[c];
    if (col.discrete()) continue;
    double mean = 0.0;
    for (double v : table.cells[c]) mean += v;
    mean /= static_cast<double>(rows);
    double var = 0.0;
    for (double v : table.cells[c]) var += (v - mean) * (v - mean);
    var /= static_cast<double>(rows);
    double sd = std::sqrt(var);
    if (!(sd > 1e-12))
      fail(ErrorCategory::validation,
           "real column '" + col.name + "' is constant; cannot standardize");
    col.mean = mean;
    col.std_dev = sd;
    col.standardized = true;
  }
}

void adopt_schema(const Table& fitted, Table& other) {
  if (fitted.schema.size() != other.schema.size())
    fail(ErrorCategory::schema, "schemas have different column counts");
  for (std::size_t i = 0; i < fitted.schema.size(); ++i) {
    if (fitted.schema[i].name != other.schema[i].name ||
        fitted.schema[i].kind != other.schema[i].kind)
      fail(ErrorCategory::schema, "schemas disagree on column '" +
                                      other.schema[i].name + "'");
    other.schema[i] = fitted.schema[i];
  }
}

EncodedMatrix encode(const Table& table) {
  for (const auto& c : table.schema)
    if (!c.discrete() && !c.standardized)
      fail(ErrorCategory::validation,
           "column '" + c.name + "' is not fitted; fit standardization first");
  EncodedMatrix out;
  out.schema = table.schema;
  out.target_column = table.target_column;
  out.layout = build_layout(table.schema);
  std::size_t rows = table.n_rows();
  out.values = Matrix(rows, encoded_width(table.schema));
  for (const ColumnSpan& span : out.layout) {
    const ColumnSchema& col = table.schema[span.column];
    const std::vector<double>& cells = table.cells[span.column];
    for (std::size_t r = 0; r < rows; ++r) {
      double* dst = out.values.row(r) + span.offset;
      if (col.discrete())
        dst[static_cast<std::size_t>(cells[r])] = 1.0;
      else
        dst[0] = (cells[r] - col.mean) / col.std_dev;
    }
  }
  return out;
}

Table decode_encoded(const Matrix& values,
                     const std::vector<ColumnSchema>& schema,
                     const std::string& target_column) {
  std::size_t width = encoded_width(schema);
  if (values.cols != width)
    fail(ErrorCategory::validation,
         "encoded width " + std::to_string(values.cols) + " does not match " +
             std::to_string(width) + " expected by the schema");
  Table out;
  out.schema = schema;
  out.target_column = target_column;
  out.cells.assign(schema.size(), {});
  for (auto& col : out.cells) col.resize(values.rows);
  auto layout = build_layout(schema);
  for (const ColumnSpan& span : layout) {
    const ColumnSchema& col = schema[span.column];
    for (std::size_t r = 0; r < values.rows; ++r) {
      const double* src = values.row(r) + span.offset;
      if (col.discrete()) {
        // Argmax with lowest-index tie-break.
        std::size_t best = 0;
        for (std::size_t k = 1; k < span.width; ++k)
          if (src[k] > src[best]) best = k;
        out.cells[span.column][r] = static_cast<double>(best);
      } else {
        out.cells[span.column][r] = src[0] * col.std_dev + col.mean;
      }
    }
  }
  return out;
}

Table decode_encoded(const EncodedMatrix& matrix) {
  return decode_encoded(matrix.values, matrix.schema, matrix.target_column);
}

std::pair<Table, Table> split(const Table& table, double train_fraction,
                              std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0))
    fail(ErrorCategory::validation, "train_fraction must be in (0, 1)");
  if (table.target_column.empty())
    fail(ErrorCategory::validation, "split needs a target column");
  std::size_t tgt = table.column_index(table.target_column);
  std::vector<std::size_t> zeros, nonzeros;
  for (std::size_t r = 0; r < table.n_rows(); ++r)
    (table.numeric_value(tgt, r) == 0.0 ? zeros : nonzeros).push_back(r);
  Rng rng(seed);
  rng.shuffle(zeros);
  rng.shuffle(nonzeros);
  std::vector<std::size_t> train, test;
  for (auto* stratum : {&zeros, &nonzeros}) {
    auto take = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(stratum->size())));
    for (std::size_t i = 0; i < stratum->size(); ++i)
      (i < take ? train : test).push_back((*stratum)[i]);
  }
  std::sort(train.begin(), train.end());
  std::sort(test.begin(), test.end());
  return {table.take_rows(train), table.take_rows(test)};
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::vector<ColumnSchema> schema_from_json(const std::string& json_text,
                                           std::string* target_column) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCategory::schema,
         std::string("schema text is not valid JSON: ") + e.what());
  }
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (it.key() != "target" && it.key() != "columns")
      fail(ErrorCategory::schema,
           "schema file has unknown key '" + it.key() + "'");
  if (!doc.contains("columns") || !doc["columns"].is_array())
    fail(ErrorCategory::schema, "schema file needs a 'columns' array");
  std::vector<ColumnSchema> schema;
  for (const auto& jc : doc["columns"]) {
    for (auto it = jc.begin(); it != jc.end(); ++it) {
      const std::string& k = it.key();
      if (k != "name" && k != "kind" && k != "values" && k != "mean" &&
          k != "std")
        fail(ErrorCategory::schema,
             "schema column has unknown key '" + k + "'");
    }
    ColumnSchema col;
    if (!jc.contains("name") || !jc.contains("kind"))
      fail(ErrorCategory::schema, "schema column needs 'name' and 'kind'");
    col.name = jc["name"].get<std::string>();
    col.kind = column_kind_from_name(jc["kind"].get<std::string>());
    if (jc.contains("values"))
      for (const auto& v : jc["values"])
        col.value_map.push_back(v.is_string() ? v.get<std::string>()
                                              : v.dump());
    if (jc.contains("mean") && jc.contains("std")) {
      col.mean = jc["mean"].get<double>();
      col.std_dev = jc["std"].get<double>();
      col.standardized = true;
    }
    schema.push_back(std::move(col));
  }
  if (target_column) {
    *target_column =
        doc.contains("target") ? doc["target"].get<std::string>() : "";
    if (!target_column->empty()) {
      bool found = false;
      for (const auto& c : schema) found = found || c.name == *target_column;
      if (!found)
        fail(ErrorCategory::schema,
             "target '" + *target_column + "' is not a declared column");
    }
  }
  return schema;
}

std::vector<ColumnSchema> load_schema(const std::string& schema_path,
                                      std::string* target_column) {
  std::ifstream in(schema_path);
  if (!in) fail(ErrorCategory::io, "cannot open schema file " + schema_path);
  std::ostringstream text;
  text << in.rdbuf();
  return schema_from_json(text.str(), target_column);
}

Table load_csv(const std::string& csv_path, const std::string& schema_path) {
  std::string target;
  std::vector<ColumnSchema> schema = load_schema(schema_path, &target);

  std::ifstream in(csv_path);
  if (!in) fail(ErrorCategory::io, "cannot open CSV file " + csv_path);
  std::string line;
  if (!std::getline(in, line))
    fail(ErrorCategory::io, "CSV file " + csv_path + " is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_line(line);
  if (header.size() != schema.size())
    fail(ErrorCategory::schema,
         "CSV has " + std::to_string(header.size()) + " columns, schema has " +
             std::to_string(schema.size()));
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] != schema[i].name)
      fail(ErrorCategory::schema, "CSV column " + std::to_string(i + 1) +
                                      " is '" + header[i] +
                                      "', schema expects '" + schema[i].name +
                                      "'");

  // Raw tokens per column; resolved to indices after value maps are known.
  std::vector<std::vector<std::string>> tokens(schema.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> row = split_line(line);
    if (row.size() != schema.size())
      fail(ErrorCategory::validation,
           "line " + std::to_string(line_no) + " has " +
               std::to_string(row.size()) + " fields, expected " +
               std::to_string(schema.size()));
    for (std::size_t c = 0; c < schema.size(); ++c)
      tokens[c].push_back(std::move(row[c]));
  }

  // Infer missing value maps from the observed labels.
  for (std::size_t c = 0; c < schema.size(); ++c) {
    ColumnSchema& col = schema[c];
    if (!col.discrete() || !col.value_map.empty()) continue;
    std::set<std::string> distinct(tokens[c].begin(), tokens[c].end());
    if (col.kind == ColumnKind::count &&
        distinct.size() > kCountCardinalityCap)
      fail(ErrorCategory::validation,
           "count column '" + col.name + "' has " +
               std::to_string(distinct.size()) +
               " distinct values (cap " + std::to_string(kCountCardinalityCap) +
               "); declare it real_valued or bin the values");
    col.value_map.assign(distinct.begin(), distinct.end());
    if (col.kind != ColumnKind::nominal) {
      // Numeric label order.
      std::sort(col.value_map.begin(), col.value_map.end(),
                [&](const std::string& a, const std::string& b) {
                  double x = 0, y = 0;
                  if (!parse_double(a, &x))
                    fail(ErrorCategory::validation,
                         "column '" + col.name + "' has non-numeric label '" +
                             a + "'");
                  if (!parse_double(b, &y))
                    fail(ErrorCategory::validation,
                         "column '" + col.name + "' has non-numeric label '" +
                             b + "'");
                  return x < y;
                });
    }
  }

  Table out;
  out.schema = schema;
  out.target_column = target;
  out.cells.assign(schema.size(), {});
  for (std::size_t c = 0; c < schema.size(); ++c) {
    const ColumnSchema& col = schema[c];
    out.cells[c].reserve(tokens[c].size());
    if (col.discrete()) {
      std::unordered_map<std::string, std::size_t> index;
      for (std::size_t k = 0; k < col.value_map.size(); ++k)
        index[col.value_map[k]] = k;
      for (std::size_t r = 0; r < tokens[c].size(); ++r) {
        auto it = index.find(tokens[c][r]);
        if (it == index.end())
          fail(ErrorCategory::validation,
               "line " + std::to_string(r + 2) + ", column '" + col.name +
                   "': value '" + tokens[c][r] + "' is not in the value map");
        out.cells[c].push_back(static_cast<double>(it->second));
      }
    } else {
      for (std::size_t r = 0; r < tokens[c].size(); ++r) {
        double v;
        if (!parse_double(tokens[c][r], &v))
          fail(ErrorCategory::validation,
               "line " + std::to_string(r + 2) + ", column '" + col.name +
                   "': cannot parse number '" + tokens[c][r] + "'");
        out.cells[c].push_back(v);
      }
    }
  }
  out.validate();
  return out;
}

void save_csv(const Table& table, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) fail(ErrorCategory::io, "cannot write CSV file " + csv_path);
  for (std::size_t c = 0; c < table.schema.size(); ++c)
    out << (c ? "," : "") << table.schema[c].name;
  out << "\n";
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t c = 0; c < table.schema.size(); ++c)
      out << (c ? "," : "") << table.cell_text(c, r);
    out << "\n";
  }
  if (!out) fail(ErrorCategory::io, "write failed for " + csv_path);
}

std::string schema_to_json(const std::vector<ColumnSchema>& schema,
                           const std::string& target_column) {
  nlohmann::ordered_json doc;
  doc["target"] = target_column;
  doc["columns"] = nlohmann::ordered_json::array();
  for (const auto& col : schema) {
    nlohmann::ordered_json jc;
    jc["name"] = col.name;
    jc["kind"] = column_kind_name(col.kind);
    if (col.discrete()) jc["values"] = col.value_map;
    if (col.standardized) {
      jc["mean"] = col.mean;
      jc["std"] = col.std_dev;
    }
    doc["columns"].push_back(jc);
  }
  return doc.dump(2);
}

void save_schema(const Table& table, const std::string& schema_path) {
  std::ofstream out(schema_path);
  if (!out) fail(ErrorCategory::io, "cannot write schema file " + schema_path);
  out << schema_to_json(table.schema, table.target_column) << "\n";
}

std::uint64_t schema_fingerprint(const std::vector<ColumnSchema>& schema,
                                 const std::string& target_column) {
  std::uint64_t h = fnv1a64("schema", 6);
  auto mix_str = [&](const std::string& s) {
    h = fnv1a64(s.data(), s.size(), h);
    h = fnv1a64("\x1f", 1, h);
  };
  for (const auto& col : schema) {
    mix_str(col.name);
    mix_str(column_kind_name(col.kind));
    for (const auto& v : col.value_map) mix_str(v);
    if (col.standardized) {
      mix_str(format_double(col.mean));
      mix_str(format_double(col.std_dev));
    }
  }
  mix_str(target_column);
  return h;
}

std::uint64_t table_fingerprint(const Table& table) {
  std::uint64_t h = schema_fingerprint(table.schema, table.target_column);
  for (std::size_t r = 0; r < table.n_rows(); ++r)
    for (std::size_t c = 0; c < table.n_cols(); ++c) {
      double v = table.cells[c][r];
      h = fnv1a64(&v, sizeof(v), h);
    }
  return h;
}

}  // namespace tabsynth
