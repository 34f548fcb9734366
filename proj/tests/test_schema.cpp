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

#include <cstdio>
#include <fstream>
#include <set>
#include <string>

#include "tabsynth/schema.hpp"

using namespace tabsynth;

namespace {

Table small_table() {
  Table t;
  t.schema = {
      {"speed", ColumnKind::real_valued, {}},
      {"length", ColumnKind::real_valued, {}},
      {"surface", ColumnKind::nominal, {"asphalt", "concrete", "gravel"}},
      {"crashes", ColumnKind::count, {"0", "1", "2", "3"}},
  };
  t.target_column = "crashes";
  t.append_row({50.0, 1.2, 0, 0});
  t.append_row({60.0, 0.4, 2, 1});
  t.append_row({70.0, 2.0, 1, 0});
  t.append_row({55.0, 0.9, 1, 3});
  return t;
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("encode produces exact one-hot spans and standardized reals") {
  Table t = small_table();
  fit_standardization(t);
  EncodedMatrix enc = encode(t);
  CHECK(enc.values.cols == 2 + 3 + 4);
  // Continuous block first: layout entry 0 and 1 are the real columns.
  CHECK(enc.layout[0].width == 1);
  CHECK(enc.layout[2].width == 3);
  for (std::size_t r = 0; r < enc.values.rows; ++r) {
    for (const ColumnSpan& span : enc.layout) {
      if (!t.schema[span.column].discrete()) continue;
      int ones = 0;
      for (std::size_t k = 0; k < span.width; ++k) {
        double v = enc.values.at(r, span.offset + k);
        CHECK((v == 0.0 || v == 1.0));
        ones += v == 1.0;
      }
      CHECK(ones == 1);
    }
  }
  // Standardized column has mean 0 on the fitting set.
  double mean = 0.0;
  for (std::size_t r = 0; r < 4; ++r) mean += enc.values.at(r, 0);
  CHECK(std::abs(mean / 4.0) < 1e-12);
}

TEST_CASE("decode inverts encode") {
  Table t = small_table();
  fit_standardization(t);
  Table back = decode_encoded(encode(t));
  REQUIRE(back.n_rows() == t.n_rows());
  for (std::size_t c = 0; c < t.n_cols(); ++c)
    for (std::size_t r = 0; r < t.n_rows(); ++r) {
      if (t.schema[c].discrete())
        CHECK(back.cells[c][r] == t.cells[c][r]);
      else
        CHECK(back.cells[c][r] == doctest::Approx(t.cells[c][r]).epsilon(1e-12));
    }
}

TEST_CASE("decode breaks one-hot ties toward the lowest index") {
  std::vector<ColumnSchema> schema = {
      {"cat", ColumnKind::nominal, {"a", "b"}}};
  Matrix m(2, 2);
  m.at(0, 0) = 0.9;
  m.at(0, 1) = 0.1;
  m.at(1, 0) = 0.5;
  m.at(1, 1) = 0.5;
  Table t = decode_encoded(m, schema, "");
  CHECK(t.cells[0][0] == 0.0);
  CHECK(t.cells[0][1] == 0.0);
}

TEST_CASE("decode de-standardizes with the fitted moments") {
  std::vector<ColumnSchema> schema = {{"x", ColumnKind::real_valued, {}}};
  schema[0].standardized = true;
  schema[0].mean = 10.0;
  schema[0].std_dev = 2.0;
  Matrix m(1, 1);
  m.at(0, 0) = 1.0;
  Table t = decode_encoded(m, schema, "");
  CHECK(t.cells[0][0] == doctest::Approx(12.0));
}

TEST_CASE("encode requires a fitted schema") {
  Table t = small_table();
  CHECK_THROWS_AS(encode(t), Error);
}

TEST_CASE("encode of a value at the fitted mean gives zero") {
  Table t = small_table();
  fit_standardization(t);
  Table probe;
  probe.schema = t.schema;
  probe.target_column = t.target_column;
  probe.append_row({t.schema[0].mean, 1.0, 0, 0});
  EncodedMatrix enc = encode(probe);
  CHECK(enc.values.at(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("stratified split reproduces the 17856-row arithmetic") {
  Table t;
  t.schema = {{"x", ColumnKind::real_valued, {}},
              {"y", ColumnKind::count, {"0", "1"}}};
  t.target_column = "y";
  for (int i = 0; i < 15142; ++i) t.append_row({double(i), 0});
  for (int i = 0; i < 2714; ++i) t.append_row({double(i), 1});
  auto [train, test] = split(t, 0.70, 7);
  CHECK(train.n_rows() == 12498);
  CHECK(test.n_rows() == 5358);
  std::size_t zeros = 0, ones = 0;
  std::size_t tgt = train.column_index("y");
  for (std::size_t r = 0; r < train.n_rows(); ++r)
    (train.numeric_value(tgt, r) == 0.0 ? zeros : ones)++;
  CHECK(zeros == 10599);
  CHECK(ones == 1899);
}

TEST_CASE("split is a seed-deterministic disjoint partition") {
  Table t;
  t.schema = {{"x", ColumnKind::real_valued, {}},
              {"y", ColumnKind::count, {"0", "1"}}};
  t.target_column = "y";
  for (int i = 0; i < 6; ++i) t.append_row({double(i), 0});
  for (int i = 0; i < 4; ++i) t.append_row({100.0 + i, 1});
  auto [a_train, a_test] = split(t, 0.5, 3);
  auto [b_train, b_test] = split(t, 0.5, 3);
  CHECK(a_train.n_rows() == 5);
  CHECK(a_test.n_rows() == 5);
  CHECK(table_fingerprint(a_train) == table_fingerprint(b_train));
  CHECK(table_fingerprint(a_test) == table_fingerprint(b_test));
  std::set<double> seen;
  for (const Table* part : {&a_train, &a_test})
    for (std::size_t r = 0; r < part->n_rows(); ++r)
      seen.insert(part->cells[0][r]);
  CHECK(seen.size() == 10);  // disjoint and exhaustive on distinct keys
}

TEST_CASE("csv round-trip preserves the table exactly") {
  Table t = small_table();
  fit_standardization(t);
  TempFile csv("tabsynth_rt.csv");
  TempFile sidecar("tabsynth_rt.schema.json");
  save_csv(t, csv.path);
  save_schema(t, sidecar.path);
  Table back = load_csv(csv.path, sidecar.path);
  CHECK(back.target_column == "crashes");
  CHECK(table_fingerprint(back) == table_fingerprint(t));
}

TEST_CASE("loader rejects values outside the declared value map") {
  TempFile csv("tabsynth_bad.csv");
  TempFile sidecar("tabsynth_bad.schema.json");
  {
    std::ofstream f(csv.path);
    f << "surface\nasphalt\ngravel\n";
  }
  {
    std::ofstream f(sidecar.path);
    f << R"({"target":"","columns":[)"
      << R"({"name":"surface","kind":"nominal","values":["asphalt","concrete"]}]})";
  }
  CHECK_THROWS_WITH_AS(load_csv(csv.path, sidecar.path),
                       doctest::Contains("gravel"), Error);
}

TEST_CASE("loader names the row and column of an unparseable number") {
  TempFile csv("tabsynth_nan.csv");
  TempFile sidecar("tabsynth_nan.schema.json");
  {
    std::ofstream f(csv.path);
    f << "speed\n12.5\npotato\n";
  }
  {
    std::ofstream f(sidecar.path);
    f << R"({"target":"","columns":[{"name":"speed","kind":"real_valued"}]})";
  }
  CHECK_THROWS_WITH_AS(load_csv(csv.path, sidecar.path),
                       doctest::Contains("speed"), Error);
}

TEST_CASE("loader rejects a header that disagrees with the schema") {
  TempFile csv("tabsynth_hdr.csv");
  TempFile sidecar("tabsynth_hdr.schema.json");
  {
    std::ofstream f(csv.path);
    f << "velocity\n12.5\n";
  }
  {
    std::ofstream f(sidecar.path);
    f << R"({"target":"","columns":[{"name":"speed","kind":"real_valued"}]})";
  }
  CHECK_THROWS_AS(load_csv(csv.path, sidecar.path), Error);
}

TEST_CASE("count columns cap the inferred cardinality") {
  TempFile csv("tabsynth_cap.csv");
  TempFile sidecar("tabsynth_cap.schema.json");
  {
    std::ofstream f(csv.path);
    f << "n\n";
    for (int i = 0; i < 40; ++i) f << i << "\n";
  }
  {
    std::ofstream f(sidecar.path);
    f << R"({"target":"","columns":[{"name":"n","kind":"count"}]})";
  }
  CHECK_THROWS_WITH_AS(load_csv(csv.path, sidecar.path),
                       doctest::Contains("cap"), Error);
}

TEST_CASE("inferred ordinal value maps sort numerically") {
  TempFile csv("tabsynth_ord.csv");
  TempFile sidecar("tabsynth_ord.schema.json");
  {
    std::ofstream f(csv.path);
    f << "level\n10\n2\n10\n3\n";
  }
  {
    std::ofstream f(sidecar.path);
    f << R"({"target":"","columns":[{"name":"level","kind":"ordinal"}]})";
  }
  Table t = load_csv(csv.path, sidecar.path);
  REQUIRE(t.schema[0].value_map.size() == 3);
  CHECK(t.schema[0].value_map[0] == "2");
  CHECK(t.schema[0].value_map[2] == "10");
  CHECK(t.numeric_value(0, 0) == 10.0);
}

TEST_CASE("fingerprint reacts to any cell change") {
  Table a = small_table();
  Table b = small_table();
  CHECK(table_fingerprint(a) == table_fingerprint(b));
  b.cells[0][2] += 1e-9;
  CHECK(table_fingerprint(a) != table_fingerprint(b));
}
