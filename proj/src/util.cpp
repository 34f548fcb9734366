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
#include "tabsynth/util.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace tabsynth {

void column_moments(const Matrix& m, std::vector<double>& means,
                    std::vector<double>& stds) {
  means.assign(m.cols, 0.0);
  stds.assign(m.cols, 0.0);
  if (m.rows == 0) return;
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = m.row(r);
    for (std::size_t c = 0; c < m.cols; ++c) means[c] += row[c];
  }
  for (std::size_t c = 0; c < m.cols; ++c) means[c] /= double(m.rows);
  for (std::size_t r = 0; r < m.rows; ++r) {
    const double* row = m.row(r);
    for (std::size_t c = 0; c < m.cols; ++c) {
      const double d = row[c] - means[c];
      stds[c] += d * d;
    }
  }
  for (std::size_t c = 0; c < m.cols; ++c)
    stds[c] = std::sqrt(stds[c] / double(m.rows));
}

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace tabsynth
