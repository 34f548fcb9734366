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

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tabsynth {

// Error taxonomy shared across the library. The CLI maps categories to
// machine-readable diagnostics; library code throws and never exits.
enum class ErrorCategory {
  config,
  io,
  schema,
  validation,
  numeric,
  training,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory cat, const std::string& msg)
      : std::runtime_error(msg), category_(cat) {}
  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

inline const char* error_category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::config: return "config";
    case ErrorCategory::io: return "io";
    case ErrorCategory::schema: return "schema";
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::training: return "training";
    case ErrorCategory::internal: return "internal";
  }
  return "unknown";
}

// Dense row-major matrix of doubles. Deliberately minimal: the heavy math
// lives in the autodiff engine; this is plumbing for datasets and latents.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

// Column means and population standard deviations (divide by n, not n-1).
// Shared by the ZIP fitter and the simulator so both see the same transform.
void column_moments(const Matrix& m, std::vector<double>& means,
                    std::vector<double>& stds);

// FNV-1a 64-bit. Used for content hashes in manifests and schema
// fingerprints; not cryptographic.
inline std::uint64_t fnv1a64(const void* data, std::size_t len,
                             std::uint64_t seed = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  return fnv1a64(s.data(), s.size());
}

std::string to_hex(std::uint64_t v);

// Shortest round-trip decimal rendering of a double. All file formats use
// this so a write-then-read cycle reproduces values bit-exactly.
std::string format_double(double v);

}  // namespace tabsynth
