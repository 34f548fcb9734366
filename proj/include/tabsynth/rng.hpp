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
#include <random>
#include <vector>

#include "tabsynth/util.hpp"

namespace tabsynth {

// Deterministic random source. mt19937_64 is fully specified by the
// standard and every transform below is written out by hand, so a given
// seed yields the same stream on any platform. std::*_distribution is
// deliberately avoided: its output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() {
    return double(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform in (0, 1); never returns 0 so logs are safe.
  double uniform_pos() {
    double u;
    do { u = uniform(); } while (u == 0.0);
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0, n) via rejection.
  std::uint64_t below(std::uint64_t n) {
    if (n == 0) throw Error(ErrorCategory::internal, "Rng::below: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do { v = gen_(); } while (v >= limit);
    return v % n;
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Box-Muller, no caching: two uniforms per normal keeps the stream layout
  // obvious when reasoning about reproducibility.
  double normal() {
    const double u1 = uniform_pos();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  // Knuth's product method; fine for the small rates used here.
  int poisson(double lambda) {
    if (lambda < 0.0 || !std::isfinite(lambda))
      throw Error(ErrorCategory::numeric, "Rng::poisson: invalid rate");
    if (lambda > 60.0) {
      // Normal approximation with continuity correction for rare large rates.
      const int k = int(std::floor(lambda + std::sqrt(lambda) * normal() + 0.5));
      return k < 0 ? 0 : k;
    }
    const double limit = std::exp(-lambda);
    int k = 0;
    double prod = uniform_pos();
    while (prod > limit) {
      ++k;
      prod *= uniform_pos();
    }
    return k;
  }

  // Marsaglia-Tsang for shape >= 1, boost for shape < 1.
  double gamma(double shape, double scale) {
    if (shape <= 0.0 || scale <= 0.0)
      throw Error(ErrorCategory::numeric, "Rng::gamma: invalid parameters");
    if (shape < 1.0) {
      const double u = uniform_pos();
      return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
    }
  }

  double exponential(double mean) { return -mean * std::log(uniform_pos()); }

  // Fisher-Yates.
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = std::size_t(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace tabsynth
