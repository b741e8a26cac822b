/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace sapsky {

/// One splitmix64 step. Used to spread seed material before it enters an engine.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent substream seed from a root seed and up to three
/// stream coordinates (for example node id, step index, purpose tag).
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t s = mix64(root ^ 0x8f2d3a5b7c9e1146ULL);
  s = mix64(s ^ a);
  s = mix64(s ^ b);
  s = mix64(s ^ c);
  return s;
}

/// Deterministic random source. The engine (mt19937_64) is fully specified by
/// the standard; the distributions are implemented here by hand because the
/// standard library distribution objects may produce different streams on
/// different implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_bits() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1]; safe as a log() argument.
  double uniform_positive() { return 1.0 - uniform(); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be positive.
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  /// Standard normal via Box-Muller. Always consumes exactly two engine draws
  /// and returns one variate, so the stream position stays predictable.
  double normal() {
    const double u1 = uniform_positive();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Poisson count by inversion of exponential inter-arrival products.
  /// Large means are split into chunks so the running product cannot
  /// underflow; Poisson counts are additive across independent chunks.
  std::int64_t poisson(double mean) {
    if (mean < 0.0) throw std::invalid_argument("poisson: mean must be non-negative");
    std::int64_t total = 0;
    while (mean > kPoissonChunk) {
      total += poisson_small(kPoissonChunk);
      mean -= kPoissonChunk;
    }
    return total + poisson_small(mean);
  }

 private:
  static constexpr double kPi = 3.14159265358979323846;
  static constexpr double kPoissonChunk = 200.0;

  std::int64_t poisson_small(double mean) {
    if (mean <= 0.0) return 0;
    const double limit = std::exp(-mean);
    std::int64_t k = 0;
    double product = 1.0;
    do {
      ++k;
      product *= uniform_positive();
    } while (product > limit);
    return k - 1;
  }

  std::mt19937_64 engine_;
};

}  // namespace sapsky
