// Copyright 2026 The spiderwalk Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace spiderwalk {

/// Identifies one reproducible random stream. Identical (master_seed,
/// stream_id) pairs produce bit-identical draw sequences on every platform;
/// distinct stream_ids share no generator state.
struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;

  friend bool operator==(const SeedSpec&, const SeedSpec&) = default;
};

namespace detail {

// Bijective 64-bit finalizer (splitmix64 output stage). Being a bijection is
// what makes derive_stream injective in the child index.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace detail

/// Derives the k-th child stream. Deterministic in (seed, k), and distinct k
/// never collide for a fixed parent: every stage below is a bijection of the
/// 64-bit stream id.
inline SeedSpec derive_stream(const SeedSpec& seed, std::uint64_t k) {
  const std::uint64_t golden = 0x9E3779B97F4A7C15ull;
  std::uint64_t child =
      detail::mix64(detail::mix64(seed.stream_id) + golden * (k + 1));
  return SeedSpec{seed.master_seed, child};
}

/// Value-like generator owned by exactly one replication stream. Not thread
/// safe; move it to a worker instead of sharing it.
///
/// All transforms are fixed algorithms over mt19937_64 output (which the
/// standard pins down bit-for-bit), so streams replay identically across
/// platforms and compilers.
class Rng {
 public:
  explicit Rng(const SeedSpec& seed) {
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed.master_seed),
        static_cast<std::uint32_t>(seed.master_seed >> 32),
        static_cast<std::uint32_t>(seed.stream_id),
        static_cast<std::uint32_t>(seed.stream_id >> 32),
    };
    engine_.seed(seq);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0,1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// One fair coin flip, served from a 64-bit buffer.
  bool fair_bit() {
    if (bits_left_ == 0) {
      bit_buf_ = next_u64();
      bits_left_ = 64;
    }
    bool bit = (bit_buf_ & 1u) != 0;
    bit_buf_ >>= 1;
    --bits_left_;
    return bit;
  }

  /// Standard normal via Box-Muller. No tables, so results depend only on the
  /// draw sequence and libm log/cos/sin.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform01();  // (0,1]
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double theta = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double exponential(double rate) {
    if (!(rate > 0.0)) throw std::invalid_argument("exponential: rate must be > 0");
    return -std::log(1.0 - uniform01()) / rate;
  }

  bool bernoulli(double p) {
    if (p < 0.0 || p > 1.0) throw std::invalid_argument("bernoulli: p outside [0,1]");
    return uniform01() < p;
  }

  /// One-sided stable-1/2 (Levy) draw via U = 1/Z^2 with Z standard normal.
  /// CDF is erfc(1/sqrt(2x)).
  double levy_stable_half() {
    double z = normal();
    while (z == 0.0) z = normal();
    return 1.0 / (z * z);
  }

 private:
  std::mt19937_64 engine_;
  std::uint64_t bit_buf_ = 0;
  int bits_left_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline void validate_probability_vector(std::span<const double> probs) {
  if (probs.empty()) throw std::invalid_argument("probability vector is empty");
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw std::invalid_argument("probability entries must be >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-12)
    throw std::invalid_argument("probability vector must sum to 1");
}

/// Draws a 0-based index with probability probs[i]. Rejects non-normalized or
/// negative vectors.
inline int sample_categorical(std::span<const double> probs, Rng& rng) {
  validate_probability_vector(probs);
  double u = rng.uniform01();
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

/// Pre-validated categorical distribution for hot loops. Same draw layout as
/// sample_categorical (one uniform, cumulative scan), so kernels built on
/// either consume identical streams.
class CategoricalDist {
 public:
  explicit CategoricalDist(std::span<const double> probs) {
    validate_probability_vector(probs);
    probs_.assign(probs.begin(), probs.end());
  }

  int operator()(Rng& rng) const {
    double u = rng.uniform01();
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < probs_.size(); ++i) {
      acc += probs_[i];
      if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(probs_.size()) - 1;
  }

  std::size_t size() const { return probs_.size(); }

 private:
  std::vector<double> probs_;
};

}  // namespace spiderwalk
