// Copyright 2026 The ldp-testing Authors
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

#ifndef LDP_RNG_HPP_
#define LDP_RNG_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>
#include <stdexcept>

namespace ldp {

namespace detail {

// splitmix64 finalizer; used to turn (seed, stream id...) paths into
// well-mixed engine seeds so sibling streams are decorrelated.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_key(std::uint64_t key, std::uint64_t id) {
  return mix64(key ^ mix64(id + 0x632be59bd9b4e019ULL));
}

}  // namespace detail

// Seeded random stream. Streams are derived from a master seed and a path of
// ids; derivation depends only on the key, never on consumed state, so a
// trial's stream is identical under any parallel schedule.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(detail::mix64(seed)), engine_(key_) {}

  static Rng from_path(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t key = detail::mix64(master);
    for (std::uint64_t id : path) key = detail::mix_key(key, id);
    Rng r(0);
    r.key_ = key;
    r.engine_.seed(key);
    return r;
  }

  // Child stream keyed by id; independent of how much this stream was used.
  Rng derive(std::uint64_t id) const {
    Rng r(0);
    r.key_ = detail::mix_key(key_, id);
    r.engine_.seed(r.key_);
    return r;
  }

  std::uint64_t bits() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  std::int64_t uniform_int(std::int64_t n) {
    if (n <= 0) throw std::invalid_argument("uniform_int: n must be positive");
    return static_cast<std::int64_t>(unit() * static_cast<double>(n)) % n;
  }

  bool bernoulli(double p) { return unit() < p; }

  // +1 with probability p, else -1.
  int sign_bernoulli(double p) { return unit() < p ? 1 : -1; }

  std::int64_t binomial(std::int64_t n, double p) {
    if (n < 0) throw std::invalid_argument("binomial: n must be nonnegative");
    if (n == 0 || p <= 0.0) return 0;
    if (p >= 1.0) return n;
    std::binomial_distribution<std::int64_t> dist(n, p);
    return dist(engine_);
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::uint64_t key_;
  std::mt19937_64 engine_;
};

}  // namespace ldp

#endif  // LDP_RNG_HPP_
