// Copyright 2026 The meanking Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Key distribution over blocks of n retrodiction rounds.
//
// Per block: Bob picks n bases at random and measures the particles he
// receives; Alice measures her POVM on each returned particle together with
// her stored half; only then are Bob's bases revealed and Alice infers
// i' = x(b). A random subset of positions is compared publicly and the run
// is accepted iff none of them disagree.
//
// The honest path samples round by round from the single-round strategy. With
// an attack, the whole block is simulated through the attack model.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "meanking/attack.hpp"
#include "meanking/qmath.hpp"
#include "meanking/retrodiction.hpp"

namespace meanking {

/// Counter-based generator: every (seed, stream) pair gives an independent
/// SplitMix64 sequence, so rounds can be simulated in any order.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t seed, std::uint64_t stream) : state_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::size_t below(std::size_t n) {
    const auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return std::min(k, n - 1);
  }

  /// Index drawn with probability proportional to weights (all >= 0).
  std::size_t sample(std::span<const double> weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    const double u = uniform() * total;
    double acc = 0.0;
    std::size_t last = 0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (weights[k] <= 0.0) continue;
      acc += weights[k];
      last = k;
      if (u < acc) return k;
    }
    return last;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

/// Stream used for choosing the test positions; block r uses stream r.
inline constexpr std::uint64_t kSiftStream = ~std::uint64_t{0};

class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProtocolConfig {
  std::size_t d = 2;
  std::size_t n = 1;
  std::size_t rounds = 1;
  double test_fraction = 0.0;
  std::uint64_t seed = 0;

  std::size_t total_instances() const { return rounds * n; }
};

inline void validate_config(const ProtocolConfig& cfg) {
  if (cfg.d < 2) throw std::invalid_argument("protocol: d must be at least 2");
  if (cfg.n < 1) throw std::invalid_argument("protocol: n must be at least 1");
  if (cfg.rounds < 1) throw std::invalid_argument("protocol: rounds must be at least 1");
  if (!(cfg.test_fraction >= 0.0 && cfg.test_fraction <= 1.0)) {
    throw std::invalid_argument("protocol: test_fraction must lie in [0, 1]");
  }
}

struct RoundRecord {
  std::size_t b = 0;
  std::size_t i = 0;
  GuessingFunction x;
  std::size_t i_prime = 0;

  bool agrees() const { return i == i_prime; }
};

struct Transcript {
  ProtocolConfig config;
  std::vector<RoundRecord> records;
  std::vector<std::size_t> test_indices;
  bool accepted = false;
};

struct KeyPair {
  std::string alice_key;
  std::string bob_key;
};

struct SiftResult {
  bool accepted = false;
  KeyPair keys;
  std::vector<std::size_t> test_indices;
};

inline double agreement_rate(const Transcript& t) {
  if (t.records.empty()) return 1.0;
  const auto agree = std::count_if(t.records.begin(), t.records.end(), [](const RoundRecord& r) { return r.agrees(); });
  return static_cast<double>(agree) / static_cast<double>(t.records.size());
}

inline char key_digit(std::size_t v) { return "0123456789abcdefghijklmnopqrstuvwxyz"[v % 36]; }

/// Picks ceil(test_fraction * rounds * n) positions with the sift stream,
/// accepts iff all of them agree, and builds both keys from the rest.
inline SiftResult sift_and_test(const Transcript& t) {
  const std::size_t total = t.records.size();
  const auto count = static_cast<std::size_t>(
      std::ceil(t.config.test_fraction * static_cast<double>(total) - 1e-9));
  const std::size_t m = std::min(count, total);
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  StreamRng rng(t.config.seed, kSiftStream);
  for (std::size_t k = 0; k < m; ++k) std::swap(order[k], order[k + rng.below(total - k)]);
  SiftResult out;
  out.test_indices.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
  std::sort(out.test_indices.begin(), out.test_indices.end());
  out.accepted = std::all_of(out.test_indices.begin(), out.test_indices.end(),
                             [&](std::size_t k) { return t.records[k].agrees(); });
  std::vector<bool> tested(total, false);
  for (auto k : out.test_indices) tested[k] = true;
  for (std::size_t k = 0; k < total; ++k) {
    if (tested[k]) continue;
    out.keys.alice_key.push_back(key_digit(t.records[k].i_prime));
    out.keys.bob_key.push_back(key_digit(t.records[k].i));
  }
  return out;
}

namespace detail {

inline constexpr double kNormalisationTol = 1e-6;

inline void check_normalised(std::span<const double> probs, const char* what) {
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (std::abs(total - 1.0) > kNormalisationTol) {
    throw ProtocolError(std::string(what) + " distribution sums to " + std::to_string(total));
  }
}

// Single-round sampling tables for the honest source.
class HonestTables {
 public:
  explicit HonestTables(const Strategy& s) : s_(s) {
    const std::size_t k = s.basis_count();
    const std::size_t d = s.dim();
    const double dd = static_cast<double>(d);
    bob_.resize(k);
    alice_.resize(k * d);
    for (std::size_t b = 0; b < k; ++b) {
      for (std::size_t i = 0; i < d; ++i) {
        const CVector ph = phi_hat(s.basis_set, b, i);
        bob_[b].push_back(ph.squaredNorm());
        auto& dist = alice_[b * d + i];
        dist.resize(s.size());
        // Alice's normalised state is sqrt(d) phi_hat.
        for (std::size_t x = 0; x < s.size(); ++x) {
          dist[x] = s.weights(static_cast<Eigen::Index>(x)) * dd * std::norm(s.safe_vectors[x].eta.dot(ph));
        }
        check_normalised(dist, "Alice's outcome");
      }
      check_normalised(bob_[b], "Bob's outcome");
    }
  }

  std::span<const double> bob(std::size_t b) const { return bob_[b]; }
  std::span<const double> alice(std::size_t b, std::size_t i) const { return alice_[b * s_.dim() + i]; }

 private:
  const Strategy& s_;
  std::vector<std::vector<double>> bob_;
  std::vector<std::vector<double>> alice_;
};

// Block-level sampling tables under an attack, filled on first use.
class AttackedTables {
 public:
  AttackedTables(const ProductStrategy& ps, const AttackModel& am) : ps_(ps), am_(am) {}

  const std::vector<double>& bob(std::span<const std::size_t> bvec) {
    const std::size_t key = encode(bvec, ps_.base().basis_count());
    auto it = bob_.find(key);
    if (it != bob_.end()) return it->second;
    const BasisSet& bs = ps_.base().basis_set;
    std::vector<double> probs(ipow(am_.d, am_.n));
    std::vector<std::size_t> ivec(am_.n);
    for (std::size_t ii = 0; ii < probs.size(); ++ii) {
      decode(ii, am_.d, ivec);
      probs[ii] = detail::project_bob(am_, product_basis_vector(bs, bvec, ivec)).squaredNorm();
    }
    check_normalised(probs, "Bob's outcome");
    return bob_.emplace(key, std::move(probs)).first->second;
  }

  const std::vector<double>& alice(std::span<const std::size_t> bvec, std::span<const std::size_t> ivec) {
    const std::size_t key = encode(bvec, ps_.base().basis_count()) * ipow(am_.d, am_.n) + encode(ivec, am_.d);
    auto it = alice_.find(key);
    if (it != alice_.end()) return it->second;
    const auto st = alice_state(am_, ps_.base().basis_set, bvec, ivec);
    std::vector<double> probs(ps_.size());
    for (std::size_t x = 0; x < probs.size(); ++x) {
      const CVector eta = ps_.vector(x);
      probs[x] = std::max(0.0, ps_.weight(x) * eta.dot(st.rho * eta).real());
    }
    check_normalised(probs, "Alice's outcome");
    return alice_.emplace(key, std::move(probs)).first->second;
  }

  static std::size_t encode(std::span<const std::size_t> digits, std::size_t base) {
    std::size_t v = 0;
    for (auto dgt : digits) v = v * base + dgt;
    return v;
  }
  static void decode(std::size_t v, std::size_t base, std::vector<std::size_t>& digits) {
    for (std::size_t r = digits.size(); r-- > 0;) {
      digits[r] = v % base;
      v /= base;
    }
  }

 private:
  const ProductStrategy& ps_;
  const AttackModel& am_;
  std::map<std::size_t, std::vector<double>> bob_;
  std::map<std::size_t, std::vector<double>> alice_;
};

}  // namespace detail

/// Simulates cfg.rounds blocks of cfg.n instances. Deterministic in cfg.seed.
inline Transcript run_protocol(const ProtocolConfig& cfg, const Strategy& strategy,
                               const std::optional<AttackModel>& attack = std::nullopt) {
  validate_config(cfg);
  if (strategy.dim() != cfg.d) {
    throw DimensionError("protocol: strategy dimension " + std::to_string(strategy.dim()) +
                         " does not match d = " + std::to_string(cfg.d));
  }
  if (attack) {
    if (attack->d != cfg.d || attack->n != cfg.n) {
      throw DimensionError("protocol: attack (d=" + std::to_string(attack->d) + ", n=" + std::to_string(attack->n) +
                           ") does not match the configuration");
    }
    validate_attack(*attack);
  }

  const std::size_t k = strategy.basis_count();
  const std::size_t n = cfg.n;
  Transcript t;
  t.config = cfg;
  t.records.reserve(cfg.total_instances());

  std::optional<detail::HonestTables> honest;
  std::optional<ProductStrategy> ps;
  std::optional<detail::AttackedTables> attacked;
  if (attack) {
    ps.emplace(strategy, n);
    attacked.emplace(*ps, *attack);
  } else {
    honest.emplace(strategy);
  }

  std::vector<std::size_t> bvec(n), ivec(n), xvec(n);
  for (std::size_t r = 0; r < cfg.rounds; ++r) {
    StreamRng rng(cfg.seed, r);
    // Bob's secret choices and outcomes.
    for (std::size_t l = 0; l < n; ++l) bvec[l] = rng.below(k);
    if (attack) {
      detail::AttackedTables::decode(rng.sample(attacked->bob(bvec)), cfg.d, ivec);
    } else {
      for (std::size_t l = 0; l < n; ++l) ivec[l] = rng.sample(honest->bob(bvec[l]));
    }
    // Alice measures every returned particle before any basis is announced.
    if (attack) {
      const std::size_t xi = rng.sample(attacked->alice(bvec, ivec));
      xvec = ps->components(xi);
    } else {
      for (std::size_t l = 0; l < n; ++l) xvec[l] = rng.sample(honest->alice(bvec[l], ivec[l]));
    }
    // Bob announces his bases; Alice infers her digits.
    for (std::size_t l = 0; l < n; ++l) {
      const GuessingFunction& x = strategy.safe_vectors[xvec[l]].x;
      t.records.push_back(RoundRecord{bvec[l], ivec[l], x, x(bvec[l])});
    }
  }

  const auto sift = sift_and_test(t);
  t.test_indices = sift.test_indices;
  t.accepted = sift.accepted;
  return t;
}

}  // namespace meanking
