#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "lpsketch/common.hpp"
#include "lpsketch/l0_sampler.hpp"
#include "lpsketch/lp_sampler.hpp"
#include "lpsketch/sparse_recovery.hpp"

namespace lpsketch {

struct DupResult {
  enum class Kind { kDuplicate, kNoDuplicate, kFail };
  Kind kind = Kind::kFail;
  std::uint64_t index = 0;
};

/// Knobs for the duplicate finders. The internal L1 samplers run at
/// relative error and per-sampler failure rate 1/2, so they tolerate much
/// leaner norm sketches than the general-purpose defaults.
struct DupOptions {
  bool literal_baseline = false;  ///< feed the n (i,-1) updates one by one
  unsigned norm_rows_per_log = 4;
  std::uint64_t deficit_cap = 64;  ///< cap on -sum(x_i) in the update-stream form
};

namespace detail {

inline void check_symbols(std::span<const std::uint64_t> stream, std::uint64_t n,
                          std::size_t expected_length) {
  if (stream.size() != expected_length) {
    throw StreamFormatError("stream length does not match the declared regime");
  }
  for (std::uint64_t a : stream) {
    if (a == 0 || a > n) throw StreamFormatError("stream symbol outside [1,n]");
  }
}

inline LpSampler make_half_error_l1(std::uint64_t n, std::uint64_t seed,
                                    const DupOptions& opts) {
  SamplerTuning tuning;
  tuning.norm_rows_per_log = opts.norm_rows_per_log;
  return LpSampler(1.0, 0.5, 0.5, n, seed, tuning);
}

inline void install_baseline(LpSampler& sampler, const DupOptions& opts) {
  if (opts.literal_baseline) {
    for (std::uint64_t i = 1; i <= sampler.config().n; ++i) sampler.update(i, -1.0);
  } else {
    sampler.prime_all_minus_one();
  }
}

inline unsigned repetitions_for(double delta, double per_round_success) {
  double reps = std::log(delta) / std::log(1.0 - per_round_success);
  return std::max(1u, static_cast<unsigned>(std::ceil(reps)));
}

}  // namespace detail

/// Duplicate finding in a stream of exactly n+1 symbols over [1,n]; a
/// duplicate always exists by pigeonhole. Builds x_i = occurrences(i) - 1
/// and looks for a positively-estimated L1 sample across independent
/// half-error samplers. Returns FAIL with probability at most delta; a
/// returned non-duplicate requires a sign error, which has low probability.
inline DupResult find_duplicate_full(std::span<const std::uint64_t> stream, std::uint64_t n,
                                     double delta, std::uint64_t seed, DupOptions opts = {}) {
  detail::check_symbols(stream, n, static_cast<std::size_t>(n) + 1);
  unsigned reps = detail::repetitions_for(delta, 0.25);
  for (unsigned rep = 0; rep < reps; ++rep) {
    LpSampler sampler = detail::make_half_error_l1(n, mix64(seed, 0x64757046, rep), opts);
    detail::install_baseline(sampler, opts);
    for (std::uint64_t a : stream) sampler.update(a, 1.0);
    SampleResult res = sampler.sample();
    if (res.accepted && res.estimate > 0.0) return {DupResult::Kind::kDuplicate, res.index};
  }
  return {DupResult::Kind::kFail, 0};
}

/// Duplicate finding in a stream of n-s symbols over [1,n]. Runs exact
/// sparse recovery with budget 5s alongside the samplers: when recovery
/// returns the vector the answer is exact (including NO-DUPLICATE),
/// otherwise the sampler path answers as in the full-length case.
inline DupResult find_duplicate_short(std::span<const std::uint64_t> stream, std::uint64_t n,
                                      std::uint64_t s, double delta, std::uint64_t seed,
                                      DupOptions opts = {}) {
  if (s > n) throw StreamFormatError("s exceeds alphabet size");
  detail::check_symbols(stream, n, static_cast<std::size_t>(n - s));

  SparseRecovery recovery(mix64(seed, 0x64757053), n, 5 * s);
  for (std::uint64_t i = 1; i <= n; ++i) recovery.update(i, -1);
  for (std::uint64_t a : stream) recovery.update(a, 1);
  if (auto vec = recovery.recover()) {
    for (const auto& [idx, value] : *vec) {
      if (value > 0) return {DupResult::Kind::kDuplicate, idx};
    }
    return {DupResult::Kind::kNoDuplicate, 0};
  }

  unsigned reps = detail::repetitions_for(delta, 0.1);
  for (unsigned rep = 0; rep < reps; ++rep) {
    LpSampler sampler = detail::make_half_error_l1(n, mix64(seed, 0x64757054, rep), opts);
    detail::install_baseline(sampler, opts);
    for (std::uint64_t a : stream) sampler.update(a, 1.0);
    SampleResult res = sampler.sample();
    if (res.accepted && res.estimate > 0.0) return {DupResult::Kind::kDuplicate, res.index};
  }
  return {DupResult::Kind::kFail, 0};
}

/// Duplicate finding in a stream of n+s symbols, s >= 1. When n/s < log2 n,
/// uniformly sampled positions are checked for a later reappearance (each
/// sampled item repeats later with probability at least s/(n+s)); otherwise
/// the first n+1 symbols already contain a duplicate and the full-length
/// algorithm handles them.
inline DupResult find_duplicate_long(std::span<const std::uint64_t> stream, std::uint64_t n,
                                     std::uint64_t s, double delta, std::uint64_t seed,
                                     DupOptions opts = {}) {
  if (s == 0) throw StreamFormatError("long-stream regime needs s >= 1");
  detail::check_symbols(stream, n, static_cast<std::size_t>(n + s));

  double ratio = static_cast<double>(n) / static_cast<double>(s);
  if (!(ratio < std::log2(static_cast<double>(n)))) {
    return find_duplicate_full(stream.first(static_cast<std::size_t>(n) + 1), n, delta, seed,
                               opts);
  }

  std::uint64_t per_block = 4 * static_cast<std::uint64_t>(std::ceil(ratio));
  std::uint64_t blocks =
      std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(std::log2(1.0 / delta))));
  std::uint64_t draws = per_block * blocks;

  SeedStream rng(mix64(seed, 0x6475704c));
  std::vector<std::uint8_t> sampled(stream.size(), 0);
  for (std::uint64_t d = 0; d < draws; ++d) sampled[rng.next_below(stream.size())] = 1;

  std::unordered_map<std::uint64_t, std::size_t> first_sampled_at;
  for (std::size_t pos = 0; pos < stream.size(); ++pos) {
    std::uint64_t a = stream[pos];
    auto it = first_sampled_at.find(a);
    if (it != first_sampled_at.end() && it->second < pos) {
      return {DupResult::Kind::kDuplicate, a};
    }
    if (sampled[pos]) first_sampled_at.try_emplace(a, pos);
  }
  return {DupResult::Kind::kFail, 0};
}

/// Positive-coordinate search for a general update stream over Z^n.
/// With sum(x_i) > 0 a positive coordinate exists and the sampler path
/// finds one; with sum(x_i) <= 0 the short-stream logic applies with
/// deficit s = -sum(x_i), which must stay within opts.deficit_cap (the
/// recovery structure is sized as 5*cap up front).
inline DupResult find_positive_coordinate(
    std::span<const std::pair<std::uint64_t, std::int64_t>> updates, std::uint64_t n,
    double delta, std::uint64_t seed, DupOptions opts = {}) {
  SparseRecovery recovery(mix64(seed, 0x706f7331), n, 5 * opts.deficit_cap);
  unsigned reps = detail::repetitions_for(delta, 0.1);
  std::vector<LpSampler> samplers;
  samplers.reserve(reps);
  for (unsigned rep = 0; rep < reps; ++rep) {
    samplers.push_back(detail::make_half_error_l1(n, mix64(seed, 0x706f7332, rep), opts));
  }

  std::int64_t sum = 0;
  for (const auto& [i, delta_i] : updates) {
    if (i == 0 || i > n) throw StreamFormatError("update index outside [1,n]");
    sum += delta_i;
    recovery.update(i, delta_i);
    for (auto& sampler : samplers) sampler.update(i, static_cast<double>(delta_i));
  }

  if (sum <= 0) {
    std::uint64_t deficit = static_cast<std::uint64_t>(-sum);
    if (deficit > opts.deficit_cap) {
      throw std::domain_error("coordinate deficit exceeds the configured cap");
    }
    if (auto vec = recovery.recover()) {
      for (const auto& [idx, value] : *vec) {
        if (value > 0) return {DupResult::Kind::kDuplicate, idx};
      }
      return {DupResult::Kind::kNoDuplicate, 0};
    }
  }
  for (const auto& sampler : samplers) {
    SampleResult res = sampler.sample();
    if (res.accepted && res.estimate > 0.0) return {DupResult::Kind::kDuplicate, res.index};
  }
  return {DupResult::Kind::kFail, 0};
}

/// Outcome of a universal-relation protocol run: an index where the two bit
/// strings differ, plus transcript byte accounting.
struct URResult {
  bool found = false;
  std::uint64_t index = 0;
  std::size_t transcript_bytes = 0;
  std::size_t round1_bytes = 0;
  std::size_t round2_bytes = 0;
};

/// One-round universal relation: Alice feeds +x into an L0 sampler built
/// from the shared seed and ships its state; Bob subtracts y and samples a
/// coordinate of x - y. Equal inputs make every level recover zero, so the
/// protocol fails cleanly on the promise violation.
inline URResult ur_one_round(const std::vector<std::uint8_t>& x,
                             const std::vector<std::uint8_t>& y, double delta,
                             std::uint64_t seed) {
  if (x.size() != y.size() || x.empty()) {
    throw std::invalid_argument("universal relation needs equal nonempty strings");
  }
  std::uint64_t n = x.size();
  L0Sampler alice(mix64(seed, 0x75723172), n, delta);
  for (std::uint64_t i = 1; i <= n; ++i) {
    if (x[i - 1]) alice.update(i, 1);
  }
  std::vector<std::uint8_t> message = alice.serialize();

  L0Sampler bob = L0Sampler::deserialize(message);
  for (std::uint64_t i = 1; i <= n; ++i) {
    if (y[i - 1]) bob.update(i, -1);
  }
  L0Sample sample = bob.sample();

  URResult out;
  out.transcript_bytes = out.round1_bytes = message.size();
  if (sample.verdict == L0Verdict::kIndex) {
    out.found = true;
    out.index = sample.index;
  }
  return out;
}

/// Two-round universal relation. Round 1: Alice sends, per level subset, a
/// small pack of GF(2) inner-product probes of x restricted to the subset;
/// Bob XORs against his own probes of y and replies with the smallest
/// subset showing a difference. Round 2: Alice sends that level's exact
/// recovery state for x; Bob subtracts y and decodes a differing index.
inline URResult ur_two_round(const std::vector<std::uint8_t>& x,
                             const std::vector<std::uint8_t>& y, double delta,
                             std::uint64_t seed) {
  if (x.size() != y.size() || x.empty()) {
    throw std::invalid_argument("universal relation needs equal nonempty strings");
  }
  std::uint64_t n = x.size();
  LevelSubsets subsets(mix64(seed, 0x75723272), n);
  unsigned levels = subsets.level_count();
  unsigned probes = 3 + std::max(
      1u, static_cast<unsigned>(std::ceil(std::log2(1.0 / delta))));

  auto probe_bit = [&](const std::vector<std::uint8_t>& v, unsigned k, unsigned t) {
    std::uint64_t parity = 0;
    for (std::uint64_t i = 1; i <= n; ++i) {
      if (v[i - 1] && subsets.member(k, i)) {
        parity ^= mix64(seed, (static_cast<std::uint64_t>(k) << 32) | t, i) & 1;
      }
    }
    return static_cast<std::uint8_t>(parity);
  };

  URResult out;
  out.round1_bytes = (static_cast<std::size_t>(levels) * probes + 7) / 8 + 2;

  // Bob scans subsets smallest-first; the full set (level 0) goes last.
  int chosen = -1;
  for (unsigned k = 1; k <= levels && chosen < 0; ++k) {
    unsigned level = k == levels ? 0 : k;
    for (unsigned t = 0; t < probes; ++t) {
      if (probe_bit(x, level, t) != probe_bit(y, level, t)) {
        chosen = static_cast<int>(level);
        break;
      }
    }
  }
  if (chosen < 0) {
    out.transcript_bytes = out.round1_bytes;
    return out;
  }

  std::uint64_t s = L0Sampler::sparsity_for(delta);
  auto restricted_state = [&](const std::vector<std::uint8_t>& v) {
    SparseRecovery state(mix64(seed, 0x75723273, static_cast<std::uint64_t>(chosen)), n, s);
    for (std::uint64_t i = 1; i <= n; ++i) {
      if (v[i - 1] && subsets.member(static_cast<unsigned>(chosen), i)) state.update(i, 1);
    }
    return state;
  };

  SparseRecovery alice = restricted_state(x);
  std::vector<std::uint8_t> message = alice.serialize();
  out.round2_bytes = message.size();
  out.transcript_bytes = out.round1_bytes + out.round2_bytes;

  SparseRecovery bob = restricted_state(y);
  bob.negate();
  bob.merge(SparseRecovery::deserialize(message));
  auto diff = bob.recover();
  if (!diff || diff->empty()) return out;
  SeedStream pick(mix64(seed, 0x75723274));
  out.found = true;
  out.index = (*diff)[pick.next_below(diff->size())].first;
  return out;
}

/// Wraps a universal-relation protocol so that every differing index is
/// returned with the same probability: both parties permute the coordinates
/// with a shared random permutation and flip a shared random subset of bits
/// before running the inner protocol, then map the reported index back.
/// The transcript is untouched.
template <typename Protocol>
URResult ur_symmetrized(Protocol&& inner, const std::vector<std::uint8_t>& x,
                        const std::vector<std::uint8_t>& y, std::uint64_t seed) {
  if (x.size() != y.size() || x.empty()) {
    throw std::invalid_argument("universal relation needs equal nonempty strings");
  }
  std::uint64_t n = x.size();
  SeedStream rng(mix64(seed, 0x73796d6d));
  std::vector<std::uint64_t> perm(n);
  for (std::uint64_t j = 0; j < n; ++j) perm[j] = j;
  for (std::uint64_t j = n; j > 1; --j) {
    std::swap(perm[j - 1], perm[rng.next_below(j)]);
  }
  std::vector<std::uint8_t> flips(n);
  for (auto& f : flips) f = static_cast<std::uint8_t>(rng.next() & 1);

  std::vector<std::uint8_t> xp(n), yp(n);
  for (std::uint64_t j = 0; j < n; ++j) {
    xp[j] = x[perm[j]] ^ flips[j];
    yp[j] = y[perm[j]] ^ flips[j];
  }
  URResult res = inner(xp, yp);
  if (res.found) res.index = perm[res.index - 1] + 1;
  return res;
}

}  // namespace lpsketch
