#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lpsketch/common.hpp"
#include "lpsketch/sparse_recovery.hpp"

namespace lpsketch {

/// Geometrically-sized pseudo-random index subsets I_0, ..., I_{K-1} of [n]:
/// I_0 is the full set, and for k >= 1 each i belongs to I_k independently
/// with probability min(1, 2^k/n), so |I_k| concentrates around 2^k.
/// Membership is a pure function of (seed, k, i).
class LevelSubsets {
 public:
  LevelSubsets(std::uint64_t seed, std::uint64_t n)
      : seed_(mix64(seed, 0x6c76736274)), n_(n), levels_(log2_floor(n) + 1) {
    if (n == 0) throw std::invalid_argument("level subsets need n >= 1");
  }

  bool member(unsigned k, std::uint64_t i) const {
    if (k == 0) return true;
    unsigned __int128 threshold = (static_cast<unsigned __int128>(1) << (64 + k)) / n_;
    if (threshold >> 64 != 0) return true;
    return mix64(seed_, k, i) < static_cast<std::uint64_t>(threshold);
  }

  unsigned level_count() const { return levels_; }
  std::uint64_t dimension() const { return n_; }

 private:
  std::uint64_t seed_;
  std::uint64_t n_;
  unsigned levels_;
};

enum class L0Verdict { kIndex, kZero, kFail };

struct L0Sample {
  L0Verdict verdict = L0Verdict::kFail;
  std::uint64_t index = 0;
};

/// Per-level recovery outcome, reported by probe_levels() so callers can
/// separate subset-selection failures from recovery failures.
enum class L0LevelOutcome { kZeroVector, kDense, kRecovered };

/// Zero relative error L0 sampler: a uniform sample from the support of x.
///
/// Runs exact sparse recovery with budget s = ceil(4 log2(1/delta)) on x
/// restricted to each level subset; sampling scans the levels, takes the
/// first nonzero exact recovery and returns a uniformly chosen nonzero
/// coordinate of it. Returns ZERO when the full-set level certifies x = 0
/// and FAIL when every level yields zero or DENSE (probability at most
/// delta plus the recovery error terms).
class L0Sampler {
 public:
  struct Options {
    bool full_set_first = true;  ///< scan I_0 before the sparser levels
  };

  L0Sampler(std::uint64_t seed, std::uint64_t n, double delta)
      : L0Sampler(seed, n, delta, Options()) {}

  L0Sampler(std::uint64_t seed, std::uint64_t n, double delta, Options options)
      : seed_(seed),
        n_(n),
        delta_(delta),
        options_(options),
        sparsity_(sparsity_for(delta)),
        subsets_(mix64(seed, 0x6c306c76), n) {
    if (delta <= 0.0 || delta >= 1.0) throw std::invalid_argument("delta must lie in (0,1)");
    levels_.reserve(subsets_.level_count());
    for (unsigned k = 0; k < subsets_.level_count(); ++k) {
      levels_.emplace_back(mix64(seed, 0x6c306c76, 1000 + k), n, sparsity_);
    }
  }

  void update(std::uint64_t i, std::int64_t delta) {
    if (i == 0 || i > n_) throw std::out_of_range("index outside [1,n]");
    for (unsigned k = 0; k < levels_.size(); ++k) {
      if (subsets_.member(k, i)) levels_[k].update(i, delta);
    }
  }

  L0Sample sample() const {
    SeedStream pick(mix64(seed_, 0x7069636b));
    L0Sample out;
    for (unsigned k : scan_order()) {
      auto recovered = levels_[k].recover();
      if (!recovered) continue;
      if (recovered->empty()) {
        if (k == 0) {
          out.verdict = L0Verdict::kZero;
          return out;
        }
        continue;
      }
      out.verdict = L0Verdict::kIndex;
      out.index = (*recovered)[pick.next_below(recovered->size())].first;
      return out;
    }
    return out;
  }

  std::vector<L0LevelOutcome> probe_levels() const {
    std::vector<L0LevelOutcome> out;
    out.reserve(levels_.size());
    for (const auto& level : levels_) {
      auto recovered = level.recover();
      if (!recovered) {
        out.push_back(L0LevelOutcome::kDense);
      } else {
        out.push_back(recovered->empty() ? L0LevelOutcome::kZeroVector
                                         : L0LevelOutcome::kRecovered);
      }
    }
    return out;
  }

  const LevelSubsets& subsets() const { return subsets_; }
  const SparseRecovery& level_state(unsigned k) const { return levels_.at(k); }
  unsigned level_count() const { return static_cast<unsigned>(levels_.size()); }
  std::uint64_t sparsity_budget() const { return sparsity_; }
  std::uint64_t dimension() const { return n_; }

  std::size_t counters_used() const {
    std::size_t total = 0;
    for (const auto& level : levels_) total += level.counters_used();
    return total;
  }

  static std::uint64_t sparsity_for(double delta) {
    return std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::ceil(4.0 * std::log2(1.0 / delta))));
  }

  static constexpr std::uint32_t kBlobMagic = 0x3153304c;  // "L0S1"

  std::vector<std::uint8_t> serialize() const {
    ByteWriter w;
    w.u32(kBlobMagic);
    w.u32(1);
    w.u64(seed_);
    w.u64(n_);
    w.f64(delta_);
    w.u8(options_.full_set_first ? 1 : 0);
    for (const auto& level : levels_) level.serialize(w);
    return w.take();
  }

  static L0Sampler deserialize(std::span<const std::uint8_t> blob) {
    ByteReader r(blob);
    if (r.u32() != kBlobMagic) throw std::runtime_error("not an L0 sampler blob");
    if (r.u32() != 1) throw std::runtime_error("unsupported L0 sampler blob version");
    std::uint64_t seed = r.u64();
    std::uint64_t n = r.u64();
    double delta = r.f64();
    Options options;
    options.full_set_first = r.u8() != 0;
    L0Sampler sampler(seed, n, delta, options);
    sampler.levels_.clear();
    for (unsigned k = 0; k < sampler.subsets_.level_count(); ++k) {
      sampler.levels_.push_back(SparseRecovery::deserialize(r));
    }
    return sampler;
  }

 private:
  std::vector<unsigned> scan_order() const {
    std::vector<unsigned> order;
    order.reserve(levels_.size());
    if (options_.full_set_first) {
      for (unsigned k = 0; k < levels_.size(); ++k) order.push_back(k);
    } else {
      for (unsigned k = 1; k < levels_.size(); ++k) order.push_back(k);
      order.push_back(0);
    }
    return order;
  }

  std::uint64_t seed_;
  std::uint64_t n_;
  double delta_;
  Options options_;
  std::uint64_t sparsity_;
  LevelSubsets subsets_;
  std::vector<SparseRecovery> levels_;
};

}  // namespace lpsketch
