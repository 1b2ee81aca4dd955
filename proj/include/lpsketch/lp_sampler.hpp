#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lpsketch/common.hpp"
#include "lpsketch/countsketch.hpp"
#include "lpsketch/hashing.hpp"
#include "lpsketch/normest.hpp"

namespace lpsketch {

/// Tunable constants behind the big-O parameter choices. Defaults are sized
/// so the statistical acceptance suite passes at desk scale.
struct SamplerTuning {
  unsigned clamp_exponent = 2;      ///< c: declare failure when t_i < n^-c
  unsigned cs_rows_per_log = 4;     ///< count-sketch rows per log2 n
  unsigned cm_const = 40;           ///< multiplier for m when p != 1
  unsigned ck_const = 4;            ///< multiplier for k = m when p = 1
  unsigned norm_rows_per_log = 12;  ///< rows per log2 n in each norm sketch
};

/// Derived per-sampler parameters for a given (p, eps, delta, n).
struct SamplerConfig {
  double p = 1.0;
  double eps = 0.1;
  double delta = 0.1;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
  SamplerTuning tuning;

  unsigned scaling_independence = 0;  ///< k
  std::uint64_t cs_sparsity = 0;      ///< m
  double beta = 0.0;                  ///< eps^(1-1/p)
  double accept_factor = 0.0;         ///< eps^(-1/p)
  unsigned repetitions = 0;           ///< v
  bool dense_storage_advisable = false;

  static SamplerConfig derive(double p, double eps, double delta, std::uint64_t n,
                              std::uint64_t seed, SamplerTuning tuning = {}) {
    if (p >= 2.0) {
      throw std::invalid_argument("p >= 2 is not supported by precision sampling");
    }
    if (p <= 0.0) throw std::invalid_argument("p must lie in (0,2)");
    if (eps <= 0.0 || eps >= 1.0) throw std::invalid_argument("eps must lie in (0,1)");
    if (delta <= 0.0 || delta >= 1.0) throw std::invalid_argument("delta must lie in (0,1)");
    if (n == 0) throw std::invalid_argument("dimension must be positive");
    SamplerConfig cfg;
    cfg.p = p;
    cfg.eps = eps;
    cfg.delta = delta;
    cfg.n = n;
    cfg.seed = seed;
    cfg.tuning = tuning;
    if (p == 1.0) {
      auto log_inv_eps = static_cast<std::uint64_t>(std::ceil(std::log2(1.0 / eps)));
      cfg.scaling_independence = static_cast<unsigned>(tuning.ck_const * log_inv_eps);
      cfg.cs_sparsity = tuning.ck_const * log_inv_eps;
    } else {
      cfg.scaling_independence =
          static_cast<unsigned>(10.0 * std::ceil(1.0 / std::abs(p - 1.0)));
      cfg.cs_sparsity = static_cast<std::uint64_t>(
          tuning.cm_const * std::ceil(std::pow(eps, -std::max(0.0, p - 1.0))));
    }
    cfg.scaling_independence = std::max(cfg.scaling_independence, 2u);
    cfg.cs_sparsity = std::max<std::uint64_t>(cfg.cs_sparsity, 1);
    cfg.beta = std::pow(eps, 1.0 - 1.0 / p);
    cfg.accept_factor = std::pow(eps, -1.0 / p);
    cfg.repetitions = static_cast<unsigned>(
        std::ceil(std::pow(2.0, p) * std::log(1.0 / delta) / eps));
    cfg.repetitions = std::max(cfg.repetitions, 1u);
    cfg.dense_storage_advisable = cfg.repetitions >= n;
    return cfg;
  }
};

enum class FailReason {
  kNone,
  kClampedScale,    ///< some drawn t_i fell below n^-c
  kZeroSketch,      ///< every sketch in the round is identically zero
  kTailTooLarge,    ///< s > beta * sqrt(m) * r
  kBelowThreshold,  ///< |z*_max| < eps^(-1/p) * r
};

struct SampleResult {
  bool accepted = false;
  std::uint64_t index = 0;
  double estimate = 0.0;
  FailReason reason = FailReason::kNone;
};

/// One-pass approximate Lp sampler for p in (0,2) on turnstile streams,
/// with relative error and per-round success probability Theta(eps).
///
/// Each of the v = ceil(2^p ln(1/delta)/eps) rounds scales the input
/// coordinate-wise by t_i^(-1/p) for k-wise independent uniform t_i and
/// keeps three linear sketches: a count-sketch of the scaled vector z, an
/// Lp norm sketch of x and an L2 norm sketch of z. Recovery accepts the
/// largest count-sketch estimate when the tail and threshold checks pass;
/// the wrapper returns the first non-failing round, so the overall failure
/// probability is at most delta.
class LpSampler {
 public:
  LpSampler(double p, double eps, double delta, std::uint64_t n, std::uint64_t seed,
            SamplerTuning tuning = {})
      : LpSampler(SamplerConfig::derive(p, eps, delta, n, seed, tuning)) {}

  explicit LpSampler(const SamplerConfig& cfg) : cfg_(cfg) {
    rounds_.reserve(cfg_.repetitions);
    for (unsigned r = 0; r < cfg_.repetitions; ++r) {
      rounds_.emplace_back(cfg_, mix64(cfg_.seed, 0x726f756e, r));
    }
  }

  const SamplerConfig& config() const { return cfg_; }
  unsigned round_count() const { return cfg_.repetitions; }

  void update(std::uint64_t i, double delta) {
    double bound = static_cast<double>(cfg_.n) * static_cast<double>(cfg_.n);
    if (std::abs(delta) > bound) {
      throw std::overflow_error("update magnitude exceeds bound M");
    }
    for (Round& round : rounds_) round.update(cfg_, i, delta);
  }

  /// Feeds the implicit (i,-1) update for every i in [n]; equivalent to n
  /// explicit updates but laid out round-major. Used by the duplicate
  /// finders to install the all-minus-one baseline.
  void prime_all_minus_one() {
    for (Round& round : rounds_) {
      for (std::uint64_t i = 1; i <= cfg_.n; ++i) round.update(cfg_, i, -1.0);
    }
  }

  SampleResult sample_round(unsigned r) const { return rounds_.at(r).sample(cfg_); }

  std::vector<SampleResult> sample_all_rounds() const {
    std::vector<SampleResult> out;
    out.reserve(rounds_.size());
    for (const Round& round : rounds_) out.push_back(round.sample(cfg_));
    return out;
  }

  /// First non-failing round, or FAIL (with the last round's reason) when
  /// every round fails.
  SampleResult sample() const {
    SampleResult last;
    for (const Round& round : rounds_) {
      last = round.sample(cfg_);
      if (last.accepted) return last;
    }
    return last;
  }

  std::size_t counters_used() const {
    std::size_t total = 0;
    for (const Round& round : rounds_) total += round.counters_used();
    return total;
  }

  static constexpr std::uint32_t kBlobMagic = 0x3157504c;  // "LPW1"

  std::vector<std::uint8_t> serialize() const {
    ByteWriter w;
    w.u32(kBlobMagic);
    w.u32(1);
    w.f64(cfg_.p);
    w.f64(cfg_.eps);
    w.f64(cfg_.delta);
    w.u64(cfg_.n);
    w.u64(cfg_.seed);
    w.u32(cfg_.tuning.clamp_exponent);
    w.u32(cfg_.tuning.cs_rows_per_log);
    w.u32(cfg_.tuning.cm_const);
    w.u32(cfg_.tuning.ck_const);
    w.u32(cfg_.tuning.norm_rows_per_log);
    for (const Round& round : rounds_) round.serialize(w);
    return w.take();
  }

  static LpSampler deserialize(std::span<const std::uint8_t> blob) {
    ByteReader r(blob);
    if (r.u32() != kBlobMagic) throw std::runtime_error("not an Lp sampler blob");
    if (r.u32() != 1) throw std::runtime_error("unsupported Lp sampler blob version");
    double p = r.f64();
    double eps = r.f64();
    double delta = r.f64();
    std::uint64_t n = r.u64();
    std::uint64_t seed = r.u64();
    SamplerTuning tuning;
    tuning.clamp_exponent = r.u32();
    tuning.cs_rows_per_log = r.u32();
    tuning.cm_const = r.u32();
    tuning.ck_const = r.u32();
    tuning.norm_rows_per_log = r.u32();
    LpSampler sampler(p, eps, delta, n, seed, tuning);
    for (Round& round : sampler.rounds_) round.deserialize(r);
    return sampler;
  }

 private:
  struct Round {
    Round(const SamplerConfig& cfg, std::uint64_t seed)
        : scaling(mix64(seed, 1), cfg.n, cfg.scaling_independence, cfg.tuning.clamp_exponent),
          zsketch(mix64(seed, 2), cfg.n, cfg.cs_sparsity, cfg.tuning.cs_rows_per_log, 0),
          xnorm(mix64(seed, 3), cfg.n, cfg.p, cfg.tuning.norm_rows_per_log),
          znorm(mix64(seed, 4), cfg.n, 2.0, cfg.tuning.norm_rows_per_log) {}

    void update(const SamplerConfig& cfg, std::uint64_t i, double delta) {
      ScalingDraw draw = scaling.draw(i);
      if (draw.clamped) clamped = true;
      double scaled = delta * std::pow(draw.t, -1.0 / cfg.p);
      zsketch.update(i, scaled);
      znorm.update(i, scaled);
      xnorm.update(i, delta);
    }

    SampleResult sample(const SamplerConfig& cfg) const {
      SampleResult res;
      if (clamped) {
        res.reason = FailReason::kClampedScale;
        return res;
      }
      double r = xnorm.estimate();
      if (r == 0.0) {
        res.reason = FailReason::kZeroSketch;
        return res;
      }
      SparseApprox top = zsketch.top_m();
      double s = znorm.estimate_diff(top.entries);
      if (s > cfg.beta * std::sqrt(static_cast<double>(cfg.cs_sparsity)) * r) {
        res.reason = FailReason::kTailTooLarge;
        return res;
      }
      if (std::abs(top.argmax_value) < cfg.accept_factor * r) {
        res.reason = FailReason::kBelowThreshold;
        return res;
      }
      double t = scaling.draw(top.argmax_index).t;
      res.accepted = true;
      res.index = top.argmax_index;
      res.estimate = top.argmax_value * std::pow(t, 1.0 / cfg.p);
      return res;
    }

    std::size_t counters_used() const {
      return zsketch.counters_used() + xnorm.counters_used() + znorm.counters_used();
    }

    void serialize(ByteWriter& w) const {
      w.u8(clamped ? 1 : 0);
      zsketch.serialize(w);
      xnorm.serialize(w);
      znorm.serialize(w);
    }

    void deserialize(ByteReader& r) {
      clamped = r.u8() != 0;
      zsketch.deserialize(r);
      xnorm.deserialize(r);
      znorm.deserialize(r);
    }

    ScalingFactors scaling;
    CountSketch<double> zsketch;
    NormSketch xnorm;
    NormSketch znorm;
    bool clamped = false;
  };

  SamplerConfig cfg_;
  std::vector<Round> rounds_;
};

}  // namespace lpsketch
