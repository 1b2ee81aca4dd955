#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lpsketch/common.hpp"

namespace lpsketch {

/// k-wise independent hash family realized as a random degree-(k-1)
/// polynomial over the prime field q = 2^61 - 1, folded onto [range].
/// Evaluation is deterministic for a fixed (seed, i) and exactly k-wise
/// independent over the field; the fold onto [range] adds bias O(range/q).
class KWiseHash {
 public:
  KWiseHash(std::uint64_t seed, unsigned k, std::uint64_t domain, std::uint64_t range)
      : domain_(domain), range_(range) {
    if (k < 2) throw std::invalid_argument("independence degree must be >= 2");
    if (domain == 0 || range == 0) throw std::invalid_argument("empty domain or range");
    SeedStream s(seed);
    coeffs_.reserve(k);
    for (unsigned j = 0; j < k; ++j) coeffs_.push_back(s.next_field());
  }

  /// Value in [0, range) for 1-based i. The field value is folded with a
  /// multiply-shift map, which is division-free and as uniform as a modulo.
  std::uint64_t operator()(std::uint64_t i) const {
    unsigned __int128 prod = static_cast<unsigned __int128>(eval_field(i)) * range_;
    return static_cast<std::uint64_t>(prod >> 61);
  }

  /// Raw polynomial value in [0, q); used where full-width entropy is needed.
  std::uint64_t eval_field(std::uint64_t i) const {
    if (i == 0 || i > domain_) throw std::out_of_range("hash input outside domain");
    std::uint64_t x = detail::field_reduce(i);
    std::uint64_t acc = coeffs_.back();
    for (std::size_t j = coeffs_.size() - 1; j-- > 0;) {
      acc = field_add(field_mul(acc, x), coeffs_[j]);
    }
    return acc;
  }

  /// {-1,+1} sign from the low bit; pairwise independent when k >= 2.
  int sign(std::uint64_t i) const { return (eval_field(i) & 1) ? 1 : -1; }

  std::uint64_t domain() const { return domain_; }
  std::uint64_t range() const { return range_; }
  unsigned independence() const { return static_cast<unsigned>(coeffs_.size()); }

 private:
  std::uint64_t domain_;
  std::uint64_t range_;
  std::vector<std::uint64_t> coeffs_;
};

/// One scaling-factor draw: a fixed-point rational in (0,1].
struct ScalingDraw {
  double t;                 ///< clamped value, >= n^-c
  std::uint64_t numerator;  ///< raw fixed-point numerator over denominator()
  bool clamped;             ///< raw draw fell below n^-c; round must fail
};

/// k-wise independent uniform scaling factors t_i over a fixed-point grid
/// with denominator D = n^(c+1). Draws below n^-c are clamped and flagged;
/// the caller treats any flagged round as failed.
class ScalingFactors {
 public:
  ScalingFactors(std::uint64_t seed, std::uint64_t n, unsigned k, unsigned c = 2)
      : n_(n),
        c_(c),
        denominator_(pow_checked(n, c + 1)),
        floor_(std::pow(static_cast<double>(n), -static_cast<double>(c))),
        hash_(seed, k, n, denominator_) {}

  ScalingDraw draw(std::uint64_t i) const {
    std::uint64_t u = hash_(i);
    // raw numerators < n correspond to t < n^-c
    if (u < n_) return {floor_, u, true};
    return {static_cast<double>(u) / static_cast<double>(denominator_), u, false};
  }

  std::uint64_t denominator() const { return denominator_; }
  double clamp_floor() const { return floor_; }
  std::uint64_t dimension() const { return n_; }
  unsigned low_probability_exponent() const { return c_; }

 private:
  static std::uint64_t pow_checked(std::uint64_t n, unsigned e) {
    unsigned __int128 d = 1;
    for (unsigned j = 0; j < e; ++j) {
      d *= n;
      if (d >= (static_cast<unsigned __int128>(1) << 62)) {
        throw std::invalid_argument("fixed-point denominator n^(c+1) too large");
      }
    }
    return static_cast<std::uint64_t>(d);
  }

  std::uint64_t n_;
  unsigned c_;
  std::uint64_t denominator_;
  double floor_;
  KWiseHash hash_;
};

}  // namespace lpsketch
