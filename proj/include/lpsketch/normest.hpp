#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "lpsketch/common.hpp"

namespace lpsketch {

namespace detail {

/// P(|X| <= z) for X standard symmetric p-stable (characteristic function
/// e^{-|t|^p}), by Gil-Pelaez inversion.
inline double stable_abs_cdf(double p, double z) {
  auto integrand = [&](double t) {
    if (t == 0.0) return z;
    return std::sin(z * t) / t * std::exp(-std::pow(t, p));
  };
  // composite Simpson; finer mesh near zero where t^p is steep for p < 1
  auto simpson = [&](double a, double b, std::size_t intervals) {
    double h = (b - a) / static_cast<double>(intervals);
    double acc = integrand(a) + integrand(b);
    for (std::size_t j = 1; j < intervals; ++j) {
      acc += integrand(a + h * static_cast<double>(j)) * (j % 2 == 1 ? 4.0 : 2.0);
    }
    return acc * h / 3.0;
  };
  double cutoff = std::pow(27.6, 1.0 / p);  // e^{-t^p} < 1e-12 beyond
  double head = simpson(0.0, 1.0, 4096);
  double tail = cutoff <= 1.0 ? 0.0
                              : simpson(1.0, cutoff,
                                        static_cast<std::size_t>((cutoff - 1.0) * 128) + 2);
  return 2.0 / std::numbers::pi * (head + tail);
}

/// Median of |X| for X standard symmetric p-stable, cached per p.
inline double stable_abs_median(double p) {
  if (p <= 0.0 || p > 2.0) throw std::invalid_argument("stable order must lie in (0,2]");
  if (p == 1.0) return 1.0;                    // Cauchy: tan(pi/4)
  if (p == 2.0) return 0.9538725524089478;     // sqrt(2) * probit(3/4)
  static std::mutex mu;
  static std::map<long long, double> cache;
  long long key = llround(p * 1e9);
  {
    std::scoped_lock lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  double lo = 1e-6, hi = 64.0;
  while (stable_abs_cdf(p, hi) < 0.5) hi *= 2.0;
  for (int iter = 0; iter < 60 && hi - lo > 1e-7; ++iter) {
    double mid = (lo + hi) / 2.0;
    (stable_abs_cdf(p, mid) < 0.5 ? lo : hi) = mid;
  }
  double med = (lo + hi) / 2.0;
  std::scoped_lock lock(mu);
  cache.emplace(key, med);
  return med;
}

inline double median_abs_destructive(std::vector<double>& vals) {
  for (auto& v : vals) v = std::abs(v);
  std::size_t mid = vals.size() / 2;
  std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
  double upper = vals[mid];
  if (vals.size() % 2 == 1) return upper;
  double lower = *std::max_element(vals.begin(), vals.begin() + mid);
  return (lower + upper) / 2.0;
}

}  // namespace detail

/// Linear sketch for constant-factor Lp norm estimation, p in (0,2].
/// Each row accumulates <row coefficients, x> where coefficients are i.i.d.
/// p-stable, generated on demand from the seed via the
/// Chambers-Mallows-Stuck transform; nothing is stored per coordinate.
/// estimate() returns r with ||x||_p <= r <= 2||x||_p with high probability:
/// the median-of-rows estimator is within (1 +- 1/3) and is inflated by 1.5x.
class NormSketch {
 public:
  NormSketch(std::uint64_t seed, std::uint64_t n, double p, unsigned rows_per_log = 48)
      : seed_(mix64(seed, 0x6e6f726d)),
        n_(n),
        p_(p),
        inv_stable_median_(1.0 / detail::stable_abs_median(p)),
        rows_(static_cast<std::size_t>(rows_per_log) * log2_ceil(n), 0.0) {
    if (n == 0) throw std::invalid_argument("norm sketch needs n >= 1");
  }

  void update(std::uint64_t i, double delta) {
    check_index(i);
    for (std::size_t j = 0; j < rows_.size(); ++j) rows_[j] += coefficient(j, i) * delta;
  }

  /// Sketch of an explicitly-given sparse vector under the same projection.
  std::vector<double> apply_sparse(
      const std::vector<std::pair<std::uint64_t, double>>& v) const {
    std::vector<double> out(rows_.size(), 0.0);
    for (const auto& [i, value] : v) {
      check_index(i);
      for (std::size_t j = 0; j < out.size(); ++j) out[j] += coefficient(j, i) * value;
    }
    return out;
  }

  double estimate() const {
    std::vector<double> scratch = rows_;
    return estimate_from(scratch);
  }

  /// Estimate of ||x - v||_p where x is the sketched vector and v is sparse,
  /// using linearity of the rows.
  double estimate_diff(const std::vector<std::pair<std::uint64_t, double>>& v) const {
    std::vector<double> scratch = apply_sparse(v);
    for (std::size_t j = 0; j < scratch.size(); ++j) scratch[j] = rows_[j] - scratch[j];
    return estimate_from(scratch);
  }

  void merge(const NormSketch& other) {
    if (other.seed_ != seed_ || other.n_ != n_ || other.p_ != p_ ||
        other.rows_.size() != rows_.size()) {
      throw std::invalid_argument("norm sketch merge: configuration mismatch");
    }
    for (std::size_t j = 0; j < rows_.size(); ++j) rows_[j] += other.rows_[j];
  }

  /// p-stable projection coefficient for (row, i); deterministic in the seed.
  double coefficient(std::size_t row, std::uint64_t i) const {
    double u1 = unit_from_bits(mix64(seed_, row << 1, i));
    double theta = std::numbers::pi * (u1 - 0.5);
    if (p_ == 1.0) return std::tan(theta);
    double u2 = unit_from_bits(mix64(seed_, (row << 1) | 1, i));
    double w = -std::log(u2);
    if (p_ == 2.0) return 2.0 * std::sin(theta) * std::sqrt(w);
    double a = std::sin(p_ * theta) / std::pow(std::cos(theta), 1.0 / p_);
    double b = std::pow(std::cos((1.0 - p_) * theta) / w, (1.0 - p_) / p_);
    return a * b;
  }

  bool all_zero() const {
    for (double v : rows_) {
      if (v != 0.0) return false;
    }
    return true;
  }

  const std::vector<double>& rows() const { return rows_; }
  double order() const { return p_; }
  std::uint64_t dimension() const { return n_; }
  std::size_t counters_used() const { return rows_.size(); }

  void serialize(ByteWriter& w) const {
    for (double v : rows_) w.f64(v);
  }

  void deserialize(ByteReader& r) {
    for (double& v : rows_) v = r.f64();
  }

 private:
  void check_index(std::uint64_t i) const {
    if (i == 0 || i > n_) throw std::out_of_range("index outside [1,n]");
  }

  double estimate_from(std::vector<double>& scratch) const {
    double med = detail::median_abs_destructive(scratch);
    return 1.5 * med * inv_stable_median_;
  }

  std::uint64_t seed_;
  std::uint64_t n_;
  double p_;
  double inv_stable_median_;
  std::vector<double> rows_;
};

}  // namespace lpsketch
