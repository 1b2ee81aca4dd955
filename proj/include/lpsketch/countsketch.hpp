#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "lpsketch/common.hpp"
#include "lpsketch/hashing.hpp"

namespace lpsketch {

/// Best m-sparse approximation extracted from the estimate vector, plus the
/// coordinate with the largest estimate magnitude. Ties go to the lowest
/// index.
struct SparseApprox {
  std::vector<std::pair<std::uint64_t, double>> entries;  // (index, estimate), nonzero only
  std::uint64_t argmax_index = 1;
  double argmax_value = 0.0;
};

/// Count-sketch over [1,n]: l rows of 6m signed-bucket counters with
/// pairwise independent bucket and sign hashes per row. Point estimates are
/// per-row medians; the counter grid is linear in the input, so states with
/// equal seeds merge by addition.
///
/// CounterT is int64_t for exact integer streams and double for scaled
/// inputs.
template <typename CounterT>
class CountSketch {
 public:
  /// rows = rows_per_log * ceil(log2 n). magnitude_bound caps |delta| per
  /// update (0 disables the check; used when the caller already bounds the
  /// scaled input).
  CountSketch(std::uint64_t seed, std::uint64_t n, std::uint64_t m, unsigned rows_per_log = 4,
              std::int64_t magnitude_bound = -1)
      : seed_(seed),
        n_(n),
        m_(m),
        width_(6 * m),
        rows_(rows_per_log * log2_ceil(n)),
        bound_(magnitude_bound < 0
                   ? static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n)
                   : magnitude_bound),
        counters_(static_cast<std::size_t>(rows_) * width_, CounterT{0}) {
    if (n == 0 || m == 0) throw std::invalid_argument("count-sketch needs n >= 1, m >= 1");
    SeedStream s(mix64(seed, 0x63736b31));
    bucket_hash_.reserve(rows_);
    sign_hash_.reserve(rows_);
    for (unsigned j = 0; j < rows_; ++j) {
      bucket_hash_.emplace_back(s.next(), 2, n, width_);
      sign_hash_.emplace_back(s.next(), 2, n, 2);
    }
  }

  void update(std::uint64_t i, CounterT delta) {
    check_index(i);
    if (bound_ != 0 && std::abs(static_cast<double>(delta)) > static_cast<double>(bound_)) {
      throw std::overflow_error("update magnitude exceeds bound M");
    }
    for (unsigned j = 0; j < rows_; ++j) {
      std::uint64_t b = bucket_hash_[j](i);
      counters_[j * width_ + b] += static_cast<CounterT>(sign_hash_[j].sign(i)) * delta;
    }
  }

  /// Median-of-rows point estimate of x_i.
  double estimate(std::uint64_t i) const {
    check_index(i);
    std::vector<double> vals(rows_);
    fill_row_values(i, vals);
    return median_inplace(vals);
  }

  std::vector<double> estimate_all() const {
    std::vector<double> out(n_);
    std::vector<double> vals(rows_);
    for (std::uint64_t i = 1; i <= n_; ++i) {
      fill_row_values(i, vals);
      out[i - 1] = median_inplace(vals);
    }
    return out;
  }

  /// Best m-sparse approximation of the estimate vector.
  SparseApprox top_m() const { return top_k(m_); }

  SparseApprox top_k(std::uint64_t k) const {
    std::vector<double> est = estimate_all();
    std::vector<std::uint64_t> order(n_);
    for (std::uint64_t i = 0; i < n_; ++i) order[i] = i + 1;
    std::sort(order.begin(), order.end(), [&](std::uint64_t a, std::uint64_t b) {
      double ma = std::abs(est[a - 1]), mb = std::abs(est[b - 1]);
      if (ma != mb) return ma > mb;
      return a < b;
    });
    SparseApprox out;
    out.argmax_index = order.empty() ? 1 : order[0];
    out.argmax_value = order.empty() ? 0.0 : est[order[0] - 1];
    std::uint64_t take = std::min<std::uint64_t>(k, n_);
    for (std::uint64_t j = 0; j < take; ++j) {
      double v = est[order[j] - 1];
      if (v != 0.0) out.entries.emplace_back(order[j], v);
    }
    return out;
  }

  /// Indices whose estimate magnitude reaches (3/4)*phi*r, where r is a
  /// [1,2]x overestimate of ||x||_p. Requires m >= ceil(phi^-p).
  std::vector<std::uint64_t> heavy_hitters(double phi, double p, double r) const {
    if (phi <= 0.0 || phi >= 1.0) throw std::invalid_argument("phi must lie in (0,1)");
    double needed = std::ceil(std::pow(phi, -p));
    if (static_cast<double>(m_) < needed) {
      throw std::invalid_argument("sketch parameter m too small for requested phi");
    }
    std::vector<std::uint64_t> out;
    if (r <= 0.0) return out;
    double threshold = 0.75 * phi * r;
    std::vector<double> est = estimate_all();
    for (std::uint64_t i = 1; i <= n_; ++i) {
      if (std::abs(est[i - 1]) >= threshold) out.push_back(i);
    }
    return out;
  }

  void merge(const CountSketch& other) {
    if (other.seed_ != seed_ || other.n_ != n_ || other.m_ != m_ || other.rows_ != rows_) {
      throw std::invalid_argument("count-sketch merge: configuration mismatch");
    }
    for (std::size_t j = 0; j < counters_.size(); ++j) counters_[j] += other.counters_[j];
  }

  bool all_zero() const {
    for (auto v : counters_) {
      if (v != CounterT{0}) return false;
    }
    return true;
  }

  std::uint64_t bucket_of(unsigned row, std::uint64_t i) const { return bucket_hash_[row](i); }
  int sign_of(unsigned row, std::uint64_t i) const { return sign_hash_[row].sign(i); }
  CounterT counter(unsigned row, std::uint64_t bucket) const {
    return counters_[row * width_ + bucket];
  }
  const std::vector<CounterT>& counters() const { return counters_; }

  std::uint64_t dimension() const { return n_; }
  std::uint64_t sparsity_parameter() const { return m_; }
  std::uint64_t width() const { return width_; }
  unsigned rows() const { return rows_; }
  std::size_t counters_used() const { return counters_.size(); }

  void serialize(ByteWriter& w) const {
    for (auto v : counters_) {
      if constexpr (std::is_same_v<CounterT, double>) {
        w.f64(v);
      } else {
        w.i64(static_cast<std::int64_t>(v));
      }
    }
  }

  void deserialize(ByteReader& r) {
    for (auto& v : counters_) {
      if constexpr (std::is_same_v<CounterT, double>) {
        v = r.f64();
      } else {
        v = static_cast<CounterT>(r.i64());
      }
    }
  }

 private:
  void check_index(std::uint64_t i) const {
    if (i == 0 || i > n_) throw std::out_of_range("index outside [1,n]");
  }

  void fill_row_values(std::uint64_t i, std::vector<double>& vals) const {
    for (unsigned j = 0; j < rows_; ++j) {
      std::uint64_t b = bucket_hash_[j](i);
      vals[j] = static_cast<double>(sign_hash_[j].sign(i)) *
                static_cast<double>(counters_[j * width_ + b]);
    }
  }

  static double median_inplace(std::vector<double>& vals) {
    std::size_t mid = vals.size() / 2;
    std::nth_element(vals.begin(), vals.begin() + mid, vals.end());
    double upper = vals[mid];
    if (vals.size() % 2 == 1) return upper;
    double lower = *std::max_element(vals.begin(), vals.begin() + mid);
    return (lower + upper) / 2.0;
  }

  std::uint64_t seed_;
  std::uint64_t n_;
  std::uint64_t m_;
  std::uint64_t width_;
  unsigned rows_;
  std::int64_t bound_;
  std::vector<CounterT> counters_;
  std::vector<KWiseHash> bucket_hash_;
  std::vector<KWiseHash> sign_hash_;
};

}  // namespace lpsketch
