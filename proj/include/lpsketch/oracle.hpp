#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lpsketch/common.hpp"

namespace lpsketch {

/// Exact dense mirror of an update stream; the ground truth every
/// statistical check is measured against.
class DenseReference {
 public:
  explicit DenseReference(std::uint64_t n, std::int64_t magnitude_bound = 0)
      : x_(n, 0),
        bound_(magnitude_bound > 0 ? magnitude_bound
                                   : static_cast<std::int64_t>(n) * static_cast<std::int64_t>(n)) {}

  void update(std::uint64_t i, std::int64_t delta) {
    if (i == 0 || i > x_.size()) throw std::out_of_range("update index outside [1,n]");
    std::int64_t next = x_[i - 1] + delta;
    if (next > bound_ || next < -bound_) {
      throw std::overflow_error("coordinate magnitude exceeds bound M");
    }
    x_[i - 1] = next;
  }

  std::int64_t operator[](std::uint64_t i) const { return x_.at(i - 1); }
  const std::vector<std::int64_t>& values() const { return x_; }
  std::uint64_t dimension() const { return x_.size(); }
  std::int64_t magnitude_bound() const { return bound_; }

  std::uint64_t support_size() const {
    std::uint64_t k = 0;
    for (auto v : x_) k += (v != 0);
    return k;
  }

  double lp_norm(double p) const {
    if (p == 0.0) return static_cast<double>(support_size());
    double acc = 0.0;
    for (auto v : x_) {
      if (v != 0) acc += std::pow(std::abs(static_cast<double>(v)), p);
    }
    return std::pow(acc, 1.0 / p);
  }

 private:
  std::vector<std::int64_t> x_;
  std::int64_t bound_;
};

/// Probability of each index under the weight-|x_i|^p distribution; for
/// p = 0, uniform over the support. A zero vector has no distribution and
/// yields nullopt.
inline std::optional<std::vector<double>> exact_lp_distribution(
    const std::vector<std::int64_t>& x, double p) {
  std::vector<double> mass(x.size(), 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (x[j] == 0) continue;
    double w = p == 0.0 ? 1.0 : std::pow(std::abs(static_cast<double>(x[j])), p);
    mass[j] = w;
    total += w;
  }
  if (total == 0.0) return std::nullopt;
  for (auto& m : mass) m /= total;
  return mass;
}

/// L2 distance from x to its best m-sparse approximation: the L2 norm of x
/// with the m largest-magnitude entries removed.
inline double tail_l2(const std::vector<std::int64_t>& x, std::size_t m) {
  if (m > x.size()) m = x.size();
  std::vector<double> mags;
  mags.reserve(x.size());
  for (auto v : x) mags.push_back(std::abs(static_cast<double>(v)));
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double acc = 0.0;
  for (std::size_t j = m; j < mags.size(); ++j) acc += mags[j] * mags[j];
  return std::sqrt(acc);
}

/// Total-variation distance between two probability vectors.
inline double tv_distance(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv_distance: dimension mismatch");
  auto check = [](const std::vector<double>& d) {
    double s = 0.0;
    for (double v : d) s += v;
    if (std::abs(s - 1.0) > 1e-9) throw std::invalid_argument("tv_distance: not a distribution");
  };
  check(p);
  check(q);
  double acc = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) acc += std::abs(p[j] - q[j]);
  return acc / 2.0;
}

/// Pearson chi-square statistic for observed counts against expected counts.
inline double chi_square_stat(const std::vector<double>& observed,
                              const std::vector<double>& expected) {
  if (observed.size() != expected.size()) {
    throw std::invalid_argument("chi_square_stat: dimension mismatch");
  }
  double acc = 0.0;
  for (std::size_t j = 0; j < observed.size(); ++j) {
    if (expected[j] <= 0.0) throw std::invalid_argument("chi_square_stat: nonpositive expectation");
    double d = observed[j] - expected[j];
    acc += d * d / expected[j];
  }
  return acc;
}

/// Upper critical value of the chi-square distribution via the
/// Wilson-Hilferty cube approximation. Accurate to a fraction of a percent
/// for df >= 3, which is all the test suites need.
inline double chi_square_critical(unsigned df, double alpha) {
  if (df == 0) throw std::invalid_argument("chi_square_critical: zero df");
  // inverse standard normal CDF at 1-alpha (Acklam-style rational fit)
  auto probit = [](double q) {
    static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                               -2.759285104469687e+02, 1.383577518672690e+02,
                               -3.066479806614716e+01, 2.506628277459239e+00};
    static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                               -1.556989798598866e+02, 6.680131188771972e+01,
                               -1.328068155288572e+01};
    static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                               -2.400758277161838e+00, -2.549732539343734e+00,
                               4.374664141464968e+00,  2.938163982698783e+00};
    static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                               2.445134137142996e+00, 3.754408661907416e+00};
    const double plow = 0.02425;
    if (q < plow) {
      double u = std::sqrt(-2.0 * std::log(q));
      return (((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
             ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
    }
    if (q > 1.0 - plow) {
      double u = std::sqrt(-2.0 * std::log(1.0 - q));
      return -(((((c[0] * u + c[1]) * u + c[2]) * u + c[3]) * u + c[4]) * u + c[5]) /
             ((((d[0] * u + d[1]) * u + d[2]) * u + d[3]) * u + 1.0);
    }
    double u = q - 0.5, r = u * u;
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * u /
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  };
  double z = probit(1.0 - alpha);
  double f = static_cast<double>(df);
  double t = 1.0 - 2.0 / (9.0 * f) + z * std::sqrt(2.0 / (9.0 * f));
  return f * t * t * t;
}

}  // namespace lpsketch
