#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lpsketch {

/// Raised for malformed stream inputs (bad header, index out of range,
/// wrong stream length, unparsable line).
class StreamFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Prime field used by hash families, fingerprints and related machinery.
/// q = 2^61 - 1 (Mersenne), so reduction is two shift-adds.
inline constexpr std::uint64_t kFieldPrime = (std::uint64_t{1} << 61) - 1;

namespace detail {

inline constexpr std::uint64_t kMask61 = (std::uint64_t{1} << 61) - 1;

inline std::uint64_t field_reduce(std::uint64_t v) {
  v = (v & kMask61) + (v >> 61);
  if (v >= kFieldPrime) v -= kFieldPrime;
  return v;
}

}  // namespace detail

inline std::uint64_t field_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a + b;
  if (s >= kFieldPrime) s -= kFieldPrime;
  return s;
}

inline std::uint64_t field_sub(std::uint64_t a, std::uint64_t b) {
  return a >= b ? a - b : a + kFieldPrime - b;
}

inline std::uint64_t field_mul(std::uint64_t a, std::uint64_t b) {
  unsigned __int128 t = static_cast<unsigned __int128>(a) * b;
  std::uint64_t lo = static_cast<std::uint64_t>(t) & detail::kMask61;
  std::uint64_t hi = static_cast<std::uint64_t>(t >> 61);
  return detail::field_reduce(lo + hi);
}

inline std::uint64_t field_pow(std::uint64_t base, std::uint64_t exp) {
  std::uint64_t acc = 1;
  base = detail::field_reduce(base);
  while (exp != 0) {
    if (exp & 1) acc = field_mul(acc, base);
    base = field_mul(base, base);
    exp >>= 1;
  }
  return acc;
}

/// Maps a signed value into the field.
inline std::uint64_t field_from_signed(std::int64_t v) {
  if (v >= 0) return detail::field_reduce(static_cast<std::uint64_t>(v));
  std::uint64_t mag = detail::field_reduce(static_cast<std::uint64_t>(-(v + 1)) + 1);
  return mag == 0 ? 0 : kFieldPrime - mag;
}

/// splitmix64 finalizer; the workhorse for all seeded randomness so that
/// streams are reproducible across platforms and standard libraries.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b) {
  return mix64(a ^ mix64(b));
}

inline std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix64(a ^ mix64(b ^ mix64(c)));
}

/// Deterministic counter-based random stream.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t seed) : state_(mix64(seed)) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform field element in [0, kFieldPrime).
  std::uint64_t next_field() {
    // Rejection keeps the draw exactly uniform.
    for (;;) {
      std::uint64_t v = next() & detail::kMask61;
      if (v < kFieldPrime) return v;
    }
  }

  std::uint64_t next_below(std::uint64_t bound) {
    return bound == 0 ? 0 : next() % bound;
  }

  /// Uniform double in the open interval (0,1).
  double next_unit() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  std::uint64_t state_;
};

/// Uniform (0,1) double from a raw 64-bit word.
inline double unit_from_bits(std::uint64_t v) {
  return (static_cast<double>(v >> 11) + 0.5) * 0x1.0p-53;
}

inline unsigned log2_ceil(std::uint64_t n) {
  if (n <= 2) return 1;
  return static_cast<unsigned>(std::bit_width(n - 1));
}

inline unsigned log2_floor(std::uint64_t n) {
  if (n <= 1) return 0;
  return static_cast<unsigned>(std::bit_width(n)) - 1;
}

/// Little-endian byte sink; all serialized sketch states use it so that
/// transcript byte counts are stable across runs and machines.
class ByteWriter {
 public:
  void u8(std::uint8_t v) { buf_.push_back(v); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }

  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

  const std::vector<std::uint8_t>& bytes() const { return buf_; }
  std::vector<std::uint8_t> take() { return std::move(buf_); }
  std::size_t size() const { return buf_.size(); }

 private:
  std::vector<std::uint8_t> buf_;
};

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::uint8_t u8() { return data_[need(1)]; }

  std::uint32_t u32() {
    std::size_t at = need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[at + i]) << (8 * i);
    return v;
  }

  std::uint64_t u64() {
    std::size_t at = need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(data_[at + i]) << (8 * i);
    return v;
  }

  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }

  bool exhausted() const { return pos_ == data_.size(); }

 private:
  std::size_t need(std::size_t bytes) {
    if (pos_ + bytes > data_.size()) throw std::runtime_error("truncated sketch blob");
    std::size_t at = pos_;
    pos_ += bytes;
    return at;
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace lpsketch
