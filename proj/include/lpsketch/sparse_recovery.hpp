#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lpsketch/common.hpp"
#include "lpsketch/hashing.hpp"

namespace lpsketch {

/// Exact recovery of s-sparse integer vectors from O(s log n) linear
/// measurements, or DENSE when the input is not s-sparse.
///
/// Layout: R = ceil(log2 n)+2 repetitions of B = 8s hash buckets. Each cell
/// keeps three linear accumulators of the coordinates hashed into it:
/// sum of values, sum of index-weighted values, and a field fingerprint
/// sum x_i * rho^i mod q. A cell holding exactly one nonzero coordinate is
/// certified by weighted/count being an integral in-range index whose
/// fingerprint matches; decoding peels certified cells until the state
/// drains (exact vector) or stalls (DENSE). s = 0 degenerates to a single
/// global cell that distinguishes x = 0 from everything else.
class SparseRecovery {
 public:
  using Entry = std::pair<std::uint64_t, std::int64_t>;

  SparseRecovery(std::uint64_t seed, std::uint64_t n, std::uint64_t s)
      : seed_(seed),
        n_(n),
        s_(s),
        buckets_(s == 0 ? 1 : 8 * s),
        reps_(s == 0 ? 1 : log2_ceil(n) + 2),
        cells_(static_cast<std::size_t>(buckets_) * reps_) {
    if (n == 0) throw std::invalid_argument("sparse recovery needs n >= 1");
    SeedStream stream(mix64(seed, 0x73723162));
    do {
      rho_ = stream.next_field();
    } while (rho_ == 0);
    hashes_.reserve(reps_);
    for (unsigned r = 0; r < reps_; ++r) hashes_.emplace_back(stream.next(), 2, n, buckets_);
  }

  void update(std::uint64_t i, std::int64_t delta) {
    check_index(i);
    if (delta == 0) return;
    std::uint64_t fp_delta = field_mul(field_from_signed(delta), field_pow(rho_, i));
    for (unsigned r = 0; r < reps_; ++r) {
      Cell& cell = cells_[r * buckets_ + hashes_[r](i)];
      cell.count += delta;
      cell.weighted += static_cast<std::int64_t>(i) * delta;
      cell.fingerprint = field_add(cell.fingerprint, fp_delta);
    }
  }

  void merge(const SparseRecovery& other) {
    if (other.seed_ != seed_ || other.n_ != n_ || other.s_ != s_) {
      throw std::invalid_argument("sparse recovery merge: configuration mismatch");
    }
    for (std::size_t j = 0; j < cells_.size(); ++j) {
      cells_[j].count += other.cells_[j].count;
      cells_[j].weighted += other.cells_[j].weighted;
      cells_[j].fingerprint = field_add(cells_[j].fingerprint, other.cells_[j].fingerprint);
    }
  }

  void negate() {
    for (auto& cell : cells_) {
      cell.count = -cell.count;
      cell.weighted = -cell.weighted;
      cell.fingerprint = cell.fingerprint == 0 ? 0 : kFieldPrime - cell.fingerprint;
    }
  }

  /// Peeling decode. Returns the exact sparse vector (index-sorted) when the
  /// sketched vector is s-sparse and decoding drains every cell; nullopt
  /// means DENSE. A successful peel whose result has more than s nonzeros is
  /// also reported DENSE.
  std::optional<std::vector<Entry>> recover() const {
    std::vector<Cell> work = cells_;
    std::vector<Entry> found;
    const std::size_t cap = 2 * cells_.size() + 64;
    bool progress = true;
    while (progress) {
      progress = false;
      for (std::size_t at = 0; at < work.size(); ++at) {
        std::uint64_t idx;
        if (!certify_singleton(work[at], static_cast<unsigned>(at / buckets_),
                               at % buckets_, idx)) {
          continue;
        }
        std::int64_t value = work[at].count;
        found.emplace_back(idx, value);
        if (found.size() > cap) return std::nullopt;
        std::uint64_t fp = field_mul(field_from_signed(value), field_pow(rho_, idx));
        for (unsigned r = 0; r < reps_; ++r) {
          Cell& cell = work[r * buckets_ + hashes_[r](idx)];
          cell.count -= value;
          cell.weighted -= static_cast<std::int64_t>(idx) * value;
          cell.fingerprint = field_sub(cell.fingerprint, fp);
        }
        progress = true;
      }
    }
    for (const Cell& cell : work) {
      if (cell.count != 0 || cell.weighted != 0 || cell.fingerprint != 0) return std::nullopt;
    }
    std::sort(found.begin(), found.end());
    std::vector<Entry> result;
    for (std::size_t j = 0; j < found.size();) {
      std::uint64_t idx = found[j].first;
      std::int64_t total = 0;
      while (j < found.size() && found[j].first == idx) total += found[j++].second;
      if (total != 0) result.emplace_back(idx, total);
    }
    if (result.size() > s_) return std::nullopt;
    return result;
  }

  bool all_zero() const {
    for (const auto& cell : cells_) {
      if (cell.count != 0 || cell.weighted != 0 || cell.fingerprint != 0) return false;
    }
    return true;
  }

  std::uint64_t dimension() const { return n_; }
  std::uint64_t sparsity_budget() const { return s_; }
  std::uint64_t bucket_count() const { return buckets_; }
  unsigned repetition_count() const { return reps_; }
  std::size_t counters_used() const { return cells_.size() * 3; }

  static constexpr std::uint32_t kBlobMagic = 0x314b5253;  // "SRK1"

  std::vector<std::uint8_t> serialize() const {
    ByteWriter w;
    serialize(w);
    return w.take();
  }

  void serialize(ByteWriter& w) const {
    w.u32(kBlobMagic);
    w.u32(1);
    w.u64(seed_);
    w.u64(n_);
    w.u64(s_);
    for (const auto& cell : cells_) {
      w.i64(cell.count);
      w.i64(cell.weighted);
      w.u64(cell.fingerprint);
    }
  }

  static SparseRecovery deserialize(ByteReader& r) {
    if (r.u32() != kBlobMagic) throw std::runtime_error("not a sparse recovery blob");
    if (r.u32() != 1) throw std::runtime_error("unsupported sparse recovery blob version");
    std::uint64_t seed = r.u64();
    std::uint64_t n = r.u64();
    std::uint64_t s = r.u64();
    SparseRecovery state(seed, n, s);
    for (auto& cell : state.cells_) {
      cell.count = r.i64();
      cell.weighted = r.i64();
      cell.fingerprint = r.u64();
    }
    return state;
  }

  static SparseRecovery deserialize(std::span<const std::uint8_t> blob) {
    ByteReader r(blob);
    return deserialize(r);
  }

 private:
  struct Cell {
    std::int64_t count = 0;
    std::int64_t weighted = 0;
    std::uint64_t fingerprint = 0;
  };

  void check_index(std::uint64_t i) const {
    if (i == 0 || i > n_) throw std::out_of_range("index outside [1,n]");
  }

  bool certify_singleton(const Cell& cell, unsigned rep, std::uint64_t bucket,
                         std::uint64_t& idx_out) const {
    if (cell.count == 0) return false;
    if (cell.weighted % cell.count != 0) return false;
    std::int64_t idx = cell.weighted / cell.count;
    if (idx < 1 || static_cast<std::uint64_t>(idx) > n_) return false;
    std::uint64_t idx_u = static_cast<std::uint64_t>(idx);
    if (hashes_[rep](idx_u) != bucket) return false;
    std::uint64_t expect = field_mul(field_from_signed(cell.count), field_pow(rho_, idx_u));
    if (expect != cell.fingerprint) return false;
    idx_out = idx_u;
    return true;
  }

  std::uint64_t seed_;
  std::uint64_t n_;
  std::uint64_t s_;
  std::uint64_t buckets_;
  unsigned reps_;
  std::uint64_t rho_ = 0;
  std::vector<Cell> cells_;
  std::vector<KWiseHash> hashes_;
};

}  // namespace lpsketch
