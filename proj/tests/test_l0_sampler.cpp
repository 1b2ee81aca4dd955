#include <doctest.h>

#include <map>
#include <set>
#include <vector>

#include "lpsketch/l0_sampler.hpp"
#include "lpsketch/oracle.hpp"

using namespace lpsketch;

TEST_CASE("level membership is deterministic and level 0 is the full set") {
  LevelSubsets subsets(9, 1000);
  CHECK(subsets.level_count() == 10);  // floor(log2 1000) + 1
  for (std::uint64_t i = 1; i <= 1000; ++i) {
    CHECK(subsets.member(0, i));
    for (unsigned k = 1; k < subsets.level_count(); ++k) {
      CHECK(subsets.member(k, i) == subsets.member(k, i));
    }
  }
}

TEST_CASE("level subset sizes concentrate around 2^k") {
  const std::uint64_t n = 4096;
  LevelSubsets subsets(123, n);
  for (unsigned k = 4; k < subsets.level_count(); ++k) {
    std::size_t size = 0;
    for (std::uint64_t i = 1; i <= n; ++i) size += subsets.member(k, i);
    double expect = std::min<double>(static_cast<double>(n), std::pow(2.0, k));
    CHECK(static_cast<double>(size) > 0.5 * expect);
    CHECK(static_cast<double>(size) < 2.0 * expect);
  }
}

TEST_CASE("updates outside a level's subset leave that level untouched") {
  const std::uint64_t n = 256;
  L0Sampler sampler(7, n, 0.25);
  std::uint64_t i = 37;
  sampler.update(i, 5);
  for (unsigned k = 0; k < sampler.level_count(); ++k) {
    CHECK(sampler.level_state(k).all_zero() == !sampler.subsets().member(k, i));
  }
}

TEST_CASE("update and inverse cancel at every level") {
  L0Sampler sampler(3, 512, 0.1);
  sampler.update(100, 2);
  sampler.update(100, -2);
  for (unsigned k = 0; k < sampler.level_count(); ++k) {
    CHECK(sampler.level_state(k).all_zero());
  }
  CHECK(sampler.sample().verdict == L0Verdict::kZero);
}

TEST_CASE("replay under a fixed seed is deterministic") {
  L0Sampler a(11, 512, 0.1), b(11, 512, 0.1);
  for (auto [i, d] : std::vector<std::pair<std::uint64_t, std::int64_t>>{
           {3, 1}, {99, -4}, {3, 2}, {511, 7}}) {
    a.update(i, d);
    b.update(i, d);
  }
  CHECK(a.serialize() == b.serialize());
  L0Sample sa = a.sample(), sb = b.sample();
  CHECK(sa.verdict == sb.verdict);
  CHECK(sa.index == sb.index);
}

TEST_CASE("singleton support is always returned") {
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    L0Sampler sampler(mix64(seed, 0x5a), 1 << 12, 0.1);
    sampler.update(3, 9);
    L0Sample res = sampler.sample();
    CHECK(res.verdict == L0Verdict::kIndex);
    CHECK(res.index == 3);
  }
}

TEST_CASE("zero vector reports ZERO") {
  L0Sampler sampler(5, 4096, 0.1);
  CHECK(sampler.sample().verdict == L0Verdict::kZero);
}

TEST_CASE("small supports are sampled uniformly") {
  const std::uint64_t n = 1000;
  const std::vector<std::uint64_t> support = {2, 5, 7, 11};
  std::map<std::uint64_t, std::size_t> counts;
  const std::size_t trials = 10000;
  for (std::uint64_t trial = 0; trial < trials; ++trial) {
    L0Sampler sampler(mix64(trial, 0x5b), n, 0.1);
    for (auto i : support) sampler.update(i, 1 + static_cast<std::int64_t>(trial % 3));
    L0Sample res = sampler.sample();
    REQUIRE(res.verdict == L0Verdict::kIndex);
    ++counts[res.index];
  }
  for (auto i : support) {
    double freq = static_cast<double>(counts[i]) / static_cast<double>(trials);
    CHECK(std::abs(freq - 0.25) <= 0.02);
  }
  CHECK(counts.size() == support.size());
}

TEST_CASE("larger supports stay uniform and inside the support") {
  const std::uint64_t n = 4096;
  for (std::uint64_t support_size : {40ull, 400ull}) {
    std::set<std::uint64_t> support;
    SeedStream gen(mix64(support_size, 0x5c));
    while (support.size() < support_size) support.insert(1 + gen.next_below(n));

    std::map<std::uint64_t, std::size_t> counts;
    std::size_t returned = 0, fails = 0;
    const std::size_t trials = support_size == 40 ? 4000 : 2000;
    for (std::uint64_t trial = 0; trial < trials; ++trial) {
      L0Sampler sampler(mix64(trial, support_size), n, 0.1);
      for (auto i : support) sampler.update(i, 3);
      L0Sample res = sampler.sample();
      if (res.verdict != L0Verdict::kIndex) {
        ++fails;
        continue;
      }
      CHECK(support.count(res.index) == 1);
      ++returned;
      ++counts[res.index];
    }
    CHECK(static_cast<double>(fails) / static_cast<double>(trials) <= 0.12);

    // aggregate uniformity: chi-square over the support at significance 0.01
    std::vector<double> observed, expected;
    for (auto i : support) {
      observed.push_back(static_cast<double>(counts[i]));
      expected.push_back(static_cast<double>(returned) / static_cast<double>(support_size));
    }
    double stat = chi_square_stat(observed, expected);
    CHECK(stat < chi_square_critical(static_cast<unsigned>(support_size - 1), 0.01));
  }
}

TEST_CASE("failure rate stays near delta") {
  const std::uint64_t n = 4096;
  for (double delta : {0.5, 0.1}) {
    std::set<std::uint64_t> support;
    SeedStream gen(0x5d);
    while (support.size() < 40) support.insert(1 + gen.next_below(n));
    std::size_t fails = 0;
    const std::size_t trials = 1000;
    for (std::uint64_t trial = 0; trial < trials; ++trial) {
      L0Sampler sampler(mix64(trial, llround(delta * 100)), n, delta);
      for (auto i : support) sampler.update(i, 1);
      fails += sampler.sample().verdict == L0Verdict::kFail;
    }
    CHECK(static_cast<double>(fails) / static_cast<double>(trials) <= delta + 0.02);
  }
}

TEST_CASE("level probes separate the failure sources") {
  const std::uint64_t n = 1 << 12;
  L0Sampler sampler(17, n, 0.5);
  for (std::uint64_t i = 1; i <= n; ++i) sampler.update(i, 1);
  auto probes = sampler.probe_levels();
  REQUIRE(probes.size() == sampler.level_count());
  CHECK(probes[0] == L0LevelOutcome::kDense);  // full set holds n nonzeros
  std::size_t recovered = 0;
  for (auto outcome : probes) recovered += outcome == L0LevelOutcome::kRecovered;
  CHECK(recovered > 0);  // some sparse level catches a few coordinates
}

TEST_CASE("scan order toggle still finds the support") {
  L0Sampler::Options opts;
  opts.full_set_first = false;
  L0Sampler sampler(23, 512, 0.25, opts);
  sampler.update(400, -6);
  L0Sample res = sampler.sample();
  CHECK(res.verdict == L0Verdict::kIndex);
  CHECK(res.index == 400);

  L0Sampler zero(23, 512, 0.25, opts);
  CHECK(zero.sample().verdict == L0Verdict::kZero);
}

TEST_CASE("serialized state round-trips and supports cross-party merging") {
  L0Sampler alice(31, 1024, 0.1);
  alice.update(5, 1);
  alice.update(900, 1);
  auto blob = alice.serialize();

  L0Sampler bob = L0Sampler::deserialize(blob);
  CHECK(bob.serialize() == blob);
  bob.update(5, -1);  // bob holds the same coordinate; difference is {900}
  L0Sample res = bob.sample();
  CHECK(res.verdict == L0Verdict::kIndex);
  CHECK(res.index == 900);

  blob[0] ^= 0xff;
  CHECK_THROWS_AS(L0Sampler::deserialize(blob), std::runtime_error);
}
