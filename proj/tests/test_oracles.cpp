#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <vector>

#include "sparrec/common.hpp"
#include "sparrec/decoder.hpp"
#include "sparrec/hashing.hpp"
#include "sparrec/oracles.hpp"

using namespace sparrec;

namespace {

EnsembleParams toy_params(std::uint64_t n, std::uint64_t k, std::uint64_t seed) {
  EnsembleParams p;
  p.n = n;
  p.k = k;
  p.seed = seed;
  return p;
}

TEST(TopK, SparseInputIsItsOwnTopK) {
  std::vector<double> x(32, 0.0);
  x[3] = 2.0;
  x[10] = -1.0;
  const auto t = top_k_oracle(x, 5);
  EXPECT_EQ(t.entries.size(), 2u);
  EXPECT_EQ(t.tail_norm, 0.0);
  const auto full = top_k_oracle(x, 32);
  EXPECT_EQ(full.tail_norm, 0.0);
}

TEST(TopK, MatchesFullSortAndParseval) {
  SplitMix64 rng(3);
  std::vector<double> x(100);
  for (auto& v : x) v = rng.next_gaussian();
  const auto t = top_k_oracle(x, 3);
  // sort oracle
  std::vector<double> mags(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mags[i] = std::abs(x[i]);
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double heavy2 = 0.0;
  for (const auto& [p, v] : t.entries) {
    heavy2 += v * v;
    EXPECT_GE(std::abs(v) + 1e-15, mags[2]);
  }
  double total2 = 0.0;
  for (double v : x) total2 += v * v;
  EXPECT_NEAR(t.tail_norm * t.tail_norm, total2 - heavy2, 1e-9);
  EXPECT_THROW(top_k_oracle(x, 101), std::invalid_argument);
}

TEST(TopK, TiesBrokenByLowerIndex) {
  std::vector<double> x{1.0, -2.0, 2.0, 0.5};
  const auto t = top_k_oracle(x, 1);
  ASSERT_EQ(t.entries.size(), 1u);
  EXPECT_EQ(t.entries[0].first, 1u);
}

TEST(DenseReference, MatchesDecoderEstimateEverywhere) {
  const auto pl = plan(toy_params(128, 4, 21));
  SplitMix64 rng(5);
  std::vector<double> x(128);
  for (auto& v : x) v = rng.next_gaussian();

  const auto ref = dense_reference_decode(pl, x, 0);

  const Sketch sk = encode(pl, x);
  std::vector<double> y(pl.total_rows);
  for (std::uint64_t g = 0; g < pl.total_rows; ++g) y[g] = sk.values[pl.perm.forward[g]];
  const auto& it = pl.layout[0];
  std::set<std::uint64_t> all;
  for (std::uint64_t i = 0; i < 128; ++i) all.insert(i);
  const auto est = estimate(pl, 0, {y.data() + it.iter_offset, it.rows}, all);
  for (std::uint64_t i = 0; i < 128; ++i) {
    const double got = est.count(i) ? est.at(i) : 0.0;
    EXPECT_DOUBLE_EQ(got, ref[i]) << "position " << i;
  }
}

TEST(DenseReference, ZeroAndOneSparse) {
  const auto pl = plan(toy_params(128, 4, 22));
  const auto zeros = dense_reference_decode(pl, std::vector<double>(128, 0.0));
  for (double v : zeros) EXPECT_EQ(v, 0.0);
  std::vector<double> x(128, 0.0);
  x[77] = -2.5;
  const auto est = dense_reference_decode(pl, x);
  EXPECT_EQ(est[77], -2.5);
  EXPECT_THROW(dense_reference_decode(plan(toy_params(1 << 13, 4, 1)),
                                      std::vector<double>(1 << 13, 0.0)),
               std::invalid_argument);
}

TEST(ChernoffBound, BoundaryAndScaling) {
  // theta -> p from above drives the bound to ~1 per variable
  const double near = chernoff_binary_bound(0.5, 0.5 + 1e-9, 1);
  EXPECT_NEAR(near, 1.0, 1e-6);
  // doubling n squares the bound
  const double b1 = chernoff_binary_bound(0.1, 0.5, 10);
  const double b2 = chernoff_binary_bound(0.1, 0.5, 20);
  EXPECT_NEAR(b2, b1 * b1, 1e-12 * b1 * b1 + 1e-300);
  EXPECT_THROW(chernoff_binary_bound(0.5, 0.4, 5), std::invalid_argument);
}

TEST(ChernoffBound, DominatesMonteCarlo) {
  const double p = 0.1, theta = 0.5;
  const std::uint64_t n = 10;
  const double bound = chernoff_binary_bound(p, theta, n);
  SplitMix64 rng(31);
  const int sims = 100000;
  int hits = 0;
  for (int s = 0; s < sims; ++s) {
    int sum = 0;
    for (std::uint64_t i = 0; i < n; ++i)
      if (rng.next_double() < p) ++sum;
    if (sum > theta * static_cast<double>(n)) ++hits;
  }
  EXPECT_LE(static_cast<double>(hits) / sims, bound);
}

TEST(PoissonBinsBound, FormulaValues) {
  // h = 0 collapses q to e^{-mp}
  BoundQuery q0{50, 10, 0.02, 0, 0.5};
  const double mp = 1.0;
  const double qv = std::exp(-mp);
  const double want = std::min(2 * qv / 0.5, 2 * std::pow(qv * M_E / 0.5, 0.5 * 10));
  EXPECT_NEAR(poisson_bins_bound(q0), want, 1e-12);
  EXPECT_LE(qv, 1.0);

  BoundQuery bad{50, 10, 0.02, 5, 0.5};  // h >= m*p
  EXPECT_THROW(poisson_bins_bound(bad), std::invalid_argument);
}

TEST(PoissonBinsBound, DominatesSimulation) {
  const BoundQuery q{200, 20, 1.0 / 40.0, 2, 0.5};
  const double bound = poisson_bins_bound(q);
  SplitMix64 rng(17);
  const int sims = 10000;
  int fails = 0;
  std::vector<int> bins(q.bins);
  for (int s = 0; s < sims; ++s) {
    std::fill(bins.begin(), bins.end(), 0);
    for (std::uint64_t b = 0; b < q.balls; ++b) {
      const double u = rng.next_double();
      if (u < q.p * static_cast<double>(q.bins))
        ++bins[static_cast<std::size_t>(u / q.p)];
    }
    std::uint64_t full = 0;
    for (int c : bins)
      if (static_cast<std::uint64_t>(c) >= q.h) ++full;
    if (static_cast<double>(full) < q.theta * static_cast<double>(q.bins)) ++fails;
  }
  EXPECT_LE(static_cast<double>(fails) / sims, bound);
}

TEST(PoissonBinsBound, MonotoneInBallCount) {
  double prev = 1e300;
  for (std::uint64_t m : {100ull, 200ull, 400ull, 800ull}) {
    const double b = poisson_bins_bound({m, 20, 1.0 / 40.0, 2, 0.5});
    EXPECT_LT(b, prev);
    prev = b;
  }
}

TEST(OperatorNorm, SingleSignRowIsHalfNormal) {
  // one dense sign row against gaussian unit vectors: E|<s,x>| = sqrt(2/pi)
  const std::uint64_t n = 4096, d = next_prime(n);
  double sum = 0.0;
  const int trials = 2000;
  for (int t = 0; t < trials; ++t) {
    const auto f = SignFamily::derive(900 + t, SeedRole::kIdSign, 0, 0, 1, d);
    SplitMix64 rng(t);
    double dot = 0.0, norm2 = 0.0;
    for (std::uint64_t i = 0; i < n; ++i) {
      const double v = rng.next_gaussian();
      dot += v * f.sign_at(0, i);
      norm2 += v * v;
    }
    sum += std::abs(dot) / std::sqrt(norm2);
  }
  const double mean = sum / trials;
  EXPECT_GE(mean, 0.7);
  EXPECT_LE(mean, 0.9);
}

TEST(OperatorNorm, ScaleStableAcrossGrid) {
  // squared estimate over log^2(k) log(n/k) within 3x across the small grid
  double lo = 1e300, hi = 0.0;
  for (std::uint64_t k : {8ull, 32ull}) {
    for (std::uint64_t lg : {10ull, 12ull}) {
      const std::uint64_t n = std::uint64_t{1} << lg;
      auto p = toy_params(n, k, 1);
      const auto est = operator_norm_estimate(p, 100, 5);
      const double denom = std::log2(static_cast<double>(k)) *
                           std::log2(static_cast<double>(k)) *
                           std::log2(static_cast<double>(n) / static_cast<double>(k));
      const double ratio = est.quantile_75 * est.quantile_75 / denom;
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
      // both readings populated and mutually sane
      EXPECT_GT(est.mean_ratio, 0.0);
      EXPECT_GE(est.quantile_75, 0.5 * est.mean_ratio);
      EXPECT_LE(est.quantile_75, 1.5 * est.mean_ratio);
    }
  }
  EXPECT_LE(hi / lo, 3.0);
  EXPECT_THROW(operator_norm_estimate(toy_params(64, 2, 1), 50), std::invalid_argument);
}

TEST(IsolationRate, ConventionsAndScale) {
  const auto pl = plan(toy_params(1 << 10, 16, 9));
  EXPECT_EQ(isolation_rate(pl, 0, {}), 1.0);
  EXPECT_EQ(isolation_rate(pl, 0, {123}), 1.0);

  SplitMix64 rng(2);
  double sum = 0.0;
  const int draws = 200;
  for (int t = 0; t < draws; ++t) {
    std::set<std::uint64_t> supp;
    while (supp.size() < 16) supp.insert(rng.bounded(1 << 10));
    sum += isolation_rate(pl, 0, supp);
  }
  EXPECT_GE(sum / draws, 0.3);
}

}  // namespace
