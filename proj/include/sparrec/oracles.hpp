#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <vector>

#include "sparrec/common.hpp"
#include "sparrec/ensemble.hpp"

// Ground-truth oracles and analytic bound evaluators: exact top-k selection,
// a full-scan reference estimator, a Monte Carlo operator-norm estimate, and
// the two tail bounds used to sanity-check occupancy behavior.

namespace sparrec {

struct TopK {
  std::vector<std::pair<std::uint64_t, double>> entries;  // sorted by position
  std::vector<double> tail;                               // x - x_k
  double tail_norm = 0.0;
};

// Largest-magnitude k entries, ties broken by lower index.
inline TopK top_k_oracle(const std::vector<double>& x, std::uint64_t k) {
  if (k > x.size()) throw std::invalid_argument("top_k_oracle: k > n");
  std::vector<std::uint64_t> idx(x.size());
  for (std::uint64_t i = 0; i < x.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::uint64_t a, std::uint64_t b) {
    const double ma = std::abs(x[a]), mb = std::abs(x[b]);
    if (ma != mb) return ma > mb;
    return a < b;
  });
  TopK out;
  out.tail = x;
  for (std::uint64_t r = 0; r < k; ++r) {
    const std::uint64_t i = idx[r];
    if (x[i] != 0.0) out.entries.push_back({i, x[i]});
    out.tail[i] = 0.0;
  }
  std::sort(out.entries.begin(), out.entries.end());
  double t2 = 0.0;
  for (double v : out.tail) t2 += v * v;
  out.tail_norm = std::sqrt(t2);
  return out;
}

inline constexpr std::uint64_t kOracleScaleCap = std::uint64_t{1} << 12;

// Full-scan signed-median estimator over the estimation rows of iteration j;
// validates the decoder's estimate path at toy scale.
inline std::vector<double> dense_reference_decode(const EnsemblePlan& pl,
                                                  const std::vector<double>& x,
                                                  int j = 0) {
  if (pl.params.n > kOracleScaleCap)
    throw std::invalid_argument("dense_reference_decode: oracle capped at n <= 4096");
  if (x.size() != pl.params.n) throw std::invalid_argument("dense_reference_decode: length");
  const IterationLayout& it = pl.layout[static_cast<std::size_t>(j)];
  const IterationHashes& hs = pl.hashes[static_cast<std::size_t>(j)];
  // z = E^(j) x, materialized row by row
  std::vector<double> z(it.copies * it.est_rows, 0.0);
  for (std::uint32_t r = 0; r < it.copies; ++r) {
    for (std::uint64_t i = 0; i < pl.params.n; ++i) {
      if (x[i] == 0.0) continue;
      const std::uint64_t q = hs.est_map[r].bucket_of(i);
      z[r * it.est_rows + q] += hs.est_sign[r].sign_at(q, i) * x[i];
    }
  }
  std::vector<double> est(pl.params.n, 0.0);
  std::vector<double> vals(it.copies);
  for (std::uint64_t i = 0; i < pl.params.n; ++i) {
    for (std::uint32_t r = 0; r < it.copies; ++r) {
      const std::uint64_t q = hs.est_map[r].bucket_of(i);
      vals[r] = z[r * it.est_rows + q] * hs.est_sign[r].sign_at(q, i);
    }
    est[i] = center_median(vals);
  }
  return est;
}

// Pr(sum of n iid binaries with mean p exceeds theta*n) is below
// ((p^theta / e^p) * (e/theta)^theta)^n.
inline double chernoff_binary_bound(double p, double theta, std::uint64_t n) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("chernoff: p in (0,1)");
  if (!(theta > p && theta < 1.0))
    throw std::invalid_argument("chernoff: need p < theta < 1");
  const double base = std::pow(p, theta) / std::exp(p) * std::pow(M_E / theta, theta);
  return std::pow(base, static_cast<double>(n));
}

struct BoundQuery {
  std::uint64_t balls = 0;   // m
  std::uint64_t bins = 0;    // n
  double p = 0.0;            // per-bin probability (dustbin gets 1 - n*p)
  std::uint64_t h = 0;       // occupancy threshold
  double theta = 0.0;        // fraction of bins required to reach h
};

// Poisson balls-and-bins bound: probability that theta*n bins each holding
// at least h balls FAILS to happen.
inline double poisson_bins_bound(const BoundQuery& q) {
  if (q.balls == 0 || q.bins == 0) throw std::invalid_argument("poisson_bins_bound: empty model");
  if (!(q.p > 0.0) || q.p * static_cast<double>(q.bins) > 1.0 + 1e-12)
    throw std::invalid_argument("poisson_bins_bound: need 0 < n*p <= 1");
  if (!(q.theta > 0.0 && q.theta < 1.0))
    throw std::invalid_argument("poisson_bins_bound: theta in (0,1)");
  const double mp = static_cast<double>(q.balls) * q.p;
  if (!(static_cast<double>(q.h) < mp))
    throw std::invalid_argument("poisson_bins_bound: requires h < m*p");
  double h_fact = 1.0;
  for (std::uint64_t i = 2; i <= q.h; ++i) h_fact *= static_cast<double>(i);
  const double qv = std::exp(-mp) * std::pow(mp, static_cast<double>(q.h)) /
                    (h_fact * (1.0 - static_cast<double>(q.h) / mp));
  const double first = 2.0 * qv / (1.0 - q.theta);
  const double second =
      2.0 * std::pow(qv * M_E / (1.0 - q.theta),
                     (1.0 - q.theta) * static_cast<double>(q.bins));
  return std::min(first, second);
}

struct NormEstimate {
  std::uint64_t samples = 0;
  double mean_ratio = 0.0;
  double quantile_75 = 0.0;
};

// Monte Carlo scale of ||Phi x|| over unit-norm x and freshly drawn
// matrices. x is drawn on a random small-support subspace (256 positions);
// the expected ratio depends only on the mean column sparsity, and the
// sparse draw keeps each sample at O(support * column sparsity).
inline NormEstimate operator_norm_estimate(EnsembleParams params,
                                           std::uint64_t trials,
                                           std::uint64_t seed = 1) {
  if (trials < 100) throw std::invalid_argument("operator_norm_estimate: trials >= 100");
  std::vector<double> ratios;
  ratios.reserve(trials);
  double sum = 0.0;
  for (std::uint64_t t = 0; t < trials; ++t) {
    params.seed = derive_seed(seed, {tag(SeedRole::kNormEstimate), t});
    const EnsemblePlan pl = plan(params);
    SplitMix64 rng(derive_seed(seed, {tag(SeedRole::kNormEstimate), t, 0xFF}));
    const std::uint64_t support = std::min<std::uint64_t>(params.n, 256);
    std::set<std::uint64_t> picked;
    while (picked.size() < support) picked.insert(rng.bounded(params.n));
    std::vector<std::pair<std::uint64_t, double>> x;
    double norm2 = 0.0;
    for (std::uint64_t pos : picked) {
      const double v = rng.next_gaussian();
      x.push_back({pos, v});
      norm2 += v * v;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (auto& [pos, v] : x) v *= inv;
    const Sketch sk = encode_sparse(pl, x);
    double y2 = 0.0;
    for (double v : sk.values) y2 += v * v;
    const double r = std::sqrt(y2);
    ratios.push_back(r);
    sum += r;
  }
  std::sort(ratios.begin(), ratios.end());
  NormEstimate out;
  out.samples = trials;
  out.mean_ratio = sum / static_cast<double>(trials);
  const std::size_t rank = static_cast<std::size_t>(
      std::ceil(0.75 * static_cast<double>(trials))) - 1;
  out.quantile_75 = ratios[rank];
  return out;
}

// Fraction of (copy, bucket) cells at iteration j holding exactly one
// support element, over cells holding at least one. Empty support: 1.
inline double isolation_rate(const EnsemblePlan& pl, int j,
                             const std::set<std::uint64_t>& support) {
  if (support.empty()) return 1.0;
  const IterationLayout& it = pl.layout[static_cast<std::size_t>(j)];
  const IterationHashes& hs = pl.hashes[static_cast<std::size_t>(j)];
  std::uint64_t occupied = 0, lone = 0;
  std::map<std::pair<std::uint32_t, std::uint64_t>, std::uint64_t> counts;
  for (std::uint32_t r = 0; r < it.copies; ++r)
    for (std::uint64_t i : support) ++counts[{r, hs.id_map[r].bucket_of(i)}];
  for (const auto& [cell, c] : counts) {
    ++occupied;
    if (c == 1) ++lone;
  }
  return static_cast<double>(lone) / static_cast<double>(occupied);
}

}  // namespace sparrec
