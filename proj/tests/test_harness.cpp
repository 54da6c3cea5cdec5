#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>

#include "sparrec/harness.hpp"
#include "sparrec/oracles.hpp"

using namespace sparrec;

namespace {

TEST(GenSignal, DegenerateSingleEntry) {
  SignalModel m;
  m.kind = SignalKind::kExactSparse;
  m.n = 1;
  m.k = 1;
  m.seed = 3;
  const auto g = gen_signal(m);
  ASSERT_EQ(g.support.size(), 1u);
  EXPECT_EQ(g.support[0], 0u);
  EXPECT_NE(g.x[0], 0.0);
  EXPECT_EQ(g.nu1_norm, 0.0);
}

TEST(GenSignal, TailNormExact) {
  SignalModel m;
  m.kind = SignalKind::kSparsePlusGaussian;
  m.n = 4096;
  m.k = 16;
  m.mag_min = m.mag_max = 2.5;
  m.noise_norm = 1.0;
  m.seed = 11;
  const auto g = gen_signal(m);
  double tail2 = 0.0;
  for (std::uint64_t i = 0; i < m.n; ++i) {
    const double t = g.x[i] - g.x_heavy[i];
    tail2 += t * t;
  }
  EXPECT_NEAR(std::sqrt(tail2), 1.0, 1e-12);
  EXPECT_EQ(g.nu1_norm, 1.0);
}

TEST(GenSignal, TopKOracleRecoversPlantedSupport) {
  SignalModel m;
  m.kind = SignalKind::kSparsePlusGaussian;
  m.n = 4096;
  m.k = 8;
  m.mag_min = m.mag_max = 2.5;  // heavy entries far above the tail
  m.noise_norm = 1.0;
  m.seed = 21;
  const auto g = gen_signal(m);
  const auto t = top_k_oracle(g.x, m.k);
  ASSERT_EQ(t.entries.size(), m.k);
  for (std::size_t i = 0; i < m.k; ++i) EXPECT_EQ(t.entries[i].first, g.support[i]);
}

TEST(GenSignal, PowerLawMagnitudesSpanRange) {
  SignalModel m;
  m.kind = SignalKind::kPowerLaw;
  m.n = 1024;
  m.k = 8;
  m.mag_min = 0.1;
  m.mag_max = 10.0;
  m.seed = 9;
  const auto g = gen_signal(m);
  double lo = 1e300, hi = 0.0;
  for (const auto& [p, v] : g.heavy) {
    lo = std::min(lo, std::abs(v));
    hi = std::max(hi, std::abs(v));
  }
  EXPECT_NEAR(lo, 0.1, 1e-12);
  EXPECT_NEAR(hi, 10.0, 1e-12);
  EXPECT_THROW(gen_signal(SignalModel{SignalKind::kExactSparse, 4, 8, 1, 2, 0, 0}),
               std::invalid_argument);
}

TrialConfig small_config() {
  TrialConfig cfg;
  cfg.params.n = 1 << 10;
  cfg.params.k = 8;
  cfg.signal.kind = SignalKind::kExactSparse;
  cfg.trials = 8;
  cfg.seed = 5;
  return cfg;
}

TEST(RunSuite, DegenerateDomainOfOne) {
  TrialConfig cfg;
  cfg.params.n = 1;
  cfg.params.k = 1;
  cfg.trials = 3;
  cfg.seed = 2;
  const auto res = run_suite(cfg);
  for (const auto& r : res.reports) {
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.error, 0.0);
  }
}

TEST(RunSuite, ZeroSignalAlwaysSucceeds) {
  // exact-sparse with no tail: every trial must land error 0
  TrialConfig cfg = small_config();
  const auto res = run_suite(cfg);
  EXPECT_EQ(res.summary.trials, 8u);
  for (const auto& r : res.reports) EXPECT_TRUE(r.success);
  EXPECT_EQ(res.summary.err_max, res.summary.err_max);  // populated
}

TEST(RunSuite, DeterministicSummaryAcrossWorkerCounts) {
  TrialConfig cfg = small_config();
  cfg.signal.kind = SignalKind::kSparsePlusGaussian;
  cfg.signal.mag_min = cfg.signal.mag_max = 10.0 / std::sqrt(8.0);
  cfg.signal.noise_norm = 1.0;

  setenv("SPARREC_WORKERS", "1", 1);
  const auto a = run_suite(cfg);
  setenv("SPARREC_WORKERS", "4", 1);
  const auto b = run_suite(cfg);
  unsetenv("SPARREC_WORKERS");

  EXPECT_EQ(summary_to_json(a.summary).dump(), summary_to_json(b.summary).dump());
  for (std::size_t t = 0; t < a.reports.size(); ++t)
    EXPECT_EQ(a.reports[t].error, b.reports[t].error);
}

TEST(RunSuite, FixedMatrixReusesThePlan) {
  TrialConfig cfg = small_config();
  cfg.fixed_matrix = true;
  cfg.trials = 3;
  const auto res = run_suite(cfg);
  EXPECT_EQ(res.reports[0].m, res.reports[1].m);
  // same matrix, different signals: errors may differ but m identical
  for (const auto& r : res.reports) EXPECT_EQ(r.m, res.reports[0].m);
}

TEST(RunSuite, ReportsCarryInstrumentation) {
  TrialConfig cfg = small_config();
  cfg.diagnostics = true;
  const auto res = run_suite(cfg);
  for (const auto& r : res.reports) {
    EXPECT_GT(r.m, 0u);
    EXPECT_GT(r.max_column_sparsity, 0u);
    EXPECT_GT(r.stats.touches(), 0u);
  }
}

TEST(TrialConfigJson, ParsesWithDefaults) {
  const auto j = nlohmann::json::parse(R"({
    "n": 1024, "k": 8, "seed": 3, "trials": 2,
    "signal": {"kind": "sparse_plus_gaussian", "mag_min": 2.5, "mag_max": 2.5, "noise_norm": 1.0},
    "nu2_norm": 0.5
  })");
  const TrialConfig cfg = trial_config_from_json(j);
  EXPECT_EQ(cfg.params.n, 1024u);
  EXPECT_EQ(cfg.params.k, 8u);
  EXPECT_EQ(cfg.signal.kind, SignalKind::kSparsePlusGaussian);
  EXPECT_EQ(cfg.nu2_norm, 0.5);
  EXPECT_EQ(cfg.alpha, kDefaultAlpha);
  EXPECT_EQ(cfg.success_c, 2.0);
}

TEST(RunSuite, DoublingTrialsShrinksRateDispersion) {
  // a config whose success is genuinely stochastic: the allowed error sits
  // inside the error distribution
  auto rate_of = [](std::uint64_t trials, std::uint64_t seed) {
    TrialConfig cfg;
    cfg.params.n = 1 << 10;
    cfg.params.k = 8;
    cfg.signal.kind = SignalKind::kSparsePlusGaussian;
    cfg.signal.mag_min = cfg.signal.mag_max = 10.0 / std::sqrt(8.0);
    cfg.signal.noise_norm = 1.0;
    cfg.success_c = 1.04;  // deliberately tight
    cfg.trials = trials;
    cfg.seed = seed;
    return run_suite(cfg).summary.success_rate;
  };
  auto dispersion = [&](std::uint64_t trials) {
    std::vector<double> rates;
    for (std::uint64_t rep = 0; rep < 12; ++rep) rates.push_back(rate_of(trials, 100 + rep));
    double mean = 0.0;
    for (double r : rates) mean += r;
    mean /= static_cast<double>(rates.size());
    double var = 0.0;
    for (double r : rates) var += (r - mean) * (r - mean);
    return std::sqrt(var / static_cast<double>(rates.size() - 1));
  };
  const double se_small = dispersion(30);
  const double se_big = dispersion(60);
  // expect roughly a 1/sqrt(2) contraction, with generous Monte Carlo slack
  EXPECT_GT(se_small, 0.0);
  EXPECT_LT(se_big, se_small * 1.05);
}

TEST(SuccessPredicate, UsesAlphaAndNormEstimate) {
  // with nu2 present the allowance grows by alpha*log2(k)*nu2/normEst
  TrialConfig cfg = small_config();
  cfg.signal.kind = SignalKind::kSparsePlusGaussian;
  cfg.signal.mag_min = cfg.signal.mag_max = 10.0 / std::sqrt(8.0);
  cfg.signal.noise_norm = 1.0;
  cfg.nu2_norm = 1.0;
  cfg.trials = 4;
  const auto res = run_suite(cfg);
  EXPECT_GT(res.summary.norm_est, 0.0);
}

}  // namespace
