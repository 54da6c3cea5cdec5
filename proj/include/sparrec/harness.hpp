#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sparrec/common.hpp"
#include "sparrec/decoder.hpp"
#include "sparrec/ensemble.hpp"
#include "sparrec/io.hpp"
#include "sparrec/oracles.hpp"

// Signal generation, Monte Carlo trial running, and aggregation. Each trial
// draws a fresh matrix (per-signal guarantee), streams the signal into the
// sketch as point updates, optionally corrupts the measurements, decodes,
// and scores the result.

namespace sparrec {

enum class SignalKind { kExactSparse, kSparsePlusGaussian, kPowerLaw };

inline const char* to_string(SignalKind k) {
  switch (k) {
    case SignalKind::kExactSparse: return "exact_sparse";
    case SignalKind::kSparsePlusGaussian: return "sparse_plus_gaussian";
    case SignalKind::kPowerLaw: return "power_law";
  }
  return "?";
}

inline SignalKind signal_kind_from_string(const std::string& s) {
  if (s == "exact_sparse") return SignalKind::kExactSparse;
  if (s == "sparse_plus_gaussian") return SignalKind::kSparsePlusGaussian;
  if (s == "power_law") return SignalKind::kPowerLaw;
  throw std::invalid_argument("unknown signal kind: " + s);
}

struct SignalModel {
  SignalKind kind = SignalKind::kExactSparse;
  std::uint64_t n = 0;
  std::uint64_t k = 1;
  double mag_min = 0.5;   // heavy-entry magnitude range
  double mag_max = 1.5;
  double noise_norm = 0.0;  // exact l2 norm of the tail (0 = none)
  std::uint64_t seed = 0;
};

struct GeneratedSignal {
  std::vector<double> x;                         // dense, length n
  std::vector<std::uint64_t> support;            // sorted heavy positions
  std::vector<std::pair<std::uint64_t, double>> heavy;  // (pos, value), sorted
  std::vector<double> x_heavy;                   // dense heavy part only
  double nu1_norm = 0.0;
};

inline GeneratedSignal gen_signal(const SignalModel& model) {
  if (model.k > model.n || model.k < 1)
    throw std::invalid_argument("gen_signal: need 1 <= k <= n");
  if (model.mag_min <= 0.0 || model.mag_max < model.mag_min)
    throw std::invalid_argument("gen_signal: bad magnitude law");
  SplitMix64 rng(derive_seed(model.seed, {tag(SeedRole::kSignal)}));
  GeneratedSignal g;
  g.x.assign(model.n, 0.0);
  g.x_heavy.assign(model.n, 0.0);

  std::set<std::uint64_t> picked;
  while (picked.size() < model.k) picked.insert(rng.bounded(model.n));
  g.support.assign(picked.begin(), picked.end());

  std::vector<double> mags(model.k);
  if (model.kind == SignalKind::kPowerLaw) {
    // magnitudes interpolated geometrically from mag_max down to mag_min
    for (std::uint64_t r = 0; r < model.k; ++r) {
      const double t = model.k == 1 ? 0.0
                                    : static_cast<double>(r) /
                                          static_cast<double>(model.k - 1);
      mags[r] = model.mag_max * std::pow(model.mag_min / model.mag_max, t);
    }
    for (std::uint64_t r = model.k; r > 1; --r)
      std::swap(mags[r - 1], mags[rng.bounded(r)]);
  } else {
    for (std::uint64_t r = 0; r < model.k; ++r)
      mags[r] = model.mag_min + rng.next_double() * (model.mag_max - model.mag_min);
  }

  for (std::uint64_t r = 0; r < model.k; ++r) {
    const double sign = rng.bounded(2) == 0 ? 1.0 : -1.0;
    const double v = sign * mags[r];
    g.x[g.support[r]] = v;
    g.x_heavy[g.support[r]] = v;
    g.heavy.push_back({g.support[r], v});
  }

  const bool want_tail =
      model.kind != SignalKind::kExactSparse && model.noise_norm > 0.0 && model.n > model.k;
  if (want_tail) {
    std::vector<double> tail(model.n, 0.0);
    double norm2 = 0.0;
    for (std::uint64_t i = 0; i < model.n; ++i) {
      if (g.x_heavy[i] != 0.0) continue;
      tail[i] = rng.next_gaussian();
      norm2 += tail[i] * tail[i];
    }
    const double scale = model.noise_norm / std::sqrt(norm2);
    for (std::uint64_t i = 0; i < model.n; ++i) {
      tail[i] *= scale;
      g.x[i] += tail[i];
    }
    g.nu1_norm = model.noise_norm;
  }
  return g;
}

// Repo-recorded constant: weight of the measurement-noise term in the
// success predicate (error <= C*||nu1|| + alpha*log2(k)*||nu2||/normEst).
inline constexpr double kDefaultAlpha = 0.25;

struct TrialConfig {
  EnsembleParams params;     // seed field ignored; per-trial seeds derived
  SignalModel signal;        // n/k/seed filled from params and trial index
  double nu2_norm = 0.0;
  double success_c = 2.0;
  double alpha = kDefaultAlpha;
  std::uint64_t trials = 1;
  std::uint64_t seed = 0;
  bool fixed_matrix = false;  // debugging only; acceptance always redraws
  std::uint64_t prune_budget = 0;
  bool diagnostics = false;   // collect loop-invariant diagnostics vs truth
};

struct TrialReport {
  std::uint64_t index = 0;
  double error = 0.0;
  bool success = false;
  double encode_ms = 0.0;
  double decode_ms = 0.0;
  std::uint64_t m = 0;
  std::uint64_t max_column_sparsity = 0;
  DecodeStats stats;
  bool loop_invariant_ok = true;  // meaningful when diagnostics enabled
};

struct RunSummary {
  std::uint64_t trials = 0;
  std::uint64_t successes = 0;
  double success_rate = 0.0;
  std::uint64_t m = 0;
  double err_p25 = 0.0, err_p50 = 0.0, err_p75 = 0.0, err_p90 = 0.0, err_max = 0.0;
  double norm_est = 0.0;        // 0 when no nu2 term
  double loop_invariant_rate = 0.0;
};

inline double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

inline TrialReport run_trial(const TrialConfig& cfg, std::uint64_t t, double norm_est) {
  using clock = std::chrono::steady_clock;
  TrialReport rep;
  rep.index = t;

  EnsembleParams params = cfg.params;
  params.seed = derive_seed(cfg.seed, {tag(SeedRole::kTrialEnsemble),
                                       cfg.fixed_matrix ? 0 : t});
  const EnsemblePlan pl = plan(params);
  rep.m = pl.total_rows;

  SignalModel sm = cfg.signal;
  sm.n = params.n;
  sm.k = params.k;
  sm.seed = derive_seed(cfg.seed, {tag(SeedRole::kSignal), t});
  const GeneratedSignal sig = gen_signal(sm);

  const auto t0 = clock::now();
  Sketch sk = make_sketch(pl);
  for (std::uint64_t i = 0; i < sig.x.size(); ++i) {
    if (sig.x[i] == 0.0) continue;
    std::uint64_t count = 0;
    for_each_column_entry(pl, i, [&](std::uint64_t row, double val) {
      sk.values[pl.perm.forward[row]] += sig.x[i] * val;
      ++count;
    });
    rep.max_column_sparsity = std::max(rep.max_column_sparsity, count);
  }
  const auto t1 = clock::now();
  rep.encode_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

  if (cfg.nu2_norm > 0.0) {
    SplitMix64 rng(derive_seed(cfg.seed, {tag(SeedRole::kNoise), t}));
    std::vector<double> nu2(pl.total_rows);
    double n2 = 0.0;
    for (auto& v : nu2) {
      v = rng.next_gaussian();
      n2 += v * v;
    }
    const double scale = cfg.nu2_norm / std::sqrt(n2);
    for (auto& v : nu2) v *= scale;
    add_measurement_noise(sk, nu2);
  }

  DecodeOptions opts;
  opts.prune_budget = cfg.prune_budget;
  ResidualDiagnostics diags;
  if (cfg.diagnostics) {
    opts.truth = &sig.x;  // residual measured against the full signal
    double min_heavy = 0.0;
    for (const auto& [pos, val] : sig.heavy)
      if (min_heavy == 0.0 || std::abs(val) < min_heavy) min_heavy = std::abs(val);
    opts.spike_threshold = min_heavy / 2.0;
  }

  const auto t2 = clock::now();
  const RecoveredVector xhat =
      recover(pl, sk, opts, &rep.stats, cfg.diagnostics ? &diags : nullptr);
  const auto t3 = clock::now();
  rep.decode_ms = std::chrono::duration<double, std::milli>(t3 - t2).count();

  double err2 = 0.0;
  {
    std::vector<double> dense = xhat.to_dense(params.n);
    for (std::uint64_t i = 0; i < params.n; ++i) {
      const double e = sig.x[i] - dense[i];
      err2 += e * e;
    }
  }
  rep.error = std::sqrt(err2);

  double allowed = cfg.success_c * sig.nu1_norm;
  if (cfg.nu2_norm > 0.0 && norm_est > 0.0)
    allowed += cfg.alpha * std::log2(static_cast<double>(params.k)) * cfg.nu2_norm / norm_est;
  rep.success = rep.error <= allowed + 1e-12;

  if (cfg.diagnostics) {
    const double k_d = static_cast<double>(params.k);
    for (const auto& d : diags.per_iteration) {
      const double budget = k_d / std::pow(2.0, d.j);
      const double tail_budget = 2.0 - std::pow(0.75, d.j);
      if (static_cast<double>(d.undiscovered) > budget ||
          d.tail_norm > tail_budget + 1e-9) {
        rep.loop_invariant_ok = false;
        break;
      }
    }
  }
  return rep;
}

inline unsigned worker_count() {
  if (const char* env = std::getenv("SPARREC_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

struct SuiteResult {
  RunSummary summary;
  std::vector<TrialReport> reports;  // sorted by trial index
};

inline SuiteResult run_suite(const TrialConfig& cfg) {
  if (cfg.trials < 1) throw std::invalid_argument("run_suite: trials >= 1");
  if (cfg.success_c < 1.0) throw std::invalid_argument("run_suite: success_c >= 1");
  double norm_est = 0.0;
  if (cfg.nu2_norm > 0.0) {
    EnsembleParams p = cfg.params;
    norm_est = operator_norm_estimate(p, 100, derive_seed(cfg.seed, {tag(SeedRole::kNormEstimate)}))
                   .quantile_75;
  }

  std::vector<TrialReport> reports(cfg.trials);
  const unsigned workers =
      static_cast<unsigned>(std::min<std::uint64_t>(worker_count(), cfg.trials));
  if (workers <= 1) {
    for (std::uint64_t t = 0; t < cfg.trials; ++t) reports[t] = run_trial(cfg, t, norm_est);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    std::exception_ptr first_error;
    std::mutex error_mutex;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w]() {
        try {
          for (std::uint64_t t = w; t < cfg.trials; t += workers)
            reports[t] = run_trial(cfg, t, norm_est);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  RunSummary s;
  s.trials = cfg.trials;
  s.norm_est = norm_est;
  s.m = reports.front().m;
  std::vector<double> errs;
  errs.reserve(cfg.trials);
  std::uint64_t loop_ok = 0;
  for (const auto& r : reports) {
    if (r.success) ++s.successes;
    if (r.loop_invariant_ok) ++loop_ok;
    errs.push_back(r.error);
  }
  std::sort(errs.begin(), errs.end());
  s.success_rate = static_cast<double>(s.successes) / static_cast<double>(cfg.trials);
  s.err_p25 = quantile_sorted(errs, 0.25);
  s.err_p50 = quantile_sorted(errs, 0.50);
  s.err_p75 = quantile_sorted(errs, 0.75);
  s.err_p90 = quantile_sorted(errs, 0.90);
  s.err_max = errs.back();
  s.loop_invariant_rate = static_cast<double>(loop_ok) / static_cast<double>(cfg.trials);
  return {s, std::move(reports)};
}

// --- config / result serialization -----------------------------------------

inline TrialConfig trial_config_from_json(const json& j) {
  TrialConfig cfg;
  cfg.params = params_from_json(j);
  if (j.contains("signal")) {
    const json& s = j.at("signal");
    cfg.signal.kind = signal_kind_from_string(s.value("kind", std::string("exact_sparse")));
    cfg.signal.mag_min = s.value("mag_min", 0.5);
    cfg.signal.mag_max = s.value("mag_max", 1.5);
    cfg.signal.noise_norm = s.value("noise_norm", 0.0);
  }
  cfg.nu2_norm = j.value("nu2_norm", 0.0);
  cfg.success_c = j.value("success_c", 2.0);
  cfg.alpha = j.value("alpha", kDefaultAlpha);
  cfg.trials = j.value("trials", std::uint64_t{1});
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.fixed_matrix = j.value("fixed_matrix", false);
  cfg.prune_budget = j.value("prune", std::uint64_t{0});
  cfg.diagnostics = j.value("diagnostics", false);
  return cfg;
}

inline json summary_to_json(const RunSummary& s) {
  return json{{"trials", s.trials},
              {"successes", s.successes},
              {"success_rate", s.success_rate},
              {"m", s.m},
              {"error",
               json{{"p25", s.err_p25},
                    {"p50", s.err_p50},
                    {"p75", s.err_p75},
                    {"p90", s.err_p90},
                    {"max", s.err_max}}},
              {"norm_est", s.norm_est},
              {"loop_invariant_rate", s.loop_invariant_rate}};
}

inline void write_trial_rows_csv(const std::vector<TrialReport>& rows, std::ostream& os) {
  os << "trial,error,success,encode_ms,decode_ms,m,max_column_sparsity,"
        "sketch_cells_read,column_entries_read,loop_invariant_ok\n";
  os << std::setprecision(17);
  for (const auto& r : rows) {
    os << r.index << ',' << r.error << ',' << (r.success ? 1 : 0) << ','
       << r.encode_ms << ',' << r.decode_ms << ',' << r.m << ','
       << r.max_column_sparsity << ',' << r.stats.sketch_cells_read << ','
       << r.stats.column_entries_read << ',' << (r.loop_invariant_ok ? 1 : 0)
       << '\n';
  }
}

}  // namespace sparrec
