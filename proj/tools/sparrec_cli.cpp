// Command-line surface: plan/encode/update/decode for working with sketch
// files, trial/bench for Monte Carlo suites, bounds for the tail-bound
// evaluators.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparrec/harness.hpp"
#include "sparrec/io.hpp"
#include "sparrec/oracles.hpp"

using namespace sparrec;
using nlohmann::json;

namespace {

constexpr int kExitError = 1;
constexpr int kExitDigestMismatch = 2;

struct PlanFlags {
  EnsembleParams params;
  std::string reps = "linear";
  std::string out;
};

void add_param_flags(CLI::App* cmd, PlanFlags& f) {
  cmd->add_option("--n", f.params.n, "signal length")->required();
  cmd->add_option("--k", f.params.k, "sparsity target")->required();
  cmd->add_option("--eps", f.params.eps, "oversampling factor");
  cmd->add_option("--seed", f.params.seed, "master seed");
  cmd->add_option("--reps-mode", f.reps, "repetition schedule: linear|log");
  cmd->add_option("--gamma-id", f.params.gamma_id, "identification row multiplier");
  cmd->add_option("--gamma-est", f.params.gamma_est, "estimation row multiplier");
  cmd->add_option("--c-id", f.params.c_id, "identification geometric ratio");
  cmd->add_option("--c-est", f.params.c_est, "estimation geometric ratio");
  cmd->add_option("--block-bits", f.params.block_bits, "code message bits (0 = auto)");
  cmd->add_option("--rel-dist", f.params.target_rel_dist, "code relative distance target");
  cmd->add_option("--ones-rows", f.params.ones_rows, "magnitude rows per section (0 = auto)");
}

int run_bench_or_trial(const std::string& config_path, const std::string& out_path,
                       const std::string& rows_path, bool bench) {
  std::ifstream is(config_path);
  if (!is) throw std::runtime_error("cannot read " + config_path);
  json cfg_json;
  is >> cfg_json;
  const TrialConfig cfg = trial_config_from_json(cfg_json);
  const SuiteResult res = run_suite(cfg);

  json out = summary_to_json(res.summary);
  if (bench) {
    std::vector<double> enc, dec, touch;
    for (const auto& r : res.reports) {
      enc.push_back(r.encode_ms);
      dec.push_back(r.decode_ms);
      touch.push_back(static_cast<double>(r.stats.touches()));
    }
    std::sort(enc.begin(), enc.end());
    std::sort(dec.begin(), dec.end());
    std::sort(touch.begin(), touch.end());
    out["timing"] = json{{"encode_ms_p50", quantile_sorted(enc, 0.5)},
                         {"encode_ms_p90", quantile_sorted(enc, 0.9)},
                         {"decode_ms_p50", quantile_sorted(dec, 0.5)},
                         {"decode_ms_p90", quantile_sorted(dec, 0.9)},
                         {"touches_p50", quantile_sorted(touch, 0.5)},
                         {"touches_max", touch.back()}};
  }
  if (out_path.empty()) {
    std::cout << out.dump(2) << '\n';
  } else {
    std::ofstream os(out_path);
    if (!os) throw std::runtime_error("cannot write " + out_path);
    os << out.dump(2) << '\n';
  }
  if (!rows_path.empty()) {
    std::ofstream os(rows_path);
    if (!os) throw std::runtime_error("cannot write " + rows_path);
    write_trial_rows_csv(res.reports, os);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"layered sparse-recovery sketches: plan, encode, decode, evaluate"};
  app.require_subcommand(1);

  // --- plan ---
  PlanFlags plan_flags;
  auto* cmd_plan = app.add_subcommand("plan", "derive a measurement plan and write its spec file");
  add_param_flags(cmd_plan, plan_flags);
  cmd_plan->add_option("--out", plan_flags.out, "output spec JSON path")->required();

  // --- encode ---
  std::string spec_path, signal_path, sketch_path, out_path;
  auto* cmd_encode = app.add_subcommand("encode", "encode a signal CSV into a sketch file");
  cmd_encode->add_option("--spec", spec_path, "spec JSON")->required();
  cmd_encode->add_option("--signal", signal_path, "signal CSV (position,value)")->required();
  cmd_encode->add_option("--out", out_path, "output sketch file")->required();

  // --- update ---
  std::string upd_spec, upd_sketch, upd_out;
  auto* cmd_update = app.add_subcommand("update", "apply (position,delta) lines from stdin to a sketch");
  cmd_update->add_option("--spec", upd_spec, "spec JSON")->required();
  cmd_update->add_option("--sketch", upd_sketch, "sketch file to update")->required();
  cmd_update->add_option("--out", upd_out, "output path (default: in place)");

  // --- decode ---
  std::string dec_spec, dec_sketch, dec_out;
  bool dec_json = false;
  std::uint64_t dec_prune = 0;
  auto* cmd_decode = app.add_subcommand("decode", "recover a sparse vector from a sketch");
  cmd_decode->add_option("--spec", dec_spec, "spec JSON")->required();
  cmd_decode->add_option("--sketch", dec_sketch, "sketch file")->required();
  cmd_decode->add_option("--out", dec_out, "output path (default: stdout)");
  cmd_decode->add_flag("--json", dec_json, "emit JSON instead of CSV");
  cmd_decode->add_option("--prune", dec_prune, "keep only this many largest entries");

  // --- trial / bench ---
  std::string trial_cfg, trial_out, trial_rows;
  auto* cmd_trial = app.add_subcommand("trial", "run a Monte Carlo recovery suite from a config JSON");
  cmd_trial->add_option("--config", trial_cfg, "TrialConfig JSON")->required();
  cmd_trial->add_option("--out", trial_out, "summary JSON path (default: stdout)");
  cmd_trial->add_option("--rows", trial_rows, "per-trial CSV path");

  std::string bench_cfg, bench_out, bench_rows;
  auto* cmd_bench = app.add_subcommand("bench", "run a suite and report timing/touch quantiles");
  cmd_bench->add_option("--config", bench_cfg, "TrialConfig JSON")->required();
  cmd_bench->add_option("--out", bench_out, "summary JSON path (default: stdout)");
  cmd_bench->add_option("--rows", bench_rows, "per-trial CSV path");

  // --- bounds ---
  auto* cmd_bounds = app.add_subcommand("bounds", "evaluate tail bounds");
  cmd_bounds->require_subcommand(1);
  double ch_p = 0.1, ch_theta = 0.5;
  std::uint64_t ch_n = 10;
  auto* cmd_chernoff = cmd_bounds->add_subcommand("chernoff", "binary sum upper-tail bound");
  cmd_chernoff->add_option("--p", ch_p, "per-variable mean")->required();
  cmd_chernoff->add_option("--theta", ch_theta, "threshold fraction")->required();
  cmd_chernoff->add_option("--trials", ch_n, "number of variables n")->required();

  BoundQuery bq;
  auto* cmd_poisson = cmd_bounds->add_subcommand("poisson", "balls-and-bins occupancy bound");
  cmd_poisson->add_option("--balls", bq.balls, "balls m")->required();
  cmd_poisson->add_option("--bins", bq.bins, "bins n")->required();
  cmd_poisson->add_option("--p", bq.p, "per-bin probability")->required();
  cmd_poisson->add_option("--occupancy", bq.h, "occupancy threshold h")->required();
  cmd_poisson->add_option("--theta", bq.theta, "bin fraction")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_plan->parsed()) {
      plan_flags.params.reps_mode = reps_mode_from_string(plan_flags.reps);
      const EnsemblePlan pl = plan(plan_flags.params);
      write_spec_file(pl, plan_flags.out);
      std::cerr << "plan: m=" << pl.total_rows << " iterations=" << pl.iterations
                << " digest=" << hex64(pl.digest) << '\n';
      return 0;
    }
    if (cmd_encode->parsed()) {
      const EnsemblePlan pl = read_spec_file(spec_path);
      const auto entries = read_signal_file(signal_path);
      for (const auto& [pos, val] : entries) {
        (void)val;
        if (pos >= pl.params.n) throw std::runtime_error("signal position out of range");
      }
      const Sketch sk = encode_sparse(pl, entries);
      write_sketch_file(sk, out_path);
      return 0;
    }
    if (cmd_update->parsed()) {
      const EnsemblePlan pl = read_spec_file(upd_spec);
      Sketch sk = read_sketch_file(upd_sketch);
      if (sk.digest != pl.digest) {
        std::cerr << "update: sketch does not match spec digest\n";
        return kExitDigestMismatch;
      }
      std::string line;
      while (std::getline(std::cin, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw std::runtime_error("malformed update line: " + line);
        update(pl, sk, std::stoull(line.substr(0, comma)), std::stod(line.substr(comma + 1)));
      }
      write_sketch_file(sk, upd_out.empty() ? upd_sketch : upd_out);
      return 0;
    }
    if (cmd_decode->parsed()) {
      const EnsemblePlan pl = read_spec_file(dec_spec);
      const Sketch sk = read_sketch_file(dec_sketch);
      if (sk.digest != pl.digest) {
        std::cerr << "decode: sketch does not match spec digest\n";
        return kExitDigestMismatch;
      }
      DecodeOptions opts;
      opts.prune_budget = dec_prune;
      const RecoveredVector xhat = recover(pl, sk, opts);
      std::ostringstream body;
      if (dec_json)
        body << recovered_to_json(xhat).dump(2) << '\n';
      else
        write_recovered_csv(xhat, body);
      if (dec_out.empty()) {
        std::cout << body.str();
      } else {
        std::ofstream os(dec_out);
        if (!os) throw std::runtime_error("cannot write " + dec_out);
        os << body.str();
      }
      return 0;
    }
    if (cmd_trial->parsed()) return run_bench_or_trial(trial_cfg, trial_out, trial_rows, false);
    if (cmd_bench->parsed()) return run_bench_or_trial(bench_cfg, bench_out, bench_rows, true);
    if (cmd_chernoff->parsed()) {
      const double bound = chernoff_binary_bound(ch_p, ch_theta, ch_n);
      std::cout << json{{"inputs", json{{"p", ch_p}, {"theta", ch_theta}, {"trials", ch_n}}},
                        {"bound", bound}}
                       .dump(2)
                << '\n';
      return 0;
    }
    if (cmd_poisson->parsed()) {
      const double bound = poisson_bins_bound(bq);
      const double mp = static_cast<double>(bq.balls) * bq.p;
      double h_fact = 1.0;
      for (std::uint64_t i = 2; i <= bq.h; ++i) h_fact *= static_cast<double>(i);
      const double q = std::exp(-mp) * std::pow(mp, static_cast<double>(bq.h)) /
                       (h_fact * (1.0 - static_cast<double>(bq.h) / mp));
      std::cout << json{{"inputs", json{{"balls", bq.balls},
                                        {"bins", bq.bins},
                                        {"p", bq.p},
                                        {"occupancy", bq.h},
                                        {"theta", bq.theta}}},
                        {"q", q},
                        {"bound", bound}}
                       .dump(2)
                << '\n';
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
