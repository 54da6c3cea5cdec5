#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <vector>

#include "sparrec/common.hpp"
#include "sparrec/ensemble.hpp"

// Sublinear recovery loop: unpermute once, then per iteration subtract the
// current accumulator from that iteration's slice (via column recomputation,
// never a dense product), identify candidate positions from the bucket
// sections, estimate them with signed medians, and accumulate.

namespace sparrec {

struct RecoveredEntry {
  double value = 0.0;
  int origin = 0;  // iteration that last touched the entry (diagnostic)
};

struct RecoveredVector {
  std::map<std::uint64_t, RecoveredEntry> entries;  // position -> entry, no zeros

  std::vector<double> to_dense(std::uint64_t n) const {
    std::vector<double> x(n, 0.0);
    for (const auto& [p, e] : entries) x[p] = e.value;
    return x;
  }
};

struct CandidateInfo {
  std::uint64_t position;
  std::uint32_t copy;
  std::uint64_t bucket;
  std::uint64_t local_index;
  double median_magnitude;
};

struct IdentifyResult {
  std::set<std::uint64_t> candidates;        // deduplicated, < n
  std::vector<CandidateInfo> diagnostics;    // one per accepted section
};

struct DecodeStats {
  std::uint64_t sketch_cells_read = 0;
  std::uint64_t column_entries_read = 0;

  std::uint64_t touches() const { return sketch_cells_read + column_entries_read; }
};

struct IterationDiagnostics {
  int j = 0;
  std::uint64_t undiscovered = 0;  // residual positions above half the
                                   // smallest heavy magnitude
  double tail_norm = 0.0;          // residual energy off those positions
  std::uint64_t candidates = 0;
};

struct ResidualDiagnostics {
  std::vector<IterationDiagnostics> per_iteration;
};

struct DecodeOptions {
  std::uint64_t prune_budget = 0;             // 0 = no pruning
  const std::vector<double>* truth = nullptr; // enables residual diagnostics
  double spike_threshold = 0.0;               // 0: derive from truth (half min |x_k|)
};

// Identification over one iteration slice (local coordinates: index 0 is the
// iteration's first unpermuted row). Sections that fail block decode, point
// past the bucket occupancy, or name a virtual position contribute nothing.
inline IdentifyResult identify(const EnsemblePlan& pl, int j,
                               std::span<const double> iter_slice,
                               DecodeStats* stats = nullptr) {
  const IterationLayout& it = pl.layout[static_cast<std::size_t>(j)];
  const IterationHashes& hs = pl.hashes[static_cast<std::size_t>(j)];
  if (iter_slice.size() != it.rows) throw std::invalid_argument("identify: bad slice");
  IdentifyResult out;
  std::vector<double> mags(static_cast<std::size_t>(pl.params.ones_rows));
  for (std::uint32_t r = 0; r < it.copies; ++r) {
    const std::uint64_t base = it.id_offset(r) - it.iter_offset;
    const BucketMap& bm = hs.id_map[r];
    for (std::uint64_t q = 0; q < it.id_buckets; ++q) {
      const std::uint64_t occ = bm.occupancy(q);
      if (occ == 0) continue;
      const std::uint64_t sec = base + q * it.section_len;
      for (int s = 0; s < pl.params.ones_rows; ++s)
        mags[static_cast<std::size_t>(s)] = std::abs(iter_slice[sec + s]);
      if (stats) stats->sketch_cells_read += it.section_len;
      const double u_med = lower_median(mags);
      if (u_med == 0.0) continue;
      std::uint64_t loc = 0;
      bool ok = true;
      for (int t = 0; t < it.blocks && ok; ++t) {
        std::uint32_t word = 0;
        for (int l = 0; l < pl.code.code_bits; ++l) {
          const std::uint64_t row =
              sec + pl.params.ones_rows +
              static_cast<std::uint64_t>(t) * pl.code.code_bits + l;
          if (std::abs(iter_slice[row]) > u_med / 2.0) word |= (1u << l);
        }
        const auto dec = decode_block(pl.code, word);
        if (!dec) {
          ok = false;
        } else {
          loc = (loc << pl.params.block_bits) | dec->msg;
        }
      }
      if (!ok || loc >= occ) continue;
      const std::uint64_t lambda = bm.member_at(q, loc);
      if (lambda >= pl.params.n) continue;
      out.candidates.insert(lambda);
      out.diagnostics.push_back({lambda, r, q, loc, u_med});
    }
  }
  return out;
}

// Signed-median estimation: one measurement per copy by the partition
// construction; even copy counts take the mean of the two central values.
inline std::map<std::uint64_t, double> estimate(const EnsemblePlan& pl, int j,
                                                std::span<const double> iter_slice,
                                                const std::set<std::uint64_t>& candidates,
                                                DecodeStats* stats = nullptr) {
  const IterationLayout& it = pl.layout[static_cast<std::size_t>(j)];
  const IterationHashes& hs = pl.hashes[static_cast<std::size_t>(j)];
  if (iter_slice.size() != it.rows) throw std::invalid_argument("estimate: bad slice");
  std::map<std::uint64_t, double> b;
  std::vector<double> vals(it.copies);
  for (const std::uint64_t lambda : candidates) {
    for (std::uint32_t r = 0; r < it.copies; ++r) {
      const std::uint64_t q = hs.est_map[r].bucket_of(lambda);
      const std::uint64_t row = it.est_offset(r) - it.iter_offset + q;
      vals[r] = iter_slice[row] * hs.est_sign[r].sign_at(q, lambda);
    }
    if (stats) stats->sketch_cells_read += it.copies;
    const double v = center_median(vals);
    if (v != 0.0) b[lambda] = v;
  }
  return b;
}

// Keep the budget largest-magnitude entries, ties broken by lower position.
inline RecoveredVector prune(const RecoveredVector& a, std::uint64_t budget) {
  if (budget < 1) throw std::invalid_argument("prune: budget must be >= 1");
  if (a.entries.size() <= budget) return a;
  std::vector<std::pair<std::uint64_t, RecoveredEntry>> items(a.entries.begin(),
                                                              a.entries.end());
  std::sort(items.begin(), items.end(), [](const auto& x, const auto& y) {
    const double mx = std::abs(x.second.value), my = std::abs(y.second.value);
    if (mx != my) return mx > my;
    return x.first < y.first;
  });
  RecoveredVector out;
  for (std::uint64_t i = 0; i < budget; ++i)
    out.entries.insert(items[static_cast<std::size_t>(i)]);
  return out;
}

namespace detail {

inline void residual_diagnostics(int j, const std::vector<double>& truth,
                                 const RecoveredVector& a, double threshold,
                                 ResidualDiagnostics* diags) {
  IterationDiagnostics d;
  d.j = j;
  double tail2 = 0.0;
  for (std::uint64_t p = 0; p < truth.size(); ++p) {
    double r = truth[p];
    const auto itr = a.entries.find(p);
    if (itr != a.entries.end()) r -= itr->second.value;
    if (std::abs(r) > threshold)
      ++d.undiscovered;
    else
      tail2 += r * r;
  }
  // accumulator entries outside the truth's index range cannot occur (both
  // live on [0, n)), so the loop above covers everything
  d.tail_norm = std::sqrt(tail2);
  diags->per_iteration.push_back(d);
}

}  // namespace detail

inline RecoveredVector recover(const EnsemblePlan& pl, const Sketch& sk,
                               const DecodeOptions& opts = {},
                               DecodeStats* stats = nullptr,
                               ResidualDiagnostics* diags = nullptr) {
  if (sk.digest != pl.digest) throw std::runtime_error("recover: sketch/spec digest mismatch");
  if (sk.values.size() != pl.total_rows) throw std::runtime_error("recover: corrupt sketch length");

  std::vector<double> y(pl.total_rows);
  for (std::uint64_t g = 0; g < pl.total_rows; ++g) y[g] = sk.values[pl.perm.forward[g]];
  if (stats) stats->sketch_cells_read += pl.total_rows;

  double threshold = opts.spike_threshold;
  if (diags && opts.truth && threshold == 0.0) {
    // half the smallest heavy magnitude of the supplied truth
    double min_mag = 0.0;
    for (double v : *opts.truth)
      if (v != 0.0 && (min_mag == 0.0 || std::abs(v) < min_mag)) min_mag = std::abs(v);
    threshold = min_mag / 2.0;
  }

  RecoveredVector a;
  std::vector<double> slice;
  for (int j = 0; j < pl.iterations; ++j) {
    const IterationLayout& it = pl.layout[static_cast<std::size_t>(j)];
    slice.assign(y.begin() + static_cast<std::ptrdiff_t>(it.iter_offset),
                 y.begin() + static_cast<std::ptrdiff_t>(it.iter_offset + it.rows));
    for (const auto& [p, e] : a.entries) {
      for_each_column_entry_at(pl, j, p, [&](std::uint64_t row, double val) {
        slice[row - it.iter_offset] -= e.value * val;
        if (stats) ++stats->column_entries_read;
      });
    }
    if (diags && opts.truth)
      detail::residual_diagnostics(j, *opts.truth, a, threshold, diags);

    IdentifyResult ids = identify(pl, j, slice, stats);
    const auto b = estimate(pl, j, slice, ids.candidates, stats);
    for (const auto& [p, v] : b) {
      auto itr = a.entries.find(p);
      if (itr == a.entries.end()) {
        a.entries[p] = {v, j};
      } else {
        itr->second.value += v;
        itr->second.origin = j;
        if (itr->second.value == 0.0) a.entries.erase(itr);
      }
    }
    if (diags && opts.truth)
      diags->per_iteration.back().candidates = ids.candidates.size();
  }
  if (opts.prune_budget > 0) return prune(a, opts.prune_budget);
  return a;
}

}  // namespace sparrec
