#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sparrec/block_code.hpp"
#include "sparrec/common.hpp"
#include "sparrec/hashing.hpp"

// The layered measurement ensemble: a permuted stack of per-iteration
// blocks, each block holding repeated copies of an estimation part (one
// signed bucket row per position) and an identification part (per bucket, a
// run of ones rows followed by code rows that spell out the position's local
// index). Nothing is ever materialized: any column can be regenerated from
// the seed in O(column sparsity).

namespace sparrec {

enum class RepsMode { kLinear, kLog };

inline const char* to_string(RepsMode m) {
  return m == RepsMode::kLinear ? "linear" : "log";
}

inline RepsMode reps_mode_from_string(const std::string& s) {
  if (s == "linear") return RepsMode::kLinear;
  if (s == "log") return RepsMode::kLog;
  throw std::invalid_argument("reps_mode must be 'linear' or 'log'");
}

struct EnsembleParams {
  std::uint64_t n = 0;  // signal length
  std::uint64_t k = 1;  // sparsity target
  double eps = 1.0;     // oversampling: k/eps replaces k in all row counts
  double c_id = 2.0 / 3.0;
  double c_est = 8.0 / 9.0;
  double gamma_id = 4.0;
  double gamma_est = 32.0;
  RepsMode reps_mode = RepsMode::kLinear;
  int block_bits = 0;            // 0: derive max(2, ceil(lg lg d))
  double target_rel_dist = 0.45;
  int ones_rows = 0;             // 0: derive = code_bits
  std::uint64_t max_rows = std::uint64_t{1} << 26;
  std::uint64_t seed = 0;

  void validate() const {
    if (n < 1) throw std::invalid_argument("params: n must be >= 1");
    if (k < 1 || k > n) throw std::invalid_argument("params: need 1 <= k <= n");
    if (!(eps > 0.0)) throw std::invalid_argument("params: eps must be > 0");
    if (!(c_id > 0.5 && c_id < 1.0)) throw std::invalid_argument("params: c_id in (1/2,1)");
    if (!(c_est > 0.5 && c_est < 1.0)) throw std::invalid_argument("params: c_est in (1/2,1)");
    if (gamma_id <= 0.0 || gamma_est <= 0.0) throw std::invalid_argument("params: gammas > 0");
  }
};

// Fitted constant for the per-column non-zero bound (see oracles/acceptance).
inline constexpr double kColumnSparsityBeta = 4.0;

struct IterationLayout {
  int j = 0;
  std::uint32_t copies = 1;        // repetitions of everything at this iteration
  std::uint64_t id_buckets = 1;
  std::uint64_t slot_width = 1;    // ceil(d / id_buckets)
  std::uint64_t bucket_cap = 2;    // pow2 >= 2 * slot_width; local index space
  int index_bits = 1;              // log2(bucket_cap)
  int blocks = 1;                  // code blocks per section
  std::uint64_t section_len = 0;   // ones_rows + blocks * code_bits
  std::uint64_t est_rows = 1;      // estimation buckets per copy
  std::uint64_t est_slot_width = 1;
  std::uint64_t iter_offset = 0;   // first unpermuted row of this iteration
  std::uint64_t rows = 0;          // copies * (est_rows + id_buckets * section_len)

  std::uint64_t est_offset(std::uint32_t copy) const {
    return iter_offset + copy * est_rows;
  }
  std::uint64_t id_offset(std::uint32_t copy) const {
    return iter_offset + copies * static_cast<std::uint64_t>(est_rows) +
           copy * id_buckets * section_len;
  }
};

struct IterationHashes {
  std::vector<BucketMap> id_map;    // one per copy
  std::vector<BucketMap> est_map;
  std::vector<SignFamily> id_sign;  // rows = id_buckets * section_len
  std::vector<SignFamily> est_sign; // rows = est_rows
};

struct EnsemblePlan {
  EnsembleParams params;  // with derived fields resolved
  std::uint64_t d = 2;    // prime domain, next_prime(n)
  int iterations = 1;     // J
  CodeTable code;
  std::vector<IterationLayout> layout;
  std::vector<IterationHashes> hashes;
  PermutationSpec perm;
  std::uint64_t total_rows = 0;
  std::uint64_t digest = 0;
};

inline std::uint32_t reps_at(RepsMode mode, int j) {
  if (mode == RepsMode::kLinear) return static_cast<std::uint32_t>(j + 1);
  const double r = std::ceil(std::log2(static_cast<double>(j) + 2.0) - 1e-12);
  return static_cast<std::uint32_t>(std::max(1.0, r));
}

// Canonical digest over everything that determines the matrix.
inline std::uint64_t spec_digest(const EnsembleParams& p, std::uint64_t d,
                                 int iterations, const CodeTable& code,
                                 const std::vector<IterationLayout>& layout,
                                 std::uint64_t total_rows) {
  std::ostringstream os;
  os.precision(17);  // round-trip exact doubles
  os << p.n << '|' << p.k << '|' << p.eps << '|' << p.c_id << '|' << p.c_est
     << '|' << p.gamma_id << '|' << p.gamma_est << '|' << to_string(p.reps_mode)
     << '|' << p.block_bits << '|' << p.target_rel_dist << '|' << p.ones_rows
     << '|' << p.seed << '|' << d << '|' << iterations << '|' << code.msg_bits
     << '|' << code.code_bits << '|' << code.min_dist;
  for (std::uint32_t w : code.words) os << ',' << w;
  for (const auto& it : layout)
    os << '|' << it.copies << ':' << it.id_buckets << ':' << it.slot_width
       << ':' << it.bucket_cap << ':' << it.est_rows << ':' << it.rows;
  os << '|' << total_rows;
  return fnv1a64(os.str());
}

inline EnsemblePlan plan(const EnsembleParams& in) {
  in.validate();
  EnsemblePlan pl;
  pl.params = in;
  pl.d = next_prime(in.n < 2 ? 2 : in.n);
  EnsembleParams& p = pl.params;

  const double k_eff = static_cast<double>(p.k) / p.eps;
  pl.iterations = std::max(1, static_cast<int>(std::ceil(std::log2(std::max(1.0, k_eff)) - 1e-12)));

  if (p.block_bits == 0) {
    const double lg_lg = std::log2(std::log2(static_cast<double>(pl.d)));
    p.block_bits = std::max(2, static_cast<int>(std::ceil(lg_lg - 1e-12)));
  }
  pl.code = build_code(p.block_bits, p.target_rel_dist);
  if (p.ones_rows == 0) p.ones_rows = pl.code.code_bits;

  std::uint64_t off = 0;
  for (int j = 0; j < pl.iterations; ++j) {
    IterationLayout it;
    it.j = j;
    it.copies = reps_at(p.reps_mode, j);
    const double scale_id = p.gamma_id * k_eff * std::pow(p.c_id, j);
    const double scale_est = p.gamma_est * k_eff * std::pow(p.c_est, j);
    it.id_buckets = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(scale_id - 1e-12)));
    it.est_rows = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(scale_est - 1e-12)));
    it.slot_width = (pl.d + it.id_buckets - 1) / it.id_buckets;
    it.bucket_cap = next_pow2(2 * it.slot_width);
    it.index_bits = log2_exact(it.bucket_cap);
    it.blocks = (it.index_bits + p.block_bits - 1) / p.block_bits;
    it.section_len = static_cast<std::uint64_t>(p.ones_rows) +
                     static_cast<std::uint64_t>(it.blocks) * pl.code.code_bits;
    it.est_slot_width = (pl.d + it.est_rows - 1) / it.est_rows;
    it.iter_offset = off;
    it.rows = static_cast<std::uint64_t>(it.copies) *
              (it.est_rows + it.id_buckets * it.section_len);
    off += it.rows;
    if (off > p.max_rows)
      throw std::runtime_error("plan: total rows exceed configured cap");
    pl.layout.push_back(it);
  }
  pl.total_rows = off;

  for (const auto& it : pl.layout) {
    IterationHashes h;
    const std::uint64_t j = static_cast<std::uint64_t>(it.j);
    for (std::uint32_t r = 0; r < it.copies; ++r) {
      h.id_map.push_back(BucketMap::make(
          AffineHash::draw(derive_seed(p.seed, {tag(SeedRole::kIdBucket), j, r}), pl.d),
          it.slot_width));
      h.est_map.push_back(BucketMap::make(
          AffineHash::draw(derive_seed(p.seed, {tag(SeedRole::kEstBucket), j, r}), pl.d),
          it.est_slot_width));
      h.id_sign.push_back(SignFamily::derive(p.seed, SeedRole::kIdSign, j, r,
                                             it.id_buckets * it.section_len, pl.d));
      h.est_sign.push_back(SignFamily::derive(p.seed, SeedRole::kEstSign, j, r,
                                              it.est_rows, pl.d));
    }
    pl.hashes.push_back(std::move(h));
  }

  pl.perm = random_permutation(pl.total_rows,
                               derive_seed(p.seed, {tag(SeedRole::kPermutation)}));
  pl.digest = spec_digest(p, pl.d, pl.iterations, pl.code, pl.layout, pl.total_rows);
  return pl;
}

// --- column access -----------------------------------------------------

struct ColumnEntry {
  std::uint64_t row;  // permuted (sketch) row for column(); unpermuted in
                      // the per-iteration enumerators below
  double val;         // always +-1
};

using ColumnView = std::vector<ColumnEntry>;

// Contributions of position i within iteration j, rows given unpermuted.
template <typename F>
void for_each_column_entry_at(const EnsemblePlan& pl, int j, std::uint64_t i, F&& f) {
  const IterationLayout& it = pl.layout[static_cast<std::size_t>(j)];
  const IterationHashes& hs = pl.hashes[static_cast<std::size_t>(j)];
  const int mc = pl.params.block_bits;
  for (std::uint32_t r = 0; r < it.copies; ++r) {
    const BucketMap& bm = hs.id_map[r];
    if (bm.active(i)) {
      const auto [q, loc] = bm.rank_of(i);
      const std::uint64_t section = q * it.section_len;
      const std::uint64_t base = it.id_offset(r);
      const SignFamily& sf = hs.id_sign[r];
      for (int s = 0; s < pl.params.ones_rows; ++s) {
        const std::uint64_t local = section + static_cast<std::uint64_t>(s);
        f(base + local, static_cast<double>(sf.sign_at(local, i)));
      }
      for (int t = 0; t < it.blocks; ++t) {
        const int shift = (it.blocks - 1 - t) * mc;
        const std::uint32_t msg =
            static_cast<std::uint32_t>((loc >> shift) & ((std::uint64_t{1} << mc) - 1));
        const std::uint32_t cw = pl.code.words[msg];
        for (int l = 0; l < pl.code.code_bits; ++l) {
          if ((cw >> l) & 1u) {
            const std::uint64_t local = section + pl.params.ones_rows +
                                        static_cast<std::uint64_t>(t) * pl.code.code_bits +
                                        static_cast<std::uint64_t>(l);
            f(base + local, static_cast<double>(sf.sign_at(local, i)));
          }
        }
      }
    }
    const BucketMap& em = hs.est_map[r];
    if (em.active(i)) {
      const std::uint64_t q = em.bucket_of(i);
      f(it.est_offset(r) + q, static_cast<double>(hs.est_sign[r].sign_at(q, i)));
    }
  }
}

template <typename F>
void for_each_column_entry(const EnsemblePlan& pl, std::uint64_t i, F&& f) {
  for (int j = 0; j < pl.iterations; ++j) for_each_column_entry_at(pl, j, i, f);
}

// Full column of position i, routed through the permutation and sorted by
// sketch row.
inline ColumnView column(const EnsemblePlan& pl, std::uint64_t i) {
  if (i >= pl.params.n) throw std::out_of_range("column: index out of range");
  ColumnView v;
  for_each_column_entry(pl, i, [&](std::uint64_t row, double val) {
    v.push_back({pl.perm.forward[row], val});
  });
  std::sort(v.begin(), v.end(),
            [](const ColumnEntry& a, const ColumnEntry& b) { return a.row < b.row; });
  return v;
}

inline std::uint64_t column_sparsity(const EnsemblePlan& pl, std::uint64_t i) {
  std::uint64_t n = 0;
  for_each_column_entry(pl, i, [&](std::uint64_t, double) { ++n; });
  return n;
}

// --- sketches -----------------------------------------------------------

struct Sketch {
  std::vector<double> values;  // permuted coordinate system
  std::uint64_t digest = 0;
  bool permuted = true;
};

inline Sketch make_sketch(const EnsemblePlan& pl) {
  Sketch s;
  s.values.assign(pl.total_rows, 0.0);
  s.digest = pl.digest;
  return s;
}

inline void update(const EnsemblePlan& pl, Sketch& sk, std::uint64_t i, double delta) {
  if (i >= pl.params.n) throw std::out_of_range("update: index out of range");
  if (sk.values.size() != pl.total_rows) throw std::invalid_argument("update: sketch size mismatch");
  for_each_column_entry(pl, i, [&](std::uint64_t row, double val) {
    sk.values[pl.perm.forward[row]] += delta * val;
  });
}

// Dense encode: positions applied in increasing index order, so a streamed
// update replay in the same order reproduces the sketch bit-for-bit.
inline Sketch encode(const EnsemblePlan& pl, const std::vector<double>& x) {
  if (x.size() != pl.params.n) throw std::invalid_argument("encode: length mismatch");
  Sketch sk = make_sketch(pl);
  for (std::uint64_t i = 0; i < x.size(); ++i)
    if (x[i] != 0.0) update(pl, sk, i, x[i]);
  return sk;
}

inline Sketch encode_sparse(const EnsemblePlan& pl,
                            const std::vector<std::pair<std::uint64_t, double>>& x) {
  Sketch sk = make_sketch(pl);
  for (const auto& [i, v] : x)
    if (v != 0.0) update(pl, sk, i, v);
  return sk;
}

// Post-measurement corruption; applied in the permuted coordinate system.
inline void add_measurement_noise(Sketch& sk, const std::vector<double>& nu2) {
  if (nu2.size() != sk.values.size())
    throw std::invalid_argument("add_measurement_noise: length mismatch");
  for (std::size_t i = 0; i < nu2.size(); ++i) sk.values[i] += nu2[i];
}

// Independent closed-form row count; kept next to plan() as the accounting
// contract (the acceptance suite recomputes it separately).
inline std::uint64_t closed_form_rows(const EnsemblePlan& pl) {
  std::uint64_t m = 0;
  for (const auto& it : pl.layout)
    m += static_cast<std::uint64_t>(it.copies) *
         (it.id_buckets * it.section_len + it.est_rows);
  return m;
}

}  // namespace sparrec
