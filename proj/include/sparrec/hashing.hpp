#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sparrec/common.hpp"

// Pairwise-independent affine hashing over a prime field. Supplies the
// invertible bucket maps (forward and inverse lookup in O(1)), the +-1 sign
// families, and the explicit global row permutation.

namespace sparrec {

inline bool is_prime(std::uint64_t n) {
  if (n < 4) return n >= 2;
  if (n % 2 == 0 || n % 3 == 0) return false;
  for (std::uint64_t i = 5; i * i <= n; i += 6) {
    if (n % i == 0 || n % (i + 2) == 0) return false;
  }
  return true;
}

inline std::uint64_t next_prime(std::uint64_t n) {
  if (n < 2) throw std::invalid_argument("next_prime: n must be >= 2");
  while (!is_prime(n)) ++n;
  return n;
}

// i -> (a*i + b) mod d with d prime and a in [1, d).
struct AffineHash {
  std::uint64_t a = 1;
  std::uint64_t b = 0;
  std::uint64_t d = 2;

  std::uint64_t value(std::uint64_t i) const {
    return (mul_mod(a, i, d) + b) % d;
  }

  static AffineHash draw(std::uint64_t seed, std::uint64_t d) {
    SplitMix64 rng(seed);
    return AffineHash{1 + rng.bounded(d - 1), rng.bounded(d), d};
  }
};

// Bucketed view of an affine hash: value v lands in bucket v / slot_width
// with rank v % slot_width. active_width gives the Bernoulli-row semantics
// (position i is "on" iff its hash value is below the threshold); a full
// partition uses active_width = d.
struct BucketMap {
  AffineHash hash;
  std::uint64_t slot_width = 1;
  std::uint64_t active_width = 0;  // defaults to d when constructed via make()

  std::uint64_t inv_a = 1;  // cached a^{-1} mod d

  static BucketMap make(AffineHash h, std::uint64_t slot_width,
                        std::uint64_t active_width = 0) {
    if (slot_width == 0) throw std::invalid_argument("BucketMap: slot_width 0");
    BucketMap m;
    m.hash = h;
    m.slot_width = slot_width;
    m.active_width = active_width == 0 ? h.d : active_width;
    if (m.active_width > h.d) throw std::invalid_argument("BucketMap: active_width > d");
    m.inv_a = inv_mod(h.a, h.d);
    return m;
  }

  bool active(std::uint64_t i) const { return hash.value(i) < active_width; }

  std::uint64_t bucket_of(std::uint64_t i) const {
    return hash.value(i) / slot_width;
  }

  // (bucket, rank) of position i; inverse of member_at.
  std::pair<std::uint64_t, std::uint64_t> rank_of(std::uint64_t i) const {
    const std::uint64_t v = hash.value(i);
    return {v / slot_width, v % slot_width};
  }

  // The unique position whose hash value is q*slot_width + r, reduced mod d.
  std::uint64_t member_at(std::uint64_t q, std::uint64_t r) const {
    if (r >= slot_width) throw std::invalid_argument("member_at: rank out of bucket range");
    const std::uint64_t v = (q * slot_width + r) % hash.d;
    const std::uint64_t shifted = (v + hash.d - hash.b % hash.d) % hash.d;
    return mul_mod(inv_a, shifted, hash.d);
  }

  // Number of hash values < d that fall in bucket q.
  std::uint64_t occupancy(std::uint64_t q) const {
    const std::uint64_t lo = q * slot_width;
    if (lo >= hash.d) return 0;
    const std::uint64_t hi = std::min(lo + slot_width, hash.d);
    return hi - lo;
  }
};

// One independent affine seed per row; sign is a threshold on the hash value.
// For odd prime d the per-row bias is exactly 1/d.
class SignFamily {
 public:
  SignFamily() = default;

  // Rows seeded from derive_seed(master, {role, j, copy, row}).
  static SignFamily derive(std::uint64_t master, SeedRole role, std::uint64_t j,
                           std::uint64_t copy, std::uint64_t rows,
                           std::uint64_t d) {
    SignFamily f;
    f.d_ = d;
    f.threshold_ = (d + 1) / 2;
    f.seeds_.resize(2 * rows);
    for (std::uint64_t row = 0; row < rows; ++row) {
      SplitMix64 rng(derive_seed(master, {tag(role), j, copy, row}));
      f.seeds_[2 * row] = 1 + rng.bounded(d - 1);
      f.seeds_[2 * row + 1] = rng.bounded(d);
    }
    return f;
  }

  std::uint64_t rows() const { return seeds_.size() / 2; }

  int sign_at(std::uint64_t row, std::uint64_t i) const {
    const std::uint64_t h =
        (mul_mod(seeds_[2 * row], i, d_) + seeds_[2 * row + 1]) % d_;
    return h < threshold_ ? 1 : -1;
  }

  std::array<std::uint64_t, 2> row_seed(std::uint64_t row) const {
    return {seeds_[2 * row], seeds_[2 * row + 1]};
  }

 private:
  std::uint64_t d_ = 2;
  std::uint64_t threshold_ = 1;
  std::vector<std::uint64_t> seeds_;  // interleaved (a, b)
};

// Explicit permutation on [0, m), stored both ways.
struct PermutationSpec {
  std::vector<std::uint32_t> forward;  // stack row -> sketch row
  std::vector<std::uint32_t> inverse;  // sketch row -> stack row

  std::size_t size() const { return forward.size(); }
};

inline PermutationSpec random_permutation(std::uint64_t m, std::uint64_t seed) {
  if (m > 0xffffffffULL) throw std::invalid_argument("random_permutation: m too large");
  PermutationSpec p;
  p.forward.resize(m);
  for (std::uint64_t i = 0; i < m; ++i) p.forward[i] = static_cast<std::uint32_t>(i);
  SplitMix64 rng(seed);
  for (std::uint64_t i = m; i > 1; --i) {
    const std::uint64_t j = rng.bounded(i);
    std::swap(p.forward[i - 1], p.forward[j]);
  }
  p.inverse.resize(m);
  for (std::uint64_t g = 0; g < m; ++g) p.inverse[p.forward[g]] = static_cast<std::uint32_t>(g);
  return p;
}

inline std::vector<double> permute(const std::vector<double>& v,
                                   const PermutationSpec& p) {
  if (v.size() != p.size()) throw std::invalid_argument("permute: length mismatch");
  std::vector<double> out(v.size());
  for (std::size_t g = 0; g < v.size(); ++g) out[p.forward[g]] = v[g];
  return out;
}

inline std::vector<double> unpermute(const std::vector<double>& v,
                                     const PermutationSpec& p) {
  if (v.size() != p.size()) throw std::invalid_argument("unpermute: length mismatch");
  std::vector<double> out(v.size());
  for (std::size_t g = 0; g < v.size(); ++g) out[g] = v[p.forward[g]];
  return out;
}

}  // namespace sparrec
