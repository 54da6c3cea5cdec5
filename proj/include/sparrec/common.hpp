#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string_view>
#include <vector>

// Shared low-level utilities: deterministic seeding, modular arithmetic,
// order statistics. Everything here is pure and platform-stable; no libc
// RNGs or distribution objects are used anywhere in the library so that
// sketches are reproducible bit-for-bit across runs.

namespace sparrec {

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer (Steele/Lea/Flood). Stable scrambling step used by
// both the seed-derivation scheme and the counter RNG below.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed-derivation contract: a derived seed is
//   h = master; for each path component c: h = mix64(h ^ (c + kGolden))
// applied left to right. Path components are small structured integers
// (role tag, iteration, copy, row). Documented in the README; changing this
// breaks sketch portability.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = master;
  for (std::uint64_t c : path) h = mix64(h ^ (c + kGolden));
  return h;
}

// Structured path tags for derive_seed.
enum class SeedRole : std::uint64_t {
  kIdBucket = 1,
  kIdSign = 2,
  kEstBucket = 3,
  kEstSign = 4,
  kPermutation = 5,
  kSignal = 6,
  kNoise = 7,
  kTrialEnsemble = 8,
  kNormEstimate = 9,
};

constexpr std::uint64_t tag(SeedRole r) { return static_cast<std::uint64_t>(r); }

// Minimal counter-based RNG built on mix64. Bounded draws use rejection
// sampling, so the stream is identical on every platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return mix64(state_++); }

  // Uniform in [0, n). n must be positive.
  std::uint64_t bounded(std::uint64_t n) {
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % n;
  }

  // Uniform in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 == 0.0) u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * M_PI * u2);
    have_spare_ = true;
    return r * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

inline std::uint64_t mul_mod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(a) * b) % m);
}

// Modular inverse via extended Euclid; m need not be prime but gcd(a,m)=1.
inline std::uint64_t inv_mod(std::uint64_t a, std::uint64_t m) {
  std::int64_t t = 0, nt = 1;
  std::int64_t r = static_cast<std::int64_t>(m), nr = static_cast<std::int64_t>(a % m);
  while (nr != 0) {
    const std::int64_t q = r / nr;
    std::swap(t -= q * nt, nt);
    std::swap(r -= q * nr, nr);
  }
  if (r != 1) throw std::invalid_argument("inv_mod: not invertible");
  return static_cast<std::uint64_t>(t < 0 ? t + static_cast<std::int64_t>(m) : t);
}

constexpr std::uint64_t next_pow2(std::uint64_t v) {
  std::uint64_t p = 1;
  while (p < v) p <<= 1;
  return p;
}

constexpr int log2_exact(std::uint64_t pow2) {
  int b = 0;
  while ((std::uint64_t{1} << b) < pow2) ++b;
  return b;
}

// FNV-1a, used for spec digests.
inline std::uint64_t fnv1a64(std::string_view s,
                             std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Lower median: deterministic order statistic used for thresholding
// decisions (index (n-1)/2 of the sorted values).
inline double lower_median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("lower_median: empty");
  const std::size_t idx = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(idx), v.end());
  return v[idx];
}

// Symmetric median: mean of the two central values for even counts.
inline double center_median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("center_median: empty");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  if (n % 2 == 1) return v[n / 2];
  return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace sparrec
