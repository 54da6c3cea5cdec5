#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

// Constant-rate block code over short messages with an explicit codeword
// table, greedy lexicographic construction, and nearest-neighbor decoding.
// Tables are small (<= 4096 words), so exhaustive search and linear-scan
// decoding are deliberate.

namespace sparrec {

struct CodeTable {
  int msg_bits = 0;
  int code_bits = 0;
  int min_dist = 0;
  std::vector<std::uint32_t> words;  // 2^msg_bits codewords, bit l = code row l

  int half_distance() const { return (min_dist - 1) / 2; }
};

namespace detail {
inline int hamming(std::uint32_t a, std::uint32_t b) {
  return std::popcount(a ^ b);
}
}  // namespace detail

// Greedy lexicographic search over increasing code length: at each length,
// scan words in numeric order keeping those at distance >= required from all
// kept words. Required distance is max(3, ceil(rel_dist * length)) so every
// table corrects at least one flip.
inline CodeTable build_code(int msg_bits, double target_rel_dist) {
  if (msg_bits < 1 || msg_bits > 12)
    throw std::invalid_argument("build_code: msg_bits out of range [1,12]");
  if (!(target_rel_dist > 0.0 && target_rel_dist < 0.5))
    throw std::invalid_argument("build_code: rel dist must be in (0, 1/2)");
  const std::size_t target = std::size_t{1} << msg_bits;
  constexpr int kMaxLen = 22;
  std::vector<std::uint32_t> kept;
  for (int n = 2; n <= kMaxLen; ++n) {
    const int req = std::max(3, static_cast<int>(std::ceil(target_rel_dist * n - 1e-9)));
    kept.clear();
    const std::uint32_t space = std::uint32_t{1} << n;
    for (std::uint32_t w = 0; w < space && kept.size() < target; ++w) {
      bool ok = true;
      for (std::uint32_t u : kept) {
        if (detail::hamming(w, u) < req) {
          ok = false;
          break;
        }
      }
      if (ok) kept.push_back(w);
    }
    if (kept.size() == target) {
      int dmin = n;
      for (std::size_t i = 0; i < kept.size(); ++i)
        for (std::size_t j = i + 1; j < kept.size(); ++j)
          dmin = std::min(dmin, detail::hamming(kept[i], kept[j]));
      return CodeTable{msg_bits, n, dmin, kept};
    }
  }
  throw std::runtime_error("build_code: search budget exceeded");
}

inline std::uint32_t encode_index(const CodeTable& tbl, std::uint32_t msg) {
  if (msg >= tbl.words.size()) throw std::invalid_argument("encode_index: message out of range");
  return tbl.words[msg];
}

struct BlockDecode {
  std::uint32_t msg;
  int dist;
};

// Nearest-neighbor decode. Returns nullopt (an unidentifiable block) when the
// best distance exceeds half the minimum distance or is not unique.
inline std::optional<BlockDecode> decode_block(const CodeTable& tbl,
                                               std::uint32_t noisy) {
  int best = tbl.code_bits + 1;
  int count = 0;
  std::uint32_t best_msg = 0;
  for (std::uint32_t msg = 0; msg < tbl.words.size(); ++msg) {
    const int d = detail::hamming(tbl.words[msg], noisy);
    if (d < best) {
      best = d;
      best_msg = msg;
      count = 1;
    } else if (d == best) {
      ++count;
    }
  }
  if (best > tbl.half_distance() || count != 1) return std::nullopt;
  return BlockDecode{best_msg, best};
}

// Split a local index into fixed-size message blocks, big-endian block order
// (block 0 carries the most significant bits, zero-padded at the top).
inline std::vector<std::uint32_t> chunk_index(std::uint64_t local, int bits_total,
                                              int block_bits) {
  if (bits_total < 1 || block_bits < 1)
    throw std::invalid_argument("chunk_index: bad widths");
  if (bits_total < 64 && local >= (std::uint64_t{1} << bits_total))
    throw std::invalid_argument("chunk_index: index overflows bits_total");
  const int n_blocks = (bits_total + block_bits - 1) / block_bits;
  const std::uint64_t mask = (std::uint64_t{1} << block_bits) - 1;
  std::vector<std::uint32_t> blocks(static_cast<std::size_t>(n_blocks));
  for (int t = 0; t < n_blocks; ++t) {
    const int shift = (n_blocks - 1 - t) * block_bits;
    blocks[static_cast<std::size_t>(t)] =
        static_cast<std::uint32_t>((local >> shift) & mask);
  }
  return blocks;
}

inline std::uint64_t assemble_index(const std::vector<std::uint32_t>& blocks,
                                    int block_bits) {
  std::uint64_t out = 0;
  for (std::uint32_t b : blocks) out = (out << block_bits) | b;
  return out;
}

}  // namespace sparrec
