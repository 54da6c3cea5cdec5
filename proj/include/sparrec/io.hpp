#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "sparrec/decoder.hpp"
#include "sparrec/ensemble.hpp"

// File formats: spec JSON (parameters + code table + layout digest), sketch
// binary (little-endian doubles with a digest-bearing header), signal and
// result CSV.

namespace sparrec {

using nlohmann::json;

// --- spec JSON ----------------------------------------------------------

inline json params_to_json(const EnsembleParams& p) {
  return json{{"n", p.n},
              {"k", p.k},
              {"eps", p.eps},
              {"c_id", p.c_id},
              {"c_est", p.c_est},
              {"gamma_id", p.gamma_id},
              {"gamma_est", p.gamma_est},
              {"reps_mode", to_string(p.reps_mode)},
              {"block_bits", p.block_bits},
              {"target_rel_dist", p.target_rel_dist},
              {"ones_rows", p.ones_rows},
              {"max_rows", p.max_rows},
              {"seed", p.seed}};
}

inline EnsembleParams params_from_json(const json& j) {
  EnsembleParams p;
  p.n = j.at("n").get<std::uint64_t>();
  p.k = j.at("k").get<std::uint64_t>();
  p.eps = j.value("eps", 1.0);
  p.c_id = j.value("c_id", 2.0 / 3.0);
  p.c_est = j.value("c_est", 8.0 / 9.0);
  p.gamma_id = j.value("gamma_id", 4.0);
  p.gamma_est = j.value("gamma_est", 32.0);
  p.reps_mode = reps_mode_from_string(j.value("reps_mode", std::string("linear")));
  p.block_bits = j.value("block_bits", 0);
  p.target_rel_dist = j.value("target_rel_dist", 0.45);
  p.ones_rows = j.value("ones_rows", 0);
  p.max_rows = j.value("max_rows", std::uint64_t{1} << 26);
  p.seed = j.value("seed", std::uint64_t{0});
  return p;
}

inline std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << std::setfill('0') << std::setw(16) << v;
  return os.str();
}

inline json code_to_json(const CodeTable& t) {
  json words = json::array();
  for (std::uint32_t w : t.words) {
    std::ostringstream os;
    os << "0x" << std::hex << w;
    words.push_back(os.str());
  }
  return json{{"msg_bits", t.msg_bits},
              {"code_bits", t.code_bits},
              {"min_dist", t.min_dist},
              {"words", words}};
}

inline CodeTable code_from_json(const json& j) {
  CodeTable t;
  t.msg_bits = j.at("msg_bits").get<int>();
  t.code_bits = j.at("code_bits").get<int>();
  t.min_dist = j.at("min_dist").get<int>();
  for (const auto& w : j.at("words"))
    t.words.push_back(static_cast<std::uint32_t>(
        std::stoul(w.get<std::string>(), nullptr, 16)));
  return t;
}

inline json spec_to_json(const EnsemblePlan& pl) {
  json iters = json::array();
  for (const auto& it : pl.layout) {
    iters.push_back(json{{"j", it.j},
                         {"copies", it.copies},
                         {"id_buckets", it.id_buckets},
                         {"slot_width", it.slot_width},
                         {"bucket_cap", it.bucket_cap},
                         {"index_bits", it.index_bits},
                         {"blocks", it.blocks},
                         {"section_len", it.section_len},
                         {"est_rows", it.est_rows},
                         {"est_slot_width", it.est_slot_width},
                         {"rows", it.rows}});
  }
  return json{{"format", "sparrec-spec"},
              {"version", 1},
              {"params", params_to_json(pl.params)},
              {"domain", pl.d},
              {"iterations", pl.iterations},
              {"code", code_to_json(pl.code)},
              {"layout", json{{"m", pl.total_rows}, {"per_iteration", iters}}},
              {"digest", hex64(pl.digest)}};
}

// Rebuild the plan from a spec file and verify it reproduces the recorded
// digest, row count, and code table.
inline EnsemblePlan spec_from_json(const json& j) {
  if (j.value("format", std::string()) != "sparrec-spec")
    throw std::runtime_error("spec: unrecognized format");
  EnsemblePlan pl = plan(params_from_json(j.at("params")));
  const std::uint64_t m = j.at("layout").at("m").get<std::uint64_t>();
  const std::string digest = j.at("digest").get<std::string>();
  if (m != pl.total_rows || hex64(pl.digest) != digest)
    throw std::runtime_error("spec: digest mismatch (file does not match this build's construction)");
  const CodeTable stored = code_from_json(j.at("code"));
  if (stored.msg_bits != pl.code.msg_bits || stored.code_bits != pl.code.code_bits ||
      stored.min_dist != pl.code.min_dist || stored.words != pl.code.words)
    throw std::runtime_error("spec: embedded code table does not match the rebuilt one");
  return pl;
}

inline void write_spec_file(const EnsemblePlan& pl, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << spec_to_json(pl).dump(2) << '\n';
}

inline EnsemblePlan read_spec_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  json j;
  is >> j;
  return spec_from_json(j);
}

// --- sketch binary --------------------------------------------------------

inline constexpr char kSketchMagic[8] = {'S', 'P', 'R', 'S', 'K', 'T', 'C', 'H'};
inline constexpr std::uint32_t kSketchVersion = 1;

namespace detail {
inline void put_u32(std::ostream& os, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 4);
}
inline void put_u64(std::ostream& os, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  os.write(b, 8);
}
inline std::uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 3; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
inline std::uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
  return v;
}
inline std::uint64_t double_bits(double d) {
  std::uint64_t v;
  static_assert(sizeof(v) == sizeof(d));
  std::memcpy(&v, &d, sizeof(v));
  return v;
}
inline double bits_double(std::uint64_t v) {
  double d;
  std::memcpy(&d, &v, sizeof(d));
  return d;
}
}  // namespace detail

inline void write_sketch(const Sketch& sk, std::ostream& os) {
  os.write(kSketchMagic, 8);
  detail::put_u32(os, kSketchVersion);
  detail::put_u32(os, 0);  // reserved
  detail::put_u64(os, sk.values.size());
  detail::put_u64(os, sk.digest);
  for (double v : sk.values) detail::put_u64(os, detail::double_bits(v));
}

inline void write_sketch_file(const Sketch& sk, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path);
  write_sketch(sk, os);
}

inline Sketch read_sketch(std::istream& is) {
  char magic[8];
  is.read(magic, 8);
  if (!is || std::memcmp(magic, kSketchMagic, 8) != 0)
    throw std::runtime_error("sketch: bad magic");
  const std::uint32_t version = detail::get_u32(is);
  detail::get_u32(is);
  if (version != kSketchVersion) throw std::runtime_error("sketch: unsupported version");
  const std::uint64_t m = detail::get_u64(is);
  Sketch sk;
  sk.digest = detail::get_u64(is);
  sk.values.resize(m);
  for (std::uint64_t i = 0; i < m; ++i) sk.values[i] = detail::bits_double(detail::get_u64(is));
  if (!is) throw std::runtime_error("sketch: truncated file");
  return sk;
}

inline Sketch read_sketch_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_sketch(is);
}

// --- signal / result CSV ---------------------------------------------------

// Lines of "position,value"; an optional header line is tolerated.
inline std::vector<std::pair<std::uint64_t, double>> read_signal_csv(std::istream& is) {
  std::vector<std::pair<std::uint64_t, double>> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("position", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error("signal csv: malformed line: " + line);
    out.push_back({std::stoull(line.substr(0, comma)), std::stod(line.substr(comma + 1))});
  }
  return out;
}

inline std::vector<std::pair<std::uint64_t, double>> read_signal_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot read " + path);
  return read_signal_csv(is);
}

inline void write_recovered_csv(const RecoveredVector& a, std::ostream& os) {
  os << "position,value\n";
  os << std::setprecision(17);
  for (const auto& [p, e] : a.entries) os << p << ',' << e.value << '\n';
}

inline json recovered_to_json(const RecoveredVector& a) {
  json entries = json::array();
  for (const auto& [p, e] : a.entries)
    entries.push_back(json{{"position", p}, {"value", e.value}, {"origin", e.origin}});
  return json{{"entries", entries}};
}

}  // namespace sparrec
