#pragma once

// Visual vocabulary by seeded reservoir sampling and per-clip
// bag-of-features encoding with exhaustive nearest-word assignment.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "stv/descriptor.hpp"
#include "stv/util.hpp"

namespace stv {

struct Vocabulary {
  Kind kind = Kind::HoGHoF;
  uint64_t seed = 0;
  std::vector<std::vector<double>> words;  // word id = index

  int k() const { return int(words.size()); }
  int dim() const { return words.empty() ? 0 : int(words.front().size()); }
};

// Uniform random sample of K descriptors via reservoir sampling (algorithm R).
// Deterministic for a fixed seed and stream order.
inline Vocabulary build_vocabulary(const std::vector<FeatureVector>& stream,
                                   int k, uint64_t seed) {
  if (k < 1) throw std::invalid_argument("build_vocabulary: K must be >= 1");
  if (int(stream.size()) < k)
    throw std::runtime_error("build_vocabulary: only " +
                             std::to_string(stream.size()) +
                             " descriptors for K=" + std::to_string(k));
  Vocabulary v;
  v.kind = stream.front().kind;
  v.seed = seed;
  v.words.reserve(k);

  SplitMix64 rng(seed);
  for (size_t i = 0; i < stream.size(); ++i) {
    if (stream[i].kind != v.kind)
      throw std::runtime_error("build_vocabulary: mixed descriptor kinds");
    if (int(i) < k) {
      v.words.push_back(stream[i].values);
    } else {
      const uint64_t j = rng.bounded(i + 1);
      if (j < uint64_t(k)) v.words[j] = stream[i].values;
    }
  }
  return v;
}

// Nearest word by Euclidean distance, exhaustive scan; ties resolve to the
// lowest word id.
inline int assign(const FeatureVector& d, const Vocabulary& v) {
  if (d.kind != v.kind)
    throw std::invalid_argument("assign: descriptor kind does not match vocabulary");
  if (v.words.empty()) throw std::invalid_argument("assign: empty vocabulary");
  if (int(d.values.size()) != v.dim())
    throw std::invalid_argument("assign: dimension mismatch");
  int best = 0;
  double best_d2 = -1.0;
  for (int w = 0; w < v.k(); ++w) {
    double d2 = 0.0;
    for (size_t i = 0; i < d.values.size(); ++i) {
      const double diff = d.values[i] - v.words[w][i];
      d2 += diff * diff;
    }
    if (best_d2 < 0.0 || d2 < best_d2) {
      best_d2 = d2;
      best = w;
    }
  }
  return best;
}

struct BofHistogram {
  std::string clip_id;
  std::string label;
  std::vector<double> counts;
  long n_features = 0;

  bool empty_clip() const { return n_features == 0; }

  std::vector<double> normalized() const {
    std::vector<double> out(counts);
    if (n_features > 0)
      for (double& c : out) c /= double(n_features);
    return out;
  }
};

inline BofHistogram encode(const std::vector<FeatureVector>& descriptors,
                           const Vocabulary& v, bool normalize = false) {
  BofHistogram h;
  h.counts.assign(v.k(), 0.0);
  for (const auto& d : descriptors) {
    h.counts[assign(d, v)] += 1.0;
    ++h.n_features;
  }
  if (normalize && h.n_features > 0)
    for (double& c : h.counts) c /= double(h.n_features);
  return h;
}

// ---------------------------------------------------------------------------
// Vocabulary file: one ASCII header line
//   "STVV 1 <kind> <K> <seed> <dim>\n"
// followed by K*dim little-endian f64 (row-major, one word per row).

inline std::string vocabulary_to_bytes(const Vocabulary& v) {
  std::string out = "STVV 1 ";
  out += kind_name(v.kind);
  out += ' ' + std::to_string(v.k()) + ' ' + std::to_string(v.seed) + ' ' +
         std::to_string(v.dim()) + '\n';
  for (const auto& w : v.words)
    for (double x : w) put_f64(out, x);
  return out;
}

inline Vocabulary vocabulary_from_bytes(std::string_view bytes,
                                        const std::string& ctx) {
  const size_t eol = bytes.find('\n');
  if (eol == std::string_view::npos || bytes.substr(0, 7) != "STVV 1 ")
    throw std::runtime_error("bad vocabulary header: " + ctx);
  const auto fields = split(bytes.substr(7, eol - 7), ' ');
  if (fields.size() != 4)
    throw std::runtime_error("bad vocabulary header: " + ctx);
  Vocabulary v;
  v.kind = kind_from_name(fields[0]);
  const long k = parse_long(fields[1], ctx);
  v.seed = uint64_t(parse_long(fields[2], ctx));
  const long dim = parse_long(fields[3], ctx);

  ByteReader rd(bytes, ctx);
  rd.pos = eol + 1;
  v.words.assign(k, std::vector<double>(dim));
  for (long w = 0; w < k; ++w)
    for (long d = 0; d < dim; ++d) v.words[w][d] = rd.f64();
  return v;
}

// ---------------------------------------------------------------------------
// BoF file: TSV lines  clip-id  label  n_features  c0 ... c{K-1}
// (raw counts; normalization is applied at classifier ingestion)

inline std::string bof_to_tsv(const std::vector<BofHistogram>& hs) {
  std::string out;
  for (const auto& h : hs) {
    out += h.clip_id + '\t' + h.label + '\t' + std::to_string(h.n_features);
    for (double c : h.counts) out += '\t' + fmt_g17(c);
    out += '\n';
  }
  return out;
}

inline std::vector<BofHistogram> bof_from_tsv(const std::string& tsv,
                                              const std::string& ctx) {
  std::vector<BofHistogram> out;
  for (const auto& line : split(tsv, '\n')) {
    if (line.empty()) continue;
    const auto cols = split(line, '\t');
    if (cols.size() < 4)
      throw std::runtime_error("bof tsv: want >= 4 columns in " + ctx);
    BofHistogram h;
    h.clip_id = cols[0];
    h.label = cols[1];
    h.n_features = parse_long(cols[2], ctx);
    h.counts.reserve(cols.size() - 3);
    for (size_t i = 3; i < cols.size(); ++i)
      h.counts.push_back(parse_double(cols[i], ctx));
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace stv
