#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "clwe/dictionary.hpp"
#include "clwe/embedding_space.hpp"

namespace clwe {

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError(path + ": cannot open for reading");
  return in;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(path + ": cannot open for writing");
  return out;
}

// Six significant digits, widened only as far as needed to stay within 5e-7
// of the value, so reloading is exact to 1e-6 even for entries above 1.
inline int format_float(char* buf, std::size_t size, double v) {
  int n = 0;
  for (int p = 6; p <= 17; ++p) {
    n = std::snprintf(buf, size, "%.*g", p, v);
    double back = 0;
    if (parse_number(std::string_view(buf, static_cast<std::size_t>(n)), back) && std::abs(back - v) <= 5e-7) break;
  }
  return n;
}

}  // namespace detail

// The "<n> <d>" header alone, for cheap dimension checks.
inline std::pair<std::size_t, std::size_t> read_embedding_header(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  std::getline(in, line);
  const auto header = detail::split_ws(line);
  std::size_t n = 0, d = 0;
  if (header.size() != 2 || !detail::parse_number(header[0], n) || !detail::parse_number(header[1], d) || d < 1)
    throw DataError(at_line(path, 1) + "malformed header, expected '<n> <d>'");
  return {n, d};
}

// word2vec text format: "<n> <d>" header, then "token v1 ... vd" per line.
// File order is taken as frequency order.
inline EmbeddingSpace load_embeddings(const std::string& path) {
  auto in = detail::open_in(path);
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line)) throw DataError(at_line(path, 1) + "missing header");
  auto header = detail::split_ws(line);
  std::size_t n = 0, d = 0;
  if (header.size() != 2 || !detail::parse_number(header[0], n) || !detail::parse_number(header[1], d) ||
      d < 1)
    throw DataError(at_line(path, 1) + "malformed header, expected '<n> <d>'");
  if (n == 0) throw DataError(at_line(path, 1) + "vocabulary must be non-empty");

  std::vector<std::string> tokens;
  tokens.reserve(n);
  std::unordered_set<std::string> seen;
  Matrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  while (tokens.size() < n && std::getline(in, line)) {
    ++lineno;
    auto fields = detail::split_ws(line);
    if (fields.size() != d + 1)
      throw DataError(at_line(path, lineno) + "expected token and " + std::to_string(d) + " values, got " +
                      std::to_string(fields.size()) + " fields");
    std::string tok(fields[0]);
    if (!seen.insert(tok).second) throw DataError(at_line(path, lineno) + "duplicate token '" + tok + "'");
    const auto r = static_cast<Eigen::Index>(tokens.size());
    for (std::size_t k = 0; k < d; ++k) {
      double v = 0;
      if (!detail::parse_number(fields[k + 1], v))
        throw DataError(at_line(path, lineno) + "bad number '" + std::string(fields[k + 1]) + "'");
      if (!std::isfinite(v)) throw DataError(at_line(path, lineno) + "non-finite value");
      m(r, static_cast<Eigen::Index>(k)) = v;
    }
    tokens.push_back(std::move(tok));
  }
  if (tokens.size() != n)
    throw DataError(at_line(path, lineno) + "header promises " + std::to_string(n) + " rows, found " +
                    std::to_string(tokens.size()));
  while (std::getline(in, line)) {
    ++lineno;
    if (!detail::split_ws(line).empty()) throw DataError(at_line(path, lineno) + "rows beyond header count");
  }
  return EmbeddingSpace(Vocabulary::from_ranked(std::move(tokens)), std::move(m));
}

inline void write_embeddings(const EmbeddingSpace& space, std::ostream& out) {
  if (!space.vocab || space.vocab->empty()) throw DataError("save_embeddings: vocabulary must be non-empty");
  out << space.size() << ' ' << space.dim() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < space.size(); ++i) {
    out << space.token(static_cast<WordId>(i));
    for (std::size_t k = 0; k < space.dim(); ++k) {
      const int n = detail::format_float(buf, sizeof buf,
                                         space.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)));
      out << ' ';
      out.write(buf, n);
    }
    out << '\n';
  }
}

inline void save_embeddings(const EmbeddingSpace& space, const std::string& path) {
  if (!space.vocab || space.vocab->empty()) throw DataError("save_embeddings: vocabulary must be non-empty");
  auto out = detail::open_out(path);
  write_embeddings(space, out);
  if (!out) throw DataError(path + ": write failed");
}

enum class OovPolicy { skip, error };

struct DictionaryCoverage {
  std::size_t lines = 0;          // non-blank entries read
  std::size_t skipped_lines = 0;  // entries dropped as out-of-vocabulary
  std::size_t source_words = 0;   // distinct source tokens in the file
  std::size_t skipped_source_words = 0;  // source tokens with no usable entry
};

struct LoadedDictionary {
  DictionaryPairs pairs;
  DictionaryCoverage coverage;
};

inline LoadedDictionary load_dictionary(const std::string& path, std::shared_ptr<const Vocabulary> src,
                                        std::shared_ptr<const Vocabulary> tgt, OovPolicy policy = OovPolicy::skip) {
  auto in = detail::open_in(path);
  LoadedDictionary out{DictionaryPairs(src, tgt), {}};
  std::vector<std::string> order;
  std::unordered_set<std::string> all_sources, usable_sources;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto f = detail::split_ws(line);
    if (f.empty()) continue;
    if (f.size() != 2) throw DataError(at_line(path, lineno) + "expected 'src tgt'");
    ++out.coverage.lines;
    std::string s(f[0]);
    all_sources.insert(s);
    auto sid = src->find(f[0]);
    auto tid = tgt->find(f[1]);
    if (!sid || !tid) {
      if (policy == OovPolicy::error)
        throw DataError(at_line(path, lineno) + "out-of-vocabulary entry '" + std::string(line) + "'");
      ++out.coverage.skipped_lines;
      continue;
    }
    usable_sources.insert(s);
    out.pairs.add(*sid, *tid);
  }
  out.coverage.source_words = all_sources.size();
  out.coverage.skipped_source_words = all_sources.size() - usable_sources.size();
  return out;
}

using TokenPairs = std::vector<std::pair<std::string, std::string>>;

// In-memory counterpart of load_dictionary with the skip policy.
inline LoadedDictionary resolve_dictionary(const TokenPairs& entries, std::shared_ptr<const Vocabulary> src,
                                           std::shared_ptr<const Vocabulary> tgt) {
  LoadedDictionary out{DictionaryPairs(src, tgt), {}};
  std::unordered_set<std::string> all_sources, usable_sources;
  for (const auto& [s, t] : entries) {
    ++out.coverage.lines;
    all_sources.insert(s);
    auto sid = src->find(s);
    auto tid = tgt->find(t);
    if (!sid || !tid) {
      ++out.coverage.skipped_lines;
      continue;
    }
    usable_sources.insert(s);
    out.pairs.add(*sid, *tid);
  }
  out.coverage.source_words = all_sources.size();
  out.coverage.skipped_source_words = all_sources.size() - usable_sources.size();
  return out;
}

inline void save_dictionary(const DictionaryPairs& dict, const std::string& path) {
  if (!dict.source_vocab() || !dict.target_vocab()) throw DataError("save_dictionary: dictionary lacks vocabularies");
  auto out = detail::open_out(path);
  for (const auto& [s, t] : dict.pairs())
    out << dict.source_vocab()->token(s) << ' ' << dict.target_vocab()->token(t) << '\n';
  if (!out) throw DataError(path + ": write failed");
}

using Sentence = std::vector<std::string>;

// One sentence per line, whitespace tokenized. Blank lines are kept as empty
// sentences so that parallel files stay line-aligned.
inline std::vector<Sentence> read_corpus(const std::string& path) {
  auto in = detail::open_in(path);
  std::vector<Sentence> out;
  std::string line;
  while (std::getline(in, line)) {
    Sentence s;
    for (auto t : detail::split_ws(line)) s.emplace_back(t);
    out.push_back(std::move(s));
  }
  return out;
}

inline void write_corpus(const std::vector<Sentence>& corpus, const std::string& path) {
  auto out = detail::open_out(path);
  for (const auto& s : corpus) {
    for (std::size_t i = 0; i < s.size(); ++i) out << (i ? " " : "") << s[i];
    out << '\n';
  }
  if (!out) throw DataError(path + ": write failed");
}

}  // namespace clwe
