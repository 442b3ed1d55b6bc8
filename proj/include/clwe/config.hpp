#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "clwe/bli.hpp"
#include "clwe/eigsim.hpp"
#include "clwe/error.hpp"
#include "clwe/mapper.hpp"
#include "clwe/synth.hpp"
#include "clwe/trainer.hpp"

namespace clwe {

// Flat key=value settings. Keys carry a section prefix ("stage1.csls_k");
// '#' starts a comment; blank lines are ignored; later lines win.
class Settings {
 public:
  static Settings parse(std::istream& in, const std::string& source) {
    Settings s;
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
      ++no;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      const auto text = trim(line);
      if (text.empty()) continue;
      const auto eq = text.find('=');
      if (eq == std::string::npos) throw ConfigError(at_line(source, no) + "expected key=value");
      auto key = trim(text.substr(0, eq));
      if (key.empty()) throw ConfigError(at_line(source, no) + "empty key");
      s.values_[key] = trim(text.substr(eq + 1));
    }
    return s;
  }

  static Settings load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open config file");
    return parse(in, path);
  }

  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  }

  std::map<std::string, std::string> values_;
};

// One configurable value: its key, a help line, and text accessors bound to
// the owning struct.
struct Field {
  std::string key;
  std::string help;
  std::function<std::string()> get;
  std::function<void(const std::string&)> set;
};

using Schema = std::vector<Field>;

namespace detail {

inline std::string format_value(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, r.ptr};
}

inline std::string format_value(std::size_t v) { return std::to_string(v); }
inline std::string format_value(bool v) { return v ? "true" : "false"; }

inline void parse_value(const std::string& key, const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  auto r = std::from_chars(s.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end || !std::isfinite(out))
    throw ConfigError(key + ": expected a number, got '" + s + "'");
}

inline void parse_value(const std::string& key, const std::string& s, std::size_t& out) {
  const char* end = s.data() + s.size();
  auto r = std::from_chars(s.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) throw ConfigError(key + ": expected a non-negative integer, got '" + s + "'");
}

inline void parse_value(const std::string& key, const std::string& s, bool& out) {
  if (s == "true" || s == "1")
    out = true;
  else if (s == "false" || s == "0")
    out = false;
  else
    throw ConfigError(key + ": expected true or false, got '" + s + "'");
}

template <class T>
Field scalar(std::string key, std::string help, T& ref) {
  return {key, std::move(help), [&ref] { return format_value(ref); },
          [&ref, key](const std::string& s) { parse_value(key, s, ref); }};
}

template <class E>
Field choice(std::string key, std::string help, E& ref, std::vector<std::pair<std::string, E>> names) {
  std::string options;
  for (const auto& [n, _] : names) options += (options.empty() ? "" : "|") + n;
  help += " (" + options + ")";
  return {key, std::move(help),
          [&ref, names] {
            for (const auto& [n, v] : names)
              if (v == ref) return n;
            return std::string("?");
          },
          [&ref, names, key, options](const std::string& s) {
            for (const auto& [n, v] : names)
              if (n == s) {
                ref = v;
                return;
              }
            throw ConfigError(key + ": expected one of " + options + ", got '" + s + "'");
          }};
}

inline Field text(std::string key, std::string help, std::string& ref) {
  return {key, std::move(help), [&ref] { return ref; }, [&ref](const std::string& s) { ref = s; }};
}

inline std::string section_of(const std::string& key) {
  const auto dot = key.find('.');
  return dot == std::string::npos ? std::string() : key.substr(0, dot);
}

}  // namespace detail

inline Schema train_fields(TrainConfig& c, const std::string& p = "train.") {
  using detail::scalar;
  return {
      scalar(p + "dim", "embedding dimension", c.dim),
      scalar(p + "negatives", "negative samples per context", c.negatives),
      scalar(p + "subsample_threshold", "frequent-word subsampling threshold t", c.subsample_threshold),
      scalar(p + "epochs", "passes over the corpus", c.epochs),
      scalar(p + "window", "maximum context window", c.window),
      scalar(p + "learning_rate", "initial SGD step, decayed linearly", c.learning_rate),
      scalar(p + "min_count", "vocabulary frequency cutoff", c.min_count),
  };
}

inline Schema map_fields(MapConfig& c, const std::string& p) {
  using detail::choice;
  using detail::scalar;
  return {
      choice(p + "retrieval", "induction retrieval", c.retrieval, {{"csls", Retrieval::csls}, {"nn", Retrieval::nn}}),
      scalar(p + "csls_k", "CSLS neighbourhood size", c.csls_k),
      scalar(p + "vocab_cutoff", "induction restricted to the most frequent words", c.vocab_cutoff),
      scalar(p + "seed_cutoff", "vocabulary of the similarity-profile seed", c.seed_cutoff),
      scalar(p + "stochastic_keep", "initial keep probability of induced pairs", c.stochastic_keep),
      scalar(p + "objective_tol", "relative gain counted as a stall", c.objective_tol),
      scalar(p + "max_iters", "iteration cap", c.max_iters),
      choice(p + "direction", "induction direction", c.direction,
             {{"union", Direction::union_both}, {"forward", Direction::forward}}),
      choice(p + "seed_mode", "initial dictionary", c.seed_mode,
             {{"similarity", SeedMode::similarity},
              {"identical", SeedMode::identical},
              {"frame", SeedMode::frame},
              {"best", SeedMode::best}}),
  };
}

inline Schema synth_fields(SynthSpec& s, const std::string& p = "synth.") {
  using detail::scalar;
  return {
      scalar(p + "vocab_size", "latent lexicon size", s.vocab_size),
      scalar(p + "dim", "embedding dimension", s.dim),
      scalar(p + "sentences", "monolingual x sentences", s.sentences),
      scalar(p + "parallel_sentences", "z-y sentence pairs", s.parallel_sentences),
      scalar(p + "sentence_length", "mean sentence length", s.sentence_length),
      scalar(p + "noise_sigma", "noise added to the z and y variants", s.noise_sigma),
      scalar(p + "rotation_scale", "x-z distortion angle as a fraction of pi/2", s.rotation_scale),
      scalar(p + "overlap", "fraction of z surface forms shared with x", s.overlap),
      scalar(p + "target_rotation_scale", "x-y distortion of the monolingual y space", s.target_rotation_scale),
      scalar(p + "zipf_exponent", "unigram Zipf exponent", s.zipf_exponent),
      scalar(p + "bigram_mixing", "probability of a cluster transition", s.bigram_mixing),
      scalar(p + "partitions", "independent clusterings of the lexicon", s.partitions),
      scalar(p + "cluster_size", "words per cluster", s.cluster_size),
      scalar(p + "negatives", "negative samples when training x", s.negatives),
      scalar(p + "subsample_threshold", "subsampling threshold when training x", s.subsample_threshold),
      scalar(p + "epochs", "epochs when training x", s.epochs),
  };
}

inline Schema eigsim_fields(EigsimOptions& o, const std::string& p = "eigsim.") {
  using detail::choice;
  using detail::scalar;
  return {
      scalar(p + "n_words", "graph over this many most frequent words", o.n_words),
      scalar(p + "knn_k", "neighbours per node", o.knn_k),
      scalar(p + "energy_threshold", "spectral energy cutoff", o.energy_threshold),
      choice(p + "laplacian", "Laplacian", o.laplacian,
             {{"unnormalized", LaplacianKind::unnormalized}, {"normalized", LaplacianKind::normalized}}),
  };
}

inline Schema bli_fields(BliOptions& o, const std::string& p = "bli.") {
  using detail::choice;
  using detail::scalar;
  return {
      choice(p + "retrieval", "retrieval", o.retrieval, {{"csls", Retrieval::csls}, {"nn", Retrieval::nn}}),
      scalar(p + "csls_k", "CSLS neighbourhood size", o.csls_k),
  };
}

// Applies every setting whose section the schema covers. Keys in those
// sections that the schema does not know are rejected; other sections are
// left for other consumers of the same file.
inline void apply(const Schema& schema, const Settings& settings) {
  std::set<std::string> sections;
  std::map<std::string, const Field*> by_key;
  for (const auto& f : schema) {
    sections.insert(detail::section_of(f.key));
    by_key[f.key] = &f;
  }
  for (const auto& [key, value] : settings.values()) {
    if (auto it = by_key.find(key); it != by_key.end())
      it->second->set(value);
    else if (sections.count(detail::section_of(key)))
      throw ConfigError("unknown setting '" + key + "'");
  }
}

// Canonical "key=value" lines in schema order.
inline std::string dump(const Schema& schema) {
  std::string out;
  for (const auto& f : schema) out += f.key + "=" + f.get() + "\n";
  return out;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace clwe
