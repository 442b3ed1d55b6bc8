#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "clwe/dictionary.hpp"
#include "clwe/embedding_space.hpp"
#include "clwe/io.hpp"
#include "clwe/random.hpp"
#include "clwe/trainer.hpp"

namespace clwe {

// Desk-scale stand-in for real corpora: a latent lexicon with a Zipfian
// unigram law and local co-occurrence structure, rendered into three surface
// languages x, z, y.
struct SynthSpec {
  std::size_t vocab_size = 2000;
  std::size_t dim = 50;
  std::size_t sentences = 120000;           // monolingual x / z corpus
  std::size_t parallel_sentences = 120000;  // z-y corpus
  std::size_t sentence_length = 12;        // mean; actual lengths uniform in [L/2, 3L/2]
  double noise_sigma = 0.01;
  double rotation_scale = 0.1;  // x-z distortion angle, as a fraction of pi/2
  double overlap = 0.5;         // fraction of z surface forms shared with x
  double target_rotation_scale = 0.6;  // x-y distortion of the monolingual y space
  double zipf_exponent = 1.0;
  double bigram_mixing = 0.5;  // probability of a structured (cluster) transition
  std::size_t partitions = 4;  // independent clusterings of the latent lexicon
  std::size_t cluster_size = 20;
  // SGNS settings for the x space; t = 1e-2 because rank-1 words are ~13% of
  // a synthetic corpus and the usual 1e-5 would discard nearly every token.
  std::size_t negatives = 5;
  double subsample_threshold = 1e-2;
  std::size_t epochs = 5;
  std::uint64_t seed = 1;

  void validate() const {
    if (vocab_size < 2 || dim < 1 || sentences < 1 || parallel_sentences < 1 || sentence_length < 1 ||
        partitions < 1 || cluster_size < 1)
      throw ConfigError("synth: counts must be >= 1 (vocab_size >= 2)");
    if (!(noise_sigma >= 0.0)) throw ConfigError("synth: noise_sigma must be >= 0");
    if (!(overlap >= 0.0 && overlap <= 1.0)) throw ConfigError("synth: overlap must be in [0, 1]");
    if (!(rotation_scale >= 0.0 && rotation_scale <= 1.0) ||
        !(target_rotation_scale >= 0.0 && target_rotation_scale <= 1.0))
      throw ConfigError("synth: rotation scales must be in [0, 1]");
    if (!(bigram_mixing >= 0.0 && bigram_mixing <= 1.0)) throw ConfigError("synth: bigram_mixing must be in [0, 1]");
    if (!(zipf_exponent > 0.0)) throw ConfigError("synth: zipf_exponent must be positive");
    training().validate();
  }

  // Trainer settings used for x and recommended for the z-y joint stage.
  TrainConfig training() const {
    TrainConfig c;
    c.dim = dim;
    c.negatives = negatives;
    c.subsample_threshold = subsample_threshold;
    c.epochs = epochs;
    c.seed = seed;
    return c;
  }
};

// Markov source over latent ids 0..n-1 (id = frequency rank). The next token
// is a global Zipf draw with probability 1 - mixing, otherwise a Zipf draw
// restricted to the previous token's cluster under a randomly chosen
// partition. Both kernels leave the Zipf law stationary, so every position
// is marginally Zipfian.
class LatentLanguage {
 public:
  explicit LatentLanguage(const SynthSpec& spec) : mixing_(spec.bigram_mixing) {
    spec.validate();
    const std::size_t n = spec.vocab_size;
    weight_.resize(n);
    for (std::size_t i = 0; i < n; ++i) weight_[i] = std::pow(static_cast<double>(i + 1), -spec.zipf_exponent);
    global_ = cdf_of(all_ids(n));
    Rng rng(spec.seed ^ 0x5EED0001ull);
    cluster_of_.assign(spec.partitions, std::vector<std::size_t>(n));
    clusters_.resize(spec.partitions);
    for (std::size_t p = 0; p < spec.partitions; ++p) {
      auto perm = all_ids(n);
      rng.shuffle(perm.begin(), perm.end());
      for (std::size_t lo = 0; lo < n; lo += spec.cluster_size) {
        std::vector<WordId> members(perm.begin() + static_cast<std::ptrdiff_t>(lo),
                                    perm.begin() + static_cast<std::ptrdiff_t>(std::min(n, lo + spec.cluster_size)));
        std::sort(members.begin(), members.end());
        for (auto id : members) cluster_of_[p][id] = clusters_[p].size();
        clusters_[p].push_back(cdf_of(std::move(members)));
      }
    }
  }

  std::size_t size() const { return weight_.size(); }

  double zipf_probability(WordId id) const { return weight_[id] / global_.cdf.back(); }

  std::vector<WordId> sentence(std::size_t length, Rng& rng) const {
    std::vector<WordId> s;
    s.reserve(length);
    s.push_back(draw(global_, rng));
    while (s.size() < length) {
      if (rng.bernoulli(mixing_)) {
        const auto p = rng.below(clusters_.size());
        s.push_back(draw(clusters_[p][cluster_of_[p][s.back()]], rng));
      } else {
        s.push_back(draw(global_, rng));
      }
    }
    return s;
  }

 private:
  struct Table {
    std::vector<WordId> ids;
    std::vector<double> cdf;
  };

  static std::vector<WordId> all_ids(std::size_t n) {
    std::vector<WordId> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<WordId>(i);
    return v;
  }

  Table cdf_of(std::vector<WordId> ids) const {
    Table t{std::move(ids), {}};
    double acc = 0.0;
    for (auto id : t.ids) t.cdf.push_back(acc += weight_[id]);
    return t;
  }

  static WordId draw(const Table& t, Rng& rng) {
    const double u = rng.uniform() * t.cdf.back();
    auto it = std::upper_bound(t.cdf.begin(), t.cdf.end(), u);
    return t.ids[std::min<std::size_t>(static_cast<std::size_t>(it - t.cdf.begin()), t.ids.size() - 1)];
  }

  double mixing_;
  std::vector<double> weight_;
  Table global_;
  std::vector<std::vector<std::size_t>> cluster_of_;
  std::vector<std::vector<Table>> clusters_;
};

// Surface forms of latent ids per language.
struct Lexicon {
  std::vector<std::string> x, z, y;
};

struct SynthCorpora {
  std::vector<Sentence> mono_x, mono_z;
  std::vector<Sentence> parallel_z, parallel_y;
  Lexicon lexicon;
  // Gold dictionaries as (source form, target form) lines.
  TokenPairs gold_xy, gold_xz, gold_zy;
};

namespace detail {

inline std::vector<std::string> surface_forms(const std::string& prefix, std::size_t n, Rng& rng) {
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  rng.shuffle(perm.begin(), perm.end());
  std::vector<std::string> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = prefix + std::to_string(perm[i]);
  return out;
}

inline Sentence render(const std::vector<WordId>& ids, const std::vector<std::string>& forms) {
  Sentence s;
  s.reserve(ids.size());
  for (auto id : ids) s.push_back(forms[id]);
  return s;
}

inline std::size_t draw_length(std::size_t mean, Rng& rng) {
  const std::size_t lo = std::max<std::size_t>(1, mean / 2), hi = mean + mean / 2;
  return lo + rng.below(hi - lo + 1);
}

}  // namespace detail

inline SynthCorpora synth_generate(const SynthSpec& spec) {
  spec.validate();
  const LatentLanguage lang(spec);
  const std::size_t n = spec.vocab_size;
  Rng rng(spec.seed);
  SynthCorpora out;
  auto& lex = out.lexicon;
  lex.x = detail::surface_forms("x", n, rng);
  lex.y = detail::surface_forms("y", n, rng);
  lex.z = detail::surface_forms("z", n, rng);
  // Shared x/z forms: the first round(overlap * n) ids of a random order.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng.shuffle(order.begin(), order.end());
  const auto shared = static_cast<std::size_t>(std::llround(spec.overlap * static_cast<double>(n)));
  for (std::size_t i = 0; i < shared; ++i) lex.z[order[i]] = lex.x[order[i]];

  Rng mono_rng = rng.fork(1);
  for (std::size_t i = 0; i < spec.sentences; ++i) {
    const auto ids = lang.sentence(detail::draw_length(spec.sentence_length, mono_rng), mono_rng);
    out.mono_x.push_back(detail::render(ids, lex.x));
    out.mono_z.push_back(detail::render(ids, lex.z));
  }
  Rng par_rng = rng.fork(2);
  for (std::size_t i = 0; i < spec.parallel_sentences; ++i) {
    const auto ids = lang.sentence(detail::draw_length(spec.sentence_length, par_rng), par_rng);
    out.parallel_z.push_back(detail::render(ids, lex.z));
    out.parallel_y.push_back(detail::render(ids, lex.y));
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.gold_xy.emplace_back(lex.x[i], lex.y[i]);
    out.gold_xz.emplace_back(lex.x[i], lex.z[i]);
    out.gold_zy.emplace_back(lex.z[i], lex.y[i]);
  }
  return out;
}

inline void write_gold(const TokenPairs& gold, const std::string& path) {
  auto out = detail::open_out(path);
  for (const auto& [s, t] : gold) out << s << ' ' << t << '\n';
  if (!out) throw DataError(path + ": write failed");
}

inline Eigen::MatrixXd random_orthogonal(std::size_t d, Rng& rng) {
  Eigen::MatrixXd g(d, d);
  for (Eigen::Index i = 0; i < g.rows(); ++i)
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  // Sign fix so the draw is Haar distributed.
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;
  return q;
}

// A related-language variant of `base`: every row, taken at unit length, is
// turned by the angle rotation_scale * pi/2 towards an independent random
// direction, Gaussian noise of scale sigma is added, and the whole space is
// rotated by a random orthogonal matrix. Row i is renamed to tokens[i].
inline EmbeddingSpace synth_variant(const EmbeddingSpace& base, const std::vector<std::string>& tokens,
                                    double rotation_scale, double sigma, Rng& rng) {
  if (tokens.size() != base.size()) throw ConfigError("synth_variant: token list size mismatch");
  const double angle = rotation_scale * std::numbers::pi / 2.0;
  const auto d = static_cast<Eigen::Index>(base.dim());
  Matrix m = base.matrix;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double norm = m.row(i).norm();
    if (angle > 0.0 && norm > 0.0 && d > 1) {
      const Eigen::RowVectorXd v = m.row(i) / norm;
      Eigen::RowVectorXd u(d);
      for (Eigen::Index j = 0; j < d; ++j) u(j) = rng.normal();
      u -= u.dot(v) * v;
      u.normalize();
      m.row(i) = std::cos(angle) * v + std::sin(angle) * u;
    } else if (norm > 0.0) {
      m.row(i) /= norm;
    }
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) += sigma * rng.normal();
  }
  m = m * random_orthogonal(base.dim(), rng);
  return EmbeddingSpace(Vocabulary(tokens, base.vocab->counts()), std::move(m));
}

// Renames the tokens of `space` from one surface language to another.
inline std::vector<std::string> translate_tokens(const EmbeddingSpace& space, const std::vector<std::string>& from,
                                                 const std::vector<std::string>& to) {
  std::unordered_map<std::string, std::size_t> id;
  for (std::size_t i = 0; i < from.size(); ++i) id.emplace(from[i], i);
  std::vector<std::string> out;
  for (const auto& t : space.vocab->tokens()) {
    auto it = id.find(t);
    if (it == id.end()) throw ConfigError("translate_tokens: unknown token '" + t + "'");
    out.push_back(to[it->second]);
  }
  return out;
}

// Embeddings of a synthetic triple. X is trained on the x corpus; Z and the
// monolingual Y are distorted variants of X at the spec's relatedness.
struct SynthTriple {
  SynthCorpora corpora;
  EmbeddingSpace x, z, y_mono;
};

inline SynthTriple synth_triple(const SynthSpec& spec, std::size_t workers = 1) {
  auto corpora = synth_generate(spec);
  auto cfg = spec.training();
  cfg.workers = workers;
  auto x = train_monolingual(corpora.mono_x, cfg).space;
  const auto& lex = corpora.lexicon;
  Rng rng = Rng(spec.seed).fork(3);
  auto z = synth_variant(x, translate_tokens(x, lex.x, lex.z), spec.rotation_scale, spec.noise_sigma, rng);
  auto y = synth_variant(x, translate_tokens(x, lex.x, lex.y), spec.target_rotation_scale, spec.noise_sigma, rng);
  return {std::move(corpora), std::move(x), std::move(z), std::move(y)};
}

}  // namespace clwe
