#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "clwe/embedding_space.hpp"
#include "clwe/io.hpp"
#include "clwe/random.hpp"

namespace clwe {

struct TrainConfig {
  std::size_t dim = 300;
  std::size_t negatives = 10;
  double subsample_threshold = 1e-5;
  std::size_t epochs = 5;
  std::size_t window = 5;
  double learning_rate = 0.025;  // decayed linearly to 1e-4 of itself
  std::size_t min_count = 1;
  std::uint64_t seed = 1;
  std::size_t workers = 1;  // >1 enables unsynchronized (Hogwild) updates

  void validate() const {
    if (dim < 1) throw ConfigError("train: dim must be >= 1");
    if (negatives < 1) throw ConfigError("train: negatives must be >= 1");
    if (!(subsample_threshold > 0.0 && subsample_threshold <= 1.0))
      throw ConfigError("train: subsample_threshold must be in (0, 1]");
    if (epochs < 1) throw ConfigError("train: epochs must be >= 1");
    if (window < 1) throw ConfigError("train: window must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
    if (workers < 1) throw ConfigError("train: workers must be >= 1");
  }
};

// Tokens with count >= min_count, by descending count, ties lexicographic.
inline Vocabulary build_vocab(const std::vector<Sentence>& corpus, std::size_t min_count) {
  std::map<std::string, std::uint64_t> freq;
  for (const auto& s : corpus)
    for (const auto& t : s) ++freq[t];
  if (freq.empty()) throw DataError("build_vocab: corpus is empty");
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [t, c] : freq)
    if (c >= min_count) kept.emplace_back(t, c);
  if (kept.empty()) throw DataError("build_vocab: no token reaches min_count " + std::to_string(min_count));
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> counts;
  for (auto& [t, c] : kept) {
    tokens.push_back(t);
    counts.push_back(c);
  }
  return Vocabulary(std::move(tokens), std::move(counts));
}

// p(i) proportional to count(i)^0.75.
inline std::vector<double> negative_sampling_distribution(const Vocabulary& vocab) {
  std::vector<double> p(vocab.size());
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += p[i] = std::pow(static_cast<double>(vocab.count(i)), 0.75);
  if (total > 0.0)
    for (auto& x : p) x /= total;
  return p;
}

using IdSentence = std::vector<WordId>;

inline std::vector<IdSentence> encode(const std::vector<Sentence>& corpus, const Vocabulary& vocab) {
  std::vector<IdSentence> out;
  out.reserve(corpus.size());
  for (const auto& s : corpus) {
    IdSentence ids;
    for (const auto& t : s)
      if (auto id = vocab.find(t)) ids.push_back(*id);
    out.push_back(std::move(ids));
  }
  return out;
}

struct ParallelCorpus {
  std::shared_ptr<const Vocabulary> vocab_a, vocab_b;
  std::vector<std::pair<IdSentence, IdSentence>> pairs;
};

// Builds both vocabularies and drops pairs with an empty side.
inline ParallelCorpus make_parallel_corpus(const std::vector<Sentence>& side_a, const std::vector<Sentence>& side_b,
                                           std::size_t min_count = 1) {
  if (side_a.size() != side_b.size())
    throw DataError("parallel corpus: sides have " + std::to_string(side_a.size()) + " and " +
                    std::to_string(side_b.size()) + " lines");
  ParallelCorpus pc;
  pc.vocab_a = std::make_shared<const Vocabulary>(build_vocab(side_a, min_count));
  pc.vocab_b = std::make_shared<const Vocabulary>(build_vocab(side_b, min_count));
  auto a = encode(side_a, *pc.vocab_a);
  auto b = encode(side_b, *pc.vocab_b);
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!a[i].empty() && !b[i].empty()) pc.pairs.emplace_back(std::move(a[i]), std::move(b[i]));
  if (pc.pairs.empty()) throw DataError("parallel corpus: no usable sentence pairs");
  return pc;
}

inline ParallelCorpus load_parallel_corpus(const std::string& path_a, const std::string& path_b,
                                           std::size_t min_count = 1) {
  return make_parallel_corpus(read_corpus(path_a), read_corpus(path_b), min_count);
}

// Monotone diagonal alignment: position i of a length-src_len sentence maps to
// round(i * tgt_len / src_len) in the other side.
inline std::size_t project_position(std::size_t i, std::size_t src_len, std::size_t tgt_len) {
  const auto j = static_cast<std::size_t>(
      std::lround(static_cast<double>(i) * static_cast<double>(tgt_len) / static_cast<double>(src_len)));
  return std::min(j, tgt_len - 1);
}

struct TrainStats {
  std::vector<double> epoch_loss;  // mean SGNS loss per (center, context) prediction
  std::uint64_t predictions = 0;
};

struct MonoTrained {
  EmbeddingSpace space;
  TrainStats stats;
};

struct JointTrained {
  EmbeddingSpace a, b;
  TrainStats stats;
};

namespace detail {

// Plain or relaxed-atomic element access, selected per training run.
template <bool Shared>
struct Cell {
  static double load(const double& x) {
    if constexpr (Shared)
      return std::atomic_ref<double>(const_cast<double&>(x)).load(std::memory_order_relaxed);
    else
      return x;
  }
  static void store(double& x, double v) {
    if constexpr (Shared)
      std::atomic_ref<double>(x).store(v, std::memory_order_relaxed);
    else
      x = v;
  }
};

class NegativeSampler {
 public:
  explicit NegativeSampler(const Vocabulary& vocab) {
    auto p = negative_sampling_distribution(vocab);
    cdf_.resize(p.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) cdf_[i] = acc += p[i];
  }
  WordId draw(Rng& rng) const {
    const double u = rng.uniform() * cdf_.back();
    auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<WordId>(std::min<std::size_t>(it - cdf_.begin(), cdf_.size() - 1));
  }

 private:
  std::vector<double> cdf_;
};

// Input/output tables for one language.
struct SgnsTables {
  std::size_t dim = 0;
  std::vector<double> in, out;
  std::vector<double> keep_prob;
  NegativeSampler sampler;

  SgnsTables(const Vocabulary& vocab, std::size_t d, double threshold, Rng& rng)
      : dim(d), in(vocab.size() * d), out(vocab.size() * d, 0.0), sampler(vocab) {
    for (auto& x : in) x = (rng.uniform() - 0.5) / static_cast<double>(d);
    double total = 0.0;
    for (auto c : vocab.counts()) total += static_cast<double>(c);
    keep_prob.resize(vocab.size());
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      const double f = static_cast<double>(vocab.count(i)) / total;
      keep_prob[i] = std::min(1.0, std::sqrt(threshold / f));
    }
  }

  double* in_row(WordId w) { return in.data() + std::size_t{w} * dim; }
  double* out_row(WordId w) { return out.data() + std::size_t{w} * dim; }
};

inline double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }
inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// One center -> context prediction with negatives drawn from `ctx`.
// Returns the loss of this prediction.
template <bool Shared>
double sgns_step(double* center, SgnsTables& ctx, WordId context, std::size_t negatives, double lr, Rng& rng,
                 std::vector<double>& grad) {
  using C = Cell<Shared>;
  const std::size_t d = ctx.dim;
  std::fill(grad.begin(), grad.end(), 0.0);
  double loss = 0.0;
  for (std::size_t k = 0; k <= negatives; ++k) {
    WordId target = context;
    double label = 1.0;
    if (k > 0) {
      target = ctx.sampler.draw(rng);
      if (target == context) continue;
      label = 0.0;
    }
    double* u = ctx.out_row(target);
    double f = 0.0;
    for (std::size_t j = 0; j < d; ++j) f += C::load(center[j]) * C::load(u[j]);
    loss -= label > 0 ? log_sigmoid(f) : log_sigmoid(-f);
    const double g = (label - sigmoid(f)) * lr;
    for (std::size_t j = 0; j < d; ++j) {
      const double uj = C::load(u[j]);
      grad[j] += g * uj;
      C::store(u[j], uj + g * C::load(center[j]));
    }
  }
  for (std::size_t j = 0; j < d; ++j) C::store(center[j], C::load(center[j]) + grad[j]);
  return loss;
}

inline IdSentence subsample(const IdSentence& s, const std::vector<double>& keep_prob, Rng& rng) {
  IdSentence out;
  out.reserve(s.size());
  for (auto w : s)
    if (keep_prob[w] >= 1.0 || rng.bernoulli(keep_prob[w])) out.push_back(w);
  return out;
}

struct Progress {
  std::atomic<std::uint64_t> processed{0};
  std::uint64_t total = 1;
  double lr0 = 0.025;
  double rate() const {
    const double frac = static_cast<double>(processed.load(std::memory_order_relaxed)) / static_cast<double>(total);
    return lr0 * std::max(1e-4, 1.0 - frac);
  }
};

struct EpochAccumulator {
  std::atomic<std::uint64_t> count{0};
  std::atomic<double> loss{0.0};
  void add(double l, std::uint64_t n) {
    count.fetch_add(n, std::memory_order_relaxed);
    double cur = loss.load(std::memory_order_relaxed);
    while (!loss.compare_exchange_weak(cur, cur + l, std::memory_order_relaxed)) {
    }
  }
};

// Splits [0, n) into `workers` contiguous shards and runs fn(worker, lo, hi).
template <class Fn>
void run_sharded(std::size_t n, std::size_t workers, Fn&& fn) {
  if (workers <= 1) {
    fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = n * w / workers, hi = n * (w + 1) / workers;
    pool.emplace_back([&fn, w, lo, hi] { fn(w, lo, hi); });
  }
}

inline Matrix to_matrix(const std::vector<double>& flat, std::size_t rows, std::size_t dim) {
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  std::copy(flat.begin(), flat.end(), m.data());
  return m;
}

inline void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw DataError(std::string("train: non-finite parameter in ") + what);
}

template <bool Shared>
void mono_epoch(const std::vector<IdSentence>& corpus, SgnsTables& t, const TrainConfig& cfg, Progress& progress,
                EpochAccumulator& acc, std::uint64_t epoch_seed) {
  run_sharded(corpus.size(), cfg.workers, [&](std::size_t worker, std::size_t lo, std::size_t hi) {
    Rng rng(epoch_seed * 1000003ull + worker);
    std::vector<double> grad(t.dim);
    double loss = 0.0;
    std::uint64_t count = 0;
    for (std::size_t si = lo; si < hi; ++si) {
      const auto& raw = corpus[si];
      const auto s = subsample(raw, t.keep_prob, rng);
      const double lr = progress.rate();
      for (std::size_t i = 0; i < s.size(); ++i) {
        const std::size_t b = 1 + rng.below(cfg.window);
        const std::size_t from = i >= b ? i - b : 0, to = std::min(s.size(), i + b + 1);
        for (std::size_t c = from; c < to; ++c) {
          if (c == i) continue;
          loss += sgns_step<Shared>(t.in_row(s[i]), t, s[c], cfg.negatives, lr, rng, grad);
          ++count;
        }
      }
      progress.processed.fetch_add(raw.size(), std::memory_order_relaxed);
    }
    acc.add(loss, count);
  });
}

// Both directions of one sentence pair: each side predicts its own window and
// the window around the projected position on the other side.
template <bool Shared>
void joint_pair(const IdSentence& s, const IdSentence& t, SgnsTables& ts, SgnsTables& tt, const TrainConfig& cfg,
                double lr, Rng& rng, std::vector<double>& grad, double& loss, std::uint64_t& count) {
  if (s.empty() || t.empty()) return;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const std::size_t b = 1 + rng.below(cfg.window);
    double* center = ts.in_row(s[i]);
    const std::size_t from = i >= b ? i - b : 0, to = std::min(s.size(), i + b + 1);
    for (std::size_t c = from; c < to; ++c) {
      if (c == i) continue;
      loss += sgns_step<Shared>(center, ts, s[c], cfg.negatives, lr, rng, grad);
      ++count;
    }
    const std::size_t j = project_position(i, s.size(), t.size());
    const std::size_t xfrom = j >= b ? j - b : 0, xto = std::min(t.size(), j + b + 1);
    for (std::size_t c = xfrom; c < xto; ++c) {
      loss += sgns_step<Shared>(center, tt, t[c], cfg.negatives, lr, rng, grad);
      ++count;
    }
  }
}

template <bool Shared>
void joint_epoch(const ParallelCorpus& pc, SgnsTables& ta, SgnsTables& tb, const TrainConfig& cfg, Progress& progress,
                 EpochAccumulator& acc, std::uint64_t epoch_seed) {
  run_sharded(pc.pairs.size(), cfg.workers, [&](std::size_t worker, std::size_t lo, std::size_t hi) {
    Rng rng(epoch_seed * 1000003ull + worker);
    std::vector<double> grad(ta.dim);
    double loss = 0.0;
    std::uint64_t count = 0;
    for (std::size_t pi = lo; pi < hi; ++pi) {
      const auto& [ra, rb] = pc.pairs[pi];
      const auto a = subsample(ra, ta.keep_prob, rng);
      const auto b = subsample(rb, tb.keep_prob, rng);
      const double lr = progress.rate();
      joint_pair<Shared>(a, b, ta, tb, cfg, lr, rng, grad, loss, count);
      joint_pair<Shared>(b, a, tb, ta, cfg, lr, rng, grad, loss, count);
      progress.processed.fetch_add(ra.size() + rb.size(), std::memory_order_relaxed);
    }
    acc.add(loss, count);
  });
}

inline void apply_init(SgnsTables& t, const Vocabulary& vocab, const EmbeddingSpace* init) {
  if (!init) return;
  if (init->dim() != t.dim)
    throw ConfigError("train: initial space has dimension " + std::to_string(init->dim()) + ", training uses " +
                      std::to_string(t.dim));
  for (std::size_t i = 0; i < vocab.size(); ++i)
    if (auto id = init->vocab->find(vocab.token(static_cast<WordId>(i))))
      for (std::size_t j = 0; j < t.dim; ++j)
        t.in[i * t.dim + j] = init->matrix(*id, static_cast<Eigen::Index>(j));
}

}  // namespace detail

// Skip-gram with negative sampling over an already-encoded corpus.
inline MonoTrained train_monolingual(const std::vector<IdSentence>& corpus, std::shared_ptr<const Vocabulary> vocab,
                                     const TrainConfig& cfg) {
  cfg.validate();
  std::uint64_t tokens = 0;
  for (const auto& s : corpus) tokens += s.size();
  if (tokens == 0) throw DataError("train_monolingual: corpus is empty");

  Rng rng(cfg.seed);
  detail::SgnsTables t(*vocab, cfg.dim, cfg.subsample_threshold, rng);
  detail::Progress progress;
  progress.total = tokens * cfg.epochs + 1;
  progress.lr0 = cfg.learning_rate;
  TrainStats stats;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    detail::EpochAccumulator acc;
    const std::uint64_t epoch_seed = rng.next();
    if (cfg.workers > 1)
      detail::mono_epoch<true>(corpus, t, cfg, progress, acc, epoch_seed);
    else
      detail::mono_epoch<false>(corpus, t, cfg, progress, acc, epoch_seed);
    stats.predictions += acc.count;
    stats.epoch_loss.push_back(acc.count ? acc.loss / static_cast<double>(acc.count.load()) : 0.0);
    detail::check_finite(t.in, "input vectors");
  }
  return {EmbeddingSpace(vocab, detail::to_matrix(t.in, vocab->size(), cfg.dim)), std::move(stats)};
}

inline MonoTrained train_monolingual(const std::vector<Sentence>& corpus, const TrainConfig& cfg) {
  cfg.validate();
  auto vocab = std::make_shared<const Vocabulary>(build_vocab(corpus, cfg.min_count));
  return train_monolingual(encode(corpus, *vocab), vocab, cfg);
}

// Optional warm start: rows of `init_a` / `init_b` seed the input vectors of
// matching tokens on side A / side B.
struct JointInit {
  const EmbeddingSpace* a = nullptr;
  const EmbeddingSpace* b = nullptr;
};

// Bilingual skip-gram over a sentence-aligned corpus. Both returned spaces
// share one coordinate system.
inline JointTrained train_joint(const ParallelCorpus& pc, const TrainConfig& cfg, JointInit init = {}) {
  cfg.validate();
  std::uint64_t tokens = 0;
  for (const auto& [a, b] : pc.pairs) tokens += a.size() + b.size();
  if (tokens == 0) throw DataError("train_joint: parallel corpus is empty");

  Rng rng(cfg.seed);
  detail::SgnsTables ta(*pc.vocab_a, cfg.dim, cfg.subsample_threshold, rng);
  detail::SgnsTables tb(*pc.vocab_b, cfg.dim, cfg.subsample_threshold, rng);
  detail::apply_init(ta, *pc.vocab_a, init.a);
  detail::apply_init(tb, *pc.vocab_b, init.b);
  detail::Progress progress;
  progress.total = tokens * cfg.epochs + 1;
  progress.lr0 = cfg.learning_rate;
  TrainStats stats;
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    detail::EpochAccumulator acc;
    const std::uint64_t epoch_seed = rng.next();
    if (cfg.workers > 1)
      detail::joint_epoch<true>(pc, ta, tb, cfg, progress, acc, epoch_seed);
    else
      detail::joint_epoch<false>(pc, ta, tb, cfg, progress, acc, epoch_seed);
    stats.predictions += acc.count;
    stats.epoch_loss.push_back(acc.count ? acc.loss / static_cast<double>(acc.count.load()) : 0.0);
    detail::check_finite(ta.in, "side A input vectors");
    detail::check_finite(tb.in, "side B input vectors");
  }
  return {EmbeddingSpace(pc.vocab_a, detail::to_matrix(ta.in, pc.vocab_a->size(), cfg.dim), "joint"),
          EmbeddingSpace(pc.vocab_b, detail::to_matrix(tb.in, pc.vocab_b->size(), cfg.dim), "joint"),
          std::move(stats)};
}

}  // namespace clwe
