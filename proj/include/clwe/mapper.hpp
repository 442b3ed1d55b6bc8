#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "clwe/dictionary.hpp"
#include "clwe/embedding_space.hpp"
#include "clwe/io.hpp"
#include "clwe/random.hpp"

namespace clwe {

inline constexpr double kOrthogonalityTol = 1e-6;

inline double orthogonality_error(const Eigen::MatrixXd& w) {
  return (w.transpose() * w - Eigen::MatrixXd::Identity(w.cols(), w.cols())).cwiseAbs().maxCoeff();
}

// Orthogonal d x d transform, mapping rows of the source frame into the
// target frame by right multiplication.
class OrthogonalMap {
 public:
  OrthogonalMap(Eigen::MatrixXd w, std::string src_frame = {}, std::string tgt_frame = {})
      : w_(std::move(w)), src_(std::move(src_frame)), tgt_(std::move(tgt_frame)) {
    if (w_.rows() != w_.cols() || w_.rows() < 1) throw DataError("orthogonal map: matrix must be square");
    if (!w_.allFinite()) throw DataError("orthogonal map: non-finite entries");
    const double err = orthogonality_error(w_);
    if (!(err < kOrthogonalityTol))
      throw DataError("orthogonal map: |W^T W - I|_max = " + std::to_string(err));
  }

  static OrthogonalMap identity(std::size_t d, std::string src = {}, std::string tgt = {}) {
    return OrthogonalMap(Eigen::MatrixXd::Identity(d, d), std::move(src), std::move(tgt));
  }

  const Eigen::MatrixXd& matrix() const { return w_; }
  std::size_t dim() const { return static_cast<std::size_t>(w_.rows()); }
  const std::string& source_frame() const { return src_; }
  const std::string& target_frame() const { return tgt_; }

  OrthogonalMap inverse() const { return OrthogonalMap(w_.transpose(), tgt_, src_); }

  // this, then next.
  OrthogonalMap then(const OrthogonalMap& next) const { return OrthogonalMap(w_ * next.w_, src_, next.tgt_); }

 private:
  Eigen::MatrixXd w_;
  std::string src_, tgt_;
};

enum class Retrieval { csls, nn };
enum class Direction { union_both, forward };
// similarity: sorted intra-lingual similarity profiles. identical: string
// matches. frame: nearest neighbours under the identity map, for spaces that
// already share coordinates. best: run similarity and frame, keep the result
// with the higher objective.
enum class SeedMode { similarity, identical, frame, best };

inline const char* to_string(Retrieval r) { return r == Retrieval::csls ? "csls" : "nn"; }

struct MapConfig {
  Retrieval retrieval = Retrieval::csls;
  std::size_t csls_k = 10;
  std::size_t vocab_cutoff = 20000;  // induction vocabulary, clipped to space size
  std::size_t seed_cutoff = 4000;    // similarity-matrix seed vocabulary
  double stochastic_keep = 0.1;
  double objective_tol = 1e-6;
  std::size_t max_iters = 500;
  Direction direction = Direction::union_both;
  SeedMode seed_mode = SeedMode::similarity;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(stochastic_keep > 0.0 && stochastic_keep <= 1.0)) throw ConfigError("map: stochastic_keep must be in (0, 1]");
    if (csls_k < 1) throw ConfigError("map: csls_k must be >= 1");
    if (max_iters < 1) throw ConfigError("map: max_iters must be >= 1");
    if (vocab_cutoff < 1 || seed_cutoff < 2) throw ConfigError("map: cutoffs too small");
    if (!(objective_tol >= 0.0)) throw ConfigError("map: objective_tol must be non-negative");
  }
};

namespace detail {

inline constexpr Eigen::Index kBlockRows = 512;

// Mean of the k largest entries in each row of A * B^T.
inline Vector topk_mean_rows(const Matrix& a, const Matrix& b, std::size_t k) {
  if (k < 1 || k > static_cast<std::size_t>(b.rows()))
    throw ConfigError("csls: neighborhood size " + std::to_string(k) + " out of range 1.." + std::to_string(b.rows()));
  Vector out(a.rows());
  std::vector<double> buf(static_cast<std::size_t>(b.rows()));
  const auto kk = static_cast<std::ptrdiff_t>(k);
  for (Eigen::Index lo = 0; lo < a.rows(); lo += kBlockRows) {
    const Eigen::Index n = std::min(kBlockRows, a.rows() - lo);
    const Matrix sims = a.middleRows(lo, n) * b.transpose();
    for (Eigen::Index r = 0; r < n; ++r) {
      std::copy(sims.row(r).data(), sims.row(r).data() + sims.cols(), buf.begin());
      std::nth_element(buf.begin(), buf.begin() + (kk - 1), buf.end(), std::greater<>());
      std::sort(buf.begin(), buf.begin() + kk, std::greater<>());
      double s = 0.0;
      for (std::ptrdiff_t i = 0; i < kk; ++i) s += buf[static_cast<std::size_t>(i)];
      out(lo + r) = s / static_cast<double>(k);
    }
  }
  return out;
}

struct Best {
  WordId index;
  double cosine;
};

// For each row of A, argmax_j of 2 cos(a, b_j) - penalty_j; ties to lower j.
inline std::vector<Best> best_per_row(const Matrix& a, const Matrix& b, const Vector& penalty) {
  std::vector<Best> out(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index lo = 0; lo < a.rows(); lo += kBlockRows) {
    const Eigen::Index n = std::min(kBlockRows, a.rows() - lo);
    const Matrix sims = a.middleRows(lo, n) * b.transpose();
    for (Eigen::Index r = 0; r < n; ++r) {
      Eigen::Index best = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < sims.cols(); ++j) {
        const double score = 2.0 * sims(r, j) - penalty(j);
        if (score > best_score) {
          best_score = score;
          best = j;
        }
      }
      out[static_cast<std::size_t>(lo + r)] = {static_cast<WordId>(best), sims(r, best)};
    }
  }
  return out;
}

inline Matrix gather_rows(const Matrix& m, const std::vector<WordId>& ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), m.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(ids[i]);
  return out;
}

}  // namespace detail

// W = U V^T from the SVD of X_D^T Y_D; minimizes |X_D W - Y_D|_F over
// orthogonal W.
inline OrthogonalMap orthogonal_procrustes(const Matrix& x, const Matrix& y, const DictionaryPairs& dict,
                                           std::string src_frame = {}, std::string tgt_frame = {}) {
  if (x.cols() != y.cols())
    throw DataError("procrustes: dimension mismatch " + std::to_string(x.cols()) + " vs " + std::to_string(y.cols()));
  if (dict.empty()) throw DataError("procrustes: empty dictionary");
  std::vector<WordId> src, tgt;
  for (const auto& [s, t] : dict.pairs()) {
    if (s >= x.rows() || t >= y.rows()) throw DataError("procrustes: dictionary id out of range");
    src.push_back(s);
    tgt.push_back(t);
  }
  const Eigen::MatrixXd m = detail::gather_rows(x, src).transpose() * detail::gather_rows(y, tgt);
  if (!m.allFinite()) throw DataError("procrustes: non-finite input");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return OrthogonalMap(svd.matrixU() * svd.matrixV().transpose(), std::move(src_frame), std::move(tgt_frame));
}

inline OrthogonalMap orthogonal_procrustes(const EmbeddingSpace& x, const EmbeddingSpace& y,
                                           const DictionaryPairs& dict) {
  return orthogonal_procrustes(x.matrix, y.matrix, dict, x.frame, y.frame);
}

inline double procrustes_objective(const Matrix& x, const Matrix& y, const DictionaryPairs& dict,
                                   const Eigen::MatrixXd& w) {
  double total = 0.0;
  for (const auto& [s, t] : dict.pairs()) total += (x.row(s) * w - y.row(t)).squaredNorm();
  return total;
}

inline EmbeddingSpace apply_map(EmbeddingSpace x, const OrthogonalMap& map) {
  if (x.dim() != map.dim())
    throw DataError("apply_map: space has dimension " + std::to_string(x.dim()) + ", map has " +
                    std::to_string(map.dim()));
  x.matrix = x.matrix * map.matrix();
  if (!map.target_frame().empty()) x.frame = map.target_frame();
  return x;
}

// CSLS ranking: score(x, y) = 2 cos(x, y) - r_T(x) - r_S(y), where r_T(x) is
// the mean cosine of x to its k nearest target rows and r_S(y) the mean
// cosine of y to its k nearest mapped-source rows. Returns, per query, the
// best `limit` target ids by descending score (ties to lower id).
inline std::vector<std::vector<WordId>> csls_knn(const Matrix& xm, const Matrix& y, std::size_t k,
                                                 const std::vector<WordId>& queries, std::size_t limit = SIZE_MAX) {
  if (k < 1 || k > static_cast<std::size_t>(y.rows()) || k > static_cast<std::size_t>(xm.rows()))
    throw ConfigError("csls_knn: k = " + std::to_string(k) + " out of range");
  const Matrix q = detail::gather_rows(xm, queries);
  const Vector r_t = detail::topk_mean_rows(q, y, k);
  const Vector r_s = detail::topk_mean_rows(y, xm, k);
  const std::size_t n = static_cast<std::size_t>(y.rows());
  limit = std::min(limit, n);
  std::vector<std::vector<WordId>> out(queries.size());
  std::vector<double> score(n);
  std::vector<WordId> order(n);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const Vector sims = y * q.row(static_cast<Eigen::Index>(i)).transpose();
    for (std::size_t j = 0; j < n; ++j)
      score[j] = 2.0 * sims(static_cast<Eigen::Index>(j)) - r_t(static_cast<Eigen::Index>(i)) -
                 r_s(static_cast<Eigen::Index>(j));
    std::iota(order.begin(), order.end(), WordId{0});
    auto cmp = [&](WordId a, WordId b) { return score[a] > score[b] || (score[a] == score[b] && a < b); };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(limit), order.end(), cmp);
    out[i].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(limit));
  }
  return out;
}

// Plain cosine ranking (rows assumed unit length), same conventions as csls_knn.
inline std::vector<std::vector<WordId>> cosine_knn(const Matrix& xm, const Matrix& y, const std::vector<WordId>& queries,
                                                   std::size_t limit = SIZE_MAX) {
  const std::size_t n = static_cast<std::size_t>(y.rows());
  limit = std::min(limit, n);
  std::vector<std::vector<WordId>> out(queries.size());
  std::vector<WordId> order(n);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const Vector sims = y * xm.row(queries[i]).transpose();
    std::iota(order.begin(), order.end(), WordId{0});
    auto cmp = [&](WordId a, WordId b) { return sims(a) > sims(b) || (sims(a) == sims(b) && a < b); };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(limit), order.end(), cmp);
    out[i].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(limit));
  }
  return out;
}

struct Induction {
  DictionaryPairs dictionary;  // after stochastic dropout
  DictionaryPairs candidates;  // before dropout
  double objective = 0.0;      // mean cosine over candidate pairs
};

namespace detail {

// Best-match pairs between row sets A (sources) and B (targets) that are
// already in one frame. Forward: each A row to its best B row; backward:
// each B row to its best A row.
inline Induction induce_between(const Matrix& a, const Matrix& b, const MapConfig& cfg, double keep, Rng& rng,
                                std::shared_ptr<const Vocabulary> src_vocab,
                                std::shared_ptr<const Vocabulary> tgt_vocab) {
  Vector pen_b = Vector::Zero(b.rows()), pen_a = Vector::Zero(a.rows());
  const bool both = cfg.direction == Direction::union_both;
  if (cfg.retrieval == Retrieval::csls) {
    const std::size_t k = std::min({cfg.csls_k, static_cast<std::size_t>(a.rows()), static_cast<std::size_t>(b.rows())});
    pen_b = topk_mean_rows(b, a, k);
    if (both) pen_a = topk_mean_rows(a, b, k);
  }
  Induction out{DictionaryPairs(src_vocab, tgt_vocab), DictionaryPairs(src_vocab, tgt_vocab), 0.0};
  double cos_sum = 0.0;
  auto consider = [&](WordId s, WordId t, double c) {
    if (out.candidates.add(s, t)) cos_sum += c;
  };
  const auto fwd = best_per_row(a, b, pen_b);
  for (std::size_t i = 0; i < fwd.size(); ++i) consider(static_cast<WordId>(i), fwd[i].index, fwd[i].cosine);
  if (both) {
    const auto bwd = best_per_row(b, a, pen_a);
    for (std::size_t j = 0; j < bwd.size(); ++j) consider(bwd[j].index, static_cast<WordId>(j), bwd[j].cosine);
  }
  out.objective = cos_sum / static_cast<double>(out.candidates.size());
  for (const auto& [s, t] : out.candidates.pairs())
    if (keep >= 1.0 || rng.bernoulli(keep)) out.dictionary.add(s, t);
  if (out.dictionary.empty()) out.dictionary = out.candidates;
  return out;
}

}  // namespace detail

// One induction step on the top-m frequent words of each space under `map`,
// keeping each candidate with probability `keep`.
inline Induction induce_dictionary(const EmbeddingSpace& x, const EmbeddingSpace& y, const OrthogonalMap& map,
                                   const MapConfig& cfg, double keep, Rng& rng) {
  if (x.dim() != map.dim() || y.dim() != map.dim()) throw DataError("induce_dictionary: dimension mismatch");
  const auto mx = static_cast<Eigen::Index>(std::min(cfg.vocab_cutoff, x.size()));
  const auto my = static_cast<Eigen::Index>(std::min(cfg.vocab_cutoff, y.size()));
  if (mx < 1 || my < 1) throw DataError("induce_dictionary: empty cutoff vocabulary");
  const Matrix xm = x.matrix.topRows(mx) * map.matrix();
  const Matrix ym = y.matrix.topRows(my);
  return detail::induce_between(xm, ym, cfg, keep, rng, x.vocab, y.vocab);
}

inline Induction induce_dictionary(const EmbeddingSpace& x, const EmbeddingSpace& y, const OrthogonalMap& map,
                                   const MapConfig& cfg) {
  Rng rng(cfg.seed);
  return induce_dictionary(x, y, map, cfg, cfg.stochastic_keep, rng);
}

// Pairs of string-identical tokens.
inline DictionaryPairs identical_token_seed(const EmbeddingSpace& x, const EmbeddingSpace& y) {
  DictionaryPairs d(x.vocab, y.vocab);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (auto j = y.vocab->find(x.token(static_cast<WordId>(i)))) d.add(static_cast<WordId>(i), *j);
  if (d.empty()) throw DataError("unsupervised_seed: no identical tokens between the vocabularies");
  return d;
}

// Rows of X X^T over the first m words, each sorted ascending, then
// normalized unit -> center -> unit. Invariant under orthogonal maps of X and
// under permutations of its rows.
inline Matrix sorted_similarity_profiles(const Matrix& x, Eigen::Index m) {
  const Matrix xc = x.topRows(m);
  Matrix sims = xc * xc.transpose();
  for (Eigen::Index i = 0; i < m; ++i) std::sort(sims.row(i).data(), sims.row(i).data() + m);
  auto unit = [](Matrix& a) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      const double n = a.row(i).norm();
      if (n > 0) a.row(i) /= n;
    }
  };
  unit(sims);
  const Eigen::RowVectorXd mean = sims.colwise().mean();
  sims.rowwise() -= mean;
  unit(sims);
  return sims;
}

// Initial dictionary without bilingual supervision. Similarity mode matches
// words across spaces by their sorted intra-lingual similarity profiles.
inline DictionaryPairs unsupervised_seed(const EmbeddingSpace& x, const EmbeddingSpace& y, const MapConfig& cfg) {
  cfg.validate();
  if (cfg.seed_mode == SeedMode::identical) return identical_token_seed(x, y);
  if (cfg.seed_mode == SeedMode::frame) {
    if (x.dim() != y.dim()) throw DataError("unsupervised_seed: dimension mismatch");
    Rng rng(cfg.seed);
    return induce_dictionary(x, y, OrthogonalMap::identity(x.dim(), x.frame, y.frame), cfg, 1.0, rng).candidates;
  }
  const auto m = static_cast<Eigen::Index>(std::min({cfg.seed_cutoff, cfg.vocab_cutoff, x.size(), y.size()}));
  if (m < 2) throw DataError("unsupervised_seed: need at least 2 words in each space");
  const Matrix px = sorted_similarity_profiles(x.matrix, m);
  const Matrix py = sorted_similarity_profiles(y.matrix, m);
  Rng rng(cfg.seed);
  return detail::induce_between(px, py, cfg, 1.0, rng, x.vocab, y.vocab).candidates;
}

struct TraceRow {
  std::size_t iter;
  double objective;
  double keep_prob;
  std::size_t dict_size;
};

struct SelfLearnResult {
  OrthogonalMap map;
  DictionaryPairs dictionary;  // full induced dictionary under `map`
  std::vector<TraceRow> trace;
  double best_objective = -std::numeric_limits<double>::infinity();
  std::size_t iterations = 0;
  bool converged = false;  // false: stopped at max_iters, best state returned
};

// Alternates Procrustes solves and dictionary re-induction from `seed`.
// keep_prob doubles whenever the relative objective gain falls below
// objective_tol; the loop ends on a stall at keep_prob 1 or at max_iters.
inline SelfLearnResult self_learn(const EmbeddingSpace& x, const EmbeddingSpace& y, const MapConfig& cfg,
                                  DictionaryPairs seed) {
  cfg.validate();
  if (x.dim() != y.dim())
    throw DataError("self_learn: dimension mismatch " + std::to_string(x.dim()) + " vs " + std::to_string(y.dim()));
  Rng rng(cfg.seed);
  double keep = cfg.stochastic_keep;
  DictionaryPairs dict = std::move(seed);
  SelfLearnResult best{OrthogonalMap::identity(x.dim(), x.frame, y.frame), DictionaryPairs(x.vocab, y.vocab), {}};
  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    auto w = orthogonal_procrustes(x.matrix, y.matrix, dict, x.frame, y.frame);
    auto ind = induce_dictionary(x, y, w, cfg, keep, rng);
    best.trace.push_back({it, ind.objective, keep, ind.dictionary.size()});
    best.iterations = it;
    const double prev = best.best_objective;
    const double gain = std::isfinite(prev) ? (ind.objective - prev) / std::max(std::abs(prev), 1e-12)
                                            : std::numeric_limits<double>::infinity();
    if (ind.objective > prev) {
      best.best_objective = ind.objective;
      best.map = w;
      best.dictionary = ind.candidates;
    }
    if (gain < cfg.objective_tol) {
      if (keep >= 1.0) {
        best.converged = true;
        break;
      }
      keep = std::min(1.0, keep * 2.0);
    }
    dict = std::move(ind.dictionary);
  }
  return best;
}

inline SelfLearnResult self_learn(const EmbeddingSpace& x, const EmbeddingSpace& y, const MapConfig& cfg) {
  if (cfg.seed_mode != SeedMode::best) return self_learn(x, y, cfg, unsupervised_seed(x, y, cfg));
  MapConfig c = cfg;
  c.seed_mode = SeedMode::similarity;
  auto a = self_learn(x, y, c, unsupervised_seed(x, y, c));
  c.seed_mode = SeedMode::frame;
  auto b = self_learn(x, y, c, unsupervised_seed(x, y, c));
  return b.best_objective > a.best_objective ? b : a;
}

inline void write_trace_csv(const std::vector<TraceRow>& trace, const std::string& path) {
  auto out = detail::open_out(path);
  out << "iter,objective,keep_prob,dict_size\n";
  char buf[128];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%zu,%.9g,%.6g,%zu\n", r.iter, r.objective, r.keep_prob, r.dict_size);
    out << buf;
  }
  if (!out) throw DataError(path + ": write failed");
}

// Text form "d d" then d rows at full precision, so a reload is exact.
inline void save_map(const OrthogonalMap& map, const std::string& path) {
  auto out = detail::open_out(path);
  const auto& w = map.matrix();
  out << w.rows() << ' ' << w.cols() << '\n';
  char buf[32];
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", w(i, j));
      out << (j ? " " : "") << buf;
    }
    out << '\n';
  }
  if (!out) throw DataError(path + ": write failed");
}

inline OrthogonalMap load_map(const std::string& path, std::string src_frame = {}, std::string tgt_frame = {}) {
  auto in = detail::open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw DataError(at_line(path, 1) + "missing header");
  const auto head = detail::split_ws(line);
  std::size_t rows = 0, cols = 0;
  if (head.size() != 2 || !detail::parse_number(head[0], rows) || !detail::parse_number(head[1], cols) || rows != cols ||
      rows == 0)
    throw DataError(at_line(path, 1) + "expected header 'd d'");
  Eigen::MatrixXd w(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    if (!std::getline(in, line)) throw DataError(at_line(path, i + 2) + "missing row");
    const auto f = detail::split_ws(line);
    if (f.size() != cols) throw DataError(at_line(path, i + 2) + "expected " + std::to_string(cols) + " values");
    for (std::size_t j = 0; j < cols; ++j)
      if (!detail::parse_number(f[j], w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))))
        throw DataError(at_line(path, i + 2) + "bad number '" + std::string(f[j]) + "'");
  }
  return OrthogonalMap(std::move(w), std::move(src_frame), std::move(tgt_frame));
}

}  // namespace clwe
