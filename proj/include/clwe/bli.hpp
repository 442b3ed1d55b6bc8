#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "clwe/dictionary.hpp"
#include "clwe/embedding_space.hpp"
#include "clwe/io.hpp"
#include "clwe/mapper.hpp"

namespace clwe {

struct BliOptions {
  Retrieval retrieval = Retrieval::csls;
  std::size_t csls_k = 10;
};

struct BliReport {
  double p_at_1 = 0.0, p_at_5 = 0.0, p_at_10 = 0.0;
  std::size_t evaluated = 0;
  std::size_t skipped_oov = 0;
  Retrieval retrieval = Retrieval::csls;
  std::size_t csls_k = 10;
};

inline void require_same_frame(const EmbeddingSpace& a, const EmbeddingSpace& b, const char* who) {
  if (!a.frame.empty() && !b.frame.empty() && a.frame != b.frame)
    throw DataError(std::string(who) + ": spaces live in different frames ('" + a.frame + "' vs '" + b.frame + "')");
}

// Top-`limit` retrieved target ids for each query source id.
inline std::vector<std::vector<WordId>> retrieve(const EmbeddingSpace& src, const EmbeddingSpace& tgt,
                                                 const std::vector<WordId>& queries, const BliOptions& opt,
                                                 std::size_t limit) {
  if (src.dim() != tgt.dim()) throw DataError("retrieve: dimension mismatch");
  const Matrix xs = unit_normalize(src).matrix;
  const Matrix ys = unit_normalize(tgt).matrix;
  if (opt.retrieval == Retrieval::csls) return csls_knn(xs, ys, opt.csls_k, queries, limit);
  return cosine_knn(xs, ys, queries, limit);
}

// Precision at 1/5/10: a source word counts as correct at k when any of its
// gold translations is among its top-k retrieved targets. `skipped_oov` is
// carried into the report (source words the gold file had but the
// vocabularies could not cover).
inline BliReport bli_precision(const EmbeddingSpace& src, const EmbeddingSpace& tgt, const DictionaryPairs& gold,
                               const BliOptions& opt = {}, std::size_t skipped_oov = 0) {
  require_same_frame(src, tgt, "bli_precision");
  const auto groups = gold.grouped();
  if (groups.empty()) throw DataError("bli_precision: no gold source word is in vocabulary");
  std::vector<WordId> queries;
  for (const auto& g : groups) queries.push_back(g.first);
  const auto ranked = retrieve(src, tgt, queries, opt, 10);
  std::size_t hit1 = 0, hit5 = 0, hit10 = 0;
  for (std::size_t i = 0; i < groups.size(); ++i) {
    std::size_t first = SIZE_MAX;
    for (std::size_t r = 0; r < ranked[i].size() && first == SIZE_MAX; ++r)
      for (auto t : groups[i].second)
        if (ranked[i][r] == t) {
          first = r;
          break;
        }
    hit1 += first < 1;
    hit5 += first < 5;
    hit10 += first < 10;
  }
  const double n = static_cast<double>(groups.size());
  BliReport rep;
  rep.p_at_1 = static_cast<double>(hit1) / n;
  rep.p_at_5 = static_cast<double>(hit5) / n;
  rep.p_at_10 = static_cast<double>(hit10) / n;
  rep.evaluated = groups.size();
  rep.skipped_oov = skipped_oov;
  rep.retrieval = opt.retrieval;
  rep.csls_k = opt.csls_k;
  return rep;
}

inline BliReport bli_precision(const EmbeddingSpace& src, const EmbeddingSpace& tgt, const std::string& gold_path,
                               const BliOptions& opt = {}) {
  auto gold = load_dictionary(gold_path, src.vocab, tgt.vocab, OovPolicy::skip);
  return bli_precision(src, tgt, gold.pairs, opt, gold.coverage.skipped_source_words);
}

}  // namespace clwe
