#pragma once

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "clwe/error.hpp"
#include "clwe/vocabulary.hpp"

namespace clwe {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class NormStep { unit, center };

inline const char* to_string(NormStep s) { return s == NormStep::unit ? "unit" : "center"; }

// A vocabulary plus one row vector per word.
//
// `frame` names the coordinate system the rows live in. Spaces with different
// non-empty frames cannot be compared directly; an empty frame is unknown.
struct EmbeddingSpace {
  std::shared_ptr<const Vocabulary> vocab;
  Matrix matrix;
  std::vector<NormStep> norm_state;
  std::string frame;

  EmbeddingSpace() = default;
  EmbeddingSpace(Vocabulary v, Matrix m, std::string frame_name = {})
      : vocab(std::make_shared<const Vocabulary>(std::move(v))),
        matrix(std::move(m)),
        frame(std::move(frame_name)) {
    validate();
  }
  EmbeddingSpace(std::shared_ptr<const Vocabulary> v, Matrix m, std::string frame_name = {})
      : vocab(std::move(v)), matrix(std::move(m)), frame(std::move(frame_name)) {
    validate();
  }

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(matrix.cols()); }
  auto row(WordId i) const { return matrix.row(i); }
  const std::string& token(WordId i) const { return vocab->token(i); }

  // True when the last three steps are the mapper chain unit, center, unit.
  bool chain_normalized() const {
    const auto n = norm_state.size();
    return n >= 3 && norm_state[n - 3] == NormStep::unit && norm_state[n - 2] == NormStep::center &&
           norm_state[n - 1] == NormStep::unit;
  }

 private:
  void validate() const {
    if (!vocab) throw DataError("embedding space: missing vocabulary");
    if (static_cast<std::size_t>(matrix.rows()) != vocab->size())
      throw DataError("embedding space: " + std::to_string(matrix.rows()) + " rows for " +
                      std::to_string(vocab->size()) + " words");
    if (matrix.cols() < 1) throw DataError("embedding space: dimension must be >= 1");
  }
};

inline EmbeddingSpace unit_normalize(EmbeddingSpace space) {
  for (Eigen::Index i = 0; i < space.matrix.rows(); ++i) {
    const double norm = space.matrix.row(i).norm();
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw DataError("unit_normalize: zero or non-finite row for token '" +
                      space.token(static_cast<WordId>(i)) + "'");
    space.matrix.row(i) /= norm;
  }
  space.norm_state.push_back(NormStep::unit);
  return space;
}

inline EmbeddingSpace mean_center(EmbeddingSpace space) {
  if (space.matrix.rows() == 0) throw DataError("mean_center: empty space");
  const Eigen::RowVectorXd mean = space.matrix.colwise().mean();
  space.matrix.rowwise() -= mean;
  space.norm_state.push_back(NormStep::center);
  return space;
}

// unit -> center -> unit, applied before any mapping or spectral evaluation.
inline EmbeddingSpace normalize_chain(EmbeddingSpace space) {
  return unit_normalize(mean_center(unit_normalize(std::move(space))));
}

inline EmbeddingSpace ensure_chain_normalized(EmbeddingSpace space) {
  if (space.chain_normalized()) return space;
  return normalize_chain(std::move(space));
}

inline EmbeddingSpace with_frame(EmbeddingSpace space, std::string frame) {
  space.frame = std::move(frame);
  return space;
}

// Sub-space of the first n rows (the n most frequent words).
inline EmbeddingSpace head(const EmbeddingSpace& space, std::size_t n) {
  if (n > space.size()) throw ConfigError("head: requested more words than the space holds");
  const auto& toks = space.vocab->tokens();
  const auto& cnts = space.vocab->counts();
  Vocabulary v(std::vector<std::string>(toks.begin(), toks.begin() + n),
               std::vector<std::uint64_t>(cnts.begin(), cnts.begin() + n));
  EmbeddingSpace out(std::move(v), space.matrix.topRows(n), space.frame);
  out.norm_state = space.norm_state;
  return out;
}

}  // namespace clwe
