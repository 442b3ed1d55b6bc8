#pragma once

#include <algorithm>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>

#include "clwe/embedding_space.hpp"

namespace clwe {

enum class LaplacianKind { unnormalized, normalized };

// Symmetric unweighted k-nearest-neighbour graph over the rows of `m` by
// cosine (rows assumed unit length): i ~ j when either lists the other among
// its k nearest. Self matches are excluded; ties go to the lower id.
inline Eigen::MatrixXd knn_graph(const Matrix& m, std::size_t k) {
  const auto n = m.rows();
  if (n < 2 || k < 1 || k >= static_cast<std::size_t>(n))
    throw ConfigError("knn_graph: k = " + std::to_string(k) + " needs 1 <= k < n = " + std::to_string(n));
  const Matrix sims = m * m.transpose();
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  const auto kk = static_cast<std::ptrdiff_t>(k);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::swap(order[static_cast<std::size_t>(i)], order.back());
    auto cmp = [&](Eigen::Index a, Eigen::Index b) {
      return sims(i, a) > sims(i, b) || (sims(i, a) == sims(i, b) && a < b);
    };
    std::partial_sort(order.begin(), order.begin() + kk, order.end() - 1, cmp);
    for (std::ptrdiff_t r = 0; r < kk; ++r) {
      const auto j = order[static_cast<std::size_t>(r)];
      adj(i, j) = adj(j, i) = 1.0;
    }
  }
  return adj;
}

inline Eigen::MatrixXd laplacian(const Eigen::MatrixXd& adj, LaplacianKind kind = LaplacianKind::unnormalized) {
  const Eigen::VectorXd deg = adj.rowwise().sum();
  if (kind == LaplacianKind::unnormalized) {
    Eigen::MatrixXd l = -adj;
    l.diagonal() += deg;
    return l;
  }
  Eigen::VectorXd inv_sqrt(deg.size());
  for (Eigen::Index i = 0; i < deg.size(); ++i) inv_sqrt(i) = deg(i) > 0 ? 1.0 / std::sqrt(deg(i)) : 0.0;
  Eigen::MatrixXd l = -(inv_sqrt.asDiagonal() * adj * inv_sqrt.asDiagonal());
  for (Eigen::Index i = 0; i < deg.size(); ++i)
    if (deg(i) > 0) l(i, i) += 1.0;
  return l;
}

// All eigenvalues of a symmetric matrix, ascending.
inline std::vector<double> symmetric_spectrum(const Eigen::MatrixXd& l) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw DataError("eigenvalue solver failed to converge");
  const auto& ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

// Largest k such that the k largest eigenvalues carry less than `threshold`
// of the total; at least 1 when the spectrum is not all zero.
inline std::size_t energy_cutoff(const std::vector<double>& ascending, double threshold) {
  const double total = std::accumulate(ascending.begin(), ascending.end(), 0.0);
  if (!(total > 0.0)) return 0;
  std::size_t k = 0;
  double acc = 0.0;
  for (auto it = ascending.rbegin(); it != ascending.rend(); ++it) {
    acc += *it;
    if (acc / total < threshold)
      ++k;
    else
      break;
  }
  return std::max<std::size_t>(k, 1);
}

struct SpectralComparison {
  double delta = 0.0;
  std::size_t k_x = 0, k_y = 0, k_effective = 0;
};

// Sum of squared differences between the k largest eigenvalues of each
// spectrum, paired in descending order, with k = min of both energy cutoffs.
inline SpectralComparison compare_spectra(const std::vector<double>& sx, const std::vector<double>& sy,
                                          double threshold) {
  SpectralComparison c;
  c.k_x = energy_cutoff(sx, threshold);
  c.k_y = energy_cutoff(sy, threshold);
  c.k_effective = std::min({c.k_x, c.k_y, sx.size(), sy.size()});
  for (std::size_t i = 0; i < c.k_effective; ++i) {
    const double diff = sx[sx.size() - 1 - i] - sy[sy.size() - 1 - i];
    c.delta += diff * diff;
  }
  return c;
}

struct EigsimReport {
  double delta = 0.0;
  std::size_t n_words = 0;
  std::size_t knn_k = 0;
  std::size_t k_x = 0, k_y = 0, k_effective = 0;
  std::vector<double> spectrum_x, spectrum_y;  // ascending
};

struct EigsimOptions {
  std::size_t n_words = 2000;
  std::size_t knn_k = 10;
  double energy_threshold = 0.9;
  LaplacianKind laplacian = LaplacianKind::unnormalized;
};

inline std::vector<double> embedding_spectrum(const EmbeddingSpace& space, const EigsimOptions& opt) {
  if (opt.n_words > space.size())
    throw ConfigError("eigenvalue_similarity: n_words " + std::to_string(opt.n_words) + " exceeds vocabulary size " +
                      std::to_string(space.size()));
  const EmbeddingSpace normalized = ensure_chain_normalized(space);
  const Matrix top = normalized.matrix.topRows(static_cast<Eigen::Index>(opt.n_words));
  return symmetric_spectrum(laplacian(knn_graph(top, opt.knn_k), opt.laplacian));
}

// Isomorphism measure between two spaces: spectra of the Laplacians of the
// k-NN graphs over each space's n most frequent words. Lower is more similar.
inline EigsimReport eigenvalue_similarity(const EmbeddingSpace& x, const EmbeddingSpace& y,
                                          const EigsimOptions& opt = {}) {
  EigsimReport r;
  r.n_words = opt.n_words;
  r.knn_k = opt.knn_k;
  r.spectrum_x = embedding_spectrum(x, opt);
  r.spectrum_y = embedding_spectrum(y, opt);
  const auto c = compare_spectra(r.spectrum_x, r.spectrum_y, opt.energy_threshold);
  r.delta = c.delta;
  r.k_x = c.k_x;
  r.k_y = c.k_y;
  r.k_effective = c.k_effective;
  return r;
}

}  // namespace clwe
