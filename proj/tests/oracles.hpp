#pragma once

// Independent reference computations. These deliberately avoid the library's
// own kernels (no Eigen decompositions, no csls_knn helpers) so that tests
// compare two separate implementations.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Smallest sum of squared residuals |x W - y|^2 over a grid of `steps`
// rotations and `steps` reflections in the plane.
inline double grid_procrustes_2d(const Rows& x, const Rows& y, int steps = 3600) {
  double best = INFINITY;
  for (int reflect = 0; reflect < 2; ++reflect)
    for (int i = 0; i < steps; ++i) {
      const double t = 2.0 * M_PI * i / steps, c = std::cos(t), s = std::sin(t);
      // rotation [[c, s], [-s, c]]; reflection [[c, s], [s, -c]]
      const double w10 = reflect ? s : -s, w11 = reflect ? -c : c;
      double obj = 0.0;
      for (std::size_t r = 0; r < x.size(); ++r) {
        const double a = x[r][0] * c + x[r][1] * w10 - y[r][0];
        const double b = x[r][0] * s + x[r][1] * w11 - y[r][1];
        obj += a * a + b * b;
      }
      best = std::min(best, obj);
    }
  return best;
}

inline double mean_top_k(std::vector<double> v, std::size_t k) {
  std::sort(v.begin(), v.end(), [](double a, double b) { return a > b; });
  double s = 0.0;
  for (std::size_t i = 0; i < k; ++i) s += v[i];
  return s / static_cast<double>(k);
}

// CSLS score table score[q][t] for unit rows, straight from the definition.
inline Rows csls_scores(const Rows& xm, const Rows& y, std::size_t k, const std::vector<std::size_t>& queries) {
  std::vector<double> r_s(y.size());
  for (std::size_t t = 0; t < y.size(); ++t) {
    std::vector<double> c;
    for (const auto& x : xm) c.push_back(dot(y[t], x));
    r_s[t] = mean_top_k(c, k);
  }
  Rows out;
  for (auto q : queries) {
    std::vector<double> c;
    for (const auto& t : y) c.push_back(dot(xm[q], t));
    const double r_t = mean_top_k(c, k);
    std::vector<double> row(y.size());
    for (std::size_t t = 0; t < y.size(); ++t) row[t] = 2.0 * c[t] - r_t - r_s[t];
    out.push_back(std::move(row));
  }
  return out;
}

// Target ids by descending score, ties to the lower id.
inline std::vector<std::size_t> rank(const std::vector<double>& score) {
  std::vector<std::size_t> order(score.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
  return order;
}

// Cyclic Jacobi eigenvalue iteration for a symmetric matrix, ascending.
inline std::vector<double> jacobi_eigenvalues(Rows a, double tol = 1e-14, int max_sweeps = 100) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < tol * tol) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  std::sort(ev.begin(), ev.end());
  return ev;
}

// L = D - A for an undirected edge list on n vertices.
inline Rows laplacian(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  Rows l(n, std::vector<double>(n, 0.0));
  for (auto [u, v] : edges) {
    l[u][v] -= 1.0;
    l[v][u] -= 1.0;
    l[u][u] += 1.0;
    l[v][v] += 1.0;
  }
  return l;
}

}  // namespace oracle
