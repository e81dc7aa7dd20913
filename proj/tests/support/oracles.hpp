#pragma once

// Reference implementations for tests. Nothing here calls into gfl's own
// linear algebra: spectra come from Eigen's solvers, products are naive loops.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "gfl/graph.hpp"

namespace oracle {

using gfl::Matrix;
using gfl::Vector;

inline Matrix naive_matmul(const Matrix& a, const Matrix& b) {
  Matrix c = Matrix::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index k = 0; k < a.cols(); ++k) c(i, j) += a(i, k) * b(k, j);
  return c;
}

/// Incidence matrix built entry by entry from the edge list.
inline Matrix incidence(const gfl::Graph& g) {
  Matrix b = Matrix::Zero(g.num_vertices(), g.num_edges());
  for (int j = 0; j < g.num_edges(); ++j) {
    const auto& e = g.edges()[j];
    b(e.tail, j) -= 1.0 / std::sqrt(e.resistance);
    b(e.head, j) += 1.0 / std::sqrt(e.resistance);
  }
  return b;
}

/// Weighted-degree Laplacian, L_ii = sum 1/r, L_ij = -1/r.
inline Matrix laplacian(const gfl::Graph& g) {
  Matrix l = Matrix::Zero(g.num_vertices(), g.num_vertices());
  for (const auto& e : g.edges()) {
    const double w = 1.0 / e.resistance;
    l(e.tail, e.tail) += w;
    l(e.head, e.head) += w;
    l(e.tail, e.head) -= w;
    l(e.head, e.tail) -= w;
  }
  return l;
}

inline Matrix centering(int n) { return Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n); }

inline Eigen::SelfAdjointEigenSolver<Matrix> eig(const Matrix& a) { return Eigen::SelfAdjointEigenSolver<Matrix>(a); }

inline Matrix pinv(const Matrix& a) { return a.completeOrthogonalDecomposition().pseudoInverse(); }

/// sqrt(L^+) through Eigen's matrix square root. L^+ + J/n is positive
/// definite for a connected graph and its root is sqrt(L^+) + J/n.
inline Matrix sqrt_pinv(const Matrix& lap) {
  const Matrix p = pinv(lap);
  const Eigen::Index n = lap.rows();
  const Matrix j = Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  const Matrix shifted = 0.5 * (p + p.transpose()) + j;
  return Matrix(shifted.sqrt()) - j;
}

inline Matrix expm(const Matrix& a) { return a.exp(); }

inline double op_norm(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

inline double max_col_norm(const Matrix& a) {
  double m = 0.0;
  for (Eigen::Index j = 0; j < a.cols(); ++j) m = std::max(m, a.col(j).norm());
  return m;
}

/// lambda_2 and lambda_n of a connected Laplacian.
inline std::pair<double, double> extreme_nonzero(const Matrix& lap) {
  const auto values = eig(lap).eigenvalues();
  return {values(1), values(values.size() - 1)};
}

inline bool connected_bfs(const gfl::Graph& g) {
  const int n = g.num_vertices();
  std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
  for (const auto& e : g.edges()) {
    adj[e.tail].push_back(e.head);
    adj[e.head].push_back(e.tail);
  }
  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::queue<int> q;
  q.push(0);
  seen[0] = 1;
  int count = 1;
  while (!q.empty()) {
    const int v = q.front();
    q.pop();
    for (int w : adj[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++count;
        q.push(w);
      }
    }
  }
  return count == n;
}

/// Phi <- Phi - step (L Phi - Psi), starting from zero.
inline Matrix gradient_descent(const Matrix& lap, const Matrix& psi, double step, int iters) {
  Matrix phi = Matrix::Zero(psi.rows(), psi.cols());
  for (int i = 0; i < iters; ++i) phi = phi - step * (naive_matmul(lap, phi) - psi);
  return phi;
}

/// sum_{l<terms} alpha_l M^l Psi, alpha from the closed forms (binomials or factorials via lgamma).
inline Matrix series_sum(const Matrix& m, const Matrix& psi, const std::vector<double>& alpha) {
  Matrix term = psi;
  Matrix sum = Matrix::Zero(psi.rows(), psi.cols());
  for (double a : alpha) {
    sum += a * term;
    term = naive_matmul(m, term);
  }
  return sum;
}

/// sqrt(step) * C(2l, l) / 4^l.
inline double sqrt_coefficient(double step, int l) {
  return std::sqrt(step) * std::exp(std::lgamma(2.0 * l + 1) - 2.0 * std::lgamma(l + 1.0) - l * std::log(4.0));
}

/// (-s)^l / l!.
inline double heat_coefficient(double s, int l) {
  if (l == 0) return 1.0;
  const double mag = std::exp(l * std::log(std::abs(s)) - std::lgamma(l + 1.0));
  return (l % 2 == 0 || s < 0) ? mag : -mag;
}

/// Classical Gram-Schmidt, columns in natural order.
inline Matrix gram_schmidt(const Matrix& a) {
  Matrix q(a.rows(), a.cols());
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    Vector v = a.col(j);
    for (Eigen::Index i = 0; i < j; ++i) v -= q.col(i).dot(a.col(j)) * q.col(i);
    for (Eigen::Index i = 0; i < j; ++i) v -= q.col(i).dot(v) * q.col(i);
    q.col(j) = v.normalized();
  }
  return q;
}

inline Matrix projector(const Matrix& q) { return q * q.transpose(); }

// Small fixed graphs.
inline gfl::Graph path2() { return gfl::Graph(2, {{0, 1, 1.0}}); }
inline gfl::Graph triangle() { return gfl::Graph(3, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}}); }

/// Connected random graph: a random spanning tree plus extra edges, random
/// resistances in [0.2, 5]. Independent of gfl's generators.
inline gfl::Graph random_connected(int n, double extra_edge_prob, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> res(0.2, 5.0);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<gfl::Edge> edges;
  std::vector<std::vector<char>> has(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
  for (int v = 1; v < n; ++v) {
    const int u = std::uniform_int_distribution<int>(0, v - 1)(rng);
    edges.push_back(coin(rng) < 0.5 ? gfl::Edge{u, v, res(rng)} : gfl::Edge{v, u, res(rng)});
    has[u][v] = has[v][u] = 1;
  }
  for (int u = 0; u < n; ++u)
    for (int v = u + 1; v < n; ++v)
      if (!has[u][v] && coin(rng) < extra_edge_prob) edges.push_back({u, v, res(rng)});
  return gfl::Graph(n, std::move(edges));
}

inline Matrix random_matrix(int rows, int cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = g(rng);
  return m;
}

inline std::vector<int> random_permutation(int d, std::uint64_t seed) {
  std::vector<int> p(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) p[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(p.begin(), p.end(), rng);
  return p;
}

}  // namespace oracle
