#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace gfl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Thrown for malformed inputs: bad shapes, invalid graphs, violated preconditions.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical routine cannot produce a trustworthy result
/// (non-convergence, rank collapse, non-finite activations).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Name of the pseudo-random generator behind every seeded sampler.
inline constexpr std::string_view kPrngName = "std::mt19937_64";

struct Edge {
  int tail = 0;
  int head = 0;
  double resistance = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected weighted graph with a fixed edge orientation (tail -> head)
/// and a fixed edge order; column j of the incidence matrix is edges()[j].
class Graph {
 public:
  /// Validates every edge; the message names the first offending edge index.
  Graph(int num_vertices, std::vector<Edge> edges);

  int num_vertices() const { return n_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  const std::vector<Edge>& edges() const { return edges_; }

  bool is_connected() const;

  /// Edge j of the result is edge perm[j] of this graph.
  Graph permuted(std::span<const int> perm) const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  int n_;
  std::vector<Edge> edges_;
};

/// n x d matrix: -1/sqrt(r_j) at the tail row, +1/sqrt(r_j) at the head row.
Matrix build_incidence(const Graph& g);

/// L = B B^T.
Matrix laplacian(const Matrix& incidence);

/// I - (1/n) 1 1^T, the projector onto the complement of the constant vector.
Matrix centering_projector(int n);

/// Complete graph, edges (i, j) for i < j in lexicographic order,
/// resistances exp(u) with u ~ U[-2, 2].
Graph generate_fc(int n, std::uint64_t seed);

/// Circular skip-link graph: cycle edges (i, i+1 mod n) followed by skip
/// edges (i, i+skip mod n); repeated vertex pairs are dropped.
Graph generate_csl(int n, int skip, std::uint64_t seed);

/// Skip length drawn uniformly from {2, 4, 6, 8} (restricted to values < n),
/// then generate_csl with the same generator stream.
Graph generate_csl_random_skip(int n, std::uint64_t seed);

struct DemandSet {
  Matrix psi;  // n x k, column i is demand i
  bool projected = false;

  int num_vertices() const { return static_cast<int>(psi.rows()); }
  int count() const { return static_cast<int>(psi.cols()); }
};

/// k unit vectors drawn uniformly from the sphere; optionally projected onto
/// the complement of the constant vector and renormalised.
DemandSet sample_demands(int n, int k, bool project, std::uint64_t seed);

/// Psi = I - (1/n) 1 1^T (k = n).
DemandSet identity_demands(int n);

}  // namespace gfl
