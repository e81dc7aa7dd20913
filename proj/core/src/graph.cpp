#include "gfl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <utility>

namespace gfl {

namespace {

constexpr int kMaxDemandRetries = 100;
constexpr double kDegenerateNorm = 1e-12;

double sample_resistance(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> exponent(-2.0, 2.0);
  return std::exp(exponent(rng));
}

std::string edge_error(std::size_t j, const std::string& what) {
  return "edge " + std::to_string(j) + ": " + what;
}

}  // namespace

Graph::Graph(int num_vertices, std::vector<Edge> edges) : n_(num_vertices), edges_(std::move(edges)) {
  if (n_ < 1) {
    throw InvalidArgument("graph needs at least one vertex, got n=" + std::to_string(n_));
  }
  for (std::size_t j = 0; j < edges_.size(); ++j) {
    const Edge& e = edges_[j];
    if (e.tail < 0 || e.tail >= n_ || e.head < 0 || e.head >= n_) {
      throw InvalidArgument(edge_error(j, "endpoint out of range [0, " + std::to_string(n_) + ")"));
    }
    if (e.tail == e.head) {
      throw InvalidArgument(edge_error(j, "self-loop on vertex " + std::to_string(e.tail)));
    }
    if (!(e.resistance > 0.0) || !std::isfinite(e.resistance)) {
      throw InvalidArgument(edge_error(j, "resistance must be positive and finite"));
    }
  }
}

bool Graph::is_connected() const {
  std::vector<std::vector<int>> adjacency(static_cast<std::size_t>(n_));
  for (const Edge& e : edges_) {
    adjacency[e.tail].push_back(e.head);
    adjacency[e.head].push_back(e.tail);
  }
  std::vector<char> seen(static_cast<std::size_t>(n_), 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int visited = 1;
  while (!stack.empty()) {
    const int v = stack.back();
    stack.pop_back();
    for (int w : adjacency[v]) {
      if (!seen[w]) {
        seen[w] = 1;
        ++visited;
        stack.push_back(w);
      }
    }
  }
  return visited == n_;
}

Graph Graph::permuted(std::span<const int> perm) const {
  const auto d = edges_.size();
  if (perm.size() != d) {
    throw InvalidArgument("permutation has " + std::to_string(perm.size()) + " entries, graph has " +
                          std::to_string(d) + " edges");
  }
  std::vector<char> used(d, 0);
  std::vector<Edge> out;
  out.reserve(d);
  for (int p : perm) {
    if (p < 0 || static_cast<std::size_t>(p) >= d || used[p]) {
      throw InvalidArgument("not a permutation of edge indices");
    }
    used[p] = 1;
    out.push_back(edges_[p]);
  }
  return Graph(n_, std::move(out));
}

Matrix build_incidence(const Graph& g) {
  Matrix b = Matrix::Zero(g.num_vertices(), g.num_edges());
  for (int j = 0; j < g.num_edges(); ++j) {
    const Edge& e = g.edges()[j];
    const double w = 1.0 / std::sqrt(e.resistance);
    b(e.tail, j) = -w;
    b(e.head, j) = w;
  }
  return b;
}

Matrix laplacian(const Matrix& incidence) { return incidence * incidence.transpose(); }

Matrix centering_projector(int n) {
  if (n < 1) throw InvalidArgument("centering_projector: n must be positive");
  return Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / n);
}

Graph generate_fc(int n, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("generate_fc: n must be >= 2");
  std::mt19937_64 rng(seed);
  std::vector<Edge> edges;
  edges.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      edges.push_back({i, j, sample_resistance(rng)});
    }
  }
  return Graph(n, std::move(edges));
}

namespace {

Graph csl_with_rng(int n, int skip, std::mt19937_64& rng) {
  if (n < 5) throw InvalidArgument("generate_csl: n must be >= 5");
  if (skip < 1 || skip >= n) {
    throw InvalidArgument("generate_csl: skip must lie in [1, n), got " + std::to_string(skip));
  }
  std::set<std::pair<int, int>> seen;
  std::vector<std::pair<int, int>> pairs;
  auto add = [&](int a, int b) {
    if (seen.insert({std::min(a, b), std::max(a, b)}).second) pairs.emplace_back(a, b);
  };
  for (int i = 0; i < n; ++i) add(i, (i + 1) % n);
  for (int i = 0; i < n; ++i) add(i, (i + skip) % n);

  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (auto [a, b] : pairs) edges.push_back({a, b, sample_resistance(rng)});
  return Graph(n, std::move(edges));
}

}  // namespace

Graph generate_csl(int n, int skip, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return csl_with_rng(n, skip, rng);
}

Graph generate_csl_random_skip(int n, std::uint64_t seed) {
  if (n < 5) throw InvalidArgument("generate_csl: n must be >= 5");
  std::vector<int> skips;
  for (int s : {2, 4, 6, 8}) {
    if (s < n) skips.push_back(s);
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, skips.size() - 1);
  const int skip = skips[pick(rng)];
  return csl_with_rng(n, skip, rng);
}

DemandSet sample_demands(int n, int k, bool project, std::uint64_t seed) {
  if (n < 1 || k < 1) throw InvalidArgument("sample_demands: n and k must be positive");
  if (project && n < 2) throw InvalidArgument("sample_demands: projection needs n >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  DemandSet out{Matrix(n, k), project};
  for (int i = 0; i < k; ++i) {
    int attempt = 0;
    for (;; ++attempt) {
      if (attempt == kMaxDemandRetries) {
        throw NumericalError("sample_demands: degenerate draws exhausted retries for column " +
                             std::to_string(i));
      }
      Vector v(n);
      for (int r = 0; r < n; ++r) v(r) = gauss(rng);
      if (project) v.array() -= v.mean();
      const double norm = v.norm();
      if (norm < kDegenerateNorm) continue;
      v /= norm;
      // A second centring pass removes round-off left by the first one.
      if (project) {
        v.array() -= v.mean();
        v.normalize();
      }
      out.psi.col(i) = v;
      break;
    }
  }
  return out;
}

DemandSet identity_demands(int n) {
  if (n < 2) throw InvalidArgument("identity_demands: n must be >= 2");
  return {centering_projector(n), true};
}

}  // namespace gfl
