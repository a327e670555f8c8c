#pragma once

#include "gdtm/common.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace gdtm {

/// Undirected spring connection between two vertices.
struct Edge {
  std::size_t i = 0;
  std::size_t j = 0;
  int type = 0;
  double weight = 1.0;
};

/// Structure graph. Ground springs carry edge type 0 and unit weight.
struct Graph {
  std::size_t vertex_count = 0;
  std::vector<Edge> edges;
  std::vector<std::size_t> grounded;

  /// Throws invalid_size / index / invalid_parameter on a malformed graph.
  void validate() const;

  /// Sorted distinct edge types, including type 0 when any vertex is grounded.
  std::vector<int> edge_types() const;

  /// Ground spring count at each vertex.
  std::vector<double> ground_weights() const;

  /// Total spring count: ground springs first, then edges in list order.
  std::size_t spring_count() const { return grounded.size() + edges.size(); }
};

/// Chain 0-1-...-(n-1). Edge (e, e+1) gets type_pattern[e % size]; an empty
/// pattern means every edge is type 0. When grounded, vertex 0 holds the ground spring.
Graph chain_graph(std::size_t n, bool grounded, std::span<const int> type_pattern = {});

enum class AdjacencyKind { homogeneous, heterogeneous };

/// One stiffness-pattern matrix per edge type (plus a trailing identity self
/// matrix in heterogeneous mode).
struct AdjacencySet {
  AdjacencyKind kind = AdjacencyKind::homogeneous;
  std::vector<Matrix> matrices;

  std::size_t count() const { return matrices.size(); }
  std::size_t vertex_count() const {
    return matrices.empty() ? 0 : static_cast<std::size_t>(matrices.front().rows());
  }
  /// Aggregated feature width, two columns per matrix.
  std::size_t aggregated_width() const { return 2 * count(); }
  void validate() const;
};

AdjacencySet build_chain_adjacency(std::size_t n, bool grounded);

/// Weighted Laplacian over every edge of the graph, regardless of type.
AdjacencySet build_homogeneous_adjacency(const Graph& graph);

AdjacencySet build_heterogeneous_adjacency(const Graph& graph);

/// Features are V x 2 (velocity, displacement). Result is V x 2N: for matrix k,
/// column 2k is A_k * velocity and column 2k+1 is A_k * displacement.
Matrix aggregate(const AdjacencySet& adj, const Matrix& features);

/// Multiplies every spring contribution by `factor`. The heterogeneous self
/// matrix is left as the identity.
AdjacencySet scale_edges(const AdjacencySet& adj, double factor);

/// Per-entry scaling. Off-diagonal entry (i, j) is multiplied by factors(i, j);
/// the ground part of row i is multiplied by factors(i, i) and the diagonal is
/// rebuilt from the scaled contributions so each row stays a stiffness pattern.
AdjacencySet scale_edges(const AdjacencySet& adj, const Matrix& factors);

/// Factor matrix for per-spring scaling: entry (i, j) = spring_factors[s(i,j)] /
/// row_divisors[i], where springs are indexed as in Graph::spring_count().
/// An empty divisor span means all ones.
Matrix spring_factor_matrix(const Graph& graph, std::span<const double> spring_factors,
                            std::span<const double> row_divisors = {});

/// Text format: `vertex_count=<n>`, `grounded=<i,...>`, `edge=<i>,<j>,<type>,<weight>`.
/// Blank lines and lines starting with '#' are ignored.
Graph read_graph(std::istream& in);
Graph load_graph(const std::string& path);
void write_graph(std::ostream& out, const Graph& graph);

}  // namespace gdtm
