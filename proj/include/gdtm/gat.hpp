#pragma once

#include "gdtm/common.hpp"
#include "gdtm/graph.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gdtm {

/// Single-head graph attention layer.
///
/// Scores are e_ij = LeakyReLU(a_src . W f_i + a_dst . W f_j + b_type(ij)) over
/// j in neighbours(i) plus i itself, and alpha_ij is the softmax of e_ij over
/// that set. `type_bias` holds one entry per edge type followed by the self
/// entry. The attention weights replace the fixed stiffness weights during
/// aggregation (see AttentionStructure).
struct GatLayer {
  Matrix transform;   // width x feature_dim
  Vector attention;   // 2 * width: source half, then neighbour half
  Vector type_bias;   // edge_type_count + 1
  double leaky_slope = 0.2;

  static GatLayer initialize(std::size_t width, std::size_t edge_type_count, std::uint64_t seed,
                             std::size_t feature_dim = 2);

  std::size_t width() const { return static_cast<std::size_t>(transform.rows()); }
  std::size_t feature_dim() const { return static_cast<std::size_t>(transform.cols()); }
  std::size_t edge_type_count() const { return static_cast<std::size_t>(type_bias.size()) - 1; }
  std::size_t parameter_count() const;

  /// transform (row-major), attention, type_bias.
  std::vector<double> flatten() const;
  void assign(std::span<const double> params);
};

/// One member of a vertex's softmax set.
struct AttentionSlot {
  std::size_t neighbor = 0;
  std::size_t bias_index = 0;
  double weight = 1.0;
  bool self = false;
};

/// CSR layout of every vertex's softmax set: its neighbours first, then itself.
///
/// Aggregation with attention keeps the stiffness sign pattern:
///   agg_i = |S_i| * ( sum_j alpha_ij w_ij (f_i - f_j) + alpha_ii g_i f_i )
/// where g_i is the ground-spring count. Uniform attention reproduces the
/// Laplacian aggregation exactly.
struct AttentionStructure {
  std::size_t vertex_count = 0;
  std::size_t edge_type_count = 0;
  std::vector<std::size_t> offsets;  // vertex_count + 1
  std::vector<AttentionSlot> slots;
  std::vector<double> ground;

  static AttentionStructure from_graph(const Graph& graph, std::size_t edge_type_count);
  std::size_t set_size(std::size_t vertex) const { return offsets[vertex + 1] - offsets[vertex]; }
};

struct GatForward {
  Matrix hidden;               // V x width
  std::vector<double> scores;  // pre-activation score per slot
  std::vector<double> alpha;   // per slot
  Matrix aggregated;           // V x feature_dim
};

GatForward gat_forward(const GatLayer& layer, const AttentionStructure& structure, const Matrix& features);

/// V x V matrix whose row i holds alpha_ij (zero off the softmax set).
Matrix attention_matrix(const AttentionStructure& structure, const GatForward& forward);

/// Convenience wrapper: attention matrix for features on a graph.
Matrix gat_attention(const GatLayer& layer, const Matrix& features, const Graph& graph);

struct GatGradients {
  Matrix transform;
  Vector attention;
  Vector type_bias;
  Matrix features;

  std::vector<double> flatten() const;
};

GatGradients gat_backward(const GatLayer& layer, const AttentionStructure& structure, const Matrix& features,
                          const GatForward& forward, const Matrix& grad_aggregated);

/// Numerically stable softmax.
std::vector<double> softmax(std::span<const double> scores);

}  // namespace gdtm
