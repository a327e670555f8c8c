#include "gdtm/gat.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gdtm {

GatLayer GatLayer::initialize(std::size_t width, std::size_t edge_type_count, std::uint64_t seed,
                              std::size_t feature_dim) {
  require(width > 0 && feature_dim > 0, ErrorCode::invalid_size, "GAT width must be positive");
  GatLayer layer;
  const auto w = static_cast<Eigen::Index>(width);
  const auto f = static_cast<Eigen::Index>(feature_dim);
  layer.transform = Matrix::Zero(w, f);
  layer.attention = Vector::Zero(2 * w);
  layer.type_bias = Vector::Zero(static_cast<Eigen::Index>(edge_type_count) + 1);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> t_dist(-std::sqrt(6.0 / double(w + f)), std::sqrt(6.0 / double(w + f)));
  for (Eigen::Index r = 0; r < w; ++r) {
    for (Eigen::Index c = 0; c < f; ++c) layer.transform(r, c) = t_dist(rng);
  }
  std::uniform_real_distribution<double> a_dist(-std::sqrt(6.0 / double(2 * w + 1)), std::sqrt(6.0 / double(2 * w + 1)));
  for (Eigen::Index k = 0; k < 2 * w; ++k) layer.attention(k) = a_dist(rng);
  return layer;
}

std::size_t GatLayer::parameter_count() const {
  return static_cast<std::size_t>(transform.size() + attention.size() + type_bias.size());
}

std::vector<double> GatLayer::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (Eigen::Index r = 0; r < transform.rows(); ++r) {
    for (Eigen::Index c = 0; c < transform.cols(); ++c) out.push_back(transform(r, c));
  }
  out.insert(out.end(), attention.data(), attention.data() + attention.size());
  out.insert(out.end(), type_bias.data(), type_bias.data() + type_bias.size());
  return out;
}

void GatLayer::assign(std::span<const double> params) {
  require(params.size() == parameter_count(), ErrorCode::shape, "GAT parameter vector length mismatch");
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < transform.rows(); ++r) {
    for (Eigen::Index c = 0; c < transform.cols(); ++c) transform(r, c) = params[k++];
  }
  for (Eigen::Index i = 0; i < attention.size(); ++i) attention(i) = params[k++];
  for (Eigen::Index i = 0; i < type_bias.size(); ++i) type_bias(i) = params[k++];
}

std::vector<double> GatGradients::flatten() const {
  std::vector<double> out;
  for (Eigen::Index r = 0; r < transform.rows(); ++r) {
    for (Eigen::Index c = 0; c < transform.cols(); ++c) out.push_back(transform(r, c));
  }
  out.insert(out.end(), attention.data(), attention.data() + attention.size());
  out.insert(out.end(), type_bias.data(), type_bias.data() + type_bias.size());
  return out;
}

AttentionStructure AttentionStructure::from_graph(const Graph& graph, std::size_t edge_type_count) {
  graph.validate();
  for (int t : graph.edge_types()) {
    require(static_cast<std::size_t>(t) < edge_type_count, ErrorCode::compat,
            "graph edge type " + std::to_string(t) + " exceeds the attention layer's type count");
  }
  AttentionStructure s;
  s.vertex_count = graph.vertex_count;
  s.edge_type_count = edge_type_count;
  s.ground = graph.ground_weights();
  std::vector<std::vector<AttentionSlot>> per_vertex(graph.vertex_count);
  for (const auto& e : graph.edges) {
    const auto b = static_cast<std::size_t>(e.type);
    per_vertex[e.i].push_back({e.j, b, e.weight, false});
    per_vertex[e.j].push_back({e.i, b, e.weight, false});
  }
  s.offsets.push_back(0);
  for (std::size_t i = 0; i < graph.vertex_count; ++i) {
    for (const auto& slot : per_vertex[i]) s.slots.push_back(slot);
    s.slots.push_back({i, edge_type_count, 1.0, true});
    s.offsets.push_back(s.slots.size());
  }
  return s;
}

std::vector<double> softmax(std::span<const double> scores) {
  std::vector<double> out(scores.size());
  if (scores.empty()) return out;
  const double peak = *std::max_element(scores.begin(), scores.end());
  double total = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    out[k] = std::exp(scores[k] - peak);
    total += out[k];
  }
  for (auto& x : out) x /= total;
  return out;
}

GatForward gat_forward(const GatLayer& layer, const AttentionStructure& structure, const Matrix& features) {
  require(static_cast<std::size_t>(features.cols()) == layer.feature_dim(), ErrorCode::shape,
          "feature width does not match attention transform");
  require(static_cast<std::size_t>(features.rows()) == structure.vertex_count, ErrorCode::shape,
          "feature rows do not match graph size");
  require(structure.edge_type_count == layer.edge_type_count(), ErrorCode::compat,
          "attention structure and layer disagree on edge type count");
  const auto width = static_cast<Eigen::Index>(layer.width());
  GatForward fw;
  fw.hidden = features * layer.transform.transpose();
  const Vector src_score = fw.hidden * layer.attention.head(width);
  const Vector dst_score = fw.hidden * layer.attention.tail(width);
  fw.scores.resize(structure.slots.size());
  fw.alpha.resize(structure.slots.size());
  fw.aggregated = Matrix::Zero(features.rows(), features.cols());

  std::vector<double> activated;
  for (std::size_t i = 0; i < structure.vertex_count; ++i) {
    const std::size_t begin = structure.offsets[i];
    const std::size_t end = structure.offsets[i + 1];
    activated.resize(end - begin);
    for (std::size_t s = begin; s < end; ++s) {
      const auto& slot = structure.slots[s];
      const double score = src_score(i) + dst_score(slot.neighbor) + layer.type_bias(slot.bias_index);
      fw.scores[s] = score;
      activated[s - begin] = score > 0.0 ? score : layer.leaky_slope * score;
    }
    const auto alpha = softmax(activated);
    const double set_size = static_cast<double>(end - begin);
    for (std::size_t s = begin; s < end; ++s) {
      const auto& slot = structure.slots[s];
      const double a = alpha[s - begin];
      fw.alpha[s] = a;
      if (slot.self) {
        fw.aggregated.row(i) += (set_size * a * structure.ground[i]) * features.row(i);
      } else {
        fw.aggregated.row(i) += (set_size * a * slot.weight) * (features.row(i) - features.row(slot.neighbor));
      }
    }
  }
  return fw;
}

Matrix attention_matrix(const AttentionStructure& structure, const GatForward& forward) {
  const auto n = static_cast<Eigen::Index>(structure.vertex_count);
  Matrix m = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < structure.vertex_count; ++i) {
    for (std::size_t s = structure.offsets[i]; s < structure.offsets[i + 1]; ++s) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(structure.slots[s].neighbor)) += forward.alpha[s];
    }
  }
  return m;
}

Matrix gat_attention(const GatLayer& layer, const Matrix& features, const Graph& graph) {
  const auto structure = AttentionStructure::from_graph(graph, layer.edge_type_count());
  return attention_matrix(structure, gat_forward(layer, structure, features));
}

GatGradients gat_backward(const GatLayer& layer, const AttentionStructure& structure, const Matrix& features,
                          const GatForward& forward, const Matrix& grad_aggregated) {
  require(grad_aggregated.rows() == features.rows() && grad_aggregated.cols() == features.cols(), ErrorCode::shape,
          "aggregated gradient shape mismatch");
  const auto width = static_cast<Eigen::Index>(layer.width());
  GatGradients g;
  g.transform = Matrix::Zero(layer.transform.rows(), layer.transform.cols());
  g.attention = Vector::Zero(layer.attention.size());
  g.type_bias = Vector::Zero(layer.type_bias.size());
  g.features = Matrix::Zero(features.rows(), features.cols());
  Vector d_src = Vector::Zero(features.rows());
  Vector d_dst = Vector::Zero(features.rows());

  std::vector<double> d_alpha;
  for (std::size_t i = 0; i < structure.vertex_count; ++i) {
    const std::size_t begin = structure.offsets[i];
    const std::size_t end = structure.offsets[i + 1];
    const double set_size = static_cast<double>(end - begin);
    const auto gi = grad_aggregated.row(static_cast<Eigen::Index>(i));
    d_alpha.assign(end - begin, 0.0);
    double weighted = 0.0;
    for (std::size_t s = begin; s < end; ++s) {
      const auto& slot = structure.slots[s];
      const double a = forward.alpha[s];
      if (slot.self) {
        const double c = set_size * structure.ground[i];
        d_alpha[s - begin] = c * gi.dot(features.row(i));
        g.features.row(i) += (c * a) * gi;
      } else {
        const double c = set_size * slot.weight;
        d_alpha[s - begin] = c * gi.dot(features.row(i) - features.row(slot.neighbor));
        g.features.row(i) += (c * a) * gi;
        g.features.row(slot.neighbor) -= (c * a) * gi;
      }
      weighted += a * d_alpha[s - begin];
    }
    for (std::size_t s = begin; s < end; ++s) {
      const auto& slot = structure.slots[s];
      const double d_act = forward.alpha[s] * (d_alpha[s - begin] - weighted);
      const double d_score = forward.scores[s] > 0.0 ? d_act : layer.leaky_slope * d_act;
      d_src(i) += d_score;
      d_dst(slot.neighbor) += d_score;
      g.type_bias(slot.bias_index) += d_score;
    }
  }
  // scores = hidden * a_src (per source) + hidden * a_dst (per neighbour)
  g.attention.head(width) = forward.hidden.transpose() * d_src;
  g.attention.tail(width) = forward.hidden.transpose() * d_dst;
  const Matrix d_hidden = d_src * layer.attention.head(width).transpose() + d_dst * layer.attention.tail(width).transpose();
  g.transform = d_hidden.transpose() * features;
  g.features += d_hidden * layer.transform;
  return g;
}

}  // namespace gdtm
