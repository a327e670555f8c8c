#include "gdtm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

namespace gdtm {

void Graph::validate() const {
  require(vertex_count > 0, ErrorCode::invalid_size, "graph has no vertices");
  std::set<std::tuple<std::size_t, std::size_t, int>> seen;
  for (const auto& e : edges) {
    require(e.i < vertex_count && e.j < vertex_count, ErrorCode::index,
            "edge vertex index out of range");
    require(e.i != e.j, ErrorCode::invalid_parameter, "self edge in graph");
    require(e.type >= 0, ErrorCode::invalid_parameter, "negative edge type");
    require(std::isfinite(e.weight), ErrorCode::invalid_parameter, "non-finite edge weight");
    auto key = std::make_tuple(std::min(e.i, e.j), std::max(e.i, e.j), e.type);
    require(seen.insert(key).second, ErrorCode::invalid_parameter, "duplicate edge");
  }
  for (auto g : grounded) {
    require(g < vertex_count, ErrorCode::index, "grounded vertex index out of range");
  }
}

std::vector<int> Graph::edge_types() const {
  std::set<int> types;
  for (const auto& e : edges) types.insert(e.type);
  if (!grounded.empty()) types.insert(0);
  return {types.begin(), types.end()};
}

std::vector<double> Graph::ground_weights() const {
  std::vector<double> w(vertex_count, 0.0);
  for (auto g : grounded) w[g] += 1.0;
  return w;
}

Graph chain_graph(std::size_t n, bool grounded, std::span<const int> type_pattern) {
  require(n >= 1, ErrorCode::invalid_size, "chain needs at least one vertex");
  Graph g;
  g.vertex_count = n;
  if (grounded) g.grounded.push_back(0);
  for (std::size_t e = 0; e + 1 < n; ++e) {
    int type = type_pattern.empty() ? 0 : type_pattern[e % type_pattern.size()];
    g.edges.push_back({e, e + 1, type, 1.0});
  }
  return g;
}

void AdjacencySet::validate() const {
  require(!matrices.empty(), ErrorCode::invalid_size, "empty adjacency set");
  const auto v = matrices.front().rows();
  for (const auto& m : matrices) {
    require(m.rows() == v && m.cols() == v, ErrorCode::shape, "adjacency matrices must be square and equal size");
    require(m.allFinite(), ErrorCode::invalid_parameter, "non-finite adjacency entry");
  }
  if (kind == AdjacencyKind::homogeneous) {
    require(matrices.size() == 1, ErrorCode::invalid_size, "homogeneous adjacency holds one matrix");
  } else {
    require(matrices.size() >= 2, ErrorCode::invalid_size, "heterogeneous adjacency needs a type and a self matrix");
    require(matrices.back().isIdentity(0.0), ErrorCode::invalid_parameter, "self matrix must be identity");
  }
}

namespace {

void add_spring(Matrix& m, std::size_t i, std::size_t j, double w) {
  m(i, i) += w;
  m(j, j) += w;
  m(i, j) -= w;
  m(j, i) -= w;
}

}  // namespace

AdjacencySet build_chain_adjacency(std::size_t n, bool grounded) {
  require(n >= 1, ErrorCode::invalid_size, "chain adjacency needs n >= 1");
  return build_homogeneous_adjacency(chain_graph(n, grounded));
}

AdjacencySet build_homogeneous_adjacency(const Graph& graph) {
  graph.validate();
  const auto n = static_cast<Eigen::Index>(graph.vertex_count);
  Matrix a = Matrix::Zero(n, n);
  for (const auto& e : graph.edges) add_spring(a, e.i, e.j, e.weight);
  for (auto g : graph.grounded) a(g, g) += 1.0;
  return {AdjacencyKind::homogeneous, {std::move(a)}};
}

AdjacencySet build_heterogeneous_adjacency(const Graph& graph) {
  graph.validate();
  const auto types = graph.edge_types();
  require(!types.empty(), ErrorCode::invalid_size, "heterogeneous adjacency needs at least one edge type");
  const auto n = static_cast<Eigen::Index>(graph.vertex_count);
  AdjacencySet adj{AdjacencyKind::heterogeneous, {}};
  for (int t : types) {
    Matrix a = Matrix::Zero(n, n);
    for (const auto& e : graph.edges) {
      if (e.type == t) add_spring(a, e.i, e.j, e.weight);
    }
    if (t == 0) {
      for (auto g : graph.grounded) a(g, g) += 1.0;
    }
    adj.matrices.push_back(std::move(a));
  }
  adj.matrices.push_back(Matrix::Identity(n, n));
  return adj;
}

Matrix aggregate(const AdjacencySet& adj, const Matrix& features) {
  require(features.cols() == 2, ErrorCode::shape, "features must have two columns (velocity, displacement)");
  require(!adj.matrices.empty() && features.rows() == adj.matrices.front().cols(), ErrorCode::shape,
          "feature rows do not match adjacency size");
  Matrix out(features.rows(), 2 * static_cast<Eigen::Index>(adj.count()));
  for (std::size_t k = 0; k < adj.count(); ++k) {
    out.middleCols(2 * static_cast<Eigen::Index>(k), 2).noalias() = adj.matrices[k] * features;
  }
  return out;
}

namespace {

bool is_self_matrix(const AdjacencySet& adj, std::size_t k) {
  return adj.kind == AdjacencyKind::heterogeneous && k + 1 == adj.count();
}

}  // namespace

AdjacencySet scale_edges(const AdjacencySet& adj, double factor) {
  require(std::isfinite(factor) && factor > 0.0, ErrorCode::invalid_parameter, "scale factor must be positive");
  AdjacencySet out = adj;
  for (std::size_t k = 0; k < out.count(); ++k) {
    if (!is_self_matrix(out, k)) out.matrices[k] *= factor;
  }
  return out;
}

AdjacencySet scale_edges(const AdjacencySet& adj, const Matrix& factors) {
  const auto n = static_cast<Eigen::Index>(adj.vertex_count());
  require(factors.rows() == n && factors.cols() == n, ErrorCode::shape, "factor matrix must be V x V");
  require(factors.allFinite() && (factors.array() > 0.0).all(), ErrorCode::invalid_parameter,
          "scale factors must be positive");
  AdjacencySet out = adj;
  for (std::size_t k = 0; k < out.count(); ++k) {
    if (is_self_matrix(out, k)) continue;
    const Matrix& a = adj.matrices[k];
    Matrix& s = out.matrices[k];
    for (Eigen::Index i = 0; i < n; ++i) {
      // Ground part = diagonal minus the neighbour contributions.
      double ground = a.row(i).sum();
      double diag = ground * factors(i, i);
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        s(i, j) = a(i, j) * factors(i, j);
        diag -= s(i, j);
      }
      s(i, i) = diag;
    }
  }
  return out;
}

Matrix spring_factor_matrix(const Graph& graph, std::span<const double> spring_factors,
                            std::span<const double> row_divisors) {
  graph.validate();
  require(spring_factors.size() == graph.spring_count(), ErrorCode::shape, "one factor per spring required");
  require(row_divisors.empty() || row_divisors.size() == graph.vertex_count, ErrorCode::shape,
          "one divisor per vertex required");
  const auto n = static_cast<Eigen::Index>(graph.vertex_count);
  Matrix f = Matrix::Ones(n, n);
  std::size_t s = 0;
  for (auto g : graph.grounded) f(g, g) = spring_factors[s++];
  for (const auto& e : graph.edges) {
    f(e.i, e.j) = spring_factors[s];
    f(e.j, e.i) = spring_factors[s];
    ++s;
  }
  if (!row_divisors.empty()) {
    for (Eigen::Index i = 0; i < n; ++i) {
      require(row_divisors[i] > 0.0, ErrorCode::invalid_parameter, "row divisor must be positive");
      f.row(i) /= row_divisors[i];
    }
  }
  return f;
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& text, std::size_t line) {
  std::istringstream in(trim(text));
  T value{};
  in >> value;
  require(!in.fail() && in.eof(), ErrorCode::config,
          "graph file line " + std::to_string(line) + ": bad number '" + text + "'");
  return value;
}

}  // namespace

Graph read_graph(std::istream& in) {
  Graph g;
  bool have_count = false;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto text = trim(raw);
    if (text.empty() || text[0] == '#') continue;
    auto eq = text.find('=');
    require(eq != std::string::npos, ErrorCode::config, "graph file line " + std::to_string(line) + ": expected key=value");
    auto key = trim(text.substr(0, eq));
    auto value = trim(text.substr(eq + 1));
    if (key == "vertex_count") {
      g.vertex_count = parse_number<std::size_t>(value, line);
      have_count = true;
    } else if (key == "grounded") {
      if (value.empty()) continue;
      for (const auto& p : split(value, ',')) g.grounded.push_back(parse_number<std::size_t>(p, line));
    } else if (key == "edge") {
      auto p = split(value, ',');
      require(p.size() == 4, ErrorCode::config, "graph file line " + std::to_string(line) + ": edge needs i,j,type,weight");
      g.edges.push_back({parse_number<std::size_t>(p[0], line), parse_number<std::size_t>(p[1], line),
                         parse_number<int>(p[2], line), parse_number<double>(p[3], line)});
    } else {
      fail(ErrorCode::config, "graph file line " + std::to_string(line) + ": unknown key '" + key + "'");
    }
  }
  require(have_count, ErrorCode::config, "graph file missing vertex_count");
  g.validate();
  return g;
}

Graph load_graph(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::io, "cannot open graph file " + path);
  return read_graph(in);
}

void write_graph(std::ostream& out, const Graph& graph) {
  out << "vertex_count=" << graph.vertex_count << '\n';
  out << "grounded=";
  for (std::size_t k = 0; k < graph.grounded.size(); ++k) out << (k ? "," : "") << graph.grounded[k];
  out << '\n';
  auto old = out.precision(17);
  for (const auto& e : graph.edges) out << "edge=" << e.i << ',' << e.j << ',' << e.type << ',' << e.weight << '\n';
  out.precision(old);
}

}  // namespace gdtm
