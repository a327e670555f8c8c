#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gdtm/graph.hpp"
#include "gdtm/mdof.hpp"

#include <random>
#include <sstream>

using namespace gdtm;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

Matrix random_features(std::size_t v, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix f(static_cast<Eigen::Index>(v), 2);
  for (Eigen::Index k = 0; k < f.size(); ++k) f.data()[k] = n01(rng);
  return f;
}

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::io;
}

}  // namespace

TEST_CASE("chain adjacency examples") {
  CHECK(build_chain_adjacency(1, true).matrices[0] == mat({{1}}));
  CHECK(build_chain_adjacency(2, true).matrices[0] == mat({{2, -1}, {-1, 1}}));
  CHECK(build_chain_adjacency(3, true).matrices[0] == mat({{2, -1, 0}, {-1, 2, -1}, {0, -1, 1}}));
  CHECK(build_chain_adjacency(3, false).matrices[0] == mat({{1, -1, 0}, {-1, 2, -1}, {0, -1, 1}}));
  CHECK(build_chain_adjacency(4, true).count() == 1);
  CHECK(code_of([] { build_chain_adjacency(0, true); }) == ErrorCode::invalid_size);
}

TEST_CASE("chain adjacency equals K / k of the assembled chain") {
  for (std::size_t n = 1; n <= 12; ++n) {
    for (bool grounded : {true, false}) {
      if (!grounded && n == 1) continue;
      const double k = 2.4e5;
      const auto mats = assemble_matrices(MdofSystem::uniform_chain(n, 2000.0, k, 2500.0, grounded));
      const Matrix expected = mats.stiffness / k;
      CHECK(build_chain_adjacency(n, grounded).matrices[0] == expected);
      CHECK(build_homogeneous_adjacency(chain_graph(n, grounded)).matrices[0] == expected);
    }
  }
}

TEST_CASE("grounded chain row sums") {
  for (std::size_t n = 1; n <= 10; ++n) {
    const Matrix a = build_chain_adjacency(n, true).matrices[0];
    for (Eigen::Index i = 0; i < a.rows(); ++i) CHECK(a.row(i).sum() == (i == 0 ? 1.0 : 0.0));
  }
}

TEST_CASE("heterogeneous adjacency examples") {
  Graph two;
  two.vertex_count = 2;
  two.grounded = {0};
  two.edges = {{0, 1, 0, 1.0}};
  const auto a = build_heterogeneous_adjacency(two);
  REQUIRE(a.count() == 2);
  CHECK(a.kind == AdjacencyKind::heterogeneous);
  CHECK(a.matrices[0] == mat({{2, -1}, {-1, 1}}));
  CHECK(a.matrices[1] == Matrix::Identity(2, 2));

  const std::vector<int> pattern{0, 1};
  const auto b = build_heterogeneous_adjacency(chain_graph(3, true, pattern));
  REQUIRE(b.count() == 3);
  CHECK(b.matrices[0] == mat({{2, -1, 0}, {-1, 1, 0}, {0, 0, 0}}));
  CHECK(b.matrices[1] == mat({{0, 0, 0}, {0, 1, -1}, {0, -1, 1}}));
  CHECK(b.matrices[2] == Matrix::Identity(3, 3));

  Graph empty;
  empty.vertex_count = 2;
  CHECK(code_of([&] { build_heterogeneous_adjacency(empty); }) == ErrorCode::invalid_size);
}

TEST_CASE("heterogeneous non-self matrices sum to the homogeneous matrix") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng() % 12;
    std::vector<int> pattern;
    for (std::size_t k = 0; k < 1 + rng() % 4; ++k) pattern.push_back(static_cast<int>(rng() % 3));
    const auto g = chain_graph(n, trial % 2 == 0, pattern);
    const auto het = build_heterogeneous_adjacency(g);
    CHECK(het.matrices.back() == Matrix::Identity(Eigen::Index(n), Eigen::Index(n)));
    Matrix sum = Matrix::Zero(Eigen::Index(n), Eigen::Index(n));
    for (std::size_t k = 0; k + 1 < het.count(); ++k) sum += het.matrices[k];
    CHECK(sum == build_homogeneous_adjacency(g).matrices[0]);
    CHECK(het.count() == g.edge_types().size() + 1);
  }
}

TEST_CASE("aggregate examples and properties") {
  const auto adj = build_chain_adjacency(3, true);
  Matrix f(3, 2);
  f << 0, 1, 0, 1, 0, 1;
  CHECK(aggregate(adj, f).col(1) == (Vector(3) << 1, 0, 0).finished());
  f.col(1) << 0, 1, 0;
  CHECK(aggregate(adj, f).col(1) == (Vector(3) << -1, 2, -1).finished());

  std::mt19937_64 rng(5);
  AdjacencySet identity{AdjacencyKind::homogeneous, {Matrix::Identity(6, 6)}};
  for (int trial = 0; trial < 20; ++trial) {
    const Matrix F = random_features(6, rng);
    const Matrix G = random_features(6, rng);
    CHECK(aggregate(identity, F) == F);
    const auto chain = build_chain_adjacency(6, true);
    const double a = 0.5 + trial, b = -1.25;
    const Matrix lhs = aggregate(chain, a * F + b * G);
    const Matrix rhs = a * aggregate(chain, F) + b * aggregate(chain, G);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + rhs.cwiseAbs().maxCoeff()));
  }

  const std::vector<int> pattern{0, 1};
  const auto het = build_heterogeneous_adjacency(chain_graph(4, true, pattern));
  const Matrix F = random_features(4, rng);
  const Matrix agg = aggregate(het, F);
  REQUIRE(agg.cols() == 6);
  CHECK(agg.middleCols(4, 2) == F);
  CHECK(agg.col(0) == het.matrices[0] * F.col(0));
  CHECK(agg.col(3) == het.matrices[1] * F.col(1));
  CHECK(code_of([&] { aggregate(het, random_features(5, rng)); }) == ErrorCode::shape);
}

TEST_CASE("scale_edges") {
  const auto adj = build_chain_adjacency(10, true);
  CHECK(scale_edges(adj, 1.0).matrices[0] == adj.matrices[0]);
  CHECK(scale_edges(adj, 0.1).matrices[0] == adj.matrices[0] * 0.1);
  CHECK(code_of([&] { scale_edges(adj, 0.0); }) == ErrorCode::invalid_parameter);
  CHECK(code_of([&] { scale_edges(adj, -2.0); }) == ErrorCode::invalid_parameter);

  const std::vector<int> pattern{0, 1};
  const auto het = scale_edges(build_heterogeneous_adjacency(chain_graph(5, true, pattern)), 0.5);
  CHECK(het.matrices.back() == Matrix::Identity(5, 5));

  // Per-spring and per-mass factors reproduce M'^-1 K' of the perturbed chain (scaled by m / k).
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + trial;
    const auto g = chain_graph(n, true);
    std::vector<double> springs(g.spring_count()), masses(n);
    for (auto& r : springs) r = u(rng);
    for (auto& q : masses) q = u(rng);
    auto sys = MdofSystem::uniform_chain(n, 1.0, 1.0, 0.0, true);
    for (std::size_t s = 0; s < springs.size(); ++s) sys.spring_stiffnesses[s] *= springs[s];
    const Matrix k = assemble_matrices(sys).stiffness;
    Matrix expected = k;
    for (std::size_t i = 0; i < n; ++i) expected.row(Eigen::Index(i)) /= masses[i];
    const auto scaled = scale_edges(build_homogeneous_adjacency(g), spring_factor_matrix(g, springs, masses));
    CHECK((scaled.matrices[0] - expected).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("chain graph types and validation") {
  const std::vector<int> pattern{0, 1, 2};
  const auto g = chain_graph(5, true, pattern);
  REQUIRE(g.edges.size() == 4);
  CHECK(g.edges[0].type == 0);
  CHECK(g.edges[1].type == 1);
  CHECK(g.edges[2].type == 2);
  CHECK(g.edges[3].type == 0);
  CHECK(g.edge_types() == std::vector<int>{0, 1, 2});

  Graph bad = chain_graph(3, true);
  bad.edges.push_back({0, 5, 0, 1.0});
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::index);
  Graph dup = chain_graph(3, true);
  dup.edges.push_back(dup.edges[0]);
  CHECK_THROWS_AS(dup.validate(), Error);
  Graph nan = chain_graph(3, true);
  nan.edges[0].weight = std::nan("");
  CHECK_THROWS_AS(nan.validate(), Error);
}

TEST_CASE("graph file round trip") {
  const std::vector<int> pattern{0, 1};
  auto g = chain_graph(4, true, pattern);
  g.edges[1].weight = 0.75;
  std::stringstream s;
  write_graph(s, g);
  const auto back = read_graph(s);
  CHECK(back.vertex_count == 4);
  CHECK(back.grounded == g.grounded);
  REQUIRE(back.edges.size() == g.edges.size());
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    CHECK(back.edges[k].i == g.edges[k].i);
    CHECK(back.edges[k].j == g.edges[k].j);
    CHECK(back.edges[k].type == g.edges[k].type);
    CHECK(back.edges[k].weight == g.edges[k].weight);
  }
  std::istringstream text("# chain\nvertex_count=3\ngrounded=0\nedge=0,1,0,1\n\nedge=1,2,1,1\n");
  const auto parsed = read_graph(text);
  CHECK(build_heterogeneous_adjacency(parsed).count() == 3);
  std::istringstream broken("vertex_count=3\nedge=0,1\n");
  CHECK_THROWS_AS(read_graph(broken), Error);
  std::istringstream unknown("vertex_count=3\ncolour=blue\n");
  CHECK_THROWS_AS(read_graph(unknown), Error);
}
