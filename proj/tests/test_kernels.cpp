#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gdtm/kernels.hpp"
#include "gdtm/surrogate.hpp"

#include <random>

using namespace gdtm;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng) {
  std::normal_distribution<double> n01;
  Matrix m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = n01(rng);
  return m;
}

}  // namespace

TEST_CASE("aggregate_series: serial and parallel agree bitwise and match per-step aggregate") {
  std::mt19937_64 rng(1);
  for (std::size_t v : {1, 3, 10, 30}) {
    const std::vector<int> pattern{0, 1, 1};
    for (const auto& adj : {build_chain_adjacency(v, true),
                            v > 1 ? build_heterogeneous_adjacency(chain_graph(v, true, pattern))
                                  : build_chain_adjacency(v, false)}) {
      const Matrix vel = random_matrix(37, Eigen::Index(v), rng);
      const Matrix disp = random_matrix(37, Eigen::Index(v), rng);
      const Matrix s = kernels::serial::aggregate_series(adj, vel, disp);
      const Matrix p = kernels::parallel::aggregate_series(adj, vel, disp);
      CHECK(s == p);
      REQUIRE(s.rows() == Eigen::Index(37 * v));
      for (Eigen::Index t : {Eigen::Index(0), Eigen::Index(17), Eigen::Index(36)}) {
        Matrix f(Eigen::Index(v), 2);
        f.col(0) = vel.row(t).transpose();
        f.col(1) = disp.row(t).transpose();
        const Matrix expected = aggregate(adj, f);
        const Matrix got = s.middleRows(t * Eigen::Index(v), Eigen::Index(v));
        CHECK((got - expected).cwiseAbs().maxCoeff() <= 1e-12);
      }
    }
  }
}

TEST_CASE("ordered_block_reduce: serial and parallel agree bitwise") {
  std::mt19937_64 rng(2);
  const Matrix data = random_matrix(300, 8, rng);
  kernels::BlockFn fn = [&](std::size_t block, std::vector<double>& grad) {
    double loss = 0.0;
    for (Eigen::Index r = Eigen::Index(block) * 10; r < Eigen::Index(block + 1) * 10; ++r) {
      for (Eigen::Index c = 0; c < 8; ++c) {
        grad[std::size_t(c)] += data(r, c) * 1e-3 + 1.0 / 3.0;
        loss += data(r, c) * data(r, c);
      }
    }
    return loss;
  };
  const auto s = kernels::serial::ordered_block_reduce(30, 8, fn);
  const auto p = kernels::parallel::ordered_block_reduce(30, 8, fn);
  CHECK(s.loss_sum == p.loss_sum);
  CHECK(s.gradient == p.gradient);
  CHECK(s.loss_sum == doctest::Approx(data.squaredNorm()));

  const auto empty = kernels::parallel::ordered_block_reduce(0, 3, fn);
  CHECK(empty.loss_sum == 0.0);
  CHECK(empty.gradient == std::vector<double>(3, 0.0));
}

TEST_CASE("training history is identical with and without parallel reduction") {
  const auto sys = MdofSystem::uniform_chain(4, 2000.0, 2.4e5, 2500.0);
  SolverConfig solver;
  solver.steps = 200;
  std::vector<EpisodeRecord> episodes;
  std::vector<int> tags;
  for (int k = 0; k < 5; ++k) {
    ExcitationSpec spec;
    spec.kind = ExcitationKind::random;
    spec.amplitude = 200.0;
    spec.target_vertex = std::size_t(k % 4);
    spec.seed = std::uint64_t(k + 1);
    episodes.push_back(newmark_solve(sys, generate_excitation(spec, solver, 4), solver));
    tags.push_back(0);
  }
  const auto scalers = fit_scalers(episodes);
  const auto graph = chain_graph(4, true);
  const auto data = build_dataset(episodes, build_homogeneous_adjacency(graph), scalers, InputAlignment::aligned, tags);
  auto model = SurrogateModel::create(ModelKind::homogeneous, 1, {16, 64}, 3);
  model.scalers = scalers;
  TrainConfig cfg;
  cfg.epochs = 4;
  cfg.noise_std = 0.01;
  cfg.parallel = true;
  const auto a = train(model, data, cfg);
  cfg.parallel = false;
  const auto b = train(model, data, cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (std::size_t e = 0; e < a.history.size(); ++e) {
    CHECK(a.history[e].train_loss == b.history[e].train_loss);
    CHECK(a.history[e].test_loss == b.history[e].test_loss);
  }
  CHECK(a.model.flatten() == b.model.flatten());
}
