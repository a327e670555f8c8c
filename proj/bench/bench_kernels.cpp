#include "gdtm/kernels.hpp"
#include "gdtm/neural.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <random>

using namespace gdtm;

namespace {

template <class F>
double best_of(int repeats, F&& f) {
  double best = 1e300;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return best;
}

void report(const char* name, double serial, double parallel) {
  std::printf("%-28s serial %9.3f ms  parallel %9.3f ms  speedup %5.2fx\n", name, serial * 1e3, parallel * 1e3,
              serial / parallel);
}

}  // namespace

int main() {
  std::printf("threads: %d\n", omp_get_max_threads());
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n01;

  const std::size_t steps = 5000;
  for (std::size_t v : {10, 30, 100}) {
    const auto adj = build_chain_adjacency(v, true);
    Matrix vel(steps, v), disp(steps, v);
    for (Eigen::Index k = 0; k < vel.size(); ++k) {
      vel.data()[k] = n01(rng);
      disp.data()[k] = n01(rng);
    }
    const double s = best_of(5, [&] { kernels::serial::aggregate_series(adj, vel, disp); });
    const double p = best_of(5, [&] { kernels::parallel::aggregate_series(adj, vel, disp); });
    char name[64];
    std::snprintf(name, sizeof name, "aggregate_series V=%zu", v);
    report(name, s, p);
  }

  // Block reduction shaped like one training batch: 64 timesteps of a 10-vertex graph.
  const auto model = MlpModel::initialize(MlpModel::default_dims(3), 3);
  const std::size_t rows_per_block = 16 * 10;
  std::vector<Matrix> inputs;
  for (int b = 0; b < 4; ++b) inputs.push_back(Matrix::Random(rows_per_block, 3));
  const kernels::BlockFn fn = [&](std::size_t b, std::vector<double>& grad) {
    MlpCache cache;
    const Matrix y = mlp_forward(model, inputs[b], &cache);
    const auto g = mlp_backward(model, cache, Matrix::Constant(y.rows(), 1, 1.0 / double(y.rows())));
    const auto flat = g.flatten();
    std::copy(flat.begin(), flat.end(), grad.begin());
    return y.sum();
  };
  const auto size = model.parameter_count();
  const double s = best_of(200, [&] { kernels::serial::ordered_block_reduce(inputs.size(), size, fn); });
  const double p = best_of(200, [&] { kernels::parallel::ordered_block_reduce(inputs.size(), size, fn); });
  report("ordered_block_reduce MLP", s, p);
  return 0;
}
