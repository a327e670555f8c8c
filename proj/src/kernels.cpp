#include "gdtm/kernels.hpp"

namespace gdtm::kernels {

namespace {

void check_series(const AdjacencySet& adj, const Matrix& velocity, const Matrix& displacement) {
  require(velocity.rows() == displacement.rows() && velocity.cols() == displacement.cols(), ErrorCode::shape,
          "velocity and displacement series differ in shape");
  require(!adj.matrices.empty() && static_cast<std::size_t>(velocity.cols()) == adj.vertex_count(), ErrorCode::shape,
          "series width does not match adjacency size");
}

void aggregate_step(const AdjacencySet& adj, const Matrix& velocity, const Matrix& displacement, Eigen::Index t,
                    Matrix& out) {
  const auto v = velocity.cols();
  for (std::size_t k = 0; k < adj.count(); ++k) {
    const Matrix& a = adj.matrices[k];
    const auto col = 2 * static_cast<Eigen::Index>(k);
    for (Eigen::Index i = 0; i < v; ++i) {
      double sv = 0.0;
      double su = 0.0;
      for (Eigen::Index j = 0; j < v; ++j) {
        const double w = a(i, j);
        if (w == 0.0) continue;
        sv += w * velocity(t, j);
        su += w * displacement(t, j);
      }
      out(t * v + i, col) = sv;
      out(t * v + i, col + 1) = su;
    }
  }
}

}  // namespace

namespace serial {

Matrix aggregate_series(const AdjacencySet& adj, const Matrix& velocity, const Matrix& displacement) {
  check_series(adj, velocity, displacement);
  Matrix out(velocity.rows() * velocity.cols(), 2 * static_cast<Eigen::Index>(adj.count()));
  for (Eigen::Index t = 0; t < velocity.rows(); ++t) aggregate_step(adj, velocity, displacement, t, out);
  return out;
}

BlockReduction ordered_block_reduce(std::size_t blocks, std::size_t gradient_size, const BlockFn& fn) {
  BlockReduction r;
  r.gradient.assign(gradient_size, 0.0);
  std::vector<double> local(gradient_size);
  for (std::size_t b = 0; b < blocks; ++b) {
    std::fill(local.begin(), local.end(), 0.0);
    r.loss_sum += fn(b, local);
    for (std::size_t k = 0; k < gradient_size; ++k) r.gradient[k] += local[k];
  }
  return r;
}

}  // namespace serial

namespace parallel {

Matrix aggregate_series(const AdjacencySet& adj, const Matrix& velocity, const Matrix& displacement) {
  check_series(adj, velocity, displacement);
  Matrix out(velocity.rows() * velocity.cols(), 2 * static_cast<Eigen::Index>(adj.count()));
  const auto steps = velocity.rows();
#pragma omp parallel for schedule(static)
  for (Eigen::Index t = 0; t < steps; ++t) aggregate_step(adj, velocity, displacement, t, out);
  return out;
}

BlockReduction ordered_block_reduce(std::size_t blocks, std::size_t gradient_size, const BlockFn& fn) {
  std::vector<std::vector<double>> partial(blocks, std::vector<double>(gradient_size, 0.0));
  std::vector<double> losses(blocks, 0.0);
  const auto count = static_cast<long>(blocks);
#pragma omp parallel for schedule(dynamic)
  for (long b = 0; b < count; ++b) losses[b] = fn(static_cast<std::size_t>(b), partial[b]);

  BlockReduction r;
  r.gradient.assign(gradient_size, 0.0);
  for (std::size_t b = 0; b < blocks; ++b) {
    r.loss_sum += losses[b];
    for (std::size_t k = 0; k < gradient_size; ++k) r.gradient[k] += partial[b][k];
  }
  return r;
}

}  // namespace parallel

}  // namespace gdtm::kernels
