#pragma once

#include "gdtm/common.hpp"
#include "gdtm/graph.hpp"

#include <functional>
#include <vector>

/// Data-parallel kernels. Every kernel has a serial reference implementation
/// with the same signature; the OpenMP version must return bitwise identical
/// results (reductions always combine partial results in block order).
namespace gdtm::kernels {

/// Fills `grad` (pre-sized, zeroed) with the gradient contribution of one block
/// and returns that block's loss sum.
using BlockFn = std::function<double(std::size_t block, std::vector<double>& grad)>;

struct BlockReduction {
  double loss_sum = 0.0;
  std::vector<double> gradient;
};

// aggregate_series: aggregates a whole T x V series in one pass. Row t*V + i of
// the result is vertex i at step t; columns follow gdtm::aggregate.
// ordered_block_reduce: runs `fn` for every block and sums the results in
// block order.

namespace serial {
Matrix aggregate_series(const AdjacencySet& adj, const Matrix& velocity, const Matrix& displacement);
BlockReduction ordered_block_reduce(std::size_t blocks, std::size_t gradient_size, const BlockFn& fn);
}  // namespace serial

namespace parallel {
Matrix aggregate_series(const AdjacencySet& adj, const Matrix& velocity, const Matrix& displacement);
BlockReduction ordered_block_reduce(std::size_t blocks, std::size_t gradient_size, const BlockFn& fn);
}  // namespace parallel

}  // namespace gdtm::kernels
