#pragma once

#include "gdtm/common.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace gdtm {

/// Affine layer y = x W^T + b with W stored out x in.
struct DenseLayer {
  Matrix weight;
  Vector bias;
};

/// Fully connected network with ReLU between layers and a linear output.
struct MlpModel {
  std::vector<DenseLayer> layers;

  /// Default layout: input -> 16 -> 64 -> 1.
  static std::vector<std::size_t> default_dims(std::size_t input_dim) { return {input_dim, 16, 64, 1}; }

  /// Glorot-uniform weights, zero biases. Output width must be 1.
  static MlpModel initialize(const std::vector<std::size_t>& dims, std::uint64_t seed);
  static MlpModel zeros(const std::vector<std::size_t>& dims);

  std::vector<std::size_t> dims() const;
  std::size_t input_dim() const;
  std::size_t parameter_count() const;

  /// Flattened parameters: per layer, row-major weight then bias.
  std::vector<double> flatten() const;
  void assign(std::span<const double> params);
};

/// Per-layer activations retained by a forward pass for backpropagation.
struct MlpCache {
  std::vector<Matrix> inputs;
  std::vector<Matrix> preactivations;
};

/// inputs: batch x input_dim. Returns batch x 1.
Matrix mlp_forward(const MlpModel& model, const Matrix& inputs, MlpCache* cache = nullptr);

struct MlpGradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
  Matrix input;

  /// Same layout as MlpModel::flatten.
  std::vector<double> flatten() const;
};

/// Reverse-mode gradients of the forward map for upstream dL/dy (batch x 1).
MlpGradients mlp_backward(const MlpModel& model, const MlpCache& cache, const Matrix& upstream);

struct LossResult {
  double value = 0.0;
  Matrix gradient;
};

/// Mean Smooth-L1 over all elements: 0.5 x^2 for |x| < delta, else delta (|x| - 0.5 delta).
LossResult smooth_l1(const Matrix& prediction, const Matrix& target, double delta = 1.0);

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam over a flat parameter vector.
struct AdamState {
  AdamConfig config;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step_count = 0;

  explicit AdamState(std::size_t size, AdamConfig cfg = {})
      : config(cfg), first_moment(size, 0.0), second_moment(size, 0.0) {}
};

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads);

}  // namespace gdtm
