#include "gdtm/neural.hpp"

#include <cmath>
#include <random>

namespace gdtm {

MlpModel MlpModel::zeros(const std::vector<std::size_t>& dims) {
  require(dims.size() >= 2, ErrorCode::invalid_size, "MLP needs at least input and output widths");
  require(dims.back() == 1, ErrorCode::shape, "MLP output width must be 1");
  MlpModel m;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    require(dims[l] > 0 && dims[l + 1] > 0, ErrorCode::invalid_size, "MLP layer widths must be positive");
    const auto in = static_cast<Eigen::Index>(dims[l]);
    const auto out = static_cast<Eigen::Index>(dims[l + 1]);
    m.layers.push_back({Matrix::Zero(out, in), Vector::Zero(out)});
  }
  return m;
}

MlpModel MlpModel::initialize(const std::vector<std::size_t>& dims, std::uint64_t seed) {
  MlpModel m = zeros(dims);
  std::mt19937_64 rng(seed);
  for (auto& layer : m.layers) {
    const double limit = std::sqrt(6.0 / static_cast<double>(layer.weight.rows() + layer.weight.cols()));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) layer.weight(r, c) = dist(rng);
    }
  }
  return m;
}

std::vector<std::size_t> MlpModel::dims() const {
  std::vector<std::size_t> d;
  if (layers.empty()) return d;
  d.push_back(static_cast<std::size_t>(layers.front().weight.cols()));
  for (const auto& l : layers) d.push_back(static_cast<std::size_t>(l.weight.rows()));
  return d;
}

std::size_t MlpModel::input_dim() const {
  return layers.empty() ? 0 : static_cast<std::size_t>(layers.front().weight.cols());
}

std::size_t MlpModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

namespace {

void append_row_major(std::vector<double>& out, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
  }
}

}  // namespace

std::vector<double> MlpModel::flatten() const {
  std::vector<double> out;
  out.reserve(parameter_count());
  for (const auto& l : layers) {
    append_row_major(out, l.weight);
    out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
  }
  return out;
}

void MlpModel::assign(std::span<const double> params) {
  require(params.size() == parameter_count(), ErrorCode::shape, "parameter vector length mismatch");
  std::size_t k = 0;
  for (auto& l : layers) {
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = params[k++];
    }
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias(r) = params[k++];
  }
}

std::vector<double> MlpGradients::flatten() const {
  std::vector<double> out;
  for (std::size_t l = 0; l < weight.size(); ++l) {
    append_row_major(out, weight[l]);
    out.insert(out.end(), bias[l].data(), bias[l].data() + bias[l].size());
  }
  return out;
}

Matrix mlp_forward(const MlpModel& model, const Matrix& inputs, MlpCache* cache) {
  require(!model.layers.empty(), ErrorCode::invalid_size, "empty MLP");
  require(static_cast<std::size_t>(inputs.cols()) == model.input_dim(), ErrorCode::shape,
          "input width does not match MLP");
  if (cache) {
    cache->inputs.clear();
    cache->preactivations.clear();
  }
  Matrix x = inputs;
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const auto& layer = model.layers[l];
    Matrix z = x * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    if (cache) {
      cache->inputs.push_back(x);
      cache->preactivations.push_back(z);
    }
    x = (l + 1 < model.layers.size()) ? Matrix(z.cwiseMax(0.0)) : std::move(z);
  }
  return x;
}

MlpGradients mlp_backward(const MlpModel& model, const MlpCache& cache, const Matrix& upstream) {
  const std::size_t depth = model.layers.size();
  require(cache.inputs.size() == depth && cache.preactivations.size() == depth, ErrorCode::shape,
          "cache does not belong to this model");
  require(upstream.rows() == cache.inputs.front().rows() && upstream.cols() == 1, ErrorCode::shape,
          "upstream gradient shape mismatch");
  MlpGradients g;
  g.weight.resize(depth);
  g.bias.resize(depth);
  Matrix delta = upstream;
  for (std::size_t l = depth; l-- > 0;) {
    if (l + 1 < depth) {
      delta = delta.cwiseProduct((cache.preactivations[l].array() > 0.0).cast<double>().matrix());
    }
    g.weight[l] = delta.transpose() * cache.inputs[l];
    g.bias[l] = delta.colwise().sum().transpose();
    delta = delta * model.layers[l].weight;
  }
  g.input = std::move(delta);
  return g;
}

LossResult smooth_l1(const Matrix& prediction, const Matrix& target, double delta) {
  require(prediction.rows() == target.rows() && prediction.cols() == target.cols(), ErrorCode::shape,
          "prediction and target shapes differ");
  require(delta > 0.0, ErrorCode::invalid_parameter, "smooth-L1 delta must be positive");
  LossResult r;
  r.gradient.resize(prediction.rows(), prediction.cols());
  const auto count = static_cast<double>(prediction.size());
  if (prediction.size() == 0) return r;
  double sum = 0.0;
  for (Eigen::Index c = 0; c < prediction.cols(); ++c) {
    for (Eigen::Index i = 0; i < prediction.rows(); ++i) {
      const double x = prediction(i, c) - target(i, c);
      if (std::abs(x) < delta) {
        sum += 0.5 * x * x;
        r.gradient(i, c) = x / count;
      } else {
        sum += delta * (std::abs(x) - 0.5 * delta);
        r.gradient(i, c) = (x > 0.0 ? delta : -delta) / count;
      }
    }
  }
  r.value = sum / count;
  return r;
}

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grads) {
  require(params.size() == grads.size() && params.size() == state.first_moment.size(), ErrorCode::shape,
          "Adam parameter/gradient size mismatch");
  const auto& c = state.config;
  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    m = c.beta1 * m + (1.0 - c.beta1) * grads[i];
    v = c.beta2 * v + (1.0 - c.beta2) * grads[i] * grads[i];
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

}  // namespace gdtm
