#include "gdtm/surrogate.hpp"

#include "gdtm/kernels.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

namespace gdtm {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::homogeneous: return "homogeneous";
    case ModelKind::heterogeneous: return "heterogeneous";
    case ModelKind::gat: return "gat";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& text) {
  if (text == "homogeneous") return ModelKind::homogeneous;
  if (text == "heterogeneous") return ModelKind::heterogeneous;
  if (text == "gat") return ModelKind::gat;
  fail(ErrorCode::config, "unknown model kind '" + text + "'");
}

std::string to_string(InputAlignment alignment) {
  return alignment == InputAlignment::aligned ? "aligned" : "lagged";
}

InputAlignment parse_alignment(const std::string& text) {
  if (text == "aligned") return InputAlignment::aligned;
  if (text == "lagged") return InputAlignment::lagged;
  fail(ErrorCode::config, "unknown input alignment '" + text + "'");
}

EpisodeRecord NormalizationScalers::normalize(const EpisodeRecord& rec) const {
  EpisodeRecord out = rec;
  out.acceleration /= acceleration;
  out.velocity /= velocity;
  out.displacement /= displacement;
  out.excitation /= excitation;
  return out;
}

EpisodeRecord NormalizationScalers::denormalize(const EpisodeRecord& rec) const {
  EpisodeRecord out = rec;
  out.acceleration *= acceleration;
  out.velocity *= velocity;
  out.displacement *= displacement;
  out.excitation *= excitation;
  return out;
}

NormalizationScalers fit_scalers(std::span<const EpisodeRecord> episodes) {
  require(!episodes.empty(), ErrorCode::invalid_size, "fit_scalers needs at least one episode");
  double acc = 0.0, vel = 0.0, disp = 0.0, exc = 0.0;
  for (const auto& e : episodes) {
    if (e.acceleration.size() == 0) continue;
    acc = std::max(acc, e.acceleration.cwiseAbs().maxCoeff());
    vel = std::max(vel, e.velocity.cwiseAbs().maxCoeff());
    disp = std::max(disp, e.displacement.cwiseAbs().maxCoeff());
    exc = std::max(exc, e.excitation.cwiseAbs().maxCoeff());
  }
  auto fallback = [](double s) { return s > 0.0 && std::isfinite(s) ? s : 1.0; };
  return {fallback(acc), fallback(vel), fallback(disp), fallback(exc)};
}

SurrogateModel SurrogateModel::create(ModelKind kind, std::size_t matrix_count, const std::vector<std::size_t>& hidden,
                                      std::uint64_t seed, std::size_t gat_width, std::size_t edge_type_count) {
  SurrogateModel m;
  m.kind = kind;
  m.matrix_count = matrix_count;
  std::vector<std::size_t> dims{m.input_dim()};
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(1);
  m.mlp = MlpModel::initialize(dims, seed);
  if (kind == ModelKind::gat) {
    m.gat = GatLayer::initialize(gat_width, edge_type_count, seed + 1);
  }
  m.validate();
  return m;
}

std::size_t SurrogateModel::parameter_count() const {
  return mlp.parameter_count() + (gat ? gat->parameter_count() : 0);
}

void SurrogateModel::validate() const {
  require(mlp.input_dim() == input_dim(), ErrorCode::compat, "MLP input width does not match 2N+1");
  require(!mlp.layers.empty() && mlp.dims().back() == 1, ErrorCode::compat, "MLP output width must be 1");
  if (kind == ModelKind::heterogeneous) {
    require(matrix_count >= 2, ErrorCode::compat, "heterogeneous model needs N >= 2 matrices");
  } else {
    require(matrix_count == 1, ErrorCode::compat, "homogeneous and attention models use one matrix");
  }
  require((kind == ModelKind::gat) == gat.has_value(), ErrorCode::compat, "attention layer present iff kind is gat");
  if (gat) require(gat->feature_dim() == 2, ErrorCode::compat, "attention layer must read (velocity, displacement)");
  for (double s : {scalers.acceleration, scalers.velocity, scalers.displacement, scalers.excitation}) {
    require(std::isfinite(s) && s > 0.0, ErrorCode::compat, "normalization scales must be positive");
  }
  require(dt > 0.0, ErrorCode::compat, "model dt must be positive");
}

std::vector<double> SurrogateModel::flatten() const {
  auto p = mlp.flatten();
  if (gat) {
    auto g = gat->flatten();
    p.insert(p.end(), g.begin(), g.end());
  }
  return p;
}

void SurrogateModel::assign(std::span<const double> params) {
  require(params.size() == parameter_count(), ErrorCode::shape, "parameter vector length mismatch");
  const std::size_t n_mlp = mlp.parameter_count();
  mlp.assign(params.first(n_mlp));
  if (gat) gat->assign(params.subspan(n_mlp));
}

// ---------------------------------------------------------------------------
// Dataset

namespace {

Dataset build_raw(std::span<const EpisodeRecord> episodes, const NormalizationScalers& scalers,
                  InputAlignment alignment, std::span<const int> tags) {
  require(!episodes.empty(), ErrorCode::invalid_size, "dataset needs at least one episode");
  require(tags.empty() || tags.size() == episodes.size(), ErrorCode::shape, "one tag per episode required");
  Dataset d;
  d.alignment = alignment;
  d.vertex_count = episodes.front().vertex_count();
  std::size_t total = 0;
  for (const auto& e : episodes) {
    e.validate();
    require(e.vertex_count() == d.vertex_count, ErrorCode::shape, "episodes differ in vertex count");
    total += e.steps() > 0 ? e.steps() - 1 : 0;
  }
  const auto v = static_cast<Eigen::Index>(d.vertex_count);
  const auto rows = static_cast<Eigen::Index>(total) * v;
  d.state.resize(rows, 2);
  d.excitation.resize(rows);
  d.targets.resize(rows);
  const Eigen::Index offset = alignment == InputAlignment::aligned ? 1 : 0;
  std::size_t sample = 0;
  for (std::size_t k = 0; k < episodes.size(); ++k) {
    const auto& e = episodes[k];
    const auto count = e.steps() > 0 ? static_cast<Eigen::Index>(e.steps()) - 1 : 0;
    d.episodes.push_back({sample, static_cast<std::size_t>(count), tags.empty() ? 0 : tags[k]});
    for (Eigen::Index n = 0; n < count; ++n) {
      const Eigen::Index row = static_cast<Eigen::Index>(sample + n) * v;
      for (Eigen::Index i = 0; i < v; ++i) {
        d.state(row + i, 0) = e.velocity(n + offset, i) / scalers.velocity;
        d.state(row + i, 1) = e.displacement(n + offset, i) / scalers.displacement;
        d.excitation(row + i) = e.excitation(n + 1, i) / scalers.excitation;
        d.targets(row + i) = e.acceleration(n + 1, i) / scalers.acceleration;
      }
    }
    sample += static_cast<std::size_t>(count);
  }
  return d;
}

}  // namespace

Dataset build_dataset(std::span<const EpisodeRecord> episodes, const NormalizationScalers& scalers,
                      InputAlignment alignment, std::span<const int> tags) {
  return build_raw(episodes, scalers, alignment, tags);
}

Dataset build_dataset(std::span<const EpisodeRecord> episodes, const AdjacencySet& adj,
                      const NormalizationScalers& scalers, InputAlignment alignment, std::span<const int> tags) {
  adj.validate();
  Dataset d = build_raw(episodes, scalers, alignment, tags);
  require(adj.vertex_count() == d.vertex_count, ErrorCode::shape, "episode width does not match adjacency");
  const auto v = static_cast<Eigen::Index>(d.vertex_count);
  const auto width = static_cast<Eigen::Index>(adj.aggregated_width()) + 1;
  const auto samples = static_cast<Eigen::Index>(d.sample_count());
  d.inputs.resize(samples * v, width);
  // Reshape state rows (sample-major, V rows each) into T x V series for the kernel.
  Matrix vel(samples, v), disp(samples, v);
  for (Eigen::Index s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < v; ++i) {
      vel(s, i) = d.state(s * v + i, 0);
      disp(s, i) = d.state(s * v + i, 1);
    }
  }
  if (samples > 0) {
    d.inputs.leftCols(width - 1) = kernels::parallel::aggregate_series(adj, vel, disp);
  }
  d.inputs.col(width - 1) = d.excitation;
  return d;
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  require(train_fraction > 0.0 && train_fraction < 1.0, ErrorCode::config, "train fraction must lie in (0, 1)");
  require(batch_size >= 1, ErrorCode::config, "batch size must be positive");
  require(block_samples >= 1, ErrorCode::config, "block size must be positive");
  require(noise_std >= 0.0, ErrorCode::config, "noise std must be non-negative");
  require(adam.learning_rate > 0.0, ErrorCode::config, "learning rate must be positive");
}

EpisodeSplit split_episodes(std::span<const int> tags, double train_fraction, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t k = 0; k < tags.size(); ++k) groups[tags[k]].push_back(k);
  std::mt19937_64 rng(seed);
  EpisodeSplit split;
  for (auto& [tag, members] : groups) {
    std::shuffle(members.begin(), members.end(), rng);
    auto n_train = static_cast<std::size_t>(std::llround(train_fraction * double(members.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, members.size());
    if (members.size() >= 2) n_train = std::min(n_train, members.size() - 1);
    split.train.insert(split.train.end(), members.begin(), members.begin() + static_cast<long>(n_train));
    split.test.insert(split.test.end(), members.begin() + static_cast<long>(n_train), members.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

namespace {

struct BlockContext {
  const SurrogateModel* model = nullptr;
  const Dataset* data = nullptr;
  const AttentionStructure* structure = nullptr;
  double noise_std = 0.0;
};

/// Loss sum over the block; when `grad` is given it receives scale * dLoss/dparams.
double block_loss(const BlockContext& ctx, std::span<const std::size_t> samples, double scale,
                  std::vector<double>* grad, std::uint64_t noise_seed) {
  const auto& model = *ctx.model;
  const auto& data = *ctx.data;
  const auto v = static_cast<Eigen::Index>(data.vertex_count);
  const auto rows = static_cast<Eigen::Index>(samples.size()) * v;
  const auto width = static_cast<Eigen::Index>(model.input_dim());
  std::mt19937_64 rng(noise_seed);
  std::normal_distribution<double> noise(0.0, ctx.noise_std > 0.0 ? ctx.noise_std : 1.0);

  Matrix x(rows, width);
  Matrix y(rows, 1);
  std::vector<Matrix> features;
  std::vector<GatForward> forwards;
  for (std::size_t b = 0; b < samples.size(); ++b) {
    const auto src = static_cast<Eigen::Index>(samples[b]) * v;
    const auto dst = static_cast<Eigen::Index>(b) * v;
    y.middleRows(dst, v) = data.targets.segment(src, v);
    if (ctx.structure) {
      Matrix f = data.state.middleRows(src, v);
      if (ctx.noise_std > 0.0) {
        for (Eigen::Index k = 0; k < f.size(); ++k) f.data()[k] += ctx.noise_std * noise(rng);
      }
      forwards.push_back(gat_forward(*model.gat, *ctx.structure, f));
      x.block(dst, 0, v, 2) = forwards.back().aggregated;
      x.block(dst, 2, v, 1) = data.excitation.segment(src, v);
      features.push_back(std::move(f));
    } else {
      x.middleRows(dst, v) = data.inputs.middleRows(src, v);
      if (ctx.noise_std > 0.0) {
        for (Eigen::Index r = dst; r < dst + v; ++r) {
          for (Eigen::Index c = 0; c + 1 < width; ++c) x(r, c) += ctx.noise_std * noise(rng);
        }
      }
    }
  }

  MlpCache cache;
  const Matrix pred = mlp_forward(model.mlp, x, grad ? &cache : nullptr);
  double loss_sum = 0.0;
  Matrix upstream(rows, 1);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double d = pred(r, 0) - y(r, 0);
    if (std::abs(d) < 1.0) {
      loss_sum += 0.5 * d * d;
      upstream(r, 0) = d * scale;
    } else {
      loss_sum += std::abs(d) - 0.5;
      upstream(r, 0) = (d > 0.0 ? 1.0 : -1.0) * scale;
    }
  }
  if (!grad) return loss_sum;

  const auto g = mlp_backward(model.mlp, cache, upstream);
  auto flat = g.flatten();
  std::copy(flat.begin(), flat.end(), grad->begin());
  if (ctx.structure) {
    const std::size_t offset = flat.size();
    for (std::size_t b = 0; b < samples.size(); ++b) {
      const auto dst = static_cast<Eigen::Index>(b) * v;
      const Matrix d_agg = g.input.block(dst, 0, v, 2);
      const auto gg = gat_backward(*model.gat, *ctx.structure, features[b], forwards[b], d_agg).flatten();
      for (std::size_t k = 0; k < gg.size(); ++k) (*grad)[offset + k] += gg[k];
    }
  }
  return loss_sum;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) {
  std::seed_seq seq{a, b, c, d};
  std::uint64_t out[1];
  std::uint32_t words[2];
  seq.generate(words, words + 2);
  out[0] = (std::uint64_t(words[0]) << 32) | words[1];
  return out[0];
}

kernels::BlockReduction reduce(bool parallel, std::size_t blocks, std::size_t size, const kernels::BlockFn& fn) {
  return parallel ? kernels::parallel::ordered_block_reduce(blocks, size, fn)
                  : kernels::serial::ordered_block_reduce(blocks, size, fn);
}

double dataset_loss(const BlockContext& ctx, const std::vector<std::size_t>& samples, std::size_t block,
                    bool parallel) {
  if (samples.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t blocks = (samples.size() + block - 1) / block;
  BlockContext clean = ctx;
  clean.noise_std = 0.0;
  auto r = reduce(parallel, blocks, 0, [&](std::size_t b, std::vector<double>&) {
    const std::size_t begin = b * block;
    const std::size_t end = std::min(samples.size(), begin + block);
    return block_loss(clean, std::span(samples).subspan(begin, end - begin), 0.0, nullptr, 0);
  });
  return r.loss_sum / double(samples.size() * ctx.data->vertex_count);
}

std::vector<std::size_t> samples_of(const Dataset& data, const std::vector<std::size_t>& episodes) {
  std::vector<std::size_t> out;
  for (auto e : episodes) {
    const auto& span = data.episodes[e];
    for (std::size_t s = 0; s < span.sample_count; ++s) out.push_back(span.first_sample + s);
  }
  return out;
}

}  // namespace

TrainResult train(const SurrogateModel& initial, const Dataset& data, const TrainConfig& config, const Graph* graph) {
  config.validate();
  initial.validate();
  require(data.sample_count() > 0, ErrorCode::invalid_size, "training needs at least one sample");
  require(data.alignment == initial.alignment, ErrorCode::compat, "dataset alignment differs from the model's");

  std::optional<AttentionStructure> structure;
  if (initial.kind == ModelKind::gat) {
    require(graph != nullptr, ErrorCode::compat, "attention model training needs the graph");
    structure = AttentionStructure::from_graph(*graph, initial.gat->edge_type_count());
    require(structure->vertex_count == data.vertex_count, ErrorCode::shape, "graph size does not match dataset");
  } else {
    require(static_cast<std::size_t>(data.inputs.cols()) == initial.input_dim(), ErrorCode::shape,
            "dataset input width does not match model");
  }

  std::vector<int> tags;
  for (const auto& e : data.episodes) tags.push_back(e.tag);
  TrainResult result;
  result.split = split_episodes(tags, config.train_fraction, config.seed);
  std::vector<std::size_t> train_samples = samples_of(data, result.split.train);
  const std::vector<std::size_t> test_samples = samples_of(data, result.split.test);
  require(!train_samples.empty(), ErrorCode::invalid_size, "training split is empty");

  SurrogateModel model = initial;
  std::vector<double> params = model.flatten();
  std::vector<double> best = params;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  AdamState adam(params.size(), config.adam);
  std::mt19937_64 shuffle_rng(config.seed);

  BlockContext ctx{&model, &data, structure ? &*structure : nullptr, config.noise_std};
  const std::size_t v = data.vertex_count;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(train_samples.begin(), train_samples.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    std::size_t batch_index = 0;
    for (std::size_t begin = 0; begin < train_samples.size(); begin += config.batch_size, ++batch_index) {
      const std::size_t end = std::min(train_samples.size(), begin + config.batch_size);
      const auto batch = std::span(train_samples).subspan(begin, end - begin);
      const std::size_t blocks = (batch.size() + config.block_samples - 1) / config.block_samples;
      const double scale = 1.0 / double(batch.size() * v);
      auto red = reduce(config.parallel, blocks, params.size(), [&](std::size_t b, std::vector<double>& grad) {
        const std::size_t lo = b * config.block_samples;
        const std::size_t hi = std::min(batch.size(), lo + config.block_samples);
        return block_loss(ctx, batch.subspan(lo, hi - lo), scale, &grad, mix_seed(config.seed, epoch, batch_index, b));
      });
      if (!std::isfinite(red.loss_sum)) {
        fail(ErrorCode::numerical, "training diverged (non-finite loss) at epoch " + std::to_string(epoch));
      }
      adam_step(adam, params, red.gradient);
      model.assign(params);
      loss_sum += red.loss_sum;
      loss_count += batch.size() * v;
    }
    const double train_loss = loss_sum / double(loss_count);
    const double test_loss = dataset_loss(ctx, test_samples, std::max<std::size_t>(config.block_samples, 64), config.parallel);
    if (!std::isfinite(train_loss) || (!test_samples.empty() && !std::isfinite(test_loss))) {
      fail(ErrorCode::numerical, "training diverged (non-finite loss) at epoch " + std::to_string(epoch));
    }
    result.history.push_back({epoch, train_loss, test_loss});
    const double selection = test_samples.empty() ? train_loss : test_loss;
    if (selection < best_loss) {
      best_loss = selection;
      best = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  model.assign(best);
  result.model = std::move(model);
  return result;
}

// ---------------------------------------------------------------------------
// Rollout

AdjacencySet adjacency_for(const SurrogateModel& model, const Graph& graph) {
  switch (model.kind) {
    case ModelKind::homogeneous:
      return build_homogeneous_adjacency(graph);
    case ModelKind::heterogeneous: {
      auto adj = build_heterogeneous_adjacency(graph);
      require(adj.count() == model.matrix_count, ErrorCode::compat,
              "graph yields " + std::to_string(adj.count()) + " adjacency matrices, model expects " +
                  std::to_string(model.matrix_count));
      return adj;
    }
    case ModelKind::gat:
      break;
  }
  fail(ErrorCode::compat, "attention models aggregate through the graph, not a fixed adjacency");
}

namespace {

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

/// Maps a physical state and excitation to physical accelerations.
class AccelerationModel {
 public:
  AccelerationModel(const SurrogateModel& model, const AdjacencySet* adj, const AttentionStructure* structure)
      : model_(model), adj_(adj), structure_(structure) {}

  Vector operator()(const Vector& vel, const Vector& disp, const Vector& exc, Matrix* attention = nullptr) const {
    const auto v = vel.size();
    Matrix f(v, 2);
    f.col(0) = vel / model_.scalers.velocity;
    f.col(1) = disp / model_.scalers.displacement;
    Matrix x(v, static_cast<Eigen::Index>(model_.input_dim()));
    if (structure_) {
      const auto fw = gat_forward(*model_.gat, *structure_, f);
      x.leftCols(2) = fw.aggregated;
      if (attention) *attention = attention_matrix(*structure_, fw);
    } else {
      x.leftCols(x.cols() - 1) = aggregate(*adj_, f);
    }
    x.col(x.cols() - 1) = exc / model_.scalers.excitation;
    return mlp_forward(model_.mlp, x).col(0) * model_.scalers.acceleration;
  }

 private:
  const SurrogateModel& model_;
  const AdjacencySet* adj_;
  const AttentionStructure* structure_;
};

RolloutResult run_rollout(const SurrogateModel& model, const AccelerationModel& predict, std::size_t vertex_count,
                          const Matrix& excitation, const RolloutOptions& options, bool attention_model) {
  model.validate();
  const auto v = static_cast<Eigen::Index>(vertex_count);
  require(excitation.cols() == v, ErrorCode::shape, "excitation width does not match the graph");
  require(excitation.rows() >= 1, ErrorCode::invalid_size, "rollout needs at least one excitation step");
  const auto steps = excitation.rows();
  const double dt = model.dt, beta = model.beta, gamma = model.gamma;
  const bool capture = options.capture_attention && attention_model;

  RolloutResult out;
  auto& rec = out.record;
  rec.dt = dt;
  rec.excitation = excitation;
  rec.acceleration = Matrix::Zero(steps, v);
  rec.velocity = Matrix::Zero(steps, v);
  rec.displacement = Matrix::Zero(steps, v);

  Vector u = Vector::Zero(v);
  Vector vel = Vector::Zero(v);
  if (options.initial) {
    require(options.initial->displacement.size() == v && options.initial->velocity.size() == v, ErrorCode::shape,
            "initial state size does not match the graph");
    u = options.initial->displacement;
    vel = options.initial->velocity;
  }
  Matrix att;
  auto check = [&](const Vector& a, Eigen::Index step) {
    if (!a.allFinite()) fail(ErrorCode::numerical, "rollout produced a non-finite prediction at step " + std::to_string(step));
  };

  Vector a = predict(vel, u, excitation.row(0).transpose(), capture ? &att : nullptr);
  check(a, 0);
  if (capture) out.attention.push_back(att);
  rec.displacement.row(0) = u.transpose();
  rec.velocity.row(0) = vel.transpose();
  rec.acceleration.row(0) = a.transpose();

  const double floor = 1e-3 * model.scalers.acceleration;
  for (Eigen::Index s = 0; s + 1 < steps; ++s) {
    const Vector e_next = excitation.row(s + 1).transpose();
    Vector a_next;
    if (model.alignment == InputAlignment::lagged) {
      a_next = predict(vel, u, e_next, capture ? &att : nullptr);
    } else {
      const Vector u_pred = u + dt * vel + dt * dt * (0.5 - beta) * a;
      const Vector v_pred = vel + dt * (1.0 - gamma) * a;
      a_next = a;
      bool converged = false;
      double last_change = 0.0;
      for (std::size_t it = 1; it <= options.max_iterations; ++it) {
        Vector trial = predict(v_pred + gamma * dt * a_next, u_pred + beta * dt * dt * a_next, e_next,
                               capture ? &att : nullptr);
        check(trial, s + 1);
        const double change = (trial - a_next).cwiseAbs().maxCoeff();
        last_change = change / (trial.cwiseAbs().maxCoeff() + floor);
        a_next = std::move(trial);
        out.max_iterations_used = std::max(out.max_iterations_used, it);
        if (change <= options.tolerance * (a_next.cwiseAbs().maxCoeff() + floor)) {
          converged = true;
          break;
        }
      }
      if (!converged) {
        fail(ErrorCode::numerical, "implicit rollout step did not converge at step " + std::to_string(s + 1) +
                                       " (relative change " + format_double(last_change) + ")");
      }
    }
    check(a_next, s + 1);
    auto next = kinematic_update(u, vel, a, a_next, dt, beta, gamma);
    u = std::move(next.displacement);
    vel = std::move(next.velocity);
    a = std::move(a_next);
    rec.displacement.row(s + 1) = u.transpose();
    rec.velocity.row(s + 1) = vel.transpose();
    rec.acceleration.row(s + 1) = a.transpose();
    if (capture) out.attention.push_back(att);
  }
  return out;
}

void check_adjacency_for_model(const SurrogateModel& model, const AdjacencySet& adj) {
  require(model.kind != ModelKind::gat, ErrorCode::compat, "attention models need a graph, not an adjacency set");
  adj.validate();
  const auto expected = model.kind == ModelKind::homogeneous ? AdjacencyKind::homogeneous : AdjacencyKind::heterogeneous;
  require(adj.kind == expected, ErrorCode::compat, "adjacency kind does not match the model kind");
  require(adj.count() == model.matrix_count, ErrorCode::compat, "adjacency matrix count does not match the model");
}

}  // namespace

RolloutResult rollout(const SurrogateModel& model, const AdjacencySet& adj, const Matrix& excitation,
                      const RolloutOptions& options) {
  check_adjacency_for_model(model, adj);
  AccelerationModel predict(model, &adj, nullptr);
  return run_rollout(model, predict, adj.vertex_count(), excitation, options, false);
}

RolloutResult rollout(const SurrogateModel& model, const Graph& graph, const Matrix& excitation,
                      const RolloutOptions& options) {
  if (model.kind == ModelKind::gat) {
    model.validate();
    const auto structure = AttentionStructure::from_graph(graph, model.gat->edge_type_count());
    AccelerationModel predict(model, nullptr, &structure);
    return run_rollout(model, predict, graph.vertex_count, excitation, options, true);
  }
  return rollout(model, adjacency_for(model, graph), excitation, options);
}

Matrix one_step_predictions(const SurrogateModel& model, const Graph& graph, const EpisodeRecord& truth) {
  truth.validate();
  require(truth.vertex_count() == graph.vertex_count, ErrorCode::shape, "episode width does not match the graph");
  std::optional<AdjacencySet> adj;
  std::optional<AttentionStructure> structure;
  if (model.kind == ModelKind::gat) {
    structure = AttentionStructure::from_graph(graph, model.gat->edge_type_count());
  } else {
    adj = adjacency_for(model, graph);
  }
  AccelerationModel predict(model, adj ? &*adj : nullptr, structure ? &*structure : nullptr);
  const auto steps = static_cast<Eigen::Index>(truth.steps());
  Matrix out(steps, static_cast<Eigen::Index>(truth.vertex_count()));
  for (Eigen::Index n = 0; n < steps; ++n) {
    const Eigen::Index state = (model.alignment == InputAlignment::lagged && n > 0) ? n - 1 : n;
    out.row(n) = predict(truth.velocity.row(state).transpose(), truth.displacement.row(state).transpose(),
                         truth.excitation.row(n).transpose())
                     .transpose();
  }
  return out;
}

MetricReport evaluate_rollout(const EpisodeRecord& predicted, const EpisodeRecord& truth) {
  require(predicted.acceleration.rows() == truth.acceleration.rows() &&
              predicted.acceleration.cols() == truth.acceleration.cols(),
          ErrorCode::shape, "predicted and true records differ in shape");
  const auto n = static_cast<std::size_t>(truth.acceleration.size());
  return compute_metrics(std::span(truth.acceleration.data(), n), std::span(predicted.acceleration.data(), n));
}

SurrogateModel linear_oracle_surrogate(double mass, double stiffness, double damping,
                                       const NormalizationScalers& scalers, const SolverConfig& solver,
                                       InputAlignment alignment) {
  require(mass > 0.0, ErrorCode::invalid_parameter, "mass must be positive");
  SurrogateModel m;
  m.kind = ModelKind::homogeneous;
  m.alignment = alignment;
  m.matrix_count = 1;
  m.scalers = scalers;
  m.dt = solver.dt;
  m.beta = solver.beta;
  m.gamma = solver.gamma;
  m.mlp = MlpModel::zeros(MlpModel::default_dims(3));

  // Normalized coefficients on (A v / s_v, A u / s_u, E / s_e) -> a / s_a.
  const double w[3] = {-(damping / mass) * scalers.velocity / scalers.acceleration,
                       -(stiffness / mass) * scalers.displacement / scalers.acceleration,
                       scalers.excitation / (mass * scalers.acceleration)};
  // relu(x) - relu(-x) = x: layer 1 splits each input into a sign pair, layer 2
  // forms +y and -y, the output recombines them.
  auto& l1 = m.mlp.layers[0].weight;
  auto& l2 = m.mlp.layers[1].weight;
  auto& l3 = m.mlp.layers[2].weight;
  for (int k = 0; k < 3; ++k) {
    l1(2 * k, k) = 1.0;
    l1(2 * k + 1, k) = -1.0;
    l2(0, 2 * k) = w[k];
    l2(0, 2 * k + 1) = -w[k];
    l2(1, 2 * k) = -w[k];
    l2(1, 2 * k + 1) = w[k];
  }
  l3(0, 0) = 1.0;
  l3(0, 1) = -1.0;
  m.validate();
  return m;
}

}  // namespace gdtm
