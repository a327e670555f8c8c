#pragma once

#include "gdtm/common.hpp"
#include "gdtm/gat.hpp"
#include "gdtm/graph.hpp"
#include "gdtm/mdof.hpp"
#include "gdtm/metrics.hpp"
#include "gdtm/neural.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gdtm {

enum class ModelKind { homogeneous, heterogeneous, gat };

/// Which state the model sees when predicting a_{n+1}.
///   aligned: (v_{n+1}, u_{n+1}, E_{n+1}); rollout solves the implicit step by
///            fixed-point iteration through the Newmark kinematic update.
///   lagged:  (v_n, u_n, E_{n+1}); rollout is an explicit recursion.
enum class InputAlignment { aligned, lagged };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);
std::string to_string(InputAlignment alignment);
InputAlignment parse_alignment(const std::string& text);

/// Per-channel max-abs scales fitted on training data.
struct NormalizationScalers {
  double acceleration = 1.0;
  double velocity = 1.0;
  double displacement = 1.0;
  double excitation = 1.0;

  EpisodeRecord normalize(const EpisodeRecord& rec) const;
  EpisodeRecord denormalize(const EpisodeRecord& rec) const;
};

NormalizationScalers fit_scalers(std::span<const EpisodeRecord> episodes);

struct SurrogateModel {
  ModelKind kind = ModelKind::homogeneous;
  InputAlignment alignment = InputAlignment::aligned;
  MlpModel mlp;
  std::optional<GatLayer> gat;
  NormalizationScalers scalers;
  double dt = 0.01;
  double beta = 0.25;
  double gamma = 0.5;
  /// Adjacency matrices expected (N); 1 for homogeneous and gat.
  std::size_t matrix_count = 1;

  /// hidden: widths between input and the single output (default 16, 64).
  static SurrogateModel create(ModelKind kind, std::size_t matrix_count, const std::vector<std::size_t>& hidden,
                               std::uint64_t seed, std::size_t gat_width = 8, std::size_t edge_type_count = 1);

  std::size_t input_dim() const { return 2 * matrix_count + 1; }
  std::size_t parameter_count() const;
  void validate() const;

  /// MLP parameters followed by attention parameters.
  std::vector<double> flatten() const;
  void assign(std::span<const double> params);
};

/// One timestep of one episode is one sample; its V rows are contiguous.
struct EpisodeSpan {
  std::size_t first_sample = 0;
  std::size_t sample_count = 0;
  int tag = 0;
};

struct Dataset {
  std::size_t vertex_count = 0;
  InputAlignment alignment = InputAlignment::aligned;
  Matrix inputs;      // (samples*V) x (2N+1); empty when built without adjacency
  Matrix state;       // (samples*V) x 2: normalized velocity, displacement of the input state
  Vector excitation;  // (samples*V): normalized E_{n+1}
  Vector targets;     // (samples*V): normalized a_{n+1}
  std::vector<EpisodeSpan> episodes;

  std::size_t sample_count() const { return vertex_count ? static_cast<std::size_t>(targets.size()) / vertex_count : 0; }
};

/// Raw dataset (state, excitation, targets) for attention models.
Dataset build_dataset(std::span<const EpisodeRecord> episodes, const NormalizationScalers& scalers,
                      InputAlignment alignment, std::span<const int> tags = {});

/// Dataset with aggregated inputs for adjacency-driven models.
Dataset build_dataset(std::span<const EpisodeRecord> episodes, const AdjacencySet& adj,
                      const NormalizationScalers& scalers, InputAlignment alignment, std::span<const int> tags = {});

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  double noise_std = 0.0;
  std::size_t patience = 20;
  AdamConfig adam;
  /// Samples per reduction block; blocks run in parallel.
  std::size_t block_samples = 16;
  bool parallel = true;

  void validate() const;
};

struct EpisodeSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Whole-episode split, stratified by tag, seeded.
EpisodeSplit split_episodes(std::span<const int> tags, double train_fraction, std::uint64_t seed);

struct EpochLoss {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
};

struct TrainResult {
  SurrogateModel model;
  std::vector<EpochLoss> history;
  std::size_t best_epoch = 0;
  EpisodeSplit split;
};

/// Mini-batch Adam on Smooth-L1 with early stopping on the held-out loss.
/// Returns the parameters with the best held-out loss. `graph` is required for
/// attention models.
TrainResult train(const SurrogateModel& model, const Dataset& data, const TrainConfig& config,
                  const Graph* graph = nullptr);

struct RolloutOptions {
  std::optional<InitialState> initial;
  bool capture_attention = false;
  std::size_t max_iterations = 200;
  double tolerance = 1e-10;
};

struct RolloutResult {
  EpisodeRecord record;
  std::vector<Matrix> attention;  // per step, when captured
  std::size_t max_iterations_used = 0;
};

/// Autoregressive rollout for adjacency-driven models.
RolloutResult rollout(const SurrogateModel& model, const AdjacencySet& adj, const Matrix& excitation,
                      const RolloutOptions& options = {});

/// Rollout on a graph; builds the adjacency the model kind needs.
RolloutResult rollout(const SurrogateModel& model, const Graph& graph, const Matrix& excitation,
                      const RolloutOptions& options = {});

/// Teacher-forced one-step predictions of acceleration (T x V, row 0 from the
/// initial state) using the true states of `truth`.
Matrix one_step_predictions(const SurrogateModel& model, const Graph& graph, const EpisodeRecord& truth);

/// Metrics on the acceleration channels, flattened over steps and vertices.
MetricReport evaluate_rollout(const EpisodeRecord& predicted, const EpisodeRecord& truth);

/// Analytic surrogate for a uniform chain: its ReLU network realizes
/// a_i = -(c/m)(A v)_i - (k/m)(A u)_i + E_i / m in normalized units.
SurrogateModel linear_oracle_surrogate(double mass, double stiffness, double damping,
                                       const NormalizationScalers& scalers, const SolverConfig& solver,
                                       InputAlignment alignment = InputAlignment::aligned);

/// Adjacency matching a model kind for a graph (compat error for gat).
AdjacencySet adjacency_for(const SurrogateModel& model, const Graph& graph);

}  // namespace gdtm
