#pragma once

#include "gdtm/checkpoint.hpp"
#include "gdtm/config.hpp"
#include "gdtm/graph.hpp"
#include "gdtm/mdof.hpp"
#include "gdtm/metrics.hpp"
#include "gdtm/signal.hpp"
#include "gdtm/surrogate.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gdtm {

/// Chain graph described by the [system] section, with `dof` vertices.
Graph system_graph(const SystemSection& system, std::size_t dof);

/// Chain system with per-type stiffness and damping; springs follow the graph's
/// ground-then-edge order.
MdofSystem system_model(const SystemSection& system, std::size_t dof);

/// Edge-type count an attention layer needs for the graph (max label + 1).
std::size_t attention_type_count(const Graph& graph);

struct PlannedEpisode {
  ExcitationSpec spec;
  int tag = 0;  // 0 impulse, 1 harmonic, 2 random
};

/// Excitations in kind order (impulse, harmonic, random), `counts` per kind,
/// drawn from one generator seeded with `seed`.
std::vector<PlannedEpisode> plan_excitations(const ExcitationSection& section, std::size_t dof, std::uint64_t seed,
                                             const std::array<std::size_t, 3>& counts);

/// Solves every planned episode; runs in parallel, results in plan order.
std::vector<EpisodeRecord> simulate_episodes(const MdofSystem& system, const std::vector<PlannedEpisode>& plan,
                                             const SolverConfig& solver);

struct ManifestEntry {
  std::string file;  // relative to the manifest directory
  PlannedEpisode episode;
};

struct Manifest {
  std::size_t dof = 0;
  double dt = 0.0;
  std::size_t steps = 0;
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> episodes;
};

std::string write_manifest(const Manifest& manifest);
Manifest read_manifest(const std::string& text);

/// Pooled metrics of rollouts over several episodes (all accelerations
/// concatenated).
MetricReport pooled_metrics(const std::vector<EpisodeRecord>& predicted, const std::vector<EpisodeRecord>& truth);

/// Rolls out every episode's excitation from rest on `graph` and pools metrics.
MetricReport evaluate_on_graph(const SurrogateModel& model, const Graph& graph, const std::vector<EpisodeRecord>& truth);

struct TrainingRun {
  Checkpoint checkpoint;
  TrainResult result;
  std::vector<std::size_t> test_episodes;
};

/// Split, fit scalers on the training episodes only, build the dataset for
/// the configured model kind and train.
TrainingRun train_surrogate(const ExperimentConfig& config, const Graph& graph, const std::vector<EpisodeRecord>& episodes,
                            const std::vector<int>& tags);

struct TransferRow {
  std::string label;
  std::size_t dof = 0;
  MetricReport report;
};

/// CSV header `label,dof,nmse,r2,pe_pct,n`.
std::string transfer_csv(const std::vector<TransferRow>& rows);

/// Truth system and adjacency for a parameter-transfer CASE (0-3) on the
/// configured system. Compat error for attention models.
struct CaseSetup {
  MdofSystem system;
  AdjacencySet adjacency;
};
CaseSetup case_setup(const ExperimentConfig& config, const SurrogateModel& model, int case_id);

/// Topology rows for every configured target, then CASE rows.
std::vector<TransferRow> run_transfer(const ExperimentConfig& config, const SurrogateModel& model);

// Command entry points. Each writes its artifacts under `out` (created when
// missing) and returns a summary for printing.

Manifest cmd_generate(const ExperimentConfig& config, const std::filesystem::path& out);

struct TrainSummary {
  std::filesystem::path checkpoint;
  std::filesystem::path loss_csv;
  std::size_t parameter_count = 0;
  std::size_t best_epoch = 0;
  MetricReport heldout;
};
TrainSummary cmd_train(const ExperimentConfig& config, const std::filesystem::path& manifest,
                       const std::filesystem::path& out);

struct RolloutSummary {
  std::filesystem::path predicted;
  std::size_t steps = 0;
  double seconds = 0.0;
  double steps_per_second = 0.0;
};
RolloutSummary cmd_rollout(const std::filesystem::path& checkpoint, const std::filesystem::path& graph,
                           const std::filesystem::path& excitation, const std::filesystem::path& out,
                           bool capture_attention);

MetricReport cmd_eval(const std::filesystem::path& predicted, const std::filesystem::path& truth,
                      const std::filesystem::path& out, bool psd);

std::vector<TransferRow> cmd_transfer(const ExperimentConfig& config, const std::filesystem::path& checkpoint,
                                      const std::filesystem::path& out);

/// Attention history CSV plus one STFT CSV per series.
AttentionHistory cmd_attention(const std::filesystem::path& checkpoint, const std::filesystem::path& graph,
                               const std::filesystem::path& excitation, const std::filesystem::path& out);

}  // namespace gdtm
