#pragma once

#include "gdtm/mdof.hpp"
#include "gdtm/surrogate.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace gdtm {

struct SystemSection {
  std::size_t dof = 10;
  double mass = 2000.0;
  double stiffness = 2.4e5;
  double damping = 2500.0;
  bool grounded = true;
  /// Edge type of chain edge e is type_pattern[e % size]; empty means all type 0.
  std::vector<int> type_pattern;
  /// Per-type overrides indexed by type; missing entries use stiffness / damping.
  std::vector<double> type_stiffness;
  std::vector<double> type_damping;
};

struct ExcitationSection {
  std::size_t impulse_count = 10;
  std::size_t harmonic_count = 10;
  std::size_t random_count = 10;
  double impulse_amplitude = 1000.0;
  std::size_t impulse_duration = 1;
  double harmonic_amplitude = 500.0;
  double harmonic_min_hz = 0.5;
  double harmonic_max_hz = 5.0;
  double random_std = 200.0;
  std::uint64_t seed = 2024;
  /// Fixed excited vertex; drawn per episode when unset.
  std::optional<std::size_t> target_vertex;
};

struct SolverSection {
  double fs = 100.0;
  double duration = 50.0;
  double beta = 0.25;
  double gamma = 0.5;

  /// steps = round(duration * fs).
  SolverConfig solver() const;
};

struct ModelSection {
  ModelKind kind = ModelKind::homogeneous;
  InputAlignment alignment = InputAlignment::aligned;
  std::vector<std::size_t> hidden{16, 64};
  std::size_t gat_width = 8;
};

struct TransferSection {
  std::vector<std::size_t> targets{5, 12, 20, 30};
  std::vector<int> cases{0, 1, 2, 3};
  std::size_t episodes_per_kind = 1;
  std::uint64_t seed = 7;
};

struct ExperimentConfig {
  SystemSection system;
  ExcitationSection excitation;
  SolverSection solver;
  TrainConfig training;
  ModelSection model;
  TransferSection transfer;

  void validate() const;
  /// Replaces every seed (excitation, training, transfer).
  void apply_seed(std::uint64_t seed);
};

/// INI text with sections [system] [excitation] [solver] [training] [model]
/// [transfer]. Unknown sections or keys are config errors.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// INI text holding every field; parse_config(format_config(c)) == c.
std::string format_config(const ExperimentConfig& config);

}  // namespace gdtm
