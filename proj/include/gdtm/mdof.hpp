#pragma once

#include "gdtm/common.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gdtm {

/// Lumped spring-mass-damper chain. Springs and dampers are ordered
/// ground->0, 0->1, 1->2, ... (the ground element only when grounded).
struct MdofSystem {
  std::vector<double> masses;
  std::vector<double> spring_stiffnesses;
  std::vector<double> damper_coefficients;
  bool grounded = true;

  std::size_t dof() const { return masses.size(); }
  void validate() const;

  static MdofSystem uniform_chain(std::size_t n, double mass, double stiffness, double damping,
                                  bool grounded = true);
};

struct SystemMatrices {
  Matrix mass;
  Matrix damping;
  Matrix stiffness;
};

SystemMatrices assemble_matrices(const MdofSystem& system);

enum class ExcitationKind { impulse, harmonic, random };

std::string to_string(ExcitationKind kind);
ExcitationKind parse_excitation_kind(const std::string& text);

struct ExcitationSpec {
  ExcitationKind kind = ExcitationKind::impulse;
  std::size_t target_vertex = 0;
  double amplitude = 1000.0;
  double frequency_hz = 1.0;
  std::size_t duration_steps = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Newmark parameters. Defaults are the average-acceleration member.
struct SolverConfig {
  double dt = 0.01;
  std::size_t steps = 5000;
  double beta = 0.25;
  double gamma = 0.5;

  void validate() const;
};

/// Time-aligned T x V series for one simulation run.
struct EpisodeRecord {
  double dt = 0.01;
  Matrix excitation;
  Matrix acceleration;
  Matrix velocity;
  Matrix displacement;

  std::size_t steps() const { return static_cast<std::size_t>(acceleration.rows()); }
  std::size_t vertex_count() const { return static_cast<std::size_t>(acceleration.cols()); }
  void validate() const;
};

struct InitialState {
  Vector displacement;
  Vector velocity;
};

/// T x V excitation matrix; only the target column is nonzero.
Matrix generate_excitation(const ExcitationSpec& spec, const SolverConfig& config, std::size_t vertex_count);

/// Implicit Newmark-beta integration of M a + C v + K u = F from the given
/// initial state (zero when omitted). Throws Error(solver) on a singular
/// effective matrix.
EpisodeRecord newmark_solve(const MdofSystem& system, const Matrix& excitation, const SolverConfig& config,
                            const std::optional<InitialState>& initial = std::nullopt);

struct KinematicState {
  Vector displacement;
  Vector velocity;
};

/// Newmark kinematic update from accelerations at n and n+1.
KinematicState kinematic_update(const Vector& u, const Vector& v, const Vector& a_now, const Vector& a_next,
                                double dt, double beta, double gamma);

/// Repeated kinematic_update over an acceleration series from a zero initial
/// state. Returns (velocity, displacement), each T x V.
std::pair<Matrix, Matrix> integrate_accelerations(const Matrix& acceleration, const SolverConfig& config);

/// 0.5 v'Mv + 0.5 u'Ku at every step.
Vector mechanical_energy(const SystemMatrices& matrices, const EpisodeRecord& record);

}  // namespace gdtm
