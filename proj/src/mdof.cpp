#include "gdtm/mdof.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace gdtm {

void MdofSystem::validate() const {
  require(!masses.empty(), ErrorCode::invalid_size, "system has no masses");
  const std::size_t springs = grounded ? masses.size() : masses.size() - 1;
  require(spring_stiffnesses.size() == springs, ErrorCode::shape, "spring count does not match chain layout");
  require(damper_coefficients.size() == springs, ErrorCode::shape, "damper count does not match chain layout");
  for (double m : masses) require(std::isfinite(m) && m > 0.0, ErrorCode::invalid_parameter, "masses must be positive");
  bool any_stiff = false;
  for (double k : spring_stiffnesses) {
    require(std::isfinite(k) && k >= 0.0, ErrorCode::invalid_parameter, "stiffness must be non-negative");
    any_stiff = any_stiff || k > 0.0;
  }
  require(any_stiff || springs == 0, ErrorCode::invalid_parameter, "at least one spring must be stiff");
  for (double c : damper_coefficients) {
    require(std::isfinite(c) && c >= 0.0, ErrorCode::invalid_parameter, "damping must be non-negative");
  }
}

MdofSystem MdofSystem::uniform_chain(std::size_t n, double mass, double stiffness, double damping, bool grounded) {
  require(n >= 1, ErrorCode::invalid_size, "chain needs at least one mass");
  const std::size_t springs = grounded ? n : n - 1;
  MdofSystem s{std::vector<double>(n, mass), std::vector<double>(springs, stiffness),
               std::vector<double>(springs, damping), grounded};
  s.validate();
  return s;
}

SystemMatrices assemble_matrices(const MdofSystem& system) {
  system.validate();
  const auto n = static_cast<Eigen::Index>(system.dof());
  SystemMatrices out{Matrix::Zero(n, n), Matrix::Zero(n, n), Matrix::Zero(n, n)};
  for (Eigen::Index i = 0; i < n; ++i) out.mass(i, i) = system.masses[i];

  auto assemble = [&](Matrix& m, const std::vector<double>& coeffs) {
    std::size_t s = 0;
    if (system.grounded) m(0, 0) += coeffs[s++];
    for (Eigen::Index i = 0; i + 1 < n; ++i, ++s) {
      m(i, i) += coeffs[s];
      m(i + 1, i + 1) += coeffs[s];
      m(i, i + 1) -= coeffs[s];
      m(i + 1, i) -= coeffs[s];
    }
  };
  assemble(out.stiffness, system.spring_stiffnesses);
  assemble(out.damping, system.damper_coefficients);
  return out;
}

std::string to_string(ExcitationKind kind) {
  switch (kind) {
    case ExcitationKind::impulse: return "impulse";
    case ExcitationKind::harmonic: return "harmonic";
    case ExcitationKind::random: return "random";
  }
  return "unknown";
}

ExcitationKind parse_excitation_kind(const std::string& text) {
  if (text == "impulse") return ExcitationKind::impulse;
  if (text == "harmonic") return ExcitationKind::harmonic;
  if (text == "random") return ExcitationKind::random;
  fail(ErrorCode::config, "unknown excitation kind '" + text + "'");
}

void ExcitationSpec::validate() const {
  require(std::isfinite(amplitude), ErrorCode::invalid_parameter, "excitation amplitude must be finite");
  if (kind == ExcitationKind::harmonic) {
    require(std::isfinite(frequency_hz) && frequency_hz > 0.0, ErrorCode::invalid_parameter,
            "harmonic frequency must be positive");
  }
  if (kind == ExcitationKind::impulse) {
    require(duration_steps >= 1, ErrorCode::invalid_parameter, "impulse duration must be at least one step");
  }
}

void SolverConfig::validate() const {
  require(std::isfinite(dt) && dt > 0.0, ErrorCode::invalid_parameter, "dt must be positive");
  require(gamma >= 0.5, ErrorCode::invalid_parameter, "gamma must be >= 0.5");
  require(beta >= 0.25, ErrorCode::invalid_parameter, "beta must be >= 0.25");
}

void EpisodeRecord::validate() const {
  const auto t = acceleration.rows();
  const auto v = acceleration.cols();
  for (const Matrix* m : {&excitation, &velocity, &displacement}) {
    require(m->rows() == t && m->cols() == v, ErrorCode::shape, "episode series must share shape T x V");
  }
  for (const Matrix* m : {&excitation, &acceleration, &velocity, &displacement}) {
    require(m->allFinite(), ErrorCode::numerical, "episode contains non-finite values");
  }
}

Matrix generate_excitation(const ExcitationSpec& spec, const SolverConfig& config, std::size_t vertex_count) {
  spec.validate();
  require(spec.target_vertex < vertex_count, ErrorCode::index, "excitation target vertex out of range");
  const auto steps = static_cast<Eigen::Index>(config.steps);
  Matrix f = Matrix::Zero(steps, static_cast<Eigen::Index>(vertex_count));
  const auto col = static_cast<Eigen::Index>(spec.target_vertex);
  switch (spec.kind) {
    case ExcitationKind::impulse:
      for (Eigen::Index n = 0; n < std::min<Eigen::Index>(steps, spec.duration_steps); ++n) f(n, col) = spec.amplitude;
      break;
    case ExcitationKind::harmonic:
      for (Eigen::Index n = 0; n < steps; ++n) {
        f(n, col) = spec.amplitude * std::sin(2.0 * std::numbers::pi * spec.frequency_hz * static_cast<double>(n) * config.dt);
      }
      break;
    case ExcitationKind::random: {
      std::mt19937_64 rng(spec.seed);
      std::normal_distribution<double> noise(0.0, std::abs(spec.amplitude));
      for (Eigen::Index n = 0; n < steps; ++n) f(n, col) = noise(rng);
      break;
    }
  }
  return f;
}

EpisodeRecord newmark_solve(const MdofSystem& system, const Matrix& excitation, const SolverConfig& config,
                            const std::optional<InitialState>& initial) {
  config.validate();
  const auto mats = assemble_matrices(system);
  const auto n = static_cast<Eigen::Index>(system.dof());
  require(excitation.cols() == n, ErrorCode::shape, "excitation width does not match system size");
  require(excitation.rows() >= 1, ErrorCode::invalid_size, "excitation needs at least one step");
  const auto steps = excitation.rows();
  const double dt = config.dt;
  const double beta = config.beta;
  const double gamma = config.gamma;

  EpisodeRecord rec;
  rec.dt = dt;
  rec.excitation = excitation;
  rec.acceleration = Matrix::Zero(steps, n);
  rec.velocity = Matrix::Zero(steps, n);
  rec.displacement = Matrix::Zero(steps, n);

  Vector u = Vector::Zero(n);
  Vector v = Vector::Zero(n);
  if (initial) {
    require(initial->displacement.size() == n && initial->velocity.size() == n, ErrorCode::shape,
            "initial state size does not match system");
    u = initial->displacement;
    v = initial->velocity;
  }

  const Vector inv_mass = mats.mass.diagonal().cwiseInverse();
  Vector a = inv_mass.cwiseProduct(excitation.row(0).transpose() - mats.damping * v - mats.stiffness * u);

  const Matrix effective = mats.mass + gamma * dt * mats.damping + beta * dt * dt * mats.stiffness;
  const Eigen::LDLT<Matrix> solver(effective);
  require(solver.info() == Eigen::Success && solver.isPositive(), ErrorCode::solver,
          "effective Newmark matrix is singular");

  rec.displacement.row(0) = u.transpose();
  rec.velocity.row(0) = v.transpose();
  rec.acceleration.row(0) = a.transpose();
  for (Eigen::Index s = 0; s + 1 < steps; ++s) {
    const Vector u_pred = u + dt * v + dt * dt * (0.5 - beta) * a;
    const Vector v_pred = v + dt * (1.0 - gamma) * a;
    const Vector rhs = excitation.row(s + 1).transpose() - mats.damping * v_pred - mats.stiffness * u_pred;
    const Vector a_next = solver.solve(rhs);
    auto next = kinematic_update(u, v, a, a_next, dt, beta, gamma);
    u = std::move(next.displacement);
    v = std::move(next.velocity);
    a = a_next;
    rec.displacement.row(s + 1) = u.transpose();
    rec.velocity.row(s + 1) = v.transpose();
    rec.acceleration.row(s + 1) = a.transpose();
  }
  require(rec.acceleration.allFinite(), ErrorCode::numerical, "Newmark integration produced non-finite values");
  return rec;
}

KinematicState kinematic_update(const Vector& u, const Vector& v, const Vector& a_now, const Vector& a_next,
                                double dt, double beta, double gamma) {
  require(u.size() == v.size() && u.size() == a_now.size() && u.size() == a_next.size(), ErrorCode::shape,
          "kinematic update vectors differ in length");
  KinematicState out;
  out.displacement = u + dt * v + 0.5 * dt * dt * ((1.0 - 2.0 * beta) * a_now + 2.0 * beta * a_next);
  out.velocity = v + dt * ((1.0 - gamma) * a_now + gamma * a_next);
  return out;
}

std::pair<Matrix, Matrix> integrate_accelerations(const Matrix& acceleration, const SolverConfig& config) {
  const auto steps = acceleration.rows();
  const auto n = acceleration.cols();
  Matrix vel = Matrix::Zero(steps, n);
  Matrix disp = Matrix::Zero(steps, n);
  Vector u = Vector::Zero(n);
  Vector v = Vector::Zero(n);
  for (Eigen::Index s = 0; s + 1 < steps; ++s) {
    auto next = kinematic_update(u, v, acceleration.row(s).transpose(), acceleration.row(s + 1).transpose(), config.dt,
                                 config.beta, config.gamma);
    u = std::move(next.displacement);
    v = std::move(next.velocity);
    disp.row(s + 1) = u.transpose();
    vel.row(s + 1) = v.transpose();
  }
  return {vel, disp};
}

Vector mechanical_energy(const SystemMatrices& matrices, const EpisodeRecord& record) {
  const auto steps = record.acceleration.rows();
  Vector e(steps);
  for (Eigen::Index s = 0; s < steps; ++s) {
    const Vector v = record.velocity.row(s).transpose();
    const Vector u = record.displacement.row(s).transpose();
    e(s) = 0.5 * v.dot(matrices.mass * v) + 0.5 * u.dot(matrices.stiffness * u);
  }
  return e;
}

}  // namespace gdtm
