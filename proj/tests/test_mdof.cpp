#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gdtm/mdof.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

using namespace gdtm;

namespace {

SolverConfig solver(std::size_t steps, double dt = 0.01) {
  SolverConfig c;
  c.steps = steps;
  c.dt = dt;
  return c;
}

/// Index of the largest naive-DFT magnitude (excluding DC).
std::size_t dft_peak(const Vector& x) {
  const auto n = static_cast<std::size_t>(x.size());
  std::size_t best = 1;
  double best_mag = -1.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    std::complex<double> s = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      s += x[Eigen::Index(t)] * std::polar(1.0, -2.0 * std::numbers::pi * double(k * t % n) / double(n));
    }
    if (std::abs(s) > best_mag) {
      best_mag = std::abs(s);
      best = k;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("assemble_matrices examples") {
  const auto one = assemble_matrices(MdofSystem::uniform_chain(1, 2000.0, 2.4e5, 0.0));
  CHECK(one.mass(0, 0) == 2000.0);
  CHECK(one.stiffness(0, 0) == 2.4e5);
  CHECK(one.damping(0, 0) == 0.0);

  const double k = 3.0;
  const auto two = assemble_matrices(MdofSystem::uniform_chain(2, 1.0, k, 0.0));
  CHECK(two.stiffness(0, 0) == 2 * k);
  CHECK(two.stiffness(0, 1) == -k);
  CHECK(two.stiffness(1, 0) == -k);
  CHECK(two.stiffness(1, 1) == k);
  CHECK(two.damping.isZero(0.0));

  MdofSystem sys;
  sys.masses = {1.0, 2.0, 3.0};
  sys.spring_stiffnesses = {10.0, 20.0, 30.0};
  sys.damper_coefficients = {1.0, 2.0, 3.0};
  const auto m = assemble_matrices(sys);
  CHECK(m.stiffness == m.stiffness.transpose());
  CHECK(m.damping == m.damping.transpose());
  CHECK(m.mass.isApprox(Matrix(Vector(Vector::LinSpaced(3, 1.0, 3.0)).asDiagonal())));
  CHECK(m.stiffness(1, 1) == 50.0);
  CHECK(m.stiffness(2, 2) == 30.0);
  CHECK(m.damping(0, 0) == 3.0);
}

TEST_CASE("system validation") {
  auto sys = MdofSystem::uniform_chain(3, 1.0, 1.0, 0.0);
  sys.masses[1] = 0.0;
  CHECK_THROWS_AS(sys.validate(), Error);
  auto springs = MdofSystem::uniform_chain(3, 1.0, 1.0, 0.0);
  springs.spring_stiffnesses.pop_back();
  CHECK_THROWS_AS(springs.validate(), Error);
  CHECK_THROWS_AS(MdofSystem::uniform_chain(3, 1.0, 0.0, 0.0), Error);
  SolverConfig bad;
  bad.beta = 0.2;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad.beta = 0.25;
  bad.gamma = 0.4;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("generate_excitation") {
  const auto cfg = solver(100);
  ExcitationSpec impulse{ExcitationKind::impulse, 2, 1000.0, 1.0, 1, 0};
  const Matrix e = generate_excitation(impulse, cfg, 4);
  CHECK(e.rows() == 100);
  CHECK(e.cols() == 4);
  CHECK((e.array() != 0.0).count() == 1);
  CHECK(e(0, 2) == 1000.0);

  ExcitationSpec harmonic{ExcitationKind::harmonic, 0, 500.0, 1.7, 1, 0};
  const Matrix h = generate_excitation(harmonic, cfg, 3);
  for (Eigen::Index n = 0; n < 100; ++n) {
    CHECK(h(n, 0) == doctest::Approx(500.0 * std::sin(2.0 * std::numbers::pi * 1.7 * double(n) * 0.01)).epsilon(1e-12));
  }
  CHECK(h.rightCols(2).isZero(0.0));

  ExcitationSpec random{ExcitationKind::random, 1, 200.0, 1.0, 1, 99};
  const auto big = solver(20000);
  const Matrix r1 = generate_excitation(random, big, 3);
  const Matrix r2 = generate_excitation(random, big, 3);
  CHECK(r1 == r2);
  const Vector c = r1.col(1);
  const double mean = c.mean();
  const double sd = std::sqrt((c.array() - mean).square().mean());
  CHECK(std::abs(mean) < 200.0 * 4.0 / std::sqrt(20000.0));
  CHECK(sd == doctest::Approx(200.0).epsilon(0.03));
  random.seed = 100;
  CHECK(generate_excitation(random, big, 3) != r1);

  ExcitationSpec out_of_range{ExcitationKind::impulse, 5, 1.0, 1.0, 1, 0};
  try {
    generate_excitation(out_of_range, cfg, 3);
    FAIL("expected index error");
  } catch (const Error& err) {
    CHECK(err.code() == ErrorCode::index);
  }
}

TEST_CASE("kinematic_update examples") {
  Vector u(1), v(1), a0(1), a1(1);
  u << 0.3;
  v << -2.0;
  a0 << 0.0;
  a1 << 0.0;
  auto s = kinematic_update(u, v, a0, a1, 0.01, 0.25, 0.5);
  CHECK(s.displacement[0] == doctest::Approx(0.3 - 0.02).epsilon(1e-15));
  CHECK(s.velocity[0] == -2.0);

  u << 0.0;
  v << 0.0;
  a1 << 1.0;
  s = kinematic_update(u, v, a0, a1, 0.01, 0.25, 0.5);
  CHECK(s.displacement[0] == doctest::Approx(2.5e-5).epsilon(1e-12));
  CHECK(s.velocity[0] == doctest::Approx(5e-3).epsilon(1e-12));

  a0 << 1.0;
  s = kinematic_update(u, v, a0, a1, 0.01, 0.0, 0.5);
  CHECK(s.displacement[0] == doctest::Approx(5e-5).epsilon(1e-12));
  CHECK(s.velocity[0] == doctest::Approx(1e-2).epsilon(1e-12));
}

TEST_CASE("integrate_accelerations") {
  const auto cfg = solver(11);
  auto [v0, u0] = integrate_accelerations(Matrix::Zero(11, 3), cfg);
  CHECK(v0.isZero(0.0));
  CHECK(u0.isZero(0.0));

  // T steps of constant acceleration span T + 1 samples.
  const std::size_t steps = 40;
  const double a = 0.7;
  auto [v, u] = integrate_accelerations(Matrix::Constant(steps + 1, 2, a), solver(steps + 1));
  CHECK(v(Eigen::Index(steps), 0) == doctest::Approx(a * double(steps) * 0.01).epsilon(1e-13));
  const double t = double(steps) * 0.01;
  CHECK(u(Eigen::Index(steps), 1) == doctest::Approx(0.5 * a * t * t).epsilon(1e-12));
}

TEST_CASE("newmark_solve basic behaviour") {
  const auto sys = MdofSystem::uniform_chain(4, 2000.0, 2.4e5, 2500.0);
  const auto zero = newmark_solve(sys, Matrix::Zero(50, 4), solver(50));
  CHECK(zero.acceleration.isZero(0.0));
  CHECK(zero.velocity.isZero(0.0));
  CHECK(zero.displacement.isZero(0.0));

  // Round trip through the kinematic update.
  ExcitationSpec spec{ExcitationKind::random, 1, 200.0, 1.0, 1, 4};
  const auto cfg = solver(2000);
  const auto rec = newmark_solve(sys, generate_excitation(spec, cfg, 4), cfg);
  auto [v, u] = integrate_accelerations(rec.acceleration, cfg);
  CHECK((v - rec.velocity).cwiseAbs().maxCoeff() <= 1e-9 * rec.velocity.cwiseAbs().maxCoeff());
  CHECK((u - rec.displacement).cwiseAbs().maxCoeff() <= 1e-9 * rec.displacement.cwiseAbs().maxCoeff());

  // Equation of motion holds at every step.
  const auto m = assemble_matrices(sys);
  for (Eigen::Index n = 0; n < 2000; n += 97) {
    const Vector lhs = m.mass * rec.acceleration.row(n).transpose() + m.damping * rec.velocity.row(n).transpose() +
                       m.stiffness * rec.displacement.row(n).transpose();
    CHECK((lhs - rec.excitation.row(n).transpose()).cwiseAbs().maxCoeff() <= 1e-8 * 200.0 * 5.0);
  }
}

TEST_CASE("SDOF natural frequency") {
  const double m = 2000.0, k = 2.4e5;
  const auto sys = MdofSystem::uniform_chain(1, m, k, 0.0);
  const auto cfg = solver(5000);
  ExcitationSpec spec{ExcitationKind::impulse, 0, 1000.0, 1.0, 1, 0};
  const auto rec = newmark_solve(sys, generate_excitation(spec, cfg, 1), cfg);
  const double expected = std::sqrt(k / m) / (2.0 * std::numbers::pi);
  const double bin = 1.0 / (5000 * 0.01);
  const double peak = double(dft_peak(rec.acceleration.col(0))) * bin;
  CHECK(expected == doctest::Approx(1.7433).epsilon(1e-4));
  CHECK(std::abs(peak - expected) <= bin);
}

TEST_CASE("static limit under constant force") {
  const double k = 2.4e5, f = 1000.0;
  const auto sys = MdofSystem::uniform_chain(1, 2000.0, k, 5000.0);
  const auto rec = newmark_solve(sys, Matrix::Constant(6000, 1, f), solver(6000));
  CHECK(rec.displacement(5999, 0) == doctest::Approx(f / k).epsilon(1e-6));
}

TEST_CASE("energy behaviour") {
  const auto cfg = solver(5000);
  InitialState init;
  init.displacement = Vector::LinSpaced(10, 0.01, -0.02);
  init.velocity = Vector::Constant(10, 0.05);

  const auto undamped = MdofSystem::uniform_chain(10, 2000.0, 2.4e5, 0.0);
  const auto e = mechanical_energy(assemble_matrices(undamped), newmark_solve(undamped, Matrix::Zero(5000, 10), cfg, init));
  CHECK((e.array() - e[0]).abs().maxCoeff() / e[0] <= 1e-3);

  const auto damped = MdofSystem::uniform_chain(10, 2000.0, 2.4e5, 2500.0);
  const auto d = mechanical_energy(assemble_matrices(damped), newmark_solve(damped, Matrix::Zero(5000, 10), cfg, init));
  bool monotone = true;
  for (Eigen::Index n = 1; n < d.size(); ++n) monotone = monotone && d[n] <= d[n - 1] * (1.0 + 1e-12);
  CHECK(monotone);
  CHECK(d[4999] < 0.5 * d[0]);
}

TEST_CASE("damped free vibration matches the analytic envelope") {
  const double m = 2000.0, k = 2.4e5, c = 2500.0;
  const double wn = std::sqrt(k / m);
  const double zeta = c / (2.0 * std::sqrt(k * m));
  const double wd = wn * std::sqrt(1.0 - zeta * zeta);
  const double u0 = 0.01;
  const double dt = 0.002;
  const double period = 2.0 * std::numbers::pi / wd;
  const auto steps = static_cast<std::size_t>(std::ceil(10.0 * period / dt)) + 1;
  InitialState init{Vector::Constant(1, u0), Vector::Zero(1)};
  const auto rec =
      newmark_solve(MdofSystem::uniform_chain(1, m, k, c), Matrix::Zero(Eigen::Index(steps), 1), solver(steps, dt), init);
  auto analytic = [&](double t) {
    return std::exp(-zeta * wn * t) * u0 * (std::cos(wd * t) + zeta * wn / wd * std::sin(wd * t));
  };
  for (int p = 0; p < 10; ++p) {
    double num = 0.0, ref = 0.0;
    for (std::size_t n = 0; n < steps; ++n) {
      const double t = double(n) * dt;
      if (t < p * period || t >= (p + 1) * period) continue;
      num = std::max(num, std::abs(rec.displacement(Eigen::Index(n), 0)));
      ref = std::max(ref, std::abs(analytic(t)));
    }
    CHECK(std::abs(num - ref) / ref <= 0.01);
  }
}

TEST_CASE("halving dt reduces error against a fine reference") {
  const auto sys = MdofSystem::uniform_chain(3, 2000.0, 2.4e5, 2500.0);
  InitialState init{(Vector(3) << 0.01, -0.005, 0.02).finished(), Vector::Zero(3)};
  const double horizon = 5.0;
  auto run = [&](double dt) {
    const auto steps = static_cast<std::size_t>(std::llround(horizon / dt)) + 1;
    return newmark_solve(sys, Matrix::Zero(Eigen::Index(steps), 3), solver(steps, dt), init).displacement;
  };
  const double dt = 0.02;
  const Matrix coarse = run(dt), half = run(dt / 2), fine = run(dt / 8);
  double e_coarse = 0.0, e_half = 0.0;
  for (Eigen::Index n = 0; n < coarse.rows(); ++n) {
    e_coarse = std::max(e_coarse, (coarse.row(n) - fine.row(8 * n)).cwiseAbs().maxCoeff());
    e_half = std::max(e_half, (half.row(2 * n) - fine.row(8 * n)).cwiseAbs().maxCoeff());
  }
  CHECK(e_half < e_coarse);
}
