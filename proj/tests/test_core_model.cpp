#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>

#include "srb/bloch.hpp"

using namespace srb;

namespace {

const PhysicalParams kParams{kDefaultGamma, 0.0112, 1};

double rel_diff(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

// Closed-form damped Rabi evolution under a constant real drive a.
// State (Re s, Im s, p_e) obeys x' = M x + b, so x(T) = x* + e^{MT}(x0 - x*).
Eigen::Vector3d damped_rabi(double a, double g, double gamma, double duration) {
  Eigen::Matrix3d m;
  m << -0.5 * gamma, 0.0, 0.0,  //
      0.0, -0.5 * gamma, 2.0 * g * a,  //
      0.0, -2.0 * g * a, -gamma;
  const Eigen::Vector3d b(0.0, -g * a, 0.0);
  const Eigen::Vector3d fixed = -m.partialPivLu().solve(b);
  const Eigen::Matrix3d prop = (m * duration).exp();
  return fixed + prop * (Eigen::Vector3d::Zero() - fixed);
}

}  // namespace

TEST_CASE("ideal_state matches the rotated ground state") {
  const auto g = ideal_state(0.0);
  CHECK(g.p_e == 0.0);
  CHECK(std::abs(g.s) == 0.0);

  const auto e = ideal_state(kPi);
  CHECK(e.p_e == 1.0);
  CHECK(std::abs(e.s) == 0.0);

  const auto h = ideal_state(0.5 * kPi);
  CHECK(h.p_e == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(h.s.real() == 0.0);
  CHECK(h.s.imag() == doctest::Approx(-0.5).epsilon(1e-15));

  for (double a : {0.3, 1.1, 2.0, 4.0}) {
    const auto st = ideal_state(a);
    CHECK(std::norm(st.s) == doctest::Approx(st.p_e * (1.0 - st.p_e)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(ideal_state(std::nan("")), std::invalid_argument);
}

TEST_CASE("make_pulse amplitude from the area relation") {
  const auto grid = TimeGrid::pulse_and_decay(4.0, 0.02, 10.0, 0.1);
  PulseSpec spec;
  const auto drive = make_pulse(spec, kParams, grid);

  // hand computation: |alpha| = pi / (2 sqrt(0.0112 * 0.032797) * 4)
  const double coupling = std::sqrt(0.0112 * 0.032797);  // 0.0191658...
  const double amplitude = kPi / (2.0 * coupling * 4.0);
  CHECK(amplitude * amplitude == doctest::Approx(419.824).epsilon(1e-5));
  CHECK(amplitude * amplitude == doctest::Approx(419.7).epsilon(1e-3));

  const auto times = grid.fine_times();
  double peak = 0.0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    const double flux = std::norm(drive.alpha[i]);
    peak = std::max(peak, flux);
    if (times[i] > 0.0) CHECK(flux == 0.0);
  }
  CHECK(peak == doctest::Approx(amplitude * amplitude).epsilon(1e-12));

  spec.area = 0.0;
  const auto none = make_pulse(spec, kParams, grid);
  CHECK(std::all_of(none.alpha.begin(), none.alpha.end(), [](cplx a) { return a == cplx(0.0, 0.0); }));

  spec.area = 2.0 * kPi;
  const auto doubled = make_pulse(spec, kParams, grid);
  const std::size_t mid = grid.node_to_fine(grid.nearest_node(-2.0));
  CHECK(std::abs(doubled.alpha[mid]) == doctest::Approx(2.0 * amplitude).epsilon(1e-12));
}

TEST_CASE("smoothed pulse keeps its area") {
  const auto grid = TimeGrid::pulse_and_decay(4.0, 0.001, 1.0, 0.1);
  PulseSpec spec;
  spec.shape = PulseShape::smoothed_edge;
  spec.ramp = 0.5;
  const auto drive = make_pulse(spec, kParams, grid);
  const auto times = grid.fine_times();
  double area = 0.0;
  for (std::size_t i = 1; i < times.size(); ++i)
    area += 0.5 * (times[i] - times[i - 1]) * (std::abs(drive.alpha[i]) + std::abs(drive.alpha[i - 1]));
  CHECK(2.0 * std::sqrt(kParams.beta_nominal * kParams.gamma) * area == doctest::Approx(kPi).epsilon(1e-6));
}

TEST_CASE("pulse and parameter validation") {
  const auto grid = TimeGrid::pulse_and_decay(4.0, 0.02, 10.0, 0.1);
  PulseSpec spec;
  spec.duration = 0.0;
  CHECK_THROWS_AS(make_pulse(spec, kParams, grid), ConfigError);
  spec.duration = 6.0;
  CHECK_THROWS_AS(make_pulse(spec, kParams, grid), ConfigError);
  spec = PulseSpec{};
  spec.area = -1.0;
  CHECK_THROWS_AS(make_pulse(spec, kParams, grid), ConfigError);
  PhysicalParams bad = kParams;
  bad.gamma = 0.0;
  CHECK_THROWS_AS(make_pulse(PulseSpec{}, bad, grid), ConfigError);
}

TEST_CASE("undriven decay") {
  const auto grid = TimeGrid::uniform(0.0, 60.0, 0.1);
  const double beta = 0.0112, gamma = kParams.gamma;
  const auto sol = solve_bloch(CoherentDrive::zero(grid), beta, kParams, AtomState{{0.0, 0.0}, 1.0});
  const auto times = grid.fine_times();
  for (std::size_t i = 0; i < grid.num_nodes(); ++i) {
    const double t = grid.nodes()[i];
    CHECK(rel_diff(sol.traj.p_e[i], std::exp(-gamma * t)) < 1e-9);
    CHECK(sol.traj.s[i] == cplx(0.0, 0.0));
  }
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(sol.out_coherent[i] == cplx(0.0, 0.0));
    CHECK(rel_diff(sol.out_incoherent[i], beta * gamma * std::exp(-gamma * times[i])) < 1e-9);
  }

  const auto ground = solve_bloch(CoherentDrive::zero(grid), beta, kParams, AtomState{});
  CHECK(std::all_of(ground.traj.p_e.begin(), ground.traj.p_e.end(), [](double p) { return p == 0.0; }));
  CHECK(std::all_of(ground.out_incoherent.begin(), ground.out_incoherent.end(), [](double f) { return f == 0.0; }));
  CHECK(std::all_of(ground.out_coherent.begin(), ground.out_coherent.end(), [](cplx a) { return a == cplx(0.0, 0.0); }));
}

TEST_CASE("rectangular pi pulse against the damped Rabi solution") {
  const auto grid = TimeGrid::pulse_and_decay(4.0, 0.02, 10.0, 0.1);
  const double beta = 0.0112;
  const auto drive = make_pulse(PulseSpec{}, kParams, grid);
  const auto sol = solve_bloch(drive, beta, kParams, AtomState{});
  const std::size_t zero = grid.first_node_at_or_after(0.0);

  const double g = std::sqrt(beta * kParams.gamma);
  const double a = drive.alpha[grid.node_to_fine(grid.nearest_node(-2.0))].real();
  const auto exact = damped_rabi(a, g, kParams.gamma, 4.0);
  CHECK(std::abs(sol.traj.p_e[zero] - exact(2)) < 1e-8);
  CHECK(std::abs(sol.traj.s[zero].real() - exact(0)) < 1e-8);
  CHECK(std::abs(sol.traj.s[zero].imag() - exact(1)) < 1e-8);
  CHECK(sol.traj.p_e[zero] > 0.95);
  CHECK(sol.traj.p_e[zero] < 1.0);
}

TEST_CASE("weak pulse reproduces the ideal state sign convention") {
  // A short strong pulse approaches the instantaneous rotation.
  const auto grid = TimeGrid::pulse_and_decay(0.1, 0.0005, 1.0, 0.1);
  PulseSpec spec;
  spec.area = 0.5 * kPi;
  spec.duration = 0.1;
  const auto sol = solve_bloch(make_pulse(spec, kParams, grid), kParams.beta_nominal, kParams, AtomState{});
  const std::size_t zero = grid.first_node_at_or_after(0.0);
  const auto ideal = ideal_state(spec.area);
  CHECK(std::abs(sol.traj.s[zero] - ideal.s) < 2e-3);
  CHECK(std::abs(sol.traj.p_e[zero] - ideal.p_e) < 2e-3);
}

TEST_CASE("Bloch ball, nonnegative flux and pointwise energy balance") {
  const auto grid = TimeGrid::pulse_and_decay(4.0, 0.02, 40.0, 0.1);
  for (double area : {0.5 * kPi, kPi, 1.37 * kPi, 2.3 * kPi}) {
    for (double beta : {0.0112, 0.3, 1.0}) {
      PulseSpec spec;
      spec.area = area;
      const auto drive = make_pulse(spec, kParams, grid);
      const auto sol = solve_bloch(drive, beta, kParams, AtomState{});
      const auto& tr = sol.traj;
      for (std::size_t i = 0; i < grid.num_nodes(); ++i) {
        CHECK(std::norm(tr.s[i]) <= tr.p_e[i] * (1.0 - tr.p_e[i]) + 1e-9);
        const std::size_t f = grid.node_to_fine(i);
        CHECK(sol.out_incoherent[f] >= -1e-12);
        const double p_in = std::norm(drive.alpha[f]);
        const double p_out = std::norm(sol.out_coherent[f]) + sol.out_incoherent[f];
        const double residual = p_in - p_out - tr.dp_dt[i] - (1.0 - beta) * kParams.gamma * tr.p_e[i];
        CHECK(std::abs(residual) < 1e-6 * std::max(p_in, kParams.gamma));
      }
    }
  }
}

TEST_CASE("global drive phase rotates the dipole") {
  const auto grid = TimeGrid::pulse_and_decay(4.0, 0.02, 30.0, 0.1);
  PulseSpec spec;
  spec.area = 0.8 * kPi;
  const auto drive = make_pulse(spec, kParams, grid);
  const auto base = solve_bloch(drive, 0.0112, kParams, AtomState{});

  auto rotated_run = [&](cplx phase) {
    CoherentDrive d = drive;
    for (auto& a : d.alpha) a *= phase;
    return solve_bloch(d, 0.0112, kParams, AtomState{});
  };

  // multiplication by -1 and by i is exact in floating point
  const auto flip = rotated_run(cplx(-1.0, 0.0));
  const auto quarter = rotated_run(cplx(0.0, 1.0));
  for (std::size_t i = 0; i < grid.num_nodes(); ++i) {
    CHECK(flip.traj.p_e[i] == base.traj.p_e[i]);
    CHECK(flip.traj.s[i] == -base.traj.s[i]);
    CHECK(quarter.traj.p_e[i] == base.traj.p_e[i]);
    CHECK(quarter.traj.s[i] == cplx(0.0, 1.0) * base.traj.s[i]);
  }

  const cplx phase = std::polar(1.0, 0.7);
  const auto general = rotated_run(phase);
  for (std::size_t i = 0; i < grid.num_nodes(); ++i) {
    CHECK(std::abs(general.traj.p_e[i] - base.traj.p_e[i]) < 1e-12);
    CHECK(std::abs(general.traj.s[i] - phase * base.traj.s[i]) < 1e-12);
  }
}

TEST_CASE("halving the step changes trajectories by less than 1e-6") {
  const auto grid = TimeGrid::pulse_and_decay(4.0, 0.02, 60.0, 0.1);
  const auto fine = grid.refined();
  for (double area : {kPi, 1.6 * kPi}) {
    PulseSpec spec;
    spec.area = area;
    const auto coarse_sol = solve_bloch(make_pulse(spec, kParams, grid), 0.0112, kParams, AtomState{});
    const auto fine_sol = solve_bloch(make_pulse(spec, kParams, fine), 0.0112, kParams, AtomState{});
    double scale = 0.0;
    for (double p : coarse_sol.traj.p_e) scale = std::max(scale, p);
    for (std::size_t i = 0; i < grid.num_nodes(); ++i) {
      const std::size_t j = fine.nearest_node(grid.nodes()[i]);
      REQUIRE(std::abs(fine.nodes()[j] - grid.nodes()[i]) < 1e-9);
      CHECK(std::abs(coarse_sol.traj.p_e[i] - fine_sol.traj.p_e[j]) < 1e-6 * scale);
      CHECK(std::abs(coarse_sol.traj.s[i] - fine_sol.traj.s[j]) < 1e-6 * scale);
    }
  }
}

TEST_CASE("solve_bloch rejects bad inputs") {
  const auto grid = TimeGrid::uniform(0.0, 5.0, 0.1);
  CHECK_THROWS(solve_bloch(CoherentDrive::zero(grid), 1.5, kParams, AtomState{}));
  CHECK_THROWS(solve_bloch(CoherentDrive::zero(grid), -0.1, kParams, AtomState{}));
  auto drive = CoherentDrive::zero(grid);
  drive.alpha[3] = cplx(std::nan(""), 0.0);
  CHECK_THROWS(solve_bloch(drive, 0.1, kParams, AtomState{}));
}
