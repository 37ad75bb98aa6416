#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "srb/fitting.hpp"

using namespace srb;

namespace {

// Small ensembles on a coarse grid keep each objective evaluation cheap.
// Fewer realizations make every rejected draw a visible step in the
// objective and the simplex stalls between steps.
FitSettings quick_settings() {
  FitSettings s;
  s.params = PhysicalParams{};
  s.grid = TimeGrid::pulse_and_decay(4.0, 0.04, 40.0, 0.2);
  s.n_realizations = 32;
  s.seed = 17;
  s.tolerance = 1e-3;
  s.max_evals = 300;
  return s;
}

FitTarget empty_target(int n_atoms, double area) {
  FitTarget t;
  t.n_atoms = n_atoms;
  t.prep.pulse.area = area;
  for (int i = 0; i <= 80; ++i) t.t.push_back(0.5 * i);
  t.p_f.assign(t.t.size(), 0.0);
  return t;
}

FitProblem synthetic_problem(double beta_mean, double beta_std, const FitSettings& settings) {
  FitProblem problem;
  for (double area : {kPi, 0.5 * kPi}) {
    auto target = empty_target(30, area);
    target.p_f = simulate_target(target, beta_mean, beta_std, settings);
    problem.targets.push_back(target);
  }
  return problem;
}

}  // namespace

TEST_CASE("objective is deterministic and vanishes at the truth") {
  const auto settings = quick_settings();
  const auto problem = synthetic_problem(0.0112, 0.0065, settings);
  const double a = fit_objective(problem, 0.02, 0.004, settings);
  const double b = fit_objective(problem, 0.02, 0.004, settings);
  CHECK(a == b);
  CHECK(a > 0.0);
  CHECK(fit_objective(problem, 0.0112, 0.0065, settings) == 0.0);
}

TEST_CASE("weights scale the residuals") {
  const auto settings = quick_settings();
  auto problem = synthetic_problem(0.0112, 0.0065, settings);
  const double plain = fit_objective(problem, 0.02, 0.004, settings);
  for (auto& t : problem.targets) t.weight.assign(t.t.size(), 3.0);
  CHECK(fit_objective(problem, 0.02, 0.004, settings) == doctest::Approx(3.0 * plain).epsilon(1e-13));
}

TEST_CASE("parameter recovery from synthetic traces") {
  const auto settings = quick_settings();
  struct Truth {
    double mean, std;
  };
  for (const auto truth : {Truth{0.0112, 0.0065}, Truth{0.03, 0.01}, Truth{0.02, 0.004}}) {
    const auto problem = synthetic_problem(truth.mean, truth.std, settings);
    const auto fit = fit_disorder_params(problem, settings);
    MESSAGE("truth (" << truth.mean << ", " << truth.std << ") -> (" << fit.beta_mean << ", " << fit.beta_std << ") after "
                      << fit.evaluations << " evaluations");
    CHECK(fit.converged);
    CHECK_FALSE(fit.degenerate);
    CHECK(std::abs(fit.beta_mean - truth.mean) < 0.05 * truth.mean);
    CHECK(std::abs(fit.beta_std - truth.std) < 0.05 * truth.std);
  }
}

TEST_CASE("zero disorder is recovered") {
  const auto settings = quick_settings();
  const auto problem = synthetic_problem(0.05, 0.0, settings);
  const auto fit = fit_disorder_params(problem, settings);
  CHECK(fit.converged);
  CHECK(fit.beta_std < 0.001);
  CHECK(std::abs(fit.beta_mean - 0.05) < 0.05 * 0.05);
  CHECK_FALSE(fit.degenerate);
}

TEST_CASE("a dark target is flagged degenerate") {
  auto settings = quick_settings();
  FitProblem problem;
  // with a driven pulse a 2 pi area per atom (mean near 4x nominal) is also
  // dark, so only the ideal preparation pushes the optimum to the bound
  auto dark = empty_target(30, kPi);
  dark.prep.mode = Preparation::Mode::ideal_instantaneous;
  problem.targets.push_back(dark);
  const auto fit = fit_disorder_params(problem, settings);
  CHECK(fit.degenerate);
  CHECK(fit.beta_mean < settings.start_beta);
}

TEST_CASE("simplex trajectory is reproducible") {
  auto settings = quick_settings();
  settings.max_evals = 40;
  const auto problem = synthetic_problem(0.03, 0.01, settings);
  const auto a = fit_disorder_params(problem, settings);
  const auto b = fit_disorder_params(problem, settings);
  REQUIRE(a.log.size() == b.log.size());
  for (std::size_t i = 0; i < a.log.size(); ++i) {
    CHECK(a.log[i].beta_mean == b.log[i].beta_mean);
    CHECK(a.log[i].beta_std == b.log[i].beta_std);
    CHECK(a.log[i].objective == b.log[i].objective);
  }
  // a 40-evaluation budget is too small to converge
  CHECK_FALSE(a.converged);
  CHECK(a.evaluations == 40);
}

TEST_CASE("fit inputs are validated") {
  const auto settings = quick_settings();
  FitProblem problem;
  CHECK_THROWS_AS(fit_disorder_params(problem, settings), ConfigError);
  problem.targets.push_back(empty_target(10, kPi));
  problem.bounds.beta_lo = 0.0;
  CHECK_THROWS_AS(fit_disorder_params(problem, settings), ConfigError);
  problem.bounds = FitBounds{};
  problem.targets[0].weight = {1.0};
  CHECK_THROWS_AS(fit_disorder_params(problem, settings), ConfigError);
  problem.targets[0].weight.clear();
  auto outside = settings;
  outside.start_beta = 0.5;
  CHECK_THROWS_AS(fit_disorder_params(problem, outside), ConfigError);
}
