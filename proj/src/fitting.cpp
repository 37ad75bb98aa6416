#include "srb/fitting.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <memory>

namespace srb {

void FitProblem::validate() const {
  if (targets.empty()) throw ConfigError("fit: need at least one target trace");
  if (!(bounds.beta_lo > 0.0 && bounds.beta_lo < bounds.beta_hi && bounds.beta_hi < 1.0))
    throw ConfigError("fit: coupling bounds must satisfy 0 < lo < hi < 1");
  if (!(bounds.std_lo >= 0.0 && bounds.std_lo <= bounds.std_hi)) throw ConfigError("fit: invalid width bounds");
  for (const auto& t : targets) {
    if (t.n_atoms < 1) throw ConfigError("fit: target n_atoms must be >= 1");
    if (t.t.empty() || t.t.size() != t.p_f.size()) throw ConfigError("fit: target needs matching t and p_f columns");
    if (!t.weight.empty() && t.weight.size() != t.t.size()) throw ConfigError("fit: weight column size mismatch");
  }
}

std::vector<double> simulate_target(const FitTarget& target, double beta_mean, double beta_std,
                                    const FitSettings& settings) {
  PhysicalParams p = settings.params;
  p.n_atoms = target.n_atoms;
  DisorderPlan plan;
  plan.dist = {beta_mean, beta_std};
  plan.n_realizations = settings.n_realizations;
  plan.seed = settings.seed;
  RunOptions opts;
  opts.cascade = settings.cascade;
  opts.threads = settings.threads;
  const auto avg = average_realizations(p, plan, target.prep, settings.grid, opts);
  std::vector<double> out(target.t.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = interpolate_nodes(settings.grid, avg.mean.p_f, target.t[i]);
  return out;
}

double fit_objective(const FitProblem& problem, double beta_mean, double beta_std, const FitSettings& settings) {
  double sum = 0.0;
  for (const auto& target : problem.targets) {
    const auto sim = simulate_target(target, beta_mean, beta_std, settings);
    for (std::size_t i = 0; i < sim.size(); ++i) {
      const double w = target.weight.empty() ? 1.0 : target.weight[i];
      const double r = sim[i] - target.p_f[i];
      sum += w * r * r;
    }
  }
  return sum;
}

namespace {

struct SearchState {
  const FitProblem* problem;
  const FitSettings* settings;
  FitResult* result;
  double best_u[2] = {0.0, 0.0};
  bool budget_hit = false;

  double beta_of(double u) const { return problem->bounds.beta_lo + u * (problem->bounds.beta_hi - problem->bounds.beta_lo); }
  double std_of(double u) const { return problem->bounds.std_lo + u * (problem->bounds.std_hi - problem->bounds.std_lo); }

  // The simplex lives in the unit square scaled from the bounds. Points
  // outside are projected back and pay a quadratic penalty so the simplex
  // does not drift away along a flat boundary.
  double evaluate(const double* u) {
    const double cu0 = std::clamp(u[0], 0.0, 1.0);
    const double cu1 = std::clamp(u[1], 0.0, 1.0);
    const double d2 = (u[0] - cu0) * (u[0] - cu0) + (u[1] - cu1) * (u[1] - cu1);
    if (result->evaluations >= settings->max_evals) {
      budget_hit = true;
      return result->objective * (1.0 + d2) + d2;
    }
    const double b = beta_of(cu0), s = std_of(cu1);
    const double f = fit_objective(*problem, b, s, *settings);
    FitEvaluation e{result->evaluations++, b, s, f};
    result->log.push_back(e);
    if (result->log.size() == 1 || f < result->objective) {
      result->objective = f;
      result->beta_mean = b;
      result->beta_std = s;
      best_u[0] = cu0;
      best_u[1] = cu1;
    }
    return f * (1.0 + d2) + d2;
  }
};

double gsl_objective(const gsl_vector* x, void* params) {
  auto* st = static_cast<SearchState*>(params);
  const double u[2] = {gsl_vector_get(x, 0), gsl_vector_get(x, 1)};
  return st->evaluate(u);
}

struct MinimizerDeleter {
  void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};
struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};

// One simplex run from `start`; true when the size criterion was met.
bool run_simplex(SearchState& st, const double start[2], double step) {
  std::unique_ptr<gsl_vector, VectorDeleter> x(gsl_vector_alloc(2));
  std::unique_ptr<gsl_vector, VectorDeleter> ss(gsl_vector_alloc(2));
  gsl_vector_set(x.get(), 0, start[0]);
  gsl_vector_set(x.get(), 1, start[1]);
  gsl_vector_set_all(ss.get(), step);
  gsl_multimin_function fn{&gsl_objective, 2, &st};
  std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> m(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2));
  gsl_multimin_fminimizer_set(m.get(), &fn, x.get(), ss.get());
  while (!st.budget_hit) {
    if (gsl_multimin_fminimizer_iterate(m.get()) != GSL_SUCCESS) return false;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m.get()), st.settings->tolerance) == GSL_SUCCESS)
      return !st.budget_hit;
  }
  return false;
}

}  // namespace

FitResult fit_disorder_params(const FitProblem& problem, const FitSettings& settings) {
  problem.validate();
  if (settings.max_evals < 3) throw ConfigError("fit: evaluation budget must be >= 3");
  if (settings.start_lattice < 0) throw ConfigError("fit: start_lattice must be >= 0");
  const auto& bd = problem.bounds;
  if (!(settings.start_beta >= bd.beta_lo && settings.start_beta <= bd.beta_hi && settings.start_std >= bd.std_lo &&
        settings.start_std <= bd.std_hi))
    throw ConfigError("fit: start point outside the bounds");
  gsl_set_error_handler_off();

  FitResult result;
  SearchState st{&problem, &settings, &result};
  double start[2] = {(settings.start_beta - bd.beta_lo) / (bd.beta_hi - bd.beta_lo),
                     bd.std_hi > bd.std_lo ? (settings.start_std - bd.std_lo) / (bd.std_hi - bd.std_lo) : 0.0};
  // Near the lower coupling bound most draws are rejected and the objective
  // turns jagged; a coarse lattice keeps the first simplex out of that corner.
  st.evaluate(start);
  const int m = settings.start_lattice;
  for (int i = 0; i < m && !st.budget_hit; ++i)
    for (int j = 0; j < m && !st.budget_hit; ++j) {
      const double u[2] = {(i + 0.5) / m, (j + 0.5) / m};
      st.evaluate(u);
    }
  start[0] = st.best_u[0];
  start[1] = st.best_u[1];
  bool ok = !st.budget_hit && run_simplex(st, start, 0.5 / std::max(m, 1));
  double step = 0.25 / std::max(m, 1);
  while (ok && result.restarts < settings.max_restarts) {
    const double before = result.objective;
    const double from[2] = {st.best_u[0], st.best_u[1]};
    ++result.restarts;
    ok = run_simplex(st, from, step);
    step *= 0.5;
    if (!(result.objective < before - 1e-12 * (1.0 + std::abs(before)))) break;
  }
  result.converged = ok;

  constexpr double edge = 1e-3;
  result.degenerate = st.best_u[0] <= edge || st.best_u[0] >= 1.0 - edge || st.best_u[1] >= 1.0 - edge;
  return result;
}

}  // namespace srb
