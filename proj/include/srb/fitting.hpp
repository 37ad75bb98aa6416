#pragma once

#include <cstdint>
#include <vector>

#include "srb/disorder.hpp"

namespace srb {

/// One measured (or synthetic) forward power trace.
struct FitTarget {
  int n_atoms = 1;
  Preparation prep;
  std::vector<double> t;       ///< ns
  std::vector<double> p_f;     ///< photons/ns
  std::vector<double> weight;  ///< per point; empty means 1
};

struct FitBounds {
  double beta_lo = 1e-4;  ///< the mean must stay strictly positive
  double beta_hi = 0.1;
  double std_lo = 0.0;
  double std_hi = 0.05;
};

struct FitProblem {
  std::vector<FitTarget> targets;
  FitBounds bounds;
  void validate() const;
};

struct FitSettings {
  PhysicalParams params;  ///< gamma; n_atoms comes from each target
  TimeGrid grid;
  int n_realizations = 100;
  std::uint64_t seed = 1;  ///< fixed across evaluations (common random numbers)
  CascadeOptions cascade{32, false};
  int threads = 1;
  double start_beta = 0.02;
  double start_std = 0.01;
  int max_evals = 300;
  int max_restarts = 3;
  int start_lattice = 5;    ///< per axis; the best lattice point or the start seeds the simplex
  double tolerance = 1e-5;  ///< simplex size in bound-scaled coordinates
};

struct FitEvaluation {
  int index = 0;
  double beta_mean = 0.0;
  double beta_std = 0.0;
  double objective = 0.0;
};

struct FitResult {
  double beta_mean = 0.0;
  double beta_std = 0.0;
  double objective = 0.0;
  int evaluations = 0;
  int restarts = 0;
  bool converged = false;
  /// Best point sits on the lower coupling bound or on an upper bound, so the
  /// data do not pin the parameters. A zero disorder width is a regular
  /// answer and does not count.
  bool degenerate = false;
  std::vector<FitEvaluation> log;
};

/// Disorder-averaged forward trace at the target's times.
std::vector<double> simulate_target(const FitTarget& target, double beta_mean, double beta_std,
                                    const FitSettings& settings);

/// Weighted sum of squared residuals over all targets.
double fit_objective(const FitProblem& problem, double beta_mean, double beta_std, const FitSettings& settings);

/// Nelder-Mead over (mean, std) inside the bounds. The first simplex starts
/// from the better of the start point and a coarse lattice, then restarts
/// from the best point until a restart no longer improves. Every evaluation reuses the same
/// seed. Returns converged = false when the budget runs out.
FitResult fit_disorder_params(const FitProblem& problem, const FitSettings& settings);

}  // namespace srb
