#pragma once

#include <filesystem>
#include <functional>
#include <limits>
#include <vector>

#include "srb/config.hpp"
#include "srb/observables.hpp"

namespace srb {

struct CoherenceMetrics {
  bool available = false;  ///< false when the field at t_ref vanishes
  double x_zero = std::numeric_limits<double>::quiet_NaN();  ///< X at the first node t >= 0
  double amplitude = std::numeric_limits<double>::quiet_NaN();  ///< |C|
  double amplitude_err = std::numeric_limits<double>::quiet_NaN();
  CorrelationSeries series;
};

/// X(tau) of the mean coherent amplitude and the LO-modulated cosine fit over
/// the absolute window [fit_t_begin, fit_t_end].
CoherenceMetrics coherence_metrics(const EnsembleResult& mean, const CoherenceSettings& settings);

/// One disorder-averaged simulation and its scalar observables. Peak and
/// delay refer to the averaged trace.
struct SimulationRun {
  int n_atoms = 0;
  double area_pi = 0.0;
  DisorderAverage avg;
  BurstMetrics metrics;
  ForwardFraction eta;
  double eta_absorbed = 0.0;  ///< same numerator over the absorbed energy
  CoherenceMetrics coherence;
  LedgerReport ledger;
};

SimulationRun simulate_point(const RunConfig& cfg, int n_atoms, double area_pi, int threads);

struct ScalingRow {
  int n_atoms = 0;
  double p_max = 0.0;
  double eta_f = 0.0;
};

struct ScalingAnalysis {
  bool has_threshold = false;
  ThresholdFit threshold;
  PowerLawFit below;  ///< P_max for N below the knee
  PowerLawFit above;
  double eta_plateau = std::numeric_limits<double>::quiet_NaN();  ///< mean eta_f below the knee
  PowerLawFit eta_above;
  bool below_ok = false, above_ok = false, eta_above_ok = false;
};

/// Knee from the two-segment fit of P_max, then separate power laws on each
/// side (needs three points per side, otherwise that fit is skipped).
ScalingAnalysis analyze_scaling(std::span<const ScalingRow> rows);

struct ScanN {
  std::vector<SimulationRun> runs;
  ScalingAnalysis scaling;
};

ScanN run_scan_n(const RunConfig& cfg, int threads, const std::function<void(const SimulationRun&)>& on_point = {});

struct AreaScan {
  std::vector<SimulationRun> runs;
  std::vector<std::vector<double>> normalized;  ///< each trace over its own P_max, nodes t >= 0
  std::size_t argmax_delay = 0;
  std::size_t argmin_coherence = 0;  ///< meaningful when coherence is available
  bool coherence_available = false;
  double asymmetry = std::numeric_limits<double>::quiet_NaN();
};

/// Mean over k of rms(T[c-k] - T[c+k]) / mean(rms T[c-k], rms T[c+k]) for
/// normalized traces around index c. NaN without a pair on both sides.
double area_asymmetry(const std::vector<std::vector<double>>& normalized, std::size_t center);

AreaScan run_scan_area(const RunConfig& cfg, int threads, const std::function<void(const SimulationRun&)>& on_point = {});

// CLI commands: each writes trace.csv, summary.json and command-specific
// files into cfg.out_dir, which must already exist.
void command_simulate(const RunConfig& cfg, int threads);
void command_scan_n(const RunConfig& cfg, int threads);
void command_scan_area(const RunConfig& cfg, int threads);
/// Throws ConvergenceError after writing its outputs when the fit stalls.
void command_fit_disorder(const RunConfig& cfg, int threads);
void command_oracle_compare(const RunConfig& cfg, int threads);
void command_heterodyne(const RunConfig& cfg, int threads);

}  // namespace srb
