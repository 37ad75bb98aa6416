#pragma once

#include <span>
#include <utility>
#include <vector>

#include "srb/cascade.hpp"

namespace srb {

struct BurstMetrics {
  double p_max = 0.0;    ///< photons/ns
  double t_delay = 0.0;  ///< ns
  double eta_f = 0.0;
};

struct PeakDelay {
  double p_max = 0.0;
  double t_delay = 0.0;
  std::size_t node = 0;
};

/// Maximum of a node-sampled trace over t >= 0; ties go to the earliest time.
PeakDelay peak_and_delay(std::span<const double> trace, const TimeGrid& grid);

struct ForwardFraction {
  double eta_f = 0.0;
  bool tail_ok = true;  ///< P_f(t_end) < 1e-3 p_max
};

/// [int_0^t_end P_f dt + P_f(t_end)/gamma] / e_stored.
ForwardFraction forward_fraction(std::span<const double> trace, const TimeGrid& grid, double e_stored, double gamma);

/// Energy taken out of the guided mode while the pulse is on:
/// int_{t<0} (P_in - P_f) dt. Alternative normalisation for eta_f.
double absorbed_energy(const EnsembleResult& result);

struct PowerLawFit {
  double exponent = 0.0;
  double exponent_err = 0.0;
  double prefactor = 0.0;
  double range_lo = 0.0;
  double range_hi = 0.0;
  int n_points = 0;
};

using ScalingPoint = std::pair<double, double>;  // (N, y)

/// Least-squares line through (ln N, ln y) for points with N in [lo, hi].
PowerLawFit fit_power_law(std::span<const ScalingPoint> points, double lo, double hi);

struct ThresholdFit {
  double n_threshold = 0.0;
  double slope_below = 0.0;
  double slope_above = 0.0;
  double rss = 0.0;
  bool degenerate = false;
};

/// Continuous two-segment power law; the breakpoint minimises the squared
/// log residual and each side keeps at least three points.
ThresholdFit detect_threshold(std::span<const ScalingPoint> points);

struct CorrelationSeries {
  std::vector<double> tau;
  std::vector<double> x;
};

/// X(tau) = Re[alpha(t_ref)* alpha(t_ref + tau)] / sqrt(P(t_ref) P(t_ref + tau))
/// on the nodes at or after t_ref. Zero where P vanishes.
CorrelationSeries cross_correlation(std::span<const cplx> alpha, std::span<const double> power, const TimeGrid& grid,
                                    double t_ref);

/// Value of X at the first node at or after t (t = 0 gives X(0+)).
double correlation_at(const CorrelationSeries& series, double t_ref, double t);

struct CosineFit {
  double amplitude = 0.0;
  double amplitude_err = 0.0;
};

/// Least-squares C in y(tau) ~ C cos(omega tau).
CosineFit fit_cosine_amplitude(std::span<const double> tau, std::span<const double> y, double omega);

/// Centered moving average with an odd window; window <= 1 returns the input.
std::vector<double> moving_average(std::span<const double> series, int window);

}  // namespace srb
