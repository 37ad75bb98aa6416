#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "srb/common.hpp"

namespace srb {

struct HeterodyneConfig {
  double p_lo = 1.0e4;                    ///< local-oscillator flux, photons/ns
  double omega_lo = 2.0 * kPi * 0.230;    ///< rad/ns
  double polarization_overlap = 1.0;      ///< visibility scale in (0, 1]
  void validate() const;
};

/// Signal sampled on a uniform time axis t_i = t0 + i dt. The lag axis is
/// tau_j = j dt for j < n_lags; entries with i + j outside the axis are NaN.
struct CorrelationSurface {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<double> p;    ///< signal power P(t_i)
  std::vector<double> p_d;  ///< P_LO + P(t_i)
  Eigen::MatrixXd g2_d;     ///< rows t, columns tau
  Eigen::MatrixXd v_max;
  std::vector<std::string> warnings;

  double t(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
  double tau(std::size_t j) const { return static_cast<double>(j) * dt; }
};

/// g1(t_i, tau_j) carried by the mean coherent amplitude:
/// Re[alpha(t)* alpha(t + tau)] / sqrt(P(t) P(t + tau)), zero where P = 0.
Eigen::MatrixXd coherent_g1(std::span<const cplx> alpha, std::span<const double> power, std::size_t n_lags);

/// g2_D = 1 + V_max cos(omega_lo tau) g1 with
/// V_max = overlap * 2 P_LO sqrt(P(t) P(t+tau)) / (P_D(t) P_D(t+tau)).
/// Warns when P_LO < 100 max P.
CorrelationSurface forward_g2(double t0, double dt, std::span<const double> power, const Eigen::MatrixXd& g1,
                              const HeterodyneConfig& cfg);

inline constexpr double kVisibilityCutoff = 1e-3;

/// (g2_D - 1) / V_max; NaN where V_max < kVisibilityCutoff.
Eigen::MatrixXd extract_g1(const CorrelationSurface& surface);

struct ClickRecord {
  std::vector<double> bin_edges;      ///< ns, size n_bins + 1
  std::vector<std::uint32_t> counts;  ///< repetition-major, n_reps * n_bins
  int n_reps = 0;
  std::size_t n_bins() const { return bin_edges.empty() ? 0 : bin_edges.size() - 1; }
};

struct ClickEstimate {
  ClickRecord record;  ///< counts kept only when requested
  std::vector<double> bin_centers;
  std::vector<double> mean_counts;
  Eigen::MatrixXd g2_d;   ///< rows bin, columns lag in bins; NaN outside
  Eigen::MatrixXd g2_err;  ///< delta-method standard error
};

struct ClickOptions {
  int n_reps = 1000;
  double bin_width = 0.2;  ///< ns
  double t_begin = 0.0;
  double t_end = 0.0;
  double efficiency = 1.0;  ///< detected fraction of the beat power
  std::uint64_t seed = 1;
  int threads = 1;
  bool keep_counts = false;
};

/// Shot-noise Monte Carlo of the binned heterodyne signal. The classical
/// beat power of repetition r is
///   P_D(t) = P_LO + P(t) + 2 sqrt(overlap P_LO) Re[alpha(t) e^{-i(omega_lo t + theta_r)}]
/// with theta_r uniform. Only the coherent amplitude beats with the LO; the
/// incoherent part P - |alpha|^2 only adds to the rate. Each bin count is
/// Poisson with mean efficiency * int_bin P_D dt (trapezoid rule on the
/// signal's uniform samples). Input samples are t_i = t0 + i dt.
ClickEstimate monte_carlo_clicks(double t0, double dt, std::span<const cplx> alpha, std::span<const double> power,
                                 const HeterodyneConfig& cfg, const ClickOptions& opts);

}  // namespace srb
