#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "srb/cascade.hpp"

namespace srb {

using DenseMatrix = Eigen::MatrixXcd;

/// Largest ensemble the exact oracle accepts (Hilbert-space dimension 2^8).
inline constexpr int kOracleMaxAtoms = 8;

/// Cascaded Lindblad generator for N two-level atoms on a unidirectional
/// waveguide. Basis index bit k set means atom k is excited; atom 0 is the
/// most upstream.
///
///   d rho/dt = -i[H(t), rho] + D[J] rho + sum_k (1 - beta_k) gamma D[sigma_k] rho
///   J        = sum_k sqrt(beta_k gamma) sigma_k
///   H(t)     = -(i/2) sum_{j<k} g_j g_k (sigma_k^+ sigma_j - sigma_j^+ sigma_k)
///              + alpha(t) J^+ + alpha(t)* J
///
/// The output field is a_out = alpha - i J.
class CascadedGenerator {
 public:
  CascadedGenerator(std::vector<double> betas, double gamma, std::optional<CoherentDrive> drive = std::nullopt);

  int n_atoms() const { return n_; }
  int dim() const { return dim_; }
  const std::vector<double>& betas() const { return betas_; }
  double gamma() const { return gamma_; }
  const std::optional<CoherentDrive>& drive() const { return drive_; }

  const DenseMatrix& jump() const { return jump_; }
  const DenseMatrix& cascade_hamiltonian() const { return h_casc_; }
  DenseMatrix sigma(int k) const;

  /// L(rho) at drive amplitude alpha.
  DenseMatrix apply(const DenseMatrix& rho, cplx alpha) const;

 private:
  int n_;
  int dim_;
  std::vector<double> betas_;
  double gamma_;
  std::optional<CoherentDrive> drive_;
  DenseMatrix jump_;
  DenseMatrix h_casc_;
  DenseMatrix decay_;  // J^+ J + sum_k free_k sigma_k^+ sigma_k
};

/// Builds the generator; throws ConfigError above `max_atoms`.
CascadedGenerator build_generator(int n_atoms, std::span<const double> betas, const PhysicalParams& params,
                                  std::optional<CoherentDrive> drive = std::nullopt,
                                  int max_atoms = kOracleMaxAtoms);

/// Product state of single-atom states; atom k sits on bit k.
DenseMatrix product_state(std::span<const AtomState> atoms);

struct OracleResult {
  TimeGrid grid;
  std::vector<double> p_f;      ///< <a_out^+ a_out>
  std::vector<cplx> alpha_out;  ///< <a_out>
  std::vector<double> p_free;
  std::vector<double> excitation;  ///< sum_k <sigma_k^+ sigma_k>
  std::vector<std::vector<double>> per_atom_pe;
  double stored_energy = 0.0;  ///< excitation at t = 0
  double max_trace_error = 0.0;
  double max_hermiticity_error = 0.0;
  double min_eigenvalue = 0.0;
  DenseMatrix final_state;
};

/// Fixed-step RK4 of the vectorised master equation. Throws NumericalError
/// when an eigenvalue drops below -1e-6.
OracleResult evolve(const CascadedGenerator& gen, const DenseMatrix& rho0, const TimeGrid& grid);

struct OracleComparison {
  OracleResult oracle;
  EnsembleResult cascade;
  double max_rel_pf_deviation = 0.0;   ///< max |dP| / P where P > 1e-3 peak
  double max_pf_deviation_over_peak = 0.0;
  double eta_oracle = 0.0;
  double eta_cascade = 0.0;
  double eta_deviation = 0.0;
  double t_delay_oracle = 0.0;
  double t_delay_cascade = 0.0;
  double max_rel_coherent_deviation = 0.0;  ///< where |alpha| > 10% of its peak
};

/// Runs oracle and cascade on identical uniform couplings and preparation.
/// Ideal preparation compares on the t >= 0 part of the grid.
OracleComparison compare_to_cascade(int n_atoms, double beta, const Preparation& prep, const TimeGrid& grid,
                                    const PhysicalParams& params, int n_phi = 32);

}  // namespace srb
