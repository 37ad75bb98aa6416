#pragma once

#include <span>
#include <vector>

#include "srb/bloch.hpp"

namespace srb {

/// Guided field between two atoms: coherent amplitude plus incoherent flux,
/// both on the grid's fine samples.
struct MixedFieldTrace {
  TimeGrid grid;
  std::vector<cplx> alpha_c;
  std::vector<double> f_inc;

  static MixedFieldTrace vacuum(const TimeGrid& grid);
  static MixedFieldTrace coherent(const CoherentDrive& drive);

  /// |alpha_c|^2 + f_inc at the grid nodes (right limits).
  std::vector<double> node_flux() const;
  std::vector<cplx> node_alpha() const;
};

struct Preparation {
  enum class Mode { driven_pulse, ideal_instantaneous };
  Mode mode = Mode::driven_pulse;
  /// Driven: the excitation pulse. Ideal: only `area` is used, every atom
  /// starts in ideal_state(area) at t = 0 and the input is vacuum.
  PulseSpec pulse;
};

struct AtomPropagation {
  MixedFieldTrace output;
  AtomTrajectory traj;  ///< phase-averaged
};

/// Propagates a mixed-coherent-state input through one atom by solving the
/// Bloch equations for every phase of the incoherent part and averaging.
AtomPropagation propagate_atom(const MixedFieldTrace& input, double beta, const PhysicalParams& params,
                               const AtomState& init, int n_phi);

/// Node-sampled result of one cascade run.
struct EnsembleResult {
  TimeGrid grid;
  std::vector<double> p_f;         ///< total flux after the last atom
  std::vector<cplx> alpha_f;       ///< coherent amplitude after the last atom
  std::vector<double> p_in;        ///< flux entering the first atom
  std::vector<double> p_free;      ///< sum_k (1 - beta_k) gamma p_e,k
  std::vector<double> excitation;  ///< sum_k p_e,k
  std::vector<double> excitation_rate;  ///< sum_k dp_e,k/dt
  std::vector<std::vector<double>> per_atom_pe;  ///< empty unless requested
  double stored_energy = 0.0;      ///< sum_k p_e,k(t = 0), photons
  std::size_t zero_node = 0;       ///< node index of t = 0
};

struct CascadeOptions {
  int n_phi = 32;
  bool keep_per_atom = true;
};

EnsembleResult propagate_ensemble(const PhysicalParams& params, std::span<const double> betas,
                                  const Preparation& prep, const TimeGrid& grid, const CascadeOptions& opts = {});

struct LedgerReport {
  std::vector<double> residual;  ///< P_in - P_f - P_free - d/dt sum p_e at each node
  double max_abs_residual = 0.0;
  /// int_{t>0} (P_f + P_free) dt + sum_k p_e,k(t_end) - E_st
  double integrated_residual = 0.0;
  double emitted_forward = 0.0;
  double emitted_free = 0.0;
  double remaining = 0.0;
};

LedgerReport energy_ledger(const EnsembleResult& result, const PhysicalParams& params);

}  // namespace srb
