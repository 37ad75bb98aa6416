#pragma once

// Internal: RK4 integration of one atom under a family of classical drives
// alpha_j(t) = alpha_c(t) + e^{i phi_j} a_inc(t), reduced over j.

#include <span>
#include <vector>

#include "srb/bloch.hpp"

namespace srb::detail {

enum class PhaseReduction {
  general,   ///< every phase solved, complex averages
  mirror,    ///< alpha_c real, init s imaginary: phi and -phi are conjugate images
  rotation,  ///< alpha_c == 0, init s == 0: every phase is a rotation of phi = 0
};

struct PhaseSet {
  std::vector<double> cos_phi;
  std::vector<double> sin_phi;
  std::vector<double> weight;  ///< sums to one
  PhaseReduction reduction = PhaseReduction::general;
};

/// Uniform phases 2 pi j / n_phi reduced according to `mode`.
PhaseSet make_phase_set(int n_phi, PhaseReduction mode);

struct KernelOutput {
  // fine samples
  std::vector<cplx> alpha_out;   ///< phase average of the output amplitude
  std::vector<double> flux_out;  ///< phase average of the total output flux
  std::vector<double> inc_out;   ///< flux_out - |alpha_out|^2, clamped at zero
  // nodes
  std::vector<cplx> s;
  std::vector<double> p_e;
  std::vector<double> dp_dt;
};

/// `inc_amp` may be empty (no incoherent component).
KernelOutput integrate_phases(const TimeGrid& grid, std::span<const cplx> alpha_c, std::span<const double> inc_amp,
                              const PhaseSet& phases, double beta, double gamma, const AtomState& init);

}  // namespace srb::detail
