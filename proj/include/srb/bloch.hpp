#pragma once

#include <vector>

#include "srb/common.hpp"
#include "srb/grid.hpp"

namespace srb {

/// Single-atom expectations: dipole s = <sigma>, excited population p_e.
struct AtomState {
  cplx s{0.0, 0.0};
  double p_e = 0.0;
};

/// Expectations of cos(A/2)|g> - i sin(A/2)|e>.
///
/// Exact zeros are returned when A is an integer multiple of pi so that a
/// nominal full inversion carries no residual dipole.
AtomState ideal_state(double area);

enum class PulseShape { rectangular, smoothed_edge };

struct PulseSpec {
  double area = kPi;      ///< radians, seen by an atom with nominal coupling
  double duration = 4.0;  ///< ns; the pulse ends at t = 0
  PulseShape shape = PulseShape::rectangular;
  double ramp = 0.5;  ///< ns, raised-cosine edge length for smoothed_edge

  void validate() const;
};

/// Classical guided-mode amplitude in sqrt(photons/ns), on the grid's fine
/// samples. Phase convention: real and positive for the laser.
struct CoherentDrive {
  TimeGrid grid;
  std::vector<cplx> alpha;

  static CoherentDrive zero(const TimeGrid& grid);
};

/// Builds the excitation pulse so that int 2 sqrt(beta_nominal gamma) |alpha| dt = area.
/// The pulse occupies [-duration, 0]; -duration must be the grid start or a
/// segment boundary so that the rectangular edges sit between segments.
CoherentDrive make_pulse(const PulseSpec& spec, const PhysicalParams& params, const TimeGrid& grid);

/// Envelope value of a unit-area-normalised pulse at time t (no grid involved).
double pulse_envelope(const PulseSpec& spec, double t);

/// Node-sampled single-atom dynamics.
struct AtomTrajectory {
  TimeGrid grid;
  std::vector<cplx> s;
  std::vector<double> p_e;
  /// dp_e/dt from the equations of motion with the right-limit drive.
  std::vector<double> dp_dt;
};

struct BlochSolution {
  AtomTrajectory traj;
  std::vector<cplx> out_coherent;      ///< fine samples, alpha - i sqrt(beta gamma) s
  std::vector<double> out_incoherent;  ///< fine samples, beta gamma (p_e - |s|^2)
};

/// Time derivative of (s, p_e) for a resonant drive alpha.
///   ds/dt  = -gamma/2 s - i g (1 - 2 p_e) alpha
///   dpe/dt = -gamma p_e - 2 g Im(alpha* s),   g = sqrt(beta gamma)
inline AtomState bloch_rhs(const AtomState& y, cplx alpha, double g, double gamma) {
  const double w = 1.0 - 2.0 * y.p_e;
  AtomState d;
  d.s = cplx(-0.5 * gamma * y.s.real() + g * w * alpha.imag(), -0.5 * gamma * y.s.imag() - g * w * alpha.real());
  d.p_e = -gamma * y.p_e - 2.0 * g * (alpha.real() * y.s.imag() - alpha.imag() * y.s.real());
  return d;
}

/// Integrates the optical Bloch equations with fixed-step RK4 under a
/// classical drive. Throws NumericalError if the Bloch-ball bound breaks.
BlochSolution solve_bloch(const CoherentDrive& drive, double beta, const PhysicalParams& params,
                          const AtomState& init);

}  // namespace srb
