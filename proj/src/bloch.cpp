#include "srb/bloch.hpp"

#include <cmath>

#include "phase_kernel.hpp"

namespace srb {

namespace {
constexpr double kEdgeTol = 1e-9;

bool is_boundary(const TimeGrid& grid, double t) {
  if (std::abs(grid.t_start() - t) < kEdgeTol || std::abs(grid.t_end() - t) < kEdgeTol) return true;
  for (const auto& seg : grid.segments())
    if (std::abs(seg.t0 - t) < kEdgeTol) return true;
  return false;
}
}  // namespace

AtomState ideal_state(double area) {
  if (!std::isfinite(area)) throw std::invalid_argument("ideal_state: area must be finite");
  const double turns = area / kPi;
  const bool on_pi_multiple = std::nearbyint(turns) == turns;
  const double sin_a = on_pi_multiple ? 0.0 : std::sin(area);
  const double sin_half = std::sin(0.5 * area);
  double p = sin_half * sin_half;
  if (on_pi_multiple) p = (static_cast<long long>(std::nearbyint(turns)) % 2 == 0) ? 0.0 : 1.0;
  return AtomState{cplx(0.0, -0.5 * sin_a), p};
}

void PulseSpec::validate() const {
  if (!std::isfinite(area) || area < 0.0) throw ConfigError("pulse area must be >= 0");
  if (!(duration > 0.0)) throw ConfigError("pulse duration must be > 0");
  if (shape == PulseShape::smoothed_edge && !(ramp > 0.0 && 2.0 * ramp <= duration))
    throw ConfigError("pulse ramp must satisfy 0 < 2 ramp <= duration");
}

double pulse_envelope(const PulseSpec& spec, double t) {
  const double T = spec.duration;
  if (t < -T || t > 0.0) return 0.0;
  if (spec.shape == PulseShape::rectangular) return 1.0 / T;
  const double r = spec.ramp;
  const double top = 1.0 / (T - r);
  if (t < -T + r) return top * 0.5 * (1.0 - std::cos(kPi * (t + T) / r));
  if (t > -r) return top * 0.5 * (1.0 - std::cos(kPi * (-t) / r));
  return top;
}

CoherentDrive CoherentDrive::zero(const TimeGrid& grid) {
  return CoherentDrive{grid, std::vector<cplx>(grid.num_fine(), cplx(0.0, 0.0))};
}

CoherentDrive make_pulse(const PulseSpec& spec, const PhysicalParams& params, const TimeGrid& grid) {
  spec.validate();
  params.validate();
  const double T = spec.duration;
  if (grid.t_start() > -T + kEdgeTol) throw ConfigError("pulse does not fit into the time grid before t = 0");
  if (spec.shape == PulseShape::rectangular && !(is_boundary(grid, -T) && is_boundary(grid, 0.0)))
    throw ConfigError("rectangular pulse edges must coincide with grid segment boundaries");

  CoherentDrive drive = CoherentDrive::zero(grid);
  if (spec.area == 0.0) return drive;
  // 2 sqrt(beta gamma) * amplitude * int envelope dt = area, with int envelope = 1
  const double amplitude = spec.area / (2.0 * std::sqrt(params.beta_nominal * params.gamma));

  const auto times = grid.fine_times();
  const auto& segs = grid.segments();
  for (std::size_t s = 0; s < segs.size(); ++s) {
    const std::size_t off = grid.fine_offset(s);
    const std::size_t count = 2 * static_cast<std::size_t>(segs[s].steps) + 1;
    const double mid = 0.5 * (segs[s].t0 + segs[s].t1);
    for (std::size_t k = 0; k < count; ++k) {
      double env;
      if (spec.shape == PulseShape::rectangular)
        env = (mid > -T && mid < 0.0) ? 1.0 / T : 0.0;
      else
        env = pulse_envelope(spec, times[off + k]);
      drive.alpha[off + k] = cplx(amplitude * env, 0.0);
    }
  }
  return drive;
}

BlochSolution solve_bloch(const CoherentDrive& drive, double beta, const PhysicalParams& params,
                          const AtomState& init) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("solve_bloch: beta must lie in [0, 1]");
  for (const auto& a : drive.alpha)
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag())) throw NumericalError("solve_bloch: non-finite drive");
  const auto phases = detail::make_phase_set(1, detail::PhaseReduction::general);
  auto k = detail::integrate_phases(drive.grid, drive.alpha, {}, phases, beta, params.gamma, init);
  BlochSolution sol;
  sol.traj = AtomTrajectory{drive.grid, std::move(k.s), std::move(k.p_e), std::move(k.dp_dt)};
  sol.out_coherent = std::move(k.alpha_out);
  sol.out_incoherent = std::move(k.inc_out);
  return sol;
}

}  // namespace srb
