#include "srb/cascade.hpp"

#include <algorithm>
#include <cmath>
#include <type_traits>

#include "phase_kernel.hpp"

namespace srb {

MixedFieldTrace MixedFieldTrace::vacuum(const TimeGrid& grid) {
  return MixedFieldTrace{grid, std::vector<cplx>(grid.num_fine()), std::vector<double>(grid.num_fine(), 0.0)};
}

MixedFieldTrace MixedFieldTrace::coherent(const CoherentDrive& drive) {
  return MixedFieldTrace{drive.grid, drive.alpha, std::vector<double>(drive.alpha.size(), 0.0)};
}

std::vector<double> MixedFieldTrace::node_flux() const {
  std::vector<double> out(grid.num_nodes());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const std::size_t f = grid.node_to_fine(i);
    out[i] = std::norm(alpha_c[f]) + f_inc[f];
  }
  return out;
}

std::vector<cplx> MixedFieldTrace::node_alpha() const {
  std::vector<cplx> out(grid.num_nodes());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = alpha_c[grid.node_to_fine(i)];
  return out;
}

namespace {

detail::PhaseReduction choose_reduction(const MixedFieldTrace& input, const AtomState& init, int n_phi) {
  if (n_phi < 2) return detail::PhaseReduction::general;
  bool all_zero = init.s == cplx(0.0, 0.0);
  bool all_real = init.s.real() == 0.0;
  for (const auto& a : input.alpha_c) {
    if (a.imag() != 0.0) {
      all_real = false;
      all_zero = false;
      break;
    }
    if (a.real() != 0.0) all_zero = false;
  }
  if (all_zero) return detail::PhaseReduction::rotation;
  if (all_real) return detail::PhaseReduction::mirror;
  return detail::PhaseReduction::general;
}

}  // namespace

AtomPropagation propagate_atom(const MixedFieldTrace& input, double beta, const PhysicalParams& params,
                               const AtomState& init, int n_phi) {
  if (n_phi < 1) throw std::invalid_argument("propagate_atom: n_phi must be >= 1");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("propagate_atom: beta must lie in [0, 1]");
  const std::size_t nf = input.grid.num_fine();
  if (input.alpha_c.size() != nf || input.f_inc.size() != nf)
    throw std::invalid_argument("propagate_atom: trace does not match its grid");

  std::vector<double> amp(nf);
  bool any_inc = false;
  for (std::size_t i = 0; i < nf; ++i) {
    const double f = input.f_inc[i];
    if (!(f >= 0.0) || !std::isfinite(f)) throw NumericalError("propagate_atom: invalid incoherent flux " + std::to_string(f));
    amp[i] = std::sqrt(f);
    any_inc = any_inc || f > 0.0;
  }

  const auto mode = choose_reduction(input, init, n_phi);
  // Without an incoherent part every phase sees the same drive.
  const int effective_phi = any_inc ? n_phi : 1;
  const auto phases = detail::make_phase_set(
      effective_phi, any_inc ? mode : detail::PhaseReduction::general);
  auto k = detail::integrate_phases(input.grid, input.alpha_c, any_inc ? std::span<const double>(amp)
                                                                       : std::span<const double>{},
                                    phases, beta, params.gamma, init);
  AtomPropagation res;
  res.output = MixedFieldTrace{input.grid, std::move(k.alpha_out), std::move(k.inc_out)};
  res.traj = AtomTrajectory{input.grid, std::move(k.s), std::move(k.p_e), std::move(k.dp_dt)};
  return res;
}

namespace {

// Ideal preparation happens at t = 0; before that the ensemble sits in the
// ground state and nothing is emitted.
EnsembleResult embed_after_zero(EnsembleResult tail, const TimeGrid& grid) {
  const std::size_t nn = grid.num_nodes();
  const std::size_t off = grid.first_node_at_or_after(0.0);
  auto pad = [&](auto& v) {
    using T = typename std::decay_t<decltype(v)>::value_type;
    std::vector<T> full(nn, T{});
    std::copy(v.begin(), v.end(), full.begin() + static_cast<std::ptrdiff_t>(off));
    v = std::move(full);
  };
  pad(tail.p_f);
  pad(tail.alpha_f);
  pad(tail.p_in);
  pad(tail.p_free);
  pad(tail.excitation);
  pad(tail.excitation_rate);
  for (auto& row : tail.per_atom_pe) pad(row);
  tail.grid = grid;
  tail.zero_node = off;
  return tail;
}

}  // namespace

EnsembleResult propagate_ensemble(const PhysicalParams& params, std::span<const double> betas,
                                  const Preparation& prep, const TimeGrid& grid, const CascadeOptions& opts) {
  params.validate();
  if (betas.empty()) throw std::invalid_argument("propagate_ensemble: need at least one atom");
  if (opts.n_phi < 1) throw std::invalid_argument("propagate_ensemble: n_phi must be >= 1");

  if (prep.mode == Preparation::Mode::ideal_instantaneous && grid.t_start() < 0.0)
    return embed_after_zero(propagate_ensemble(params, betas, prep, grid.from_zero(), opts), grid);

  MixedFieldTrace field = MixedFieldTrace::vacuum(grid);
  AtomState init{};
  if (prep.mode == Preparation::Mode::driven_pulse) {
    field = MixedFieldTrace::coherent(make_pulse(prep.pulse, params, grid));
  } else {
    init = ideal_state(prep.pulse.area);
  }

  const std::size_t nn = grid.num_nodes();
  EnsembleResult r;
  r.grid = grid;
  r.zero_node = grid.first_node_at_or_after(0.0);
  r.p_in = field.node_flux();
  r.p_free.assign(nn, 0.0);
  r.excitation.assign(nn, 0.0);
  r.excitation_rate.assign(nn, 0.0);
  if (opts.keep_per_atom) r.per_atom_pe.reserve(betas.size());

  for (double beta : betas) {
    auto step = propagate_atom(field, beta, params, init, opts.n_phi);
    const double loss = (1.0 - beta) * params.gamma;
    const auto& tr = step.traj;
    for (std::size_t i = 0; i < nn; ++i) {
      r.p_free[i] += loss * tr.p_e[i];
      r.excitation[i] += tr.p_e[i];
      r.excitation_rate[i] += tr.dp_dt[i];
    }
    if (opts.keep_per_atom) r.per_atom_pe.push_back(tr.p_e);
    field = std::move(step.output);
  }
  r.p_f = field.node_flux();
  r.alpha_f = field.node_alpha();
  r.stored_energy = r.excitation[r.zero_node];
  return r;
}

LedgerReport energy_ledger(const EnsembleResult& result, const PhysicalParams& /*params*/) {
  const std::size_t nn = result.grid.num_nodes();
  LedgerReport rep;
  rep.residual.resize(nn);
  for (std::size_t i = 0; i < nn; ++i) {
    rep.residual[i] = result.p_in[i] - result.p_f[i] - result.p_free[i] - result.excitation_rate[i];
    rep.max_abs_residual = std::max(rep.max_abs_residual, std::abs(rep.residual[i]));
  }
  rep.emitted_forward = integrate_nodes(result.grid, result.p_f, result.zero_node);
  rep.emitted_free = integrate_nodes(result.grid, result.p_free, result.zero_node);
  rep.remaining = result.excitation.back();
  rep.integrated_residual = rep.emitted_forward + rep.emitted_free + rep.remaining - result.stored_energy;
  return rep;
}

}  // namespace srb
