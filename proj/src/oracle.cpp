#include "srb/oracle.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "srb/observables.hpp"

namespace srb {

namespace {

// (sigma_k rho sigma_k^+)_{ab} = rho_{a|bit, b|bit} for a, b with bit clear.
void add_local_jump(const DenseMatrix& rho, int bit, double rate, DenseMatrix& out) {
  const Eigen::Index d = rho.rows();
  const Eigen::Index mask = Eigen::Index(1) << bit;
  for (Eigen::Index b = 0; b < d; ++b) {
    if (b & mask) continue;
    for (Eigen::Index a = 0; a < d; ++a) {
      if (a & mask) continue;
      out(a, b) += rate * rho(a | mask, b | mask);
    }
  }
}

}  // namespace

CascadedGenerator::CascadedGenerator(std::vector<double> betas, double gamma, std::optional<CoherentDrive> drive)
    : n_(static_cast<int>(betas.size())),
      dim_(1 << n_),
      betas_(std::move(betas)),
      gamma_(gamma),
      drive_(std::move(drive)) {
  jump_ = DenseMatrix::Zero(dim_, dim_);
  h_casc_ = DenseMatrix::Zero(dim_, dim_);
  std::vector<DenseMatrix> sig;
  for (int k = 0; k < n_; ++k) {
    sig.push_back(sigma(k));
    jump_ += std::sqrt(betas_[k] * gamma_) * sig.back();
  }
  const cplx half_i(0.0, 0.5);
  for (int j = 0; j < n_; ++j)
    for (int k = j + 1; k < n_; ++k) {
      const double gg = std::sqrt(betas_[j] * gamma_) * std::sqrt(betas_[k] * gamma_);
      h_casc_ -= half_i * gg * (sig[k].adjoint() * sig[j] - sig[j].adjoint() * sig[k]);
    }
  decay_ = jump_.adjoint() * jump_;
  for (int k = 0; k < n_; ++k) decay_ += (1.0 - betas_[k]) * gamma_ * sig[k].adjoint() * sig[k];
}

DenseMatrix CascadedGenerator::sigma(int k) const {
  DenseMatrix s = DenseMatrix::Zero(dim_, dim_);
  const int mask = 1 << k;
  for (int i = 0; i < dim_; ++i)
    if (i & mask) s(i ^ mask, i) = 1.0;
  return s;
}

DenseMatrix CascadedGenerator::apply(const DenseMatrix& rho, cplx alpha) const {
  // H_eff = H - (i/2) decay
  DenseMatrix h_eff = h_casc_ - cplx(0.0, 0.5) * decay_;
  if (alpha != cplx(0.0, 0.0)) h_eff += alpha * jump_.adjoint() + std::conj(alpha) * jump_;
  const DenseMatrix hr = h_eff * rho;
  DenseMatrix out = cplx(0.0, -1.0) * (hr - hr.adjoint());
  out.noalias() += jump_ * rho * jump_.adjoint();
  for (int k = 0; k < n_; ++k) add_local_jump(rho, k, (1.0 - betas_[k]) * gamma_, out);
  return out;
}

CascadedGenerator build_generator(int n_atoms, std::span<const double> betas, const PhysicalParams& params,
                                  std::optional<CoherentDrive> drive, int max_atoms) {
  if (n_atoms < 1) throw ConfigError("oracle needs at least one atom");
  if (n_atoms > max_atoms || n_atoms > kOracleMaxAtoms)
    throw ConfigError("oracle limited to " + std::to_string(std::min(max_atoms, kOracleMaxAtoms)) + " atoms");
  std::vector<double> b;
  if (betas.size() == 1)
    b.assign(static_cast<std::size_t>(n_atoms), betas[0]);
  else if (betas.size() == static_cast<std::size_t>(n_atoms))
    b.assign(betas.begin(), betas.end());
  else
    throw ConfigError("oracle: need one coupling or one per atom");
  for (double x : b)
    if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("oracle: couplings must lie in [0, 1]");
  return CascadedGenerator(std::move(b), params.gamma, std::move(drive));
}

DenseMatrix product_state(std::span<const AtomState> atoms) {
  DenseMatrix rho = DenseMatrix::Ones(1, 1);
  // build from the highest bit down so that atom k ends up on bit k
  for (auto it = atoms.rbegin(); it != atoms.rend(); ++it) {
    DenseMatrix one(2, 2);
    one(0, 0) = 1.0 - it->p_e;
    one(1, 1) = it->p_e;
    one(1, 0) = it->s;  // <sigma> = rho_eg
    one(0, 1) = std::conj(it->s);
    DenseMatrix next(rho.rows() * 2, rho.cols() * 2);
    for (Eigen::Index i = 0; i < rho.rows(); ++i)
      for (Eigen::Index j = 0; j < rho.cols(); ++j) next.block(2 * i, 2 * j, 2, 2) = rho(i, j) * one;
    rho = std::move(next);
  }
  return rho;
}

OracleResult evolve(const CascadedGenerator& gen, const DenseMatrix& rho0, const TimeGrid& grid) {
  if (rho0.rows() != gen.dim() || rho0.cols() != gen.dim()) throw std::invalid_argument("evolve: state dimension");
  const auto& drive = gen.drive();
  if (drive && drive->alpha.size() != grid.num_fine()) throw std::invalid_argument("evolve: drive grid mismatch");
  auto alpha_at = [&](std::size_t fine) { return drive ? drive->alpha[fine] : cplx(0.0, 0.0); };

  const int n = gen.n_atoms();
  std::vector<DenseMatrix> pe_ops;
  for (int k = 0; k < n; ++k) {
    const auto s = gen.sigma(k);
    pe_ops.push_back(s.adjoint() * s);
  }
  const DenseMatrix jdj = gen.jump().adjoint() * gen.jump();

  OracleResult res;
  res.grid = grid;
  const std::size_t nn = grid.num_nodes();
  res.p_f.resize(nn);
  res.alpha_out.resize(nn);
  res.p_free.resize(nn);
  res.excitation.resize(nn);
  res.per_atom_pe.assign(static_cast<std::size_t>(n), std::vector<double>(nn));
  res.min_eigenvalue = 1.0;

  const bool check_every_node = gen.dim() <= 16;
  auto record = [&](std::size_t node, const DenseMatrix& rho, cplx alpha, bool check) {
    const cplx j_mean = (rho * gen.jump()).trace();
    const double jdj_mean = (rho * jdj).trace().real();
    res.alpha_out[node] = alpha - cplx(0.0, 1.0) * j_mean;
    res.p_f[node] = std::norm(alpha) + jdj_mean + 2.0 * (std::conj(alpha) * j_mean).imag();
    double free = 0.0, exc = 0.0;
    for (int k = 0; k < n; ++k) {
      const double pk = (rho * pe_ops[static_cast<std::size_t>(k)]).trace().real();
      res.per_atom_pe[static_cast<std::size_t>(k)][node] = pk;
      exc += pk;
      free += (1.0 - gen.betas()[static_cast<std::size_t>(k)]) * gen.gamma() * pk;
    }
    res.p_free[node] = free;
    res.excitation[node] = exc;
    res.max_trace_error = std::max(res.max_trace_error, std::abs(rho.trace() - 1.0));
    res.max_hermiticity_error = std::max(res.max_hermiticity_error, (rho - rho.adjoint()).cwiseAbs().maxCoeff());
    if (check) {
      Eigen::SelfAdjointEigenSolver<DenseMatrix> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
      const double lo = es.eigenvalues().minCoeff();
      res.min_eigenvalue = std::min(res.min_eigenvalue, lo);
      if (lo < -1e-6) throw NumericalError("oracle lost positivity (eigenvalue " + std::to_string(lo) + ")");
    }
  };

  DenseMatrix rho = rho0;
  std::size_t node = 0;
  const auto& segs = grid.segments();
  for (std::size_t s = 0; s < segs.size(); ++s) {
    const double h = segs[s].dt();
    const std::size_t off = grid.fine_offset(s);
    if (s > 0) --node;  // right limit overwrites the boundary node
    record(node++, rho, alpha_at(off), true);
    for (int step = 0; step < segs[s].steps; ++step) {
      const std::size_t i0 = off + 2 * static_cast<std::size_t>(step);
      const cplx a0 = alpha_at(i0), am = alpha_at(i0 + 1), a1 = alpha_at(i0 + 2);
      const DenseMatrix k1 = gen.apply(rho, a0);
      const DenseMatrix k2 = gen.apply(rho + 0.5 * h * k1, am);
      const DenseMatrix k3 = gen.apply(rho + 0.5 * h * k2, am);
      const DenseMatrix k4 = gen.apply(rho + h * k3, a1);
      rho += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      const bool check = check_every_node || (step + 1) % 50 == 0 || step + 1 == segs[s].steps;
      record(node++, rho, a1, check);
    }
  }
  res.stored_energy = res.excitation[grid.first_node_at_or_after(0.0)];
  res.final_state = rho;
  return res;
}

OracleComparison compare_to_cascade(int n_atoms, double beta, const Preparation& prep, const TimeGrid& grid,
                                    const PhysicalParams& params, int n_phi) {
  if (prep.mode == Preparation::Mode::ideal_instantaneous && grid.t_start() < 0.0)
    return compare_to_cascade(n_atoms, beta, prep, grid.from_zero(), params, n_phi);
  PhysicalParams p = params;
  p.n_atoms = n_atoms;
  const std::vector<double> betas(static_cast<std::size_t>(n_atoms), beta);

  std::optional<CoherentDrive> drive;
  std::vector<AtomState> init(static_cast<std::size_t>(n_atoms));
  if (prep.mode == Preparation::Mode::driven_pulse)
    drive = make_pulse(prep.pulse, p, grid);
  else
    init.assign(static_cast<std::size_t>(n_atoms), ideal_state(prep.pulse.area));

  OracleComparison cmp;
  const auto gen = build_generator(n_atoms, betas, p, drive);
  cmp.oracle = evolve(gen, product_state(init), grid);
  CascadeOptions opts;
  opts.n_phi = n_phi;
  cmp.cascade = propagate_ensemble(p, betas, prep, grid, opts);

  const auto& po = cmp.oracle.p_f;
  const auto& pc = cmp.cascade.p_f;
  const std::size_t z = grid.first_node_at_or_after(0.0);
  double peak = 0.0, apeak = 0.0;
  for (std::size_t i = z; i < po.size(); ++i) {
    peak = std::max(peak, po[i]);
    apeak = std::max(apeak, std::abs(cmp.oracle.alpha_out[i]));
  }
  for (std::size_t i = z; i < po.size(); ++i) {
    const double d = std::abs(pc[i] - po[i]);
    if (peak > 0.0) cmp.max_pf_deviation_over_peak = std::max(cmp.max_pf_deviation_over_peak, d / peak);
    if (po[i] > 1e-3 * peak) cmp.max_rel_pf_deviation = std::max(cmp.max_rel_pf_deviation, d / po[i]);
    const double ao = std::abs(cmp.oracle.alpha_out[i]);
    if (apeak > 0.0 && ao > 0.1 * apeak)
      cmp.max_rel_coherent_deviation =
          std::max(cmp.max_rel_coherent_deviation, std::abs(cmp.cascade.alpha_f[i] - cmp.oracle.alpha_out[i]) / ao);
  }
  if (cmp.oracle.stored_energy > 0.0) {
    cmp.eta_oracle = forward_fraction(po, grid, cmp.oracle.stored_energy, p.gamma).eta_f;
    cmp.eta_cascade = forward_fraction(pc, grid, cmp.cascade.stored_energy, p.gamma).eta_f;
    cmp.eta_deviation = cmp.eta_cascade - cmp.eta_oracle;
  }
  cmp.t_delay_oracle = peak_and_delay(po, grid).t_delay;
  cmp.t_delay_cascade = peak_and_delay(pc, grid).t_delay;
  return cmp;
}

}  // namespace srb
