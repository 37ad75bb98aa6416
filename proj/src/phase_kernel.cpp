#include "phase_kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace srb::detail {

namespace {

constexpr double kBallTol = 1e-9;

struct Rhs {
  double g;
  double half_gamma;
  double gamma;

  // (sr, si, p) -> (dsr, dsi, dp) for drive (ar, ai)
  inline void operator()(double sr, double si, double p, double ar, double ai, double& dsr, double& dsi,
                         double& dp) const {
    const double w = 1.0 - 2.0 * p;
    dsr = -half_gamma * sr + g * w * ai;
    dsi = -half_gamma * si - g * w * ar;
    dp = -gamma * p - 2.0 * g * (ar * si - ai * sr);
  }
};

// Per-phase scratch, structure of arrays.
struct Scratch {
  explicit Scratch(std::size_t m)
      : sr(m), si(m), p(m), k1r(m), k1i(m), k1p(m), oar(m), oai(m), ocoh(m), oinc(m),
        ear(m), eai(m), ecoh(m), einc(m) {}
  std::vector<double> sr, si, p;
  std::vector<double> k1r, k1i, k1p;  // derivative at step start
  // per-phase output at the midpoint (o*) and the step end (e*)
  std::vector<double> oar, oai, ocoh, oinc;
  std::vector<double> ear, eai, ecoh, einc;
};

}  // namespace

PhaseSet make_phase_set(int n_phi, PhaseReduction mode) {
  if (n_phi < 1) throw std::invalid_argument("n_phi must be >= 1");
  PhaseSet set;
  set.reduction = mode;
  const std::size_t n = static_cast<std::size_t>(n_phi);
  std::vector<double> c(n), s(n);
  for (std::size_t j = 0; j < n; ++j) {
    if (2 * j > n) {
      c[j] = c[n - j];
      s[j] = -s[n - j];
      continue;
    }
    const double phi = 2.0 * kPi * static_cast<double>(j) / static_cast<double>(n);
    c[j] = std::cos(phi);
    s[j] = std::sin(phi);
    if (j == 0) {
      c[j] = 1.0;
      s[j] = 0.0;
    } else if (2 * j == n) {
      c[j] = -1.0;
      s[j] = 0.0;
    } else if (4 * j == n) {
      c[j] = 0.0;
      s[j] = 1.0;
    }
  }
  const double inv = 1.0 / static_cast<double>(n);
  switch (mode) {
    case PhaseReduction::general:
      set.cos_phi = c;
      set.sin_phi = s;
      set.weight.assign(n, inv);
      break;
    case PhaseReduction::mirror:
      for (std::size_t j = 0; 2 * j <= n; ++j) {
        set.cos_phi.push_back(c[j]);
        set.sin_phi.push_back(s[j]);
        const bool self_conjugate = (j == 0) || (2 * j == n);
        set.weight.push_back(self_conjugate ? inv : 2.0 * inv);
      }
      break;
    case PhaseReduction::rotation:
      set.cos_phi = {1.0};
      set.sin_phi = {0.0};
      set.weight = {1.0};
      break;
  }
  return set;
}

KernelOutput integrate_phases(const TimeGrid& grid, std::span<const cplx> alpha_c, std::span<const double> inc_amp,
                              const PhaseSet& phases, double beta, double gamma, const AtomState& init) {
  const std::size_t nf = grid.num_fine();
  if (alpha_c.size() != nf) throw std::invalid_argument("integrate_phases: drive size mismatch");
  const bool has_inc = !inc_amp.empty();
  if (has_inc && inc_amp.size() != nf) throw std::invalid_argument("integrate_phases: incoherent size mismatch");

  const std::size_t m = phases.weight.size();
  const double g = std::sqrt(beta * gamma);
  const double g2 = beta * gamma;
  const Rhs rhs{g, 0.5 * gamma, gamma};
  const double* cj = phases.cos_phi.data();
  const double* sj = phases.sin_phi.data();
  const double* wj = phases.weight.data();
  const PhaseReduction red = phases.reduction;

  KernelOutput out;
  out.alpha_out.resize(nf);
  out.flux_out.resize(nf);
  out.inc_out.resize(nf);
  out.s.resize(grid.num_nodes());
  out.p_e.resize(grid.num_nodes());
  out.dp_dt.resize(grid.num_nodes());

  Scratch sc(m);
  for (std::size_t j = 0; j < m; ++j) {
    // phase j sees the input rotated; init is the same for all phases
    sc.sr[j] = init.s.real();
    sc.si[j] = init.s.imag();
    sc.p[j] = init.p_e;
  }

  // Reduce per-phase output arrays into fine sample `idx`.
  auto reduce_output = [&](std::size_t idx, const double* ar, const double* ai, const double* coh, const double* inc) {
    double sum_r = 0.0, sum_i = 0.0, sum_coh = 0.0, sum_inc = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      sum_r += wj[j] * ar[j];
      sum_i += wj[j] * ai[j];
      sum_coh += wj[j] * coh[j];
      sum_inc += wj[j] * inc[j];
    }
    cplx mean(sum_r, sum_i);
    if (red == PhaseReduction::mirror) mean = cplx(sum_r, 0.0);
    if (red == PhaseReduction::rotation) mean = cplx(0.0, 0.0);
    const double excess = std::max(0.0, sum_coh - std::norm(mean));
    out.alpha_out[idx] = mean;
    out.flux_out[idx] = sum_coh + sum_inc;
    out.inc_out[idx] = std::max(0.0, excess + sum_inc);  // rounding within the Bloch-ball tolerance
  };

  auto reduce_node = [&](std::size_t node, const double* dp) {
    double sum_r = 0.0, sum_i = 0.0, sum_p = 0.0, sum_dp = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
      sum_r += wj[j] * sc.sr[j];
      sum_i += wj[j] * sc.si[j];
      sum_p += wj[j] * sc.p[j];
      sum_dp += wj[j] * dp[j];
    }
    cplx s(sum_r, sum_i);
    if (red == PhaseReduction::mirror) s = cplx(0.0, sum_i);
    if (red == PhaseReduction::rotation) s = cplx(0.0, 0.0);
    out.s[node] = s;
    out.p_e[node] = sum_p;
    out.dp_dt[node] = sum_dp;
  };

  // Output amplitude and fluxes of phase j for state (sr, si, p) under drive (ar, ai).
  auto emit = [g, g2](double sr, double si, double p, double ar, double ai, double& oar, double& oai, double& ocoh,
                      double& oinc) {
    oar = ar + g * si;
    oai = ai - g * sr;
    ocoh = oar * oar + oai * oai;
    oinc = g2 * (p - sr * sr - si * si);
  };

  std::size_t node = 0;
  const auto& segs = grid.segments();
  for (std::size_t sidx = 0; sidx < segs.size(); ++sidx) {
    const Segment& seg = segs[sidx];
    const double h = seg.dt();
    const std::size_t off = grid.fine_offset(sidx);

    // Derivative and output at the segment start (right-limit drive).
    {
      const double dr = alpha_c[off].real(), di = alpha_c[off].imag();
      const double a = has_inc ? inc_amp[off] : 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const double ar = dr + cj[j] * a, ai = di + sj[j] * a;
        rhs(sc.sr[j], sc.si[j], sc.p[j], ar, ai, sc.k1r[j], sc.k1i[j], sc.k1p[j]);
        emit(sc.sr[j], sc.si[j], sc.p[j], ar, ai, sc.ear[j], sc.eai[j], sc.ecoh[j], sc.einc[j]);
      }
      reduce_output(off, sc.ear.data(), sc.eai.data(), sc.ecoh.data(), sc.einc.data());
      if (sidx > 0) --node;  // boundary node takes the right limit
      reduce_node(node, sc.k1p.data());
      ++node;
    }

    for (int step = 0; step < seg.steps; ++step) {
      const std::size_t im = off + 2 * static_cast<std::size_t>(step) + 1, i1 = im + 1;
      const double dmr = alpha_c[im].real(), dmi = alpha_c[im].imag();
      const double d1r = alpha_c[i1].real(), d1i = alpha_c[i1].imag();
      const double am = has_inc ? inc_amp[im] : 0.0;
      const double a1 = has_inc ? inc_amp[i1] : 0.0;
      int bad = 0;

      for (std::size_t j = 0; j < m; ++j) {
        const double amr = dmr + cj[j] * am, ami = dmi + sj[j] * am;
        const double a1r = d1r + cj[j] * a1, a1i = d1i + sj[j] * a1;
        const double y0r = sc.sr[j], y0i = sc.si[j], y0p = sc.p[j];
        const double k1r = sc.k1r[j], k1i = sc.k1i[j], k1p = sc.k1p[j];
        double k2r, k2i, k2p, k3r, k3i, k3p, k4r, k4i, k4p;
        rhs(y0r + 0.5 * h * k1r, y0i + 0.5 * h * k1i, y0p + 0.5 * h * k1p, amr, ami, k2r, k2i, k2p);
        rhs(y0r + 0.5 * h * k2r, y0i + 0.5 * h * k2i, y0p + 0.5 * h * k2p, amr, ami, k3r, k3i, k3p);
        rhs(y0r + h * k3r, y0i + h * k3i, y0p + h * k3p, a1r, a1i, k4r, k4i, k4p);
        const double y1r = y0r + h / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
        const double y1i = y0i + h / 6.0 * (k1i + 2.0 * k2i + 2.0 * k3i + k4i);
        const double y1p = y0p + h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        double f1r, f1i, f1p;
        rhs(y1r, y1i, y1p, a1r, a1i, f1r, f1i, f1p);
        // cubic Hermite dense output at the midpoint
        const double ymr = 0.5 * (y0r + y1r) + 0.125 * h * (k1r - f1r);
        const double ymi = 0.5 * (y0i + y1i) + 0.125 * h * (k1i - f1i);
        const double ymp = 0.5 * (y0p + y1p) + 0.125 * h * (k1p - f1p);
        emit(ymr, ymi, ymp, amr, ami, sc.oar[j], sc.oai[j], sc.ocoh[j], sc.oinc[j]);
        emit(y1r, y1i, y1p, a1r, a1i, sc.ear[j], sc.eai[j], sc.ecoh[j], sc.einc[j]);
        sc.sr[j] = y1r;
        sc.si[j] = y1i;
        sc.p[j] = y1p;
        sc.k1r[j] = f1r;
        sc.k1i[j] = f1i;
        sc.k1p[j] = f1p;
        const double ball = y1r * y1r + y1i * y1i - y1p * (1.0 - y1p);
        bad |= static_cast<int>(ball > kBallTol) | static_cast<int>(y1p < -kBallTol) |
               static_cast<int>(y1p > 1.0 + kBallTol) | static_cast<int>(!std::isfinite(y1p));
      }
      if (bad)
        throw NumericalError("Bloch-ball bound violated near t = " + std::to_string(seg.t0 + (step + 1) * h) +
                             " ns; reduce the time step");
      reduce_output(im, sc.oar.data(), sc.oai.data(), sc.ocoh.data(), sc.oinc.data());
      reduce_output(i1, sc.ear.data(), sc.eai.data(), sc.ecoh.data(), sc.einc.data());
      reduce_node(node, sc.k1p.data());
      ++node;
    }
  }
  return out;
}

}  // namespace srb::detail
