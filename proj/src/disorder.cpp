#include "srb/disorder.hpp"

#include <cmath>
#include <random>

#include "srb/observables.hpp"
#include "srb/parallel.hpp"

namespace srb {

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  SplitMix64 a(seed);
  const std::uint64_t base = a();
  SplitMix64 b(base ^ (index * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
  return b();
}

void TruncatedGaussian::validate() const {
  if (!(mean > 0.0 && mean < 1.0)) throw ConfigError("coupling mean must lie in (0, 1)");
  if (!(std >= 0.0) || !std::isfinite(std)) throw ConfigError("coupling std must be >= 0");
}

double TruncatedGaussian::acceptance() const {
  if (std == 0.0) return 1.0;
  const double z_hi = (1.0 - mean) / (std * std::sqrt(2.0));
  const double z_lo = (0.0 - mean) / (std * std::sqrt(2.0));
  return 0.5 * (std::erf(z_hi) - std::erf(z_lo));
}

std::vector<double> sample_betas(const TruncatedGaussian& dist, int n_atoms, std::uint64_t realization_seed) {
  dist.validate();
  if (n_atoms < 1) throw std::invalid_argument("sample_betas: n_atoms must be >= 1");
  std::vector<double> betas(static_cast<std::size_t>(n_atoms), dist.mean);
  if (dist.std == 0.0) return betas;
  if (dist.acceptance() < 1e-6) throw ConfigError("truncated Gaussian acceptance probability below 1e-6");
  for (int k = 0; k < n_atoms; ++k) {
    SplitMix64 rng(substream_seed(realization_seed, static_cast<std::uint64_t>(k)));
    std::normal_distribution<double> normal(dist.mean, dist.std);
    double b;
    do {
      b = normal(rng);
    } while (!(b > 0.0 && b < 1.0));
    betas[static_cast<std::size_t>(k)] = b;
  }
  return betas;
}

namespace {

void add_into(std::vector<double>& acc, const std::vector<double>& v) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v[i];
}

void scale(std::vector<double>& v, double f) {
  for (auto& x : v) x *= f;
}

struct Realization {
  EnsembleResult result;
  BurstMetrics metrics;
};

ScalarStats stats_of(const std::vector<double>& v) {
  ScalarStats s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

}  // namespace

DisorderAverage average_realizations(const PhysicalParams& params, const DisorderPlan& plan, const Preparation& prep,
                                     const TimeGrid& grid, const RunOptions& opts) {
  params.validate();
  plan.dist.validate();
  if (plan.n_realizations < 1) throw ConfigError("n_realizations must be >= 1");

  const std::size_t nn = grid.num_nodes();
  const std::size_t nr = static_cast<std::size_t>(plan.n_realizations);
  const std::size_t batch = static_cast<std::size_t>(std::max(1, opts.threads));

  DisorderAverage avg;
  avg.n_realizations = plan.n_realizations;
  EnsembleResult& m = avg.mean;
  m.grid = grid;
  m.zero_node = grid.first_node_at_or_after(0.0);
  m.p_f.assign(nn, 0.0);
  m.alpha_f.assign(nn, cplx(0.0, 0.0));
  m.p_in.assign(nn, 0.0);
  m.p_free.assign(nn, 0.0);
  m.excitation.assign(nn, 0.0);
  m.excitation_rate.assign(nn, 0.0);
  // running mean and summed squared deviations of P_f (Welford)
  std::vector<double> p_f_run(nn, 0.0), p_f_m2(nn, 0.0);
  double count = 0.0;
  std::vector<double> e_st, p_max, t_delay, eta;

  for (std::size_t first = 0; first < nr; first += batch) {
    const std::size_t last = std::min(nr, first + batch);
    std::vector<Realization> slot(last - first);
    parallel_for(first, last, opts.threads, [&](std::size_t r) {
      const auto betas = sample_betas(plan.dist, params.n_atoms, substream_seed(plan.seed, r));
      auto& out = slot[r - first];
      out.result = propagate_ensemble(params, betas, prep, grid, opts.cascade);
      const auto pk = peak_and_delay(out.result.p_f, grid);
      out.metrics.p_max = pk.p_max;
      out.metrics.t_delay = pk.t_delay;
      out.metrics.eta_f = out.result.stored_energy > 0.0
                              ? forward_fraction(out.result.p_f, grid, out.result.stored_energy, params.gamma).eta_f
                              : 0.0;
    });
    // reduction strictly in realization order
    for (auto& s : slot) {
      auto& res = s.result;
      add_into(m.p_f, res.p_f);
      add_into(m.p_in, res.p_in);
      add_into(m.p_free, res.p_free);
      add_into(m.excitation, res.excitation);
      add_into(m.excitation_rate, res.excitation_rate);
      count += 1.0;
      for (std::size_t i = 0; i < nn; ++i) {
        m.alpha_f[i] += res.alpha_f[i];
        const double d = res.p_f[i] - p_f_run[i];
        p_f_run[i] += d / count;
        p_f_m2[i] += d * (res.p_f[i] - p_f_run[i]);
      }
      if (!res.per_atom_pe.empty()) {
        if (m.per_atom_pe.empty()) m.per_atom_pe.assign(res.per_atom_pe.size(), std::vector<double>(nn, 0.0));
        for (std::size_t k = 0; k < res.per_atom_pe.size(); ++k) add_into(m.per_atom_pe[k], res.per_atom_pe[k]);
      }
      e_st.push_back(res.stored_energy);
      p_max.push_back(s.metrics.p_max);
      t_delay.push_back(s.metrics.t_delay);
      eta.push_back(s.metrics.eta_f);
    }
  }

  const double inv = 1.0 / static_cast<double>(nr);
  scale(m.p_f, inv);
  scale(m.p_in, inv);
  scale(m.p_free, inv);
  scale(m.excitation, inv);
  scale(m.excitation_rate, inv);
  for (auto& a : m.alpha_f) a *= inv;
  for (auto& row : m.per_atom_pe) scale(row, inv);
  m.stored_energy = m.excitation[m.zero_node];

  avg.p_f_std.assign(nn, 0.0);
  if (nr > 1) {
    for (std::size_t i = 0; i < nn; ++i) avg.p_f_std[i] = std::sqrt(p_f_m2[i] / static_cast<double>(nr - 1));
  }
  avg.stored_energy = stats_of(e_st);
  avg.p_max = stats_of(p_max);
  avg.t_delay = stats_of(t_delay);
  avg.eta_f = stats_of(eta);
  return avg;
}

}  // namespace srb
