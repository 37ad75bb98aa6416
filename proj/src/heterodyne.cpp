#include "srb/heterodyne.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "srb/disorder.hpp"
#include "srb/parallel.hpp"

namespace srb {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

void HeterodyneConfig::validate() const {
  if (!(p_lo > 0.0) || !std::isfinite(p_lo)) throw ConfigError("heterodyne: p_lo must be positive");
  if (!(omega_lo > 0.0) || !std::isfinite(omega_lo)) throw ConfigError("heterodyne: omega_lo must be positive");
  if (!(polarization_overlap > 0.0 && polarization_overlap <= 1.0))
    throw ConfigError("heterodyne: polarization_overlap must lie in (0, 1]");
}

Eigen::MatrixXd coherent_g1(std::span<const cplx> alpha, std::span<const double> power, std::size_t n_lags) {
  if (alpha.size() != power.size()) throw std::invalid_argument("coherent_g1: size mismatch");
  const auto n = static_cast<Eigen::Index>(power.size());
  Eigen::MatrixXd g1 = Eigen::MatrixXd::Constant(n, static_cast<Eigen::Index>(n_lags), kNaN);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(n_lags) && i + j < n; ++j) {
      const double norm = std::sqrt(power[i] * power[i + j]);
      g1(i, j) = norm > 0.0 ? (std::conj(alpha[i]) * alpha[i + j]).real() / norm : 0.0;
    }
  return g1;
}

CorrelationSurface forward_g2(double t0, double dt, std::span<const double> power, const Eigen::MatrixXd& g1,
                              const HeterodyneConfig& cfg) {
  cfg.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("forward_g2: dt must be positive");
  const auto n = static_cast<Eigen::Index>(power.size());
  if (g1.rows() != n) throw std::invalid_argument("forward_g2: g1 rows must match the power series");

  CorrelationSurface s;
  s.t0 = t0;
  s.dt = dt;
  s.p.assign(power.begin(), power.end());
  s.p_d.resize(power.size());
  double p_peak = 0.0;
  for (std::size_t i = 0; i < power.size(); ++i) {
    if (!(power[i] >= 0.0)) throw std::invalid_argument("forward_g2: power must be nonnegative");
    s.p_d[i] = cfg.p_lo + power[i];
    p_peak = std::max(p_peak, power[i]);
  }
  if (cfg.p_lo < 100.0 * p_peak)
    s.warnings.push_back("p_lo below 100 x peak signal power; dropped signal g2 term is not negligible");

  const Eigen::Index m = g1.cols();
  s.g2_d = Eigen::MatrixXd::Constant(n, m, kNaN);
  s.v_max = Eigen::MatrixXd::Constant(n, m, kNaN);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < m && i + j < n; ++j) {
      const double v = cfg.polarization_overlap * 2.0 * cfg.p_lo * std::sqrt(power[i] * power[i + j]) /
                       (s.p_d[i] * s.p_d[i + j]);
      s.v_max(i, j) = v;
      s.g2_d(i, j) = 1.0 + v * std::cos(cfg.omega_lo * s.tau(static_cast<std::size_t>(j))) * g1(i, j);
    }
  return s;
}

Eigen::MatrixXd extract_g1(const CorrelationSurface& surface) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Constant(surface.g2_d.rows(), surface.g2_d.cols(), kNaN);
  for (Eigen::Index i = 0; i < out.rows(); ++i)
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      const double v = surface.v_max(i, j);
      if (std::isfinite(v) && v >= kVisibilityCutoff) out(i, j) = (surface.g2_d(i, j) - 1.0) / v;
    }
  return out;
}

namespace {

// Exact integer moments so that the reduction does not depend on how
// repetitions are split across workers.
struct Moments {
  std::size_t nb = 0;
  std::vector<std::uint64_t> n1, n2;          // per bin: sum n, sum n^2
  std::vector<std::uint64_t> x, xx, xy, xz;   // per (bin, lag)

  explicit Moments(std::size_t bins)
      : nb(bins), n1(bins), n2(bins), x(bins * bins), xx(bins * bins), xy(bins * bins), xz(bins * bins) {}

  void add(const std::uint32_t* c) {
    for (std::size_t b = 0; b < nb; ++b) {
      const std::uint64_t y = c[b];
      n1[b] += y;
      n2[b] += y * y;
      for (std::size_t l = 0; b + l < nb; ++l) {
        const std::uint64_t z = c[b + l];
        // lag 0 uses the factorial moment n(n-1) to remove the shot-noise term
        const std::uint64_t p = l == 0 ? (y == 0 ? 0 : y * (y - 1)) : y * z;
        const std::size_t k = b * nb + l;
        x[k] += p;
        xx[k] += p * p;
        xy[k] += p * y;
        xz[k] += p * z;
      }
    }
  }

  void merge(const Moments& o) {
    auto acc = [](std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b) {
      for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    };
    acc(n1, o.n1);
    acc(n2, o.n2);
    acc(x, o.x);
    acc(xx, o.xx);
    acc(xy, o.xy);
    acc(xz, o.xz);
  }
};

}  // namespace

ClickEstimate monte_carlo_clicks(double t0, double dt, std::span<const cplx> alpha, std::span<const double> power,
                                 const HeterodyneConfig& cfg, const ClickOptions& opts) {
  cfg.validate();
  if (opts.n_reps < 2) throw ConfigError("monte_carlo_clicks: need at least 2 repetitions");
  if (alpha.size() != power.size() || power.size() < 2) throw std::invalid_argument("monte_carlo_clicks: signal size");
  if (!(dt > 0.0)) throw std::invalid_argument("monte_carlo_clicks: dt must be positive");
  if (!(opts.efficiency > 0.0)) throw ConfigError("monte_carlo_clicks: efficiency must be positive");
  if (opts.bin_width < dt * (1.0 - 1e-9)) throw ConfigError("monte_carlo_clicks: bin width below the sample step");

  const double per_bin = opts.bin_width / dt;
  const auto steps_per_bin = static_cast<std::size_t>(std::lround(per_bin));
  if (std::abs(per_bin - static_cast<double>(steps_per_bin)) > 1e-6)
    throw ConfigError("monte_carlo_clicks: bin width must be a multiple of the sample step");
  const double first = (opts.t_begin - t0) / dt;
  const auto i_begin = static_cast<std::ptrdiff_t>(std::lround(first));
  if (std::abs(first - static_cast<double>(i_begin)) > 1e-6 || i_begin < 0)
    throw ConfigError("monte_carlo_clicks: window start must be a sample time");
  const auto nb = static_cast<std::size_t>(std::floor((opts.t_end - opts.t_begin) / opts.bin_width + 1e-9));
  if (nb < 1 || static_cast<std::size_t>(i_begin) + nb * steps_per_bin > power.size() - 1)
    throw ConfigError("monte_carlo_clicks: window outside the signal");

  // Bin integrals of the theta-independent rate and of the complex beat
  // amplitude, so that Lambda_b(theta) = a_b + Re[c_b e^{-i theta}].
  const double beat = 2.0 * std::sqrt(cfg.polarization_overlap * cfg.p_lo);
  auto rate = [&](std::size_t i) { return cfg.p_lo + power[i]; };
  auto amp = [&](std::size_t i) {
    const double t = t0 + static_cast<double>(i) * dt;
    return beat * alpha[i] * std::polar(1.0, -cfg.omega_lo * t);
  };
  std::vector<double> a(nb);
  std::vector<cplx> c(nb);
  ClickEstimate est;
  est.record.bin_edges.resize(nb + 1);
  est.bin_centers.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    const std::size_t lo = static_cast<std::size_t>(i_begin) + b * steps_per_bin;
    double sa = 0.5 * (rate(lo) + rate(lo + steps_per_bin));
    cplx sc = 0.5 * (amp(lo) + amp(lo + steps_per_bin));
    for (std::size_t i = lo + 1; i < lo + steps_per_bin; ++i) {
      sa += rate(i);
      sc += amp(i);
    }
    a[b] = opts.efficiency * dt * sa;
    c[b] = opts.efficiency * dt * sc;
    est.record.bin_edges[b] = opts.t_begin + static_cast<double>(b) * opts.bin_width;
    est.bin_centers[b] = est.record.bin_edges[b] + 0.5 * opts.bin_width;
  }
  est.record.bin_edges[nb] = opts.t_begin + static_cast<double>(nb) * opts.bin_width;
  est.record.n_reps = opts.n_reps;
  if (opts.keep_counts) est.record.counts.assign(static_cast<std::size_t>(opts.n_reps) * nb, 0);

  const std::size_t n_reps = static_cast<std::size_t>(opts.n_reps);
  const std::size_t workers = static_cast<std::size_t>(std::max(1, opts.threads));
  const std::size_t chunk = (n_reps + workers - 1) / workers;
  std::vector<Moments> partial(workers, Moments(nb));
  parallel_for(0, workers, opts.threads, [&](std::size_t w) {
    std::vector<std::uint32_t> counts(nb);
    const std::size_t r_end = std::min(n_reps, (w + 1) * chunk);
    for (std::size_t r = w * chunk; r < r_end; ++r) {
      SplitMix64 rng(substream_seed(opts.seed, r));
      const double theta = std::uniform_real_distribution<double>(0.0, 2.0 * kPi)(rng);
      const cplx phase = std::polar(1.0, -theta);
      for (std::size_t b = 0; b < nb; ++b) {
        const double mean = std::max(0.0, a[b] + (c[b] * phase).real());
        counts[b] = mean > 0.0 ? static_cast<std::uint32_t>(std::poisson_distribution<std::uint64_t>(mean)(rng)) : 0u;
      }
      partial[w].add(counts.data());
      if (opts.keep_counts) std::copy(counts.begin(), counts.end(), est.record.counts.begin() + r * nb);
    }
  });
  Moments total(nb);
  for (const auto& p : partial) total.merge(p);

  const double n = static_cast<double>(n_reps);
  est.mean_counts.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) est.mean_counts[b] = static_cast<double>(total.n1[b]) / n;
  const auto nbi = static_cast<Eigen::Index>(nb);
  est.g2_d = Eigen::MatrixXd::Constant(nbi, nbi, kNaN);
  est.g2_err = Eigen::MatrixXd::Constant(nbi, nbi, kNaN);
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t l = 0; b + l < nb; ++l) {
      const std::size_t k = b * nb + l;
      const double my = est.mean_counts[b], mz = est.mean_counts[b + l];
      if (!(my > 0.0 && mz > 0.0)) continue;
      const double mx = static_cast<double>(total.x[k]) / n;
      const double g = mx / (my * mz);
      // sample covariances of (X, Y, Z)
      const double vx = static_cast<double>(total.xx[k]) / n - mx * mx;
      const double vy = static_cast<double>(total.n2[b]) / n - my * my;
      const double vz = static_cast<double>(total.n2[b + l]) / n - mz * mz;
      const double cxy = static_cast<double>(total.xy[k]) / n - mx * my;
      const double cxz = static_cast<double>(total.xz[k]) / n - mx * mz;
      const double cyz = (l == 0 ? static_cast<double>(total.n2[b]) / n
                                 : static_cast<double>(total.x[k]) / n) - my * mz;
      const double gx = 1.0 / (my * mz), gy = -g / my, gz = -g / mz;
      const double var = gx * gx * vx + gy * gy * vy + gz * gz * vz +
                         2.0 * (gx * gy * cxy + gx * gz * cxz + gy * gz * cyz);
      est.g2_d(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(l)) = g;
      est.g2_err(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(l)) =
          std::sqrt(std::max(0.0, var) / (n - 1.0));
    }
  return est;
}

}  // namespace srb
