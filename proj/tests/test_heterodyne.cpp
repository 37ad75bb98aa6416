#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "srb/heterodyne.hpp"

using namespace srb;

namespace {

struct Signal {
  double t0 = -2.0;
  double dt = 0.02;
  std::vector<cplx> alpha;
  std::vector<double> power;
};

// Real coherent amplitude that changes sign, as the resonant cascade output does.
Signal decaying_signal(double scale, std::size_t n) {
  Signal s;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = s.t0 + s.dt * static_cast<double>(i);
    const double a = scale * std::exp(-0.05 * (t - s.t0)) * std::cos(0.15 * t);
    s.alpha.emplace_back(a, 0.0);
    s.power.push_back(a * a);
  }
  return s;
}

// Exact first and second moments of the binned Poisson counts under a
// uniform LO phase: E[L_b] = a_b, E[L_b L_c] = a_b a_c + Re(c_b c_c*) / 2,
// with a_b, c_b trapezoid integrals of the phase-free rate and the beat.
struct BinnedMoments {
  std::vector<double> a;
  std::vector<cplx> c;
};

BinnedMoments exact_bins(const Signal& s, const HeterodyneConfig& cfg, const ClickOptions& opts) {
  const auto per_bin = static_cast<std::size_t>(std::lround(opts.bin_width / s.dt));
  const auto first = static_cast<std::size_t>(std::lround((opts.t_begin - s.t0) / s.dt));
  const auto nb = static_cast<std::size_t>(std::floor((opts.t_end - opts.t_begin) / opts.bin_width + 1e-9));
  BinnedMoments m;
  for (std::size_t b = 0; b < nb; ++b) {
    double a = 0.0;
    cplx c = 0.0;
    for (std::size_t k = 0; k <= per_bin; ++k) {
      const std::size_t i = first + b * per_bin + k;
      const double w = (k == 0 || k == per_bin) ? 0.5 : 1.0;
      const double t = s.t0 + s.dt * static_cast<double>(i);
      a += w * (cfg.p_lo + s.power[i]);
      c += w * 2.0 * std::sqrt(cfg.polarization_overlap * cfg.p_lo) * s.alpha[i] * std::polar(1.0, -cfg.omega_lo * t);
    }
    m.a.push_back(opts.efficiency * s.dt * a);
    m.c.push_back(opts.efficiency * s.dt * c);
  }
  return m;
}

double exact_g2(const BinnedMoments& m, std::size_t b, std::size_t l) {
  const double a1 = m.a[b], a2 = m.a[b + l];
  return (a1 * a2 + 0.5 * (m.c[b] * std::conj(m.c[b + l])).real()) / (a1 * a2);
}

// Forward-model surface averaged over pairs of bins with trapezoid weights.
double binned_forward(const CorrelationSurface& surf, std::size_t first, std::size_t per_bin, std::size_t b,
                      std::size_t l) {
  double num = 0.0, d1 = 0.0, d2 = 0.0;
  for (std::size_t k1 = 0; k1 <= per_bin; ++k1) {
    const std::size_t i = first + b * per_bin + k1;
    const double w1 = (k1 == 0 || k1 == per_bin) ? 0.5 : 1.0;
    d1 += w1 * surf.p_d[i];
    for (std::size_t k2 = 0; k2 <= per_bin; ++k2) {
      const std::size_t j = first + (b + l) * per_bin + k2;
      const double w2 = (k2 == 0 || k2 == per_bin) ? 0.5 : 1.0;
      const std::size_t lo = std::min(i, j), lag = std::max(i, j) - lo;
      num += w1 * w2 * surf.p_d[i] * surf.p_d[j] * surf.g2_d(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(lag));
    }
  }
  for (std::size_t k2 = 0; k2 <= per_bin; ++k2) {
    const double w2 = (k2 == 0 || k2 == per_bin) ? 0.5 : 1.0;
    d2 += w2 * surf.p_d[first + (b + l) * per_bin + k2];
  }
  return num / (d1 * d2);
}

struct PullSummary {
  int count = 0;
  int within = 0;
  double sum_sq = 0.0;
  double rms() const { return std::sqrt(sum_sq / count); }
};

template <class Expected>
PullSummary pulls(const ClickEstimate& est, std::size_t max_lag, Expected expected) {
  PullSummary p;
  const auto nb = est.bin_centers.size();
  for (std::size_t b = 0; b < nb; ++b)
    for (std::size_t l = 0; l <= max_lag && b + l < nb; ++l) {
      const double g = est.g2_d(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(l));
      const double e = est.g2_err(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(l));
      const double z = (g - expected(b, l)) / e;
      ++p.count;
      if (std::abs(z) < 3.0) ++p.within;
      p.sum_sq += z * z;
    }
  return p;
}

}  // namespace

TEST_CASE("forward model limits") {
  HeterodyneConfig cfg;
  const std::size_t n = 200, lags = 50;
  const double dt = 0.05;

  SUBCASE("no first-order coherence") {
    const std::vector<double> power(n, 30.0);
    const Eigen::MatrixXd g1 = Eigen::MatrixXd::Zero(n, lags);
    const auto s = forward_g2(0.0, dt, power, g1, cfg);
    for (std::size_t i = 0; i + lags < n; ++i)
      for (std::size_t j = 0; j < lags; ++j) CHECK(s.g2_d(i, j) == 1.0);
  }

  SUBCASE("full coherence gives fringes at the full visibility") {
    const std::vector<double> power(n, cfg.p_lo);
    const Eigen::MatrixXd g1 = Eigen::MatrixXd::Ones(n, lags);
    const auto s = forward_g2(0.0, dt, power, g1, cfg);
    for (std::size_t j = 0; j < lags; ++j) {
      // 2 P_LO P / (P_LO + P)^2 peaks at 1/2 for P = P_LO
      CHECK(s.v_max(0, j) == doctest::Approx(0.5).epsilon(1e-15));
      CHECK(s.g2_d(0, j) - 1.0 == doctest::Approx(0.5 * std::cos(cfg.omega_lo * s.tau(j))).scale(1.0).epsilon(1e-14));
    }
    CHECK_FALSE(s.warnings.empty());
  }

  SUBCASE("weak signal visibility") {
    std::vector<double> power(n);
    for (std::size_t i = 0; i < n; ++i) power[i] = 1.0 + 0.5 * std::sin(0.1 * i);
    const Eigen::MatrixXd g1 = Eigen::MatrixXd::Ones(n, lags);
    const auto s = forward_g2(0.0, dt, power, g1, cfg);
    CHECK(s.warnings.empty());
    for (std::size_t i = 0; i + lags < n; i += 7)
      for (std::size_t j = 0; j < lags; j += 5) {
        const double lead = 2.0 * std::sqrt(power[i] * power[i + j]) / cfg.p_lo;
        CHECK(std::abs(s.v_max(i, j) - lead) < 5e-4 * lead);
      }
  }

  SUBCASE("polarization overlap scales the visibility") {
    const std::vector<double> power(n, 20.0);
    const Eigen::MatrixXd g1 = Eigen::MatrixXd::Ones(n, lags);
    HeterodyneConfig half = cfg;
    half.polarization_overlap = 0.5;
    const auto a = forward_g2(0.0, dt, power, g1, cfg);
    const auto b = forward_g2(0.0, dt, power, g1, half);
    CHECK(b.v_max(3, 4) == doctest::Approx(0.5 * a.v_max(3, 4)).epsilon(1e-15));
  }
}

TEST_CASE("visibility never exceeds one") {
  HeterodyneConfig cfg;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::vector<double> power(300);
  for (auto& p : power) p = cfg.p_lo * u(rng);
  power[10] = cfg.p_lo;
  const auto s = forward_g2(0.0, 0.1, power, Eigen::MatrixXd::Ones(300, 40), cfg);
  CHECK(s.v_max.array().isNaN().count() > 0);
  for (Eigen::Index i = 0; i < s.v_max.rows(); ++i)
    for (Eigen::Index j = 0; j < s.v_max.cols(); ++j)
      if (!std::isnan(s.v_max(i, j))) CHECK(s.v_max(i, j) <= 1.0 + 1e-12);
  CHECK(s.v_max(10, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.v_max.array().isNaN().select(0.0, s.v_max).maxCoeff() <= 0.5 + 1e-15);
}

TEST_CASE("forward then extract is the identity") {
  HeterodyneConfig cfg;
  const auto sig = decaying_signal(20.0, 1500);
  const std::size_t lags = 400;
  const auto g1 = coherent_g1(sig.alpha, sig.power, lags);
  const auto surf = forward_g2(sig.t0, sig.dt, sig.power, g1, cfg);
  const auto back = extract_g1(surf);
  int compared = 0, cut = 0;
  for (Eigen::Index i = 0; i < g1.rows(); ++i)
    for (Eigen::Index j = 0; j < g1.cols(); ++j) {
      if (std::isnan(g1(i, j))) continue;
      const double expected = std::cos(cfg.omega_lo * surf.tau(static_cast<std::size_t>(j))) * g1(i, j);
      if (surf.v_max(i, j) >= kVisibilityCutoff) {
        CHECK(std::abs(back(i, j) - expected) < 1e-12);
        ++compared;
      } else {
        CHECK(std::isnan(back(i, j)));
        ++cut;
      }
    }
  CHECK(compared > 100000);
  CHECK(cut > 0);  // zero crossings of the amplitude fall below the cutoff
}

TEST_CASE("flat surface extracts to zero") {
  CorrelationSurface s;
  s.dt = 0.1;
  s.g2_d = Eigen::MatrixXd::Ones(10, 5);
  s.v_max = Eigen::MatrixXd::Constant(10, 5, 0.3);
  s.v_max(2, 3) = 1e-4;
  auto out = extract_g1(s);
  CHECK(std::isnan(out(2, 3)));
  out(2, 3) = 0.0;
  CHECK(out.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("coherent g1 of a real amplitude") {
  const std::vector<cplx> alpha{1.0, -2.0, 0.0, 3.0};
  const std::vector<double> power{1.0, 4.0, 0.0, 18.0};
  const auto g1 = coherent_g1(alpha, power, 3);
  CHECK(g1(0, 0) == 1.0);
  CHECK(g1(0, 1) == -1.0);
  CHECK(g1(0, 2) == 0.0);
  CHECK(g1(1, 2) == doctest::Approx(-6.0 / std::sqrt(72.0)));
  CHECK(std::isnan(g1(3, 1)));
}

TEST_CASE("LO-only clicks are uncorrelated") {
  HeterodyneConfig cfg;
  Signal s;
  s.alpha.assign(1500, 0.0);
  s.power.assign(1500, 0.0);
  ClickOptions opts;
  opts.n_reps = 20000;
  opts.t_begin = 0.0;
  opts.t_end = 20.0;
  opts.seed = 9;
  const auto est = monte_carlo_clicks(s.t0, s.dt, s.alpha, s.power, cfg, opts);
  CHECK(est.bin_centers.size() == 100);
  const auto p = pulls(est, 99, [](std::size_t, std::size_t) { return 1.0; });
  MESSAGE(p.within << " of " << p.count << " within 3 sigma, rms pull " << p.rms());
  CHECK(p.within >= 0.99 * p.count);
  CHECK(p.rms() > 0.9);
  CHECK(p.rms() < 1.1);
  for (double m : est.mean_counts) CHECK(std::abs(m - cfg.p_lo * 0.2) < 5.0 * std::sqrt(cfg.p_lo * 0.2 / opts.n_reps));
}

TEST_CASE("click estimate reproduces the forward model") {
  HeterodyneConfig cfg;
  const auto sig = decaying_signal(10.0, 1500);
  ClickOptions opts;
  opts.n_reps = 100000;
  opts.t_begin = 0.0;
  opts.t_end = 16.0;
  opts.seed = 21;
  opts.threads = 4;
  const auto est = monte_carlo_clicks(sig.t0, sig.dt, sig.alpha, sig.power, cfg, opts);
  const auto exact = exact_bins(sig, cfg, opts);

  const std::size_t per_bin = 10, first = 100, max_lag = 30;
  const std::size_t lags = (max_lag + 1) * per_bin + 1;
  const auto surf = forward_g2(sig.t0, sig.dt, sig.power, coherent_g1(sig.alpha, sig.power, lags), cfg);
  double worst_model_gap = 0.0;
  for (std::size_t b = 0; b < exact.a.size(); ++b)
    for (std::size_t l = 0; l <= max_lag && b + l < exact.a.size(); ++l)
      worst_model_gap = std::max(worst_model_gap, std::abs(binned_forward(surf, first, per_bin, b, l) - exact_g2(exact, b, l)));
  // the forward model binned like the detector equals the exact count moments
  CHECK(worst_model_gap < 1e-10);

  const auto p = pulls(est, max_lag, [&](std::size_t b, std::size_t l) { return binned_forward(surf, first, per_bin, b, l); });
  MESSAGE(p.within << " of " << p.count << " within 3 sigma, rms pull " << p.rms());
  CHECK(p.within >= 0.99 * p.count);
  CHECK(p.rms() > 0.85);
  CHECK(p.rms() < 1.15);

  // fringes are resolved: the largest contrast is many error bars wide
  double contrast = 0.0, err = 0.0;
  for (std::size_t l = 0; l <= max_lag; ++l) {
    const double g = est.g2_d(0, static_cast<Eigen::Index>(l)) - 1.0;
    if (std::abs(g) > contrast) {
      contrast = std::abs(g);
      err = est.g2_err(0, static_cast<Eigen::Index>(l));
    }
  }
  CHECK(contrast > 20.0 * err);
}

TEST_CASE("estimator error halves when repetitions quadruple") {
  HeterodyneConfig cfg;
  const auto sig = decaying_signal(10.0, 1500);
  ClickOptions opts;
  opts.t_begin = 0.0;
  opts.t_end = 10.0;
  opts.threads = 4;
  const auto exact = exact_bins(sig, cfg, opts);
  // the LO phase is shared by all bins of a repetition, so errors are
  // correlated across the surface; pool several independent runs
  auto spread = [&](int reps, std::uint64_t seed_base) {
    opts.n_reps = reps;
    double reported = 0.0, actual = 0.0;
    int n = 0;
    for (std::uint64_t run = 0; run < 8; ++run) {
      opts.seed = seed_base + run;
      const auto est = monte_carlo_clicks(sig.t0, sig.dt, sig.alpha, sig.power, cfg, opts);
      for (std::size_t b = 0; b < exact.a.size(); ++b)
        for (std::size_t l = 0; l <= 20 && b + l < exact.a.size(); ++l) {
          const auto bi = static_cast<Eigen::Index>(b), li = static_cast<Eigen::Index>(l);
          reported += est.g2_err(bi, li) * est.g2_err(bi, li);
          actual += std::pow(est.g2_d(bi, li) - exact_g2(exact, b, l), 2);
          ++n;
        }
    }
    return std::pair{std::sqrt(reported / n), std::sqrt(actual / n)};
  };
  const auto [rep_small, act_small] = spread(10000, 100);
  const auto [rep_large, act_large] = spread(40000, 200);
  MESSAGE("reported error ratio " << rep_small / rep_large << ", observed error ratio " << act_small / act_large);
  CHECK(rep_small / rep_large > 1.4);
  CHECK(rep_small / rep_large < 2.6);
  CHECK(act_small / act_large > 1.4);
  CHECK(act_small / act_large < 2.6);
}

TEST_CASE("click records are reproducible") {
  HeterodyneConfig cfg;
  const auto sig = decaying_signal(5.0, 600);
  ClickOptions opts;
  opts.n_reps = 500;
  opts.t_begin = 0.0;
  opts.t_end = 8.0;
  opts.keep_counts = true;
  opts.seed = 4;
  const auto a = monte_carlo_clicks(sig.t0, sig.dt, sig.alpha, sig.power, cfg, opts);
  const auto b = monte_carlo_clicks(sig.t0, sig.dt, sig.alpha, sig.power, cfg, opts);
  opts.threads = 3;
  const auto c = monte_carlo_clicks(sig.t0, sig.dt, sig.alpha, sig.power, cfg, opts);
  CHECK(a.record.counts.size() == 500 * 40);
  CHECK(a.record.counts == b.record.counts);
  CHECK(a.record.counts == c.record.counts);
  CHECK(a.record.bin_edges == c.record.bin_edges);
  CHECK(a.mean_counts == c.mean_counts);
  for (Eigen::Index i = 0; i < a.g2_d.rows(); ++i)
    for (Eigen::Index j = 0; j + i < a.g2_d.rows(); ++j) CHECK(a.g2_d(i, j) == c.g2_d(i, j));
  opts.seed = 5;
  CHECK(monte_carlo_clicks(sig.t0, sig.dt, sig.alpha, sig.power, cfg, opts).record.counts != a.record.counts);
}

TEST_CASE("click options are validated") {
  HeterodyneConfig cfg;
  const auto sig = decaying_signal(5.0, 600);
  ClickOptions opts;
  opts.t_begin = 0.0;
  opts.t_end = 8.0;
  opts.n_reps = 1;
  CHECK_THROWS_AS(monte_carlo_clicks(sig.t0, sig.dt, sig.alpha, sig.power, cfg, opts), ConfigError);
  opts.n_reps = 10;
  opts.bin_width = 0.03;
  CHECK_THROWS_AS(monte_carlo_clicks(sig.t0, sig.dt, sig.alpha, sig.power, cfg, opts), ConfigError);
  opts.bin_width = 0.01;
  CHECK_THROWS_AS(monte_carlo_clicks(sig.t0, sig.dt, sig.alpha, sig.power, cfg, opts), ConfigError);
  opts.bin_width = 0.2;
  opts.t_end = 50.0;
  CHECK_THROWS_AS(monte_carlo_clicks(sig.t0, sig.dt, sig.alpha, sig.power, cfg, opts), ConfigError);
  opts.t_end = 8.0;
  cfg.polarization_overlap = 1.5;
  CHECK_THROWS_AS(monte_carlo_clicks(sig.t0, sig.dt, sig.alpha, sig.power, cfg, opts), ConfigError);
}
