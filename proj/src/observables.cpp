#include "srb/observables.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace srb {

PeakDelay peak_and_delay(std::span<const double> trace, const TimeGrid& grid) {
  if (trace.empty()) throw std::invalid_argument("peak_and_delay: empty trace");
  if (trace.size() != grid.num_nodes()) throw std::invalid_argument("peak_and_delay: trace does not match grid");
  const std::size_t first = grid.first_node_at_or_after(0.0);
  if (first >= trace.size()) throw std::invalid_argument("peak_and_delay: no samples at t >= 0");
  std::size_t best = first;
  for (std::size_t i = first + 1; i < trace.size(); ++i)
    if (trace[i] > trace[best]) best = i;
  return PeakDelay{trace[best], std::max(0.0, grid.nodes()[best]), best};
}

ForwardFraction forward_fraction(std::span<const double> trace, const TimeGrid& grid, double e_stored, double gamma) {
  if (!(e_stored > 0.0)) throw std::invalid_argument("forward_fraction: stored energy must be positive");
  if (!(gamma > 0.0)) throw std::invalid_argument("forward_fraction: gamma must be positive");
  const std::vector<double> values(trace.begin(), trace.end());
  const std::size_t first = grid.first_node_at_or_after(0.0);
  const double emitted = integrate_nodes(grid, values, first) + values.back() / gamma;
  const auto peak = peak_and_delay(trace, grid);
  ForwardFraction out;
  out.eta_f = emitted / e_stored;
  out.tail_ok = values.back() < 1e-3 * peak.p_max || peak.p_max == 0.0;
  return out;
}

double absorbed_energy(const EnsembleResult& result) {
  // energy balance: what left the guided mode is stored or already scattered
  // into free space by t = 0
  const double free_total = integrate_nodes(result.grid, result.p_free, 0);
  const double free_after = integrate_nodes(result.grid, result.p_free, result.zero_node);
  return result.stored_energy + (free_total - free_after);
}

PowerLawFit fit_power_law(std::span<const ScalingPoint> points, double lo, double hi) {
  std::vector<double> xs, ys;
  for (const auto& [n, y] : points) {
    if (n < lo || n > hi) continue;
    if (!(n > 0.0) || !(y > 0.0)) throw std::invalid_argument("fit_power_law: values must be positive");
    xs.push_back(std::log(n));
    ys.push_back(std::log(y));
  }
  if (xs.size() < 3) throw std::invalid_argument("fit_power_law: need at least 3 points in range");
  const double m = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_power_law: degenerate abscissae");
  PowerLawFit fit;
  fit.exponent = sxy / sxx;
  const double intercept = my - fit.exponent * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - intercept - fit.exponent * xs[i];
    rss += r * r;
  }
  fit.exponent_err = std::sqrt(rss / (m - 2.0) / sxx);
  fit.prefactor = std::exp(intercept);
  fit.range_lo = std::exp(*std::min_element(xs.begin(), xs.end()));
  fit.range_hi = std::exp(*std::max_element(xs.begin(), xs.end()));
  fit.n_points = static_cast<int>(xs.size());
  return fit;
}

namespace {

struct HingeFit {
  double rss = 0.0;
  Eigen::Vector3d coef;
  Eigen::Matrix3d normal_inv;
};

HingeFit hinge_fit(const std::vector<double>& x, const std::vector<double>& y, double xb) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = x[static_cast<std::size_t>(i)] - xb;
    a(i, 0) = 1.0;
    a(i, 1) = std::min(d, 0.0);
    a(i, 2) = std::max(d, 0.0);
    b(i) = y[static_cast<std::size_t>(i)];
  }
  HingeFit f;
  f.coef = a.colPivHouseholderQr().solve(b);
  f.rss = (a * f.coef - b).squaredNorm();
  f.normal_inv = (a.transpose() * a).inverse();
  return f;
}

}  // namespace

ThresholdFit detect_threshold(std::span<const ScalingPoint> points) {
  std::vector<ScalingPoint> pts(points.begin(), points.end());
  std::sort(pts.begin(), pts.end());
  std::vector<double> x, y;
  for (const auto& [n, v] : pts) {
    if (!(n > 0.0) || !(v > 0.0)) throw std::invalid_argument("detect_threshold: values must be positive");
    x.push_back(std::log(n));
    y.push_back(std::log(v));
  }
  const std::size_t n = x.size();
  if (n < 6) throw std::invalid_argument("detect_threshold: need at least 6 points (3 per segment)");

  // breakpoint in [x_i, x_{i+1}] keeps i+1 points at or below it
  constexpr int kScan = 200;
  double best_xb = x[2];
  double best_rss = std::numeric_limits<double>::infinity();
  std::size_t best_interval = 2;
  for (std::size_t i = 2; i + 3 < n; ++i) {
    for (int k = 0; k <= kScan; ++k) {
      const double xb = x[i] + (x[i + 1] - x[i]) * k / kScan;
      // x_{i+1} itself belongs to the upper segment, so stop just short of it
      if (k == kScan && i + 4 < n) continue;
      const double rss = hinge_fit(x, y, xb).rss;
      if (rss < best_rss - 1e-15) {
        best_rss = rss;
        best_xb = xb;
        best_interval = i;
      }
    }
  }
  // golden-section polish within one scan cell
  {
    const double cell = (x[best_interval + 1] - x[best_interval]) / kScan;
    double a = std::max(x[best_interval], best_xb - cell), b = std::min(x[best_interval + 1], best_xb + cell);
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    for (int it = 0; it < 60 && b - a > 1e-12; ++it) {
      const double c = b - phi * (b - a), d = a + phi * (b - a);
      if (hinge_fit(x, y, c).rss < hinge_fit(x, y, d).rss)
        b = d;
      else
        a = c;
    }
    const double xm = 0.5 * (a + b);
    const double rm = hinge_fit(x, y, xm).rss;
    if (rm < best_rss) {
      best_rss = rm;
      best_xb = xm;
    }
  }

  const auto f = hinge_fit(x, y, best_xb);
  ThresholdFit out;
  out.n_threshold = std::exp(best_xb);
  out.slope_below = f.coef(1);
  out.slope_above = f.coef(2);
  out.rss = f.rss;
  const double dof = static_cast<double>(n) - 3.0;
  const double s2 = dof > 0.0 ? f.rss / dof : 0.0;
  const double var_diff = s2 * (f.normal_inv(1, 1) + f.normal_inv(2, 2) - 2.0 * f.normal_inv(1, 2));
  const double diff = std::abs(out.slope_above - out.slope_below);
  const double floor = 1e-9 * (1.0 + std::abs(out.slope_above) + std::abs(out.slope_below));
  out.degenerate = diff <= std::max(floor, 2.0 * std::sqrt(std::max(0.0, var_diff)));
  return out;
}

CorrelationSeries cross_correlation(std::span<const cplx> alpha, std::span<const double> power, const TimeGrid& grid,
                                    double t_ref) {
  if (alpha.size() != grid.num_nodes() || power.size() != grid.num_nodes())
    throw std::invalid_argument("cross_correlation: series do not match grid");
  const std::size_t ref = grid.first_node_at_or_after(t_ref);
  if (ref >= grid.num_nodes()) throw std::invalid_argument("cross_correlation: t_ref outside grid");
  if (!(power[ref] > 0.0)) throw std::invalid_argument("cross_correlation: zero power at t_ref");
  CorrelationSeries out;
  const cplx a_ref = std::conj(alpha[ref]);
  for (std::size_t i = ref; i < grid.num_nodes(); ++i) {
    out.tau.push_back(grid.nodes()[i] - grid.nodes()[ref]);
    const double norm = std::sqrt(power[ref] * power[i]);
    out.x.push_back(norm > 0.0 ? (a_ref * alpha[i]).real() / norm : 0.0);
  }
  return out;
}

double correlation_at(const CorrelationSeries& series, double t_ref, double t) {
  for (std::size_t i = 0; i < series.tau.size(); ++i)
    if (series.tau[i] >= t - t_ref - 1e-9) return series.x[i];
  throw std::invalid_argument("correlation_at: time beyond series");
}

CosineFit fit_cosine_amplitude(std::span<const double> tau, std::span<const double> y, double omega) {
  if (tau.size() != y.size() || tau.size() < 2) throw std::invalid_argument("fit_cosine_amplitude: bad series");
  if (!(omega > 0.0)) throw std::invalid_argument("fit_cosine_amplitude: omega must be positive");
  const double span = tau.back() - tau.front();
  if (span < 2.0 * kPi / omega) throw std::invalid_argument("fit_cosine_amplitude: series shorter than one period");
  double scc = 0.0, syc = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const double c = std::cos(omega * tau[i]);
    scc += c * c;
    syc += y[i] * c;
  }
  CosineFit fit;
  fit.amplitude = syc / scc;
  double rss = 0.0;
  for (std::size_t i = 0; i < tau.size(); ++i) {
    const double r = y[i] - fit.amplitude * std::cos(omega * tau[i]);
    rss += r * r;
  }
  fit.amplitude_err = std::sqrt(rss / static_cast<double>(tau.size() - 1) / scc);
  return fit;
}

std::vector<double> moving_average(std::span<const double> series, int window) {
  std::vector<double> out(series.begin(), series.end());
  if (window <= 1) return out;
  const int half = window / 2;
  const int n = static_cast<int>(series.size());
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half), hi = std::min(n - 1, i + half);
    double sum = 0.0;
    for (int k = lo; k <= hi; ++k) sum += series[static_cast<std::size_t>(k)];
    out[static_cast<std::size_t>(i)] = sum / (hi - lo + 1);
  }
  return out;
}

}  // namespace srb
