#include "srb/runs.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "srb/io.hpp"
#include "srb/oracle.hpp"

namespace srb {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

CoherenceMetrics coherence_metrics(const EnsembleResult& mean, const CoherenceSettings& settings) {
  CoherenceMetrics m;
  const auto& grid = mean.grid;
  const std::size_t ref = grid.first_node_at_or_after(settings.t_ref);
  if (ref >= grid.num_nodes() || !(mean.p_f[ref] > 0.0)) return m;
  m.series = cross_correlation(mean.alpha_f, mean.p_f, grid, settings.t_ref);
  m.available = true;
  m.x_zero = correlation_at(m.series, settings.t_ref, 0.0);
  std::vector<double> tau, y;
  for (std::size_t i = 0; i < m.series.tau.size(); ++i) {
    const double t = settings.t_ref + m.series.tau[i];
    if (t < settings.fit_t_begin - 1e-9 || t > settings.fit_t_end + 1e-9) continue;
    tau.push_back(m.series.tau[i]);
    y.push_back(m.series.x[i] * std::cos(settings.lo.omega_lo * m.series.tau[i]));
  }
  const auto fit = fit_cosine_amplitude(tau, y, settings.lo.omega_lo);
  m.amplitude = std::abs(fit.amplitude);
  m.amplitude_err = fit.amplitude_err;
  return m;
}

SimulationRun simulate_point(const RunConfig& cfg, int n_atoms, double area_pi, int threads) {
  SimulationRun run;
  run.n_atoms = n_atoms;
  run.area_pi = area_pi;
  const auto params = cfg.physics_for(n_atoms);
  const auto grid = cfg.grid();
  RunOptions opts;
  opts.cascade.n_phi = cfg.n_phi;
  opts.cascade.keep_per_atom = false;
  opts.threads = threads;
  run.avg = average_realizations(params, cfg.plan(), cfg.preparation(area_pi), grid, opts);

  const auto& mean = run.avg.mean;
  const auto pk = peak_and_delay(mean.p_f, grid);
  run.metrics.p_max = pk.p_max;
  run.metrics.t_delay = pk.t_delay;
  if (mean.stored_energy > 0.0) {
    run.eta = forward_fraction(mean.p_f, grid, mean.stored_energy, params.gamma);
    run.metrics.eta_f = run.eta.eta_f;
    run.eta_absorbed = run.eta.eta_f * mean.stored_energy / absorbed_energy(mean);
  }
  run.coherence = coherence_metrics(mean, cfg.coherence);
  run.ledger = energy_ledger(mean, params);
  return run;
}

ScalingAnalysis analyze_scaling(std::span<const ScalingRow> rows) {
  ScalingAnalysis a;
  std::vector<ScalingPoint> pmax, eta;
  for (const auto& r : rows) {
    pmax.emplace_back(r.n_atoms, r.p_max);
    eta.emplace_back(r.n_atoms, r.eta_f);
  }
  if (pmax.size() < 6) return a;
  a.threshold = detect_threshold(pmax);
  a.has_threshold = true;
  const double knee = a.threshold.n_threshold;
  std::size_t n_below = 0, n_above = 0;
  double eta_sum = 0.0;
  for (const auto& [n, y] : eta) {
    if (n < knee) {
      ++n_below;
      eta_sum += y;
    } else {
      ++n_above;
    }
  }
  if (n_below > 0) a.eta_plateau = eta_sum / static_cast<double>(n_below);
  const double lo = pmax.front().first, hi = pmax.back().first;
  if (n_below >= 3) {
    a.below = fit_power_law(pmax, lo, std::nextafter(knee, 0.0));
    a.below_ok = true;
  }
  if (n_above >= 3) {
    a.above = fit_power_law(pmax, knee, hi);
    a.eta_above = fit_power_law(eta, knee, hi);
    a.above_ok = a.eta_above_ok = true;
  }
  return a;
}

ScanN run_scan_n(const RunConfig& cfg, int threads, const std::function<void(const SimulationRun&)>& on_point) {
  if (cfg.scan.n_list.empty()) throw ConfigError("scan.n_list is empty");
  ScanN scan;
  std::vector<ScalingRow> rows;
  for (int n : cfg.scan.n_list) {
    scan.runs.push_back(simulate_point(cfg, n, cfg.area_pi, threads));
    const auto& r = scan.runs.back();
    rows.push_back({n, r.metrics.p_max, r.metrics.eta_f});
    if (on_point) on_point(r);
  }
  scan.scaling = analyze_scaling(rows);
  return scan;
}

double area_asymmetry(const std::vector<std::vector<double>>& normalized, std::size_t center) {
  const std::size_t n = normalized.size();
  if (center == 0 || center + 1 >= n) return std::numeric_limits<double>::quiet_NaN();
  auto rms = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
  };
  const std::size_t pairs = std::min(center, n - 1 - center);
  double total = 0.0;
  for (std::size_t k = 1; k <= pairs; ++k) {
    const auto& a = normalized[center - k];
    const auto& b = normalized[center + k];
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    const double scale = 0.5 * (rms(a) + rms(b));
    total += scale > 0.0 ? rms(d) / scale : 0.0;
  }
  return total / static_cast<double>(pairs);
}

AreaScan run_scan_area(const RunConfig& cfg, int threads, const std::function<void(const SimulationRun&)>& on_point) {
  if (cfg.scan.area_list_pi.empty()) throw ConfigError("scan.area_list_pi is empty");
  AreaScan scan;
  scan.coherence_available = true;
  for (double a : cfg.scan.area_list_pi) {
    scan.runs.push_back(simulate_point(cfg, cfg.physics.n_atoms, a, threads));
    const auto& r = scan.runs.back();
    const auto& p = r.avg.mean.p_f;
    std::vector<double> norm(p.begin() + static_cast<std::ptrdiff_t>(r.avg.mean.zero_node), p.end());
    for (auto& x : norm) x = r.metrics.p_max > 0.0 ? x / r.metrics.p_max : 0.0;
    scan.normalized.push_back(std::move(norm));
    scan.coherence_available = scan.coherence_available && r.coherence.available;
    if (on_point) on_point(r);
  }
  for (std::size_t i = 1; i < scan.runs.size(); ++i) {
    if (scan.runs[i].metrics.t_delay > scan.runs[scan.argmax_delay].metrics.t_delay) scan.argmax_delay = i;
    if (scan.coherence_available &&
        scan.runs[i].coherence.amplitude < scan.runs[scan.argmin_coherence].coherence.amplitude)
      scan.argmin_coherence = i;
  }
  scan.asymmetry = area_asymmetry(scan.normalized, scan.argmax_delay);
  return scan;
}

namespace {

const std::vector<std::string> kTraceHeader = {"t_ns", "p_f_mean", "p_f_std", "p_free_mean", "excitation_mean"};

void write_trace(const fs::path& file, const DisorderAverage& avg) {
  CsvWriter w(file, kTraceHeader);
  const auto& m = avg.mean;
  for (std::size_t i = 0; i < m.grid.num_nodes(); ++i)
    w.row({m.grid.nodes()[i], m.p_f[i], avg.p_f_std[i], m.p_free[i], m.excitation[i]});
}

ojson stats_json(const ScalarStats& s) { return {{"mean", json_number(s.mean)}, {"std", json_number(s.std)}}; }

ojson run_json(const SimulationRun& r) {
  ojson j;
  j["n_atoms"] = r.n_atoms;
  j["area_pi"] = json_number(r.area_pi);
  j["p_max"] = json_number(r.metrics.p_max);
  j["t_delay_ns"] = json_number(r.metrics.t_delay);
  j["eta_f"] = json_number(r.metrics.eta_f);
  j["eta_f_absorbed"] = json_number(r.eta_absorbed);
  j["tail_ok"] = r.eta.tail_ok;
  j["stored_energy"] = json_number(r.avg.mean.stored_energy);
  j["coherence_amplitude"] = r.coherence.available ? json_number(r.coherence.amplitude) : ojson(nullptr);
  j["coherence_amplitude_err"] = r.coherence.available ? json_number(r.coherence.amplitude_err) : ojson(nullptr);
  j["x_zero"] = r.coherence.available ? json_number(r.coherence.x_zero) : ojson(nullptr);
  j["n_realizations"] = r.avg.n_realizations;
  j["realization_stats"] = {{"p_max", stats_json(r.avg.p_max)},
                            {"t_delay_ns", stats_json(r.avg.t_delay)},
                            {"eta_f", stats_json(r.avg.eta_f)},
                            {"stored_energy", stats_json(r.avg.stored_energy)}};
  j["ledger"] = {{"max_abs_residual", json_number(r.ledger.max_abs_residual)},
                 {"integrated_residual", json_number(r.ledger.integrated_residual)}};
  return j;
}

ojson power_law_json(const PowerLawFit& f) {
  return {{"exponent", json_number(f.exponent)},
          {"exponent_err", json_number(f.exponent_err)},
          {"range", {json_number(f.range_lo), json_number(f.range_hi)}},
          {"n_points", f.n_points}};
}

std::string area_label(double a) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "a%.4f", a);
  return buf;
}

}  // namespace

void command_simulate(const RunConfig& cfg, int threads) {
  const fs::path out(cfg.out_dir);
  const auto run = simulate_point(cfg, cfg.physics.n_atoms, cfg.area_pi, threads);
  write_trace(out / "trace.csv", run.avg);
  if (run.coherence.available) {
    CsvWriter w(out / "correlation.csv", {"tau_ns", "x", "x_modulated"});
    for (std::size_t i = 0; i < run.coherence.series.tau.size(); ++i) {
      const double tau = run.coherence.series.tau[i];
      w.row({tau, run.coherence.series.x[i],
             run.coherence.series.x[i] * std::cos(cfg.coherence.lo.omega_lo * tau)});
    }
  }
  write_json(out / "summary.json", run_json(run));
  write_text(out / "config.ini", serialize_config(cfg));
}

void command_scan_n(const RunConfig& cfg, int threads) {
  const fs::path out(cfg.out_dir);
  fs::create_directories(out / "traces");
  CsvWriter table(out / "scan_n.csv", {"n_atoms", "p_max", "t_delay_ns", "eta_f", "stored_energy", "p_max_std"});
  auto scan = run_scan_n(cfg, threads, [&](const SimulationRun& r) {
    write_trace(out / "traces" / ("trace_n" + std::to_string(r.n_atoms) + ".csv"), r.avg);
    table.row({static_cast<double>(r.n_atoms), r.metrics.p_max, r.metrics.t_delay, r.metrics.eta_f,
               r.avg.mean.stored_energy, r.avg.p_max.std});
  });
  write_trace(out / "trace.csv", scan.runs.back().avg);

  const auto& s = scan.scaling;
  const auto& last = scan.runs.back();
  ojson j;
  j["p_max"] = json_number(last.metrics.p_max);
  j["t_delay_ns"] = json_number(last.metrics.t_delay);
  j["eta_f"] = json_number(last.metrics.eta_f);
  j["exponent_below"] = s.below_ok ? json_number(s.below.exponent) : ojson(nullptr);
  j["exponent_above"] = s.above_ok ? json_number(s.above.exponent) : ojson(nullptr);
  j["n_threshold"] = s.has_threshold ? json_number(s.threshold.n_threshold) : ojson(nullptr);
  j["threshold_degenerate"] = s.has_threshold ? ojson(s.threshold.degenerate) : ojson(nullptr);
  j["eta_plateau"] = json_number(s.eta_plateau);
  j["eta_exponent_above"] = s.eta_above_ok ? json_number(s.eta_above.exponent) : ojson(nullptr);
  if (s.below_ok) j["fit_below"] = power_law_json(s.below);
  if (s.above_ok) j["fit_above"] = power_law_json(s.above);
  if (s.eta_above_ok) j["fit_eta_above"] = power_law_json(s.eta_above);
  j["points"] = ojson::array();
  for (const auto& r : scan.runs) j["points"].push_back(run_json(r));
  write_json(out / "summary.json", j);
  write_text(out / "config.ini", serialize_config(cfg));
}

void command_scan_area(const RunConfig& cfg, int threads) {
  const fs::path out(cfg.out_dir);
  fs::create_directories(out / "traces");
  CsvWriter table(out / "scan_area.csv",
                  {"area_pi", "p_max", "t_delay_ns", "eta_f", "stored_energy", "coherence_amplitude", "x_zero"});
  auto scan = run_scan_area(cfg, threads, [&](const SimulationRun& r) {
    write_trace(out / "traces" / ("trace_" + area_label(r.area_pi) + ".csv"), r.avg);
    table.row({r.area_pi, r.metrics.p_max, r.metrics.t_delay, r.metrics.eta_f, r.avg.mean.stored_energy,
               r.coherence.amplitude, r.coherence.x_zero});
  });

  // normalized trace matrix, one column per area, t >= 0
  std::vector<std::string> header = {"t_ns"};
  for (const auto& r : scan.runs) header.push_back(area_label(r.area_pi));
  CsvWriter map(out / "area_map.csv", header);
  const auto& grid = scan.runs.front().avg.mean.grid;
  const std::size_t z = scan.runs.front().avg.mean.zero_node;
  for (std::size_t i = 0; i < scan.normalized.front().size(); ++i) {
    std::vector<double> row = {grid.nodes()[z + i]};
    for (const auto& col : scan.normalized) row.push_back(col[i]);
    map.row(row);
  }

  const auto& peak = scan.runs[scan.argmax_delay];
  write_trace(out / "trace.csv", peak.avg);
  ojson j;
  j["p_max"] = json_number(peak.metrics.p_max);
  j["t_delay_ns"] = json_number(peak.metrics.t_delay);
  j["eta_f"] = json_number(peak.metrics.eta_f);
  j["coherence_amplitude"] = peak.coherence.available ? json_number(peak.coherence.amplitude) : ojson(nullptr);
  j["area_of_max_delay_pi"] = json_number(peak.area_pi);
  j["area_of_min_coherence_pi"] =
      scan.coherence_available ? json_number(scan.runs[scan.argmin_coherence].area_pi) : ojson(nullptr);
  j["asymmetry"] = json_number(scan.asymmetry);
  j["points"] = ojson::array();
  for (const auto& r : scan.runs) j["points"].push_back(run_json(r));
  write_json(out / "summary.json", j);
  write_text(out / "config.ini", serialize_config(cfg));
}

void command_fit_disorder(const RunConfig& cfg, int threads) {
  const fs::path out(cfg.out_dir);
  if (cfg.fit.targets.empty()) throw ConfigError("fit.target_files is empty");
  FitProblem problem;
  problem.bounds = cfg.fit.bounds;
  for (const auto& tf : cfg.fit.targets) {
    const auto table = read_csv(tf.path);
    FitTarget t;
    t.n_atoms = tf.n_atoms;
    t.prep = cfg.preparation(tf.area_pi);
    t.t = table.column("t_ns");
    // a trace.csv written by `simulate` works as a target too
    const bool plain = std::find(table.header.begin(), table.header.end(), "p_f") != table.header.end();
    t.p_f = table.column(plain ? "p_f" : "p_f_mean");
    problem.targets.push_back(std::move(t));
  }
  FitSettings fs_;
  fs_.params = cfg.physics;
  fs_.grid = cfg.grid();
  fs_.n_realizations = cfg.n_realizations;
  fs_.seed = cfg.seed;
  fs_.cascade = {cfg.n_phi, false};
  fs_.threads = threads;
  fs_.start_beta = cfg.fit.start_beta;
  fs_.start_std = cfg.fit.start_std;
  fs_.max_evals = cfg.fit.max_evals;
  fs_.max_restarts = cfg.fit.max_restarts;
  fs_.start_lattice = cfg.fit.start_lattice;
  fs_.tolerance = cfg.fit.tolerance;
  const auto fit = fit_disorder_params(problem, fs_);

  CsvWriter log(out / "fit_log.csv", {"evaluation", "beta_mean", "beta_std", "objective"});
  for (const auto& e : fit.log) log.row({static_cast<double>(e.index), e.beta_mean, e.beta_std, e.objective});

  RunConfig best = cfg;
  best.physics.beta_nominal = fit.beta_mean;
  best.beta_std = fit.beta_std;
  const auto run = simulate_point(best, problem.targets.front().n_atoms, cfg.fit.targets.front().area_pi, threads);
  write_trace(out / "trace.csv", run.avg);

  ojson j;
  j["beta_mean"] = json_number(fit.beta_mean);
  j["beta_std"] = json_number(fit.beta_std);
  j["objective"] = json_number(fit.objective);
  j["evaluations"] = fit.evaluations;
  j["restarts"] = fit.restarts;
  j["converged"] = fit.converged;
  j["degenerate"] = fit.degenerate;
  j["p_max"] = json_number(run.metrics.p_max);
  j["t_delay_ns"] = json_number(run.metrics.t_delay);
  j["eta_f"] = json_number(run.metrics.eta_f);
  write_json(out / "summary.json", j);
  write_text(out / "config.ini", serialize_config(cfg));
  if (!fit.converged)
    throw ConvergenceError("fit did not converge within " + std::to_string(cfg.fit.max_evals) + " evaluations");
}

void command_oracle_compare(const RunConfig& cfg, int /*threads*/) {
  const fs::path out(cfg.out_dir);
  const auto cmp = compare_to_cascade(cfg.physics.n_atoms, cfg.physics.beta_nominal, cfg.preparation(), cfg.grid(),
                                      cfg.physics, cfg.n_phi);
  const auto& grid = cmp.oracle.grid;
  CsvWriter w(out / "oracle_compare.csv", {"t_ns", "p_f_oracle", "p_f_cascade", "p_free_oracle", "p_free_cascade",
                                           "coherent_oracle_re", "coherent_oracle_im", "coherent_cascade_re",
                                           "coherent_cascade_im"});
  for (std::size_t i = 0; i < grid.num_nodes(); ++i)
    w.row({grid.nodes()[i], cmp.oracle.p_f[i], cmp.cascade.p_f[i], cmp.oracle.p_free[i], cmp.cascade.p_free[i],
           cmp.oracle.alpha_out[i].real(), cmp.oracle.alpha_out[i].imag(), cmp.cascade.alpha_f[i].real(),
           cmp.cascade.alpha_f[i].imag()});

  DisorderAverage avg;
  avg.mean = cmp.cascade;
  avg.p_f_std.assign(grid.num_nodes(), 0.0);
  write_trace(out / "trace.csv", avg);

  const auto pk = peak_and_delay(cmp.cascade.p_f, grid);
  const double total = integrate_nodes(grid, cmp.oracle.p_f, cmp.oracle.grid.first_node_at_or_after(0.0)) +
                       integrate_nodes(grid, cmp.oracle.p_free, cmp.oracle.grid.first_node_at_or_after(0.0)) +
                       cmp.oracle.excitation.back();
  ojson j;
  j["p_max"] = json_number(pk.p_max);
  j["t_delay_ns"] = json_number(pk.t_delay);
  j["eta_f"] = json_number(cmp.eta_cascade);
  j["eta_f_oracle"] = json_number(cmp.eta_oracle);
  j["eta_f_deviation"] = json_number(cmp.eta_deviation);
  j["t_delay_oracle_ns"] = json_number(cmp.t_delay_oracle);
  j["max_rel_pf_deviation"] = json_number(cmp.max_rel_pf_deviation);
  j["max_pf_deviation_over_peak"] = json_number(cmp.max_pf_deviation_over_peak);
  j["max_rel_coherent_deviation"] = json_number(cmp.max_rel_coherent_deviation);
  j["oracle_stored_energy"] = json_number(cmp.oracle.stored_energy);
  j["oracle_energy_residual"] = json_number(total - cmp.oracle.stored_energy);
  j["oracle_max_trace_error"] = json_number(cmp.oracle.max_trace_error);
  j["oracle_min_eigenvalue"] = json_number(cmp.oracle.min_eigenvalue);
  write_json(out / "summary.json", j);
  write_text(out / "config.ini", serialize_config(cfg));
}

void command_heterodyne(const RunConfig& cfg, int threads) {
  const fs::path out(cfg.out_dir);
  const auto& cs = cfg.coherence;
  const auto run = simulate_point(cfg, cfg.physics.n_atoms, cfg.area_pi, threads);
  write_trace(out / "trace.csv", run.avg);

  // resample the mean field onto a uniform axis
  const auto& mean = run.avg.mean;
  const double t0 = mean.grid.t_start();
  const auto n = static_cast<std::size_t>(std::floor((mean.grid.t_end() - t0) / cs.sample_dt + 1e-9)) + 1;
  std::vector<cplx> alpha(n);
  std::vector<double> power(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = t0 + static_cast<double>(i) * cs.sample_dt;
    alpha[i] = interpolate_nodes(mean.grid, std::span<const cplx>(mean.alpha_f), t);
    power[i] = std::max(interpolate_nodes(mean.grid, std::span<const double>(mean.p_f), t), std::norm(alpha[i]));
  }
  const auto lags = static_cast<std::size_t>(std::lround(cs.max_lag / cs.sample_dt)) + 1;
  const auto g1 = coherent_g1(alpha, power, lags);
  const auto surface = forward_g2(t0, cs.sample_dt, power, g1, cs.lo);
  const auto extracted = extract_g1(surface);

  const auto row_every = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(cs.row_step / cs.sample_dt)));
  const auto ref_row = static_cast<std::size_t>(std::lround((cs.t_ref - t0) / cs.sample_dt));
  CsvWriter w(out / "g2_surface.csv", {"t_ns", "tau_ns", "g2_d", "v_max", "extracted"});
  for (std::size_t i = 0; i < n; ++i) {
    if (i % row_every != 0 && i != ref_row) continue;
    for (std::size_t j = 0; j < lags && i + j < n; ++j) {
      const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
      w.row({surface.t(i), surface.tau(j), surface.g2_d(ii, jj), surface.v_max(ii, jj), extracted(ii, jj)});
    }
  }

  ojson j;
  j["p_max"] = json_number(run.metrics.p_max);
  j["t_delay_ns"] = json_number(run.metrics.t_delay);
  j["eta_f"] = json_number(run.metrics.eta_f);
  j["coherence_amplitude"] = run.coherence.available ? json_number(run.coherence.amplitude) : ojson(nullptr);
  j["x_zero"] = run.coherence.available ? json_number(run.coherence.x_zero) : ojson(nullptr);
  j["warnings"] = surface.warnings;

  if (cs.n_reps > 0) {
    ClickOptions co;
    co.n_reps = cs.n_reps;
    co.bin_width = cs.bin_width;
    co.t_begin = cs.mc_t_begin;
    co.t_end = cs.mc_t_end;
    co.efficiency = cs.efficiency;
    co.seed = cfg.seed;
    co.threads = threads;
    const auto est = monte_carlo_clicks(t0, cs.sample_dt, alpha, power, cs.lo, co);
    CsvWriter c(out / "clicks.csv", {"t_ns", "tau_ns", "mean_counts", "g2_estimate", "g2_error"});
    const auto nb = est.bin_centers.size();
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t l = 0; b + l < nb; ++l)
        c.row({est.bin_centers[b], static_cast<double>(l) * cs.bin_width, est.mean_counts[b],
               est.g2_d(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(l)),
               est.g2_err(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(l))});
    j["click_repetitions"] = cs.n_reps;
  }
  write_json(out / "summary.json", j);
  write_text(out / "config.ini", serialize_config(cfg));
}

}  // namespace srb
