#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "srb/disorder.hpp"
#include "srb/fitting.hpp"
#include "srb/heterodyne.hpp"

namespace srb {

/// Coherence analysis and click Monte Carlo settings.
struct CoherenceSettings {
  HeterodyneConfig lo;
  double t_ref = -2.0;        ///< ns, inside the pulse
  double fit_t_begin = 0.0;   ///< absolute time window of the cosine fit, ns
  double fit_t_end = 30.0;
  double sample_dt = 0.1;     ///< uniform resampling step for surfaces, ns
  double max_lag = 40.0;      ///< ns
  double row_step = 1.0;      ///< spacing of surface rows written to disk, ns
  int n_reps = 0;             ///< click Monte Carlo repetitions; 0 disables
  double bin_width = 0.2;
  double mc_t_begin = -3.0;
  double mc_t_end = 20.0;
  double efficiency = 1.0;
};

struct ScanSettings {
  std::vector<int> n_list;
  std::vector<double> area_list_pi;
};

struct FitTargetFile {
  std::string path;
  int n_atoms = 1;
  double area_pi = 1.0;
};

struct FitConfig {
  std::vector<FitTargetFile> targets;
  FitBounds bounds;
  double start_beta = 0.02;
  double start_std = 0.01;
  int max_evals = 300;
  int max_restarts = 3;
  int start_lattice = 5;
  double tolerance = 1e-5;
};

/// Everything a CLI run needs. Grid: [-pulse duration, 0] at dt_pulse, then
/// [0, t_end] at dt_decay.
struct RunConfig {
  PhysicalParams physics;
  double beta_std = 0.0065;
  int n_phi = 32;
  Preparation::Mode mode = Preparation::Mode::driven_pulse;
  double area_pi = 1.0;  ///< pulse area in units of pi
  double duration = 4.0;
  PulseShape shape = PulseShape::rectangular;
  double ramp = 0.5;
  double t_end = 150.0;
  double dt_pulse = 0.02;
  double dt_decay = 0.1;
  int n_realizations = 100;
  std::uint64_t seed = 1;
  CoherenceSettings coherence;
  ScanSettings scan;
  FitConfig fit;
  std::string out_dir;
  bool overwrite = false;

  TimeGrid grid() const;
  Preparation preparation() const { return preparation(area_pi); }
  Preparation preparation(double area_in_pi) const;
  /// Physics with n_atoms replaced.
  PhysicalParams physics_for(int n_atoms) const;
  DisorderPlan plan() const;
  void validate() const;
};

/// INI (default) or JSON by extension; JSON uses the same sections as
/// objects. Unknown keys are rejected. Throws ConfigError.
RunConfig load_config(const std::filesystem::path& file);
RunConfig parse_config(const std::string& text, bool json);

/// INI text carrying every field; values printed to round-trip exactly.
std::string serialize_config(const RunConfig& cfg);
/// Same schema as a JSON document.
std::string serialize_config_json(const RunConfig& cfg);

}  // namespace srb
