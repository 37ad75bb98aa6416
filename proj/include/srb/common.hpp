#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace srb {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

/// Default single-atom decay rate in 1/ns (2 pi x 5.22 MHz).
inline constexpr double kDefaultGamma = 0.032797;

// Error categories map one-to-one onto CLI exit codes (2, 3, 4).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Physical constants of the ensemble. Time in ns, powers in photons/ns.
struct PhysicalParams {
  double gamma = kDefaultGamma;
  double beta_nominal = 0.0112;
  int n_atoms = 1;

  void validate() const;
};

}  // namespace srb
