#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "srb/cascade.hpp"

namespace srb {

/// SplitMix64: a counter-friendly 64-bit generator, cheap to seed, used for
/// per-atom and per-realization substreams.
class SplitMix64 {
 public:
  using result_type = std::uint64_t;
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t state_;
};

/// Seed of substream `index` under `seed`; independent of any other index.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);

/// Gaussian truncated to [0, 1].
struct TruncatedGaussian {
  double mean = 0.0112;
  double std = 0.0065;

  void validate() const;
  /// Probability mass of the untruncated Gaussian inside the bounds.
  double acceptance() const;
};

struct DisorderPlan {
  TruncatedGaussian dist;
  int n_realizations = 100;
  std::uint64_t seed = 1;
};

/// Couplings for one realization. Atom k draws from its own substream by
/// rejection against the untruncated Gaussian, so a draw never depends on
/// how many rejections another atom needed.
std::vector<double> sample_betas(const TruncatedGaussian& dist, int n_atoms, std::uint64_t realization_seed);

struct ScalarStats {
  double mean = 0.0;
  double std = 0.0;  ///< sample standard deviation across realizations
};

struct DisorderAverage {
  EnsembleResult mean;           ///< pointwise mean of every series
  std::vector<double> p_f_std;   ///< pointwise sample standard deviation of P_f
  ScalarStats stored_energy;
  ScalarStats p_max;
  ScalarStats t_delay;
  ScalarStats eta_f;
  int n_realizations = 0;
};

struct RunOptions {
  CascadeOptions cascade;
  int threads = 1;
};

/// One propagate_ensemble per realization, realization r using
/// sample_betas(dist, N, substream_seed(seed, r)). Reduction runs in
/// realization order, so results do not depend on the thread count.
DisorderAverage average_realizations(const PhysicalParams& params, const DisorderPlan& plan, const Preparation& prep,
                                     const TimeGrid& grid, const RunOptions& opts = {});

}  // namespace srb
