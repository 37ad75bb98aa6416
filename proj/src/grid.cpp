#include "srb/grid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "srb/common.hpp"

namespace srb {

namespace {
constexpr double kTimeTol = 1e-9;

int steps_for(double t0, double t1, double dt) {
  const double n = (t1 - t0) / dt;
  return std::max(1, static_cast<int>(std::lround(std::ceil(n - 1e-9))));
}
}  // namespace

void PhysicalParams::validate() const {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be positive");
  if (!(beta_nominal > 0.0 && beta_nominal < 1.0)) throw ConfigError("beta_nominal must lie in (0, 1)");
  if (n_atoms < 1) throw ConfigError("n_atoms must be >= 1");
}

TimeGrid::TimeGrid(std::vector<Segment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw ConfigError("time grid needs at least one segment");
  bool has_zero = false;
  for (std::size_t s = 0; s < segments_.size(); ++s) {
    const auto& seg = segments_[s];
    if (!(seg.t1 > seg.t0) || seg.steps < 1) throw ConfigError("time grid segment must have t0 < t1 and steps >= 1");
    if (s > 0 && std::abs(seg.t0 - segments_[s - 1].t1) > kTimeTol)
      throw ConfigError("time grid segments must be contiguous");
    const double dt = seg.dt();
    for (int i = 0; i <= seg.steps; ++i)
      if (std::abs(seg.t0 + i * dt) < kTimeTol) has_zero = true;
  }
  if (!has_zero) throw ConfigError("time grid must contain t = 0 as a node");

  std::size_t offset = 0;
  for (std::size_t s = 0; s < segments_.size(); ++s) {
    const auto& seg = segments_[s];
    fine_offsets_.push_back(offset);
    const int first = (s == 0) ? 0 : 1;
    if (s > 0) {
      // boundary node takes the right limit from this segment
      node_fine_.back() = offset;
    }
    for (int i = first; i <= seg.steps; ++i) {
      nodes_.push_back(i == seg.steps ? seg.t1 : seg.t0 + i * seg.dt());
      node_fine_.push_back(offset + 2 * static_cast<std::size_t>(i));
    }
    offset += 2 * static_cast<std::size_t>(seg.steps) + 1;
  }
  num_fine_ = offset;
}

TimeGrid TimeGrid::uniform(double t_start, double t_end, double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(t_end > t_start)) throw ConfigError("t_start must be < t_end");
  if (t_start < -kTimeTol && t_end > kTimeTol)
    return TimeGrid({{t_start, 0.0, steps_for(t_start, 0.0, dt)}, {0.0, t_end, steps_for(0.0, t_end, dt)}});
  return TimeGrid({{t_start, t_end, steps_for(t_start, t_end, dt)}});
}

TimeGrid TimeGrid::pulse_and_decay(double pulse_duration, double dt_pulse, double t_end, double dt_decay) {
  if (!(dt_pulse > 0.0) || !(dt_decay > 0.0)) throw ConfigError("dt must be positive");
  if (!(t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (pulse_duration < 0.0) throw ConfigError("pulse duration must be >= 0");
  std::vector<Segment> segs;
  if (pulse_duration > 0.0) segs.push_back({-pulse_duration, 0.0, steps_for(-pulse_duration, 0.0, dt_pulse)});
  segs.push_back({0.0, t_end, steps_for(0.0, t_end, dt_decay)});
  return TimeGrid(std::move(segs));
}

std::size_t TimeGrid::zero_segment() const {
  for (std::size_t s = 0; s < segments_.size(); ++s)
    if (std::abs(segments_[s].t0) < kTimeTol) return s;
  throw ConfigError("t = 0 must be a segment boundary");
}

TimeGrid TimeGrid::from_zero() const {
  const auto first = segments_.begin() + static_cast<std::ptrdiff_t>(zero_segment());
  return TimeGrid(std::vector<Segment>(first, segments_.end()));
}

std::vector<double> TimeGrid::fine_times() const {
  std::vector<double> out;
  out.reserve(num_fine_);
  for (const auto& seg : segments_) {
    const double half = 0.5 * seg.dt();
    for (int i = 0; i <= 2 * seg.steps; ++i) out.push_back(i == 2 * seg.steps ? seg.t1 : seg.t0 + i * half);
  }
  return out;
}

std::size_t TimeGrid::first_node_at_or_after(double t) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), t - kTimeTol);
  return static_cast<std::size_t>(it - nodes_.begin());
}

std::size_t TimeGrid::nearest_node(double t) const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < nodes_.size(); ++i)
    if (std::abs(nodes_[i] - t) < std::abs(nodes_[best] - t)) best = i;
  return best;
}

TimeGrid TimeGrid::refined() const {
  auto segs = segments_;
  for (auto& s : segs) s.steps *= 2;
  return TimeGrid(std::move(segs));
}

double integrate_nodes(const TimeGrid& grid, const std::vector<double>& values, std::size_t from) {
  if (values.size() != grid.num_nodes()) throw std::invalid_argument("integrate_nodes: size mismatch");
  double total = 0.0;
  std::size_t seg_first = 0;
  for (const auto& seg : grid.segments()) {
    const std::size_t seg_last = seg_first + static_cast<std::size_t>(seg.steps);
    const std::size_t lo = std::max(seg_first, from);
    if (lo < seg_last) {
      const double h = seg.dt();
      std::size_t n = seg_last - lo;
      std::size_t i = lo;
      for (; n >= 2; n -= 2, i += 2) total += h / 3.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
      if (n == 1) total += 0.5 * h * (values[i] + values[i + 1]);
    }
    seg_first = seg_last;
  }
  return total;
}

namespace {

template <class T>
T interpolate_impl(const TimeGrid& grid, std::span<const T> values, double t) {
  const auto& x = grid.nodes();
  if (values.size() != x.size()) throw std::invalid_argument("interpolate_nodes: size mismatch");
  if (t <= x.front()) return values.front();
  if (t >= x.back()) return values.back();
  const auto hi = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), t) - x.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - x[lo]) / (x[hi] - x[lo]);
  return (1.0 - w) * values[lo] + w * values[hi];
}

}  // namespace

double interpolate_nodes(const TimeGrid& grid, std::span<const double> values, double t) {
  return interpolate_impl(grid, values, t);
}

std::complex<double> interpolate_nodes(const TimeGrid& grid, std::span<const std::complex<double>> values, double t) {
  return interpolate_impl(grid, values, t);
}

}  // namespace srb
