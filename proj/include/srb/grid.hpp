#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace srb {

/// One uniformly stepped piece of a time grid.
struct Segment {
  double t0 = 0.0;
  double t1 = 0.0;
  int steps = 1;

  double dt() const { return (t1 - t0) / steps; }
};

/// Piecewise-uniform time grid in ns.
///
/// Fields are only required to be smooth inside a segment; a segment
/// boundary may carry a jump (pulse switch-off at t = 0). Traces are sampled
/// at "fine" points: every node and every step midpoint of each segment, so
/// a segment with `steps` steps owns 2*steps+1 fine samples and a boundary
/// time appears twice (left limit, then right limit).
///
/// Node-level series use the right-limit value at interior boundaries.
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<Segment> segments);

  /// Uniform grid [t_start, t_end] with nominal step dt.
  static TimeGrid uniform(double t_start, double t_end, double dt);

  /// Pulse window [-pulse_duration, 0] at dt_pulse followed by
  /// [0, t_end] at dt_decay. pulse_duration == 0 gives only the decay part.
  static TimeGrid pulse_and_decay(double pulse_duration, double dt_pulse, double t_end,
                                  double dt_decay);

  const std::vector<Segment>& segments() const { return segments_; }
  double t_start() const { return segments_.front().t0; }
  double t_end() const { return segments_.back().t1; }

  std::size_t num_nodes() const { return nodes_.size(); }
  const std::vector<double>& nodes() const { return nodes_; }

  std::size_t num_fine() const { return num_fine_; }
  /// Offset of segment `s` within the fine-sample arrays.
  std::size_t fine_offset(std::size_t s) const { return fine_offsets_[s]; }
  /// Fine-sample index that carries node `i`'s (right-limit) value.
  std::size_t node_to_fine(std::size_t i) const { return node_fine_[i]; }
  std::vector<double> fine_times() const;

  /// Index of the first node with t >= t (within 1e-9 ns).
  std::size_t first_node_at_or_after(double t) const;
  /// Index of the node nearest to t.
  std::size_t nearest_node(double t) const;

  /// Index of the segment starting at t = 0; throws if 0 is not a segment
  /// boundary or the grid start.
  std::size_t zero_segment() const;
  /// The part of the grid with t >= 0.
  TimeGrid from_zero() const;

  /// Halve every segment's step.
  TimeGrid refined() const;

 private:
  std::vector<Segment> segments_;
  std::vector<double> nodes_;
  std::vector<std::size_t> node_fine_;
  std::vector<std::size_t> fine_offsets_;
  std::size_t num_fine_ = 0;
};

/// Composite Simpson (trapezoid on an odd leftover interval) of node values
/// over nodes [from, nodes.size()).
double integrate_nodes(const TimeGrid& grid, const std::vector<double>& values, std::size_t from = 0);

/// Linear interpolation of a node series at time t, clamped to the ends.
/// At a segment boundary the right-limit node value is used.
double interpolate_nodes(const TimeGrid& grid, std::span<const double> values, double t);
std::complex<double> interpolate_nodes(const TimeGrid& grid, std::span<const std::complex<double>> values, double t);

}  // namespace srb
