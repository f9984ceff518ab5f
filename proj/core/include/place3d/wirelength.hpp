#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "place3d/model.hpp"

namespace place3d {

/// Closed interval; default-constructed is empty.
struct Interval {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  bool empty() const { return lo > hi; }
  double span() const { return empty() ? 0.0 : hi - lo; }
  double center() const { return 0.5 * (lo + hi); }
  void add(double v) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  bool contains(double v) const { return v >= lo && v <= hi; }
};

struct Box {
  Interval x, y;
  bool empty() const { return x.empty() || y.empty(); }
  void add(Point p) {
    x.add(p.x);
    y.add(p.y);
  }
};

/// max - min over the values; 0 for an empty set.
double partial_hpwl(std::span<const double> u);

/// Weighted-average smoothed span. When `grad` is non-empty it receives
/// d(value)/du_i. Exponents are shifted by the extrema so any gamma > 0 is safe.
double wa_smooth(std::span<const double> u, double gamma, std::span<double> grad = {});

/// Per-axis HBT region adding no wirelength; both inputs must be non-empty.
Interval optimal_interval(const Interval& top, const Interval& bottom);
Box optimal_region(const Box& top, const Box& bottom);

/// max{p_e, p_e+ + p_e-} on one axis. side[i] = 1 for pins on the top die.
double bistratal_axis(std::span<const double> u, std::span<const std::uint8_t> side);

/// First and second extrema of one die's pins on one axis, counted with
/// multiplicity, so dropping one of two tied maxima leaves max2 == max1.
struct AxisExtrema {
  int count = 0;
  double max1 = -std::numeric_limits<double>::infinity();
  double max2 = -std::numeric_limits<double>::infinity();
  double min1 = std::numeric_limits<double>::infinity();
  double min2 = std::numeric_limits<double>::infinity();

  void add(double v);
  Interval without(double v) const;  // extent after removing one pin at v
  Interval extent() const { return count ? Interval{min1, max1} : Interval{}; }
};

/// Per-net bounding data: full box, both partial boxes with second extrema.
struct NetBoxes {
  Box full;
  AxisExtrema x[2], y[2];  // indexed by die bit
  int pins[2] = {0, 0};
};

NetBoxes build_net_boxes(std::span<const double> px, std::span<const double> py, std::span<const std::uint8_t> side);

/// For every pin p of one net, out[p] = W_Bi(pin p on top) - W_Bi(pin p on bottom)
/// with all other pins where `side` puts them. W_Bi sums both axes.
void net_z_delta_naive(std::span<const double> px, std::span<const double> py, std::span<const std::uint8_t> side,
                       std::span<double> out);
void net_z_delta_incremental(std::span<const double> px, std::span<const double> py,
                             std::span<const std::uint8_t> side, std::span<double> out);

struct WlParams {
  double gamma = 1.0;
  double alpha = 0.0;
  double beta = 0.0;
};

struct WirelengthEval {
  double value = 0.0;      // sum of smoothed bistratal terms plus alpha times smoothed z spans
  double bistratal = 0.0;  // smoothed bistratal part only
  std::vector<double> gx, gy;
  std::vector<double> gz_hbt;  // gradient of the (unscaled) smoothed z-span sum
};

/// Global-placement wirelength over a Design. Pin offsets follow the die
/// given by the current partition of their instance.
class WirelengthModel {
 public:
  explicit WirelengthModel(const Design& design);

  const Design& design() const { return *design_; }
  std::size_t pin_count() const { return pin_inst_.size(); }
  std::span<const int> net_pin_begin() const { return net_begin_; }
  std::span<const int> pin_instance() const { return pin_inst_; }

  void pin_positions(const PlacementState& s, const Partition& delta, std::vector<double>& px,
                     std::vector<double>& py) const;

  WirelengthEval evaluate(const PlacementState& s, const WlParams& params, int threads = 1) const;

  /// Unsmoothed sum of bistratal wirelength at the current partition.
  double exact_bistratal(const PlacementState& s) const;
  /// Number of crossing nets at the current partition.
  long long crossing_nets(const PlacementState& s) const;

  /// Depth gradient of the bistratal sum: (4/d_z) * sum of per-pin deltas.
  std::vector<double> fd_z_gradient_naive(const PlacementState& s, int threads = 1) const;
  std::vector<double> fd_z_gradient_incremental(const PlacementState& s, int threads = 1) const;

 private:
  template <class F>
  std::vector<double> fd_z_gradient(const PlacementState& s, int threads, F per_net) const;

  const Design* design_;
  std::vector<int> net_begin_;  // CSR offsets into pin arrays, size |E|+1
  std::vector<int> pin_inst_;
  std::vector<PinRef> pin_ref_;
};

/// ((|gx|_1 + |gy|_1) / (2 |gz|_1)) gz + alpha * gz_hbt; the first term is
/// dropped when |gz|_1 = 0.
std::vector<double> normalize_z_gradient(std::span<const double> gx, std::span<const double> gy,
                                         std::span<const double> gz, std::span<const double> gz_hbt, double alpha);

}  // namespace place3d
