#pragma once

#include <span>
#include <vector>

#include "place3d/model.hpp"

namespace place3d {

/// Axis-aligned rectangle given by its lower-left corner.
struct Rect {
  double x = 0.0, y = 0.0, w = 0.0, h = 0.0;
  double xh() const { return x + w; }
  double yh() const { return y + h; }
  double cx() const { return x + 0.5 * w; }
  double cy() const { return y + 0.5 * h; }
  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Positive-area intersection.
bool overlaps(const Rect& a, const Rect& b, double tol = 1e-9);

/// One HBT per crossing net at the center of its optimal region, using pin
/// positions of the continuous state.
std::vector<HbtPlacement> insert_hbts(const Design& design, const PlacementState& state);
/// Same rule for a legal solution; existing HBTs are replaced.
std::vector<HbtPlacement> insert_hbts(const Design& design, const Solution& sol);

/// Geometry of one die's placement rows.
struct RowSpec {
  double width = 0.0, height = 0.0;  // die extents
  double row_height = 1.0;
  double site_width = 1.0;
  int rows() const;
};

RowSpec row_spec(const Design& design, Die die);

/// Removes macro overlaps on one die. Positions snap to sites horizontally and
/// row boundaries vertically. Throws InfeasibleError when the macros cannot fit.
std::vector<Rect> legalize_macros(const RowSpec& rows, std::vector<Rect> macros);

/// Row/site legalization of standard cells around fixed blockages. `cells`
/// holds desired lower-left corners; returns legal corners. Throws
/// InfeasibleError on insufficient row capacity.
std::vector<Point> legalize_cells(const RowSpec& rows, std::span<const Rect> cells, std::span<const Rect> blockages);

/// Snaps HBT centers to a grid of pitch ceil(w'+s'), in decreasing net-degree
/// order, each to the nearest free grid point. `degree` is indexed by net.
void legalize_hbts(std::vector<HbtPlacement>& hbts, const HbtSpec& spec, double width, double height,
                   std::span<const int> degree = {});

/// First moves or swaps macros when a die's macro set cannot be packed, then
/// moves the cells least attached to their die until both dies respect their
/// maximum utilization. Throws InfeasibleError when no balance exists.
void balance_utilization(const Design& design, PlacementState& state);

/// Macros, then cells, then HBTs, die by die.
Solution legalize(const Design& design, const PlacementState& state, std::vector<HbtPlacement> hbts);

}  // namespace place3d
