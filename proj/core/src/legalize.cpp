#include "place3d/legalize.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

#include "place3d/wirelength.hpp"

namespace place3d {

bool overlaps(const Rect& a, const Rect& b, double tol) {
  return std::min(a.xh(), b.xh()) - std::max(a.x, b.x) > tol && std::min(a.yh(), b.yh()) - std::max(a.y, b.y) > tol;
}

namespace {

std::vector<HbtPlacement> hbts_from_pins(const Design& design, const Partition& delta,
                                         const std::function<Point(PinRef)>& where) {
  std::vector<HbtPlacement> out;
  for (std::size_t e = 0; e < design.nets.size(); ++e) {
    const Net& net = design.nets[e];
    if (!crossing_indicator(net, delta)) continue;
    Box b[2];
    for (const PinRef& p : net.pins) b[delta[p.inst]].add(where(p));
    const Box r = optimal_region(b[1], b[0]);
    out.push_back({static_cast<int>(e), r.x.center(), r.y.center()});
  }
  return out;
}

}  // namespace

std::vector<HbtPlacement> insert_hbts(const Design& design, const PlacementState& state) {
  const Partition delta = derive_partition(state);
  return hbts_from_pins(design, delta, [&](PinRef p) {
    const Point o = design.pin_offset(p, die_from_bit(delta[p.inst]), state.rot[p.inst]);
    return Point{state.x[p.inst] + o.x, state.y[p.inst] + o.y};
  });
}

std::vector<HbtPlacement> insert_hbts(const Design& design, const Solution& sol) {
  return hbts_from_pins(design, sol.partition(), [&](PinRef p) { return pin_location(design, sol, p); });
}

int RowSpec::rows() const { return static_cast<int>(std::floor(height / row_height + 1e-9)); }

RowSpec row_spec(const Design& design, Die die) {
  const int d = die_index(die);
  return {design.die.width, design.die.height, design.die.row_height[d], design.die.site_width[d]};
}

// ---------------------------------------------------------------------------
// Macros

namespace {

double snap_down(double v, double step) { return std::floor(v / step + 1e-9) * step; }
double snap_up(double v, double step) { return std::ceil(v / step - 1e-9) * step; }
double snap_near(double v, double step) { return std::floor(v / step + 0.5) * step; }

struct MacroGrid {
  const RowSpec& rows;
  double max_x(const Rect& r) const { return snap_down(rows.width - r.w, rows.site_width); }
  double max_y(const Rect& r) const { return snap_down(rows.height - r.h, rows.row_height); }
  double fit_x(const Rect& r, double x) const { return std::clamp(snap_near(x, rows.site_width), 0.0, max_x(r)); }
  double fit_y(const Rect& r, double y) const { return std::clamp(snap_near(y, rows.row_height), 0.0, max_y(r)); }
};

bool any_overlap(const std::vector<Rect>& r) {
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = i + 1; j < r.size(); ++j)
      if (overlaps(r[i], r[j])) return true;
  return false;
}

// Moves a left/down by `lo` and b right/up by the rest of `total`, within [0, a_max] / [0, b_max].
void push_apart(double& a, double& b, double total, double step, double a_max, double b_max) {
  double da = snap_down(0.5 * total, step);
  double db = total - da;
  if (a - da < 0.0) {
    db += da - a;
    da = a;
  }
  if (b + db > b_max) {
    da += b + db - b_max;
    db = b_max - b;
  }
  a = std::clamp(a - da, 0.0, a_max);
  b = std::clamp(b + db, 0.0, b_max);
}

bool push_legalize(const MacroGrid& g, std::vector<Rect>& r) {
  const std::size_t n = r.size();
  for (int pass = 0; pass < 200; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (!overlaps(r[i], r[j])) continue;
        moved = true;
        const double ox = std::min(r[i].xh(), r[j].xh()) - std::max(r[i].x, r[j].x);
        const double oy = std::min(r[i].yh(), r[j].yh()) - std::max(r[i].y, r[j].y);
        const double tx = snap_up(ox, g.rows.site_width);
        const double ty = snap_up(oy, g.rows.row_height);
        if (tx <= ty) {
          Rect& a = r[i].cx() <= r[j].cx() ? r[i] : r[j];
          Rect& b = &a == &r[i] ? r[j] : r[i];
          push_apart(a.x, b.x, tx, g.rows.site_width, g.max_x(a), g.max_x(b));
        } else {
          Rect& a = r[i].cy() <= r[j].cy() ? r[i] : r[j];
          Rect& b = &a == &r[i] ? r[j] : r[i];
          push_apart(a.y, b.y, ty, g.rows.row_height, g.max_y(a), g.max_y(b));
        }
      }
    }
    if (!moved) return true;
  }
  return !any_overlap(r);
}

// Places macros one at a time, largest key first, at the free candidate
// corner nearest the desired spot. Returns false when one finds no room.
template <class Key>
bool greedy_pack(const MacroGrid& g, const std::vector<Rect>& desired, std::vector<Rect>& out, Key key) {
  const std::size_t n = desired.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(desired[a]) > key(desired[b]); });
  std::vector<Rect> placed;
  for (std::size_t k : order) {
    Rect m = desired[k];
    std::vector<double> xs{g.fit_x(m, m.x), 0.0, g.max_x(m)};
    std::vector<double> ys{g.fit_y(m, m.y), 0.0, g.max_y(m)};
    for (const Rect& p : placed) {
      xs.push_back(snap_up(p.xh(), g.rows.site_width));
      xs.push_back(snap_down(p.x - m.w, g.rows.site_width));
      ys.push_back(snap_up(p.yh(), g.rows.row_height));
      ys.push_back(snap_down(p.y - m.h, g.rows.row_height));
    }
    double best = std::numeric_limits<double>::infinity();
    Rect pick{};
    for (double x : xs) {
      if (x < 0.0 || x > g.max_x(m) + 1e-9) continue;
      for (double y : ys) {
        if (y < 0.0 || y > g.max_y(m) + 1e-9) continue;
        const Rect c{x, y, m.w, m.h};
        const double cost = (x - m.x) * (x - m.x) + (y - m.y) * (y - m.y);
        if (cost >= best) continue;
        bool ok = true;
        for (const Rect& p : placed)
          if (overlaps(c, p)) {
            ok = false;
            break;
          }
        if (ok) best = cost, pick = c;
      }
    }
    if (!std::isfinite(best)) return false;
    placed.push_back(pick);
    out[k] = pick;
  }
  return true;
}

bool pack_any(const MacroGrid& g, const std::vector<Rect>& desired, std::vector<Rect>& out) {
  const auto area = [](const Rect& r) { return r.w * r.h; };
  const auto height = [](const Rect& r) { return r.h; };
  const auto width = [](const Rect& r) { return r.w; };
  if (greedy_pack(g, desired, out, area)) return true;
  // Near the desired spots the first macros can fragment the die; bottom-left
  // packing ignores the spots and only cares about fitting.
  std::vector<Rect> corner = desired;
  for (Rect& r : corner) r.x = r.y = 0.0;
  return greedy_pack(g, corner, out, area) || greedy_pack(g, corner, out, height) ||
         greedy_pack(g, corner, out, width);
}

}  // namespace

std::vector<Rect> legalize_macros(const RowSpec& rows, std::vector<Rect> macros) {
  double area = 0.0;
  for (const Rect& m : macros) {
    if (m.w > rows.width + 1e-9 || m.h > rows.height + 1e-9) throw InfeasibleError("macro larger than the die");
    area += m.w * m.h;
  }
  if (area > rows.width * rows.height + 1e-9) throw InfeasibleError("total macro area exceeds the die area");
  const MacroGrid g{rows};
  const std::vector<Rect> desired = macros;
  for (Rect& m : macros) {
    if (g.max_y(m) < 0.0) throw InfeasibleError("macro taller than the row grid");
    m.x = g.fit_x(m, m.x);
    m.y = g.fit_y(m, m.y);
  }
  if (push_legalize(g, macros)) return macros;
  spdlog::debug("macro legalization: falling back to greedy packing");
  if (!pack_any(g, desired, macros)) throw InfeasibleError("macro legalization: no room for a macro");
  return macros;
}

// ---------------------------------------------------------------------------
// Cells

namespace {

struct Cluster {
  double x = 0.0, e = 0.0, q = 0.0, w = 0.0;
  int first = 0;  // index of the first cell in Segment::cells
};

struct Segment {
  double lo = 0.0, hi = 0.0;
  double used = 0.0;
  std::vector<int> cells;
  std::vector<Cluster> clusters;
};

struct Row {
  double y = 0.0;
  std::vector<Segment> segs;
};

double place_cluster(const Segment& s, const Cluster& c, double site) {
  double x = c.q / c.e;
  x = s.lo + std::floor((x - s.lo) / site + 0.5) * site;
  const double xmax = s.lo + std::floor((s.hi - c.w - s.lo) / site + 1e-9) * site;
  return std::clamp(x, s.lo, std::max(s.lo, xmax));
}

// Abacus collapse: returns the x of the appended cell. With `commit` the
// segment is updated.
double append_cell(Segment& s, int cell, double xd, double w, double site, bool commit) {
  Cluster c{0.0, 1.0, xd, w, static_cast<int>(s.cells.size())};
  c.x = place_cluster(s, c, site);
  std::size_t top = s.clusters.size();
  while (top > 0 && s.clusters[top - 1].x + s.clusters[top - 1].w > c.x + 1e-9) {
    const Cluster& p = s.clusters[top - 1];
    Cluster m{0.0, p.e + c.e, p.q + c.q - c.e * p.w, p.w + c.w, p.first};
    m.x = place_cluster(s, m, site);
    c = m;
    --top;
  }
  if (commit) {
    s.clusters.resize(top);
    s.clusters.push_back(c);
    s.cells.push_back(cell);
    s.used += w;
  }
  return c.x + c.w - w;
}

std::vector<Row> build_rows(const RowSpec& spec, std::span<const Rect> blockages) {
  std::vector<Row> rows(spec.rows());
  for (int r = 0; r < spec.rows(); ++r) {
    Row& row = rows[r];
    row.y = r * spec.row_height;
    const double y1 = row.y + spec.row_height;
    std::vector<std::pair<double, double>> blocked;
    for (const Rect& b : blockages)
      if (b.y < y1 - 1e-9 && b.yh() > row.y + 1e-9) blocked.emplace_back(b.x, b.xh());
    std::sort(blocked.begin(), blocked.end());
    double cur = 0.0;
    auto emit = [&](double lo, double hi) {
      lo = snap_up(lo, spec.site_width);
      hi = snap_down(hi, spec.site_width);
      if (hi - lo >= spec.site_width - 1e-9) row.segs.push_back({lo, hi, 0.0, {}, {}});
    };
    for (auto [a, b] : blocked) {
      if (a > cur) emit(cur, a);
      cur = std::max(cur, b);
    }
    if (cur < spec.width) emit(cur, spec.width);
  }
  return rows;
}

}  // namespace

std::vector<Point> legalize_cells(const RowSpec& spec, std::span<const Rect> cells, std::span<const Rect> blockages) {
  std::vector<Row> rows = build_rows(spec, blockages);
  double capacity = 0.0, demand = 0.0;
  for (const Row& r : rows)
    for (const Segment& s : r.segs) capacity += s.hi - s.lo;
  for (const Rect& c : cells) demand += c.w;
  if (demand > capacity + 1e-9) throw InfeasibleError("cell legalization: insufficient row capacity");
  if (rows.empty() && !cells.empty()) throw InfeasibleError("cell legalization: die has no rows");

  std::vector<int> order(cells.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return cells[a].x < cells[b].x; });
  const int nrows = static_cast<int>(rows.size());
  for (int c : order) {
    const Rect& cell = cells[c];
    const int r0 = std::clamp(static_cast<int>(std::floor(cell.y / spec.row_height + 0.5)), 0, nrows - 1);
    double best = std::numeric_limits<double>::infinity();
    Segment* pick = nullptr;
    for (int step = 0; step < 2 * nrows; ++step) {
      const int r = r0 + ((step & 1) ? (step + 1) / 2 : -(step / 2));
      if (r < 0 || r >= nrows) {
        if (std::abs(r - r0) > nrows) break;
        continue;
      }
      const double dy = rows[r].y - cell.y;
      if (dy * dy >= best) {
        // Rows further away in both directions only cost more.
        const int other = r0 - (r - r0);
        if (other < 0 || other >= nrows || std::pow(rows[other].y - cell.y, 2) >= best) break;
        continue;
      }
      for (Segment& s : rows[r].segs) {
        if (s.used + cell.w > s.hi - s.lo + 1e-9) continue;
        const double x = append_cell(s, c, cell.x, cell.w, spec.site_width, false);
        const double cost = (x - cell.x) * (x - cell.x) + dy * dy;
        if (cost < best) best = cost, pick = &s;
      }
    }
    if (!pick) throw InfeasibleError("cell legalization: no row segment can take a cell");
    append_cell(*pick, c, cell.x, cell.w, spec.site_width, true);
  }

  std::vector<Point> out(cells.size());
  for (const Row& r : rows) {
    for (const Segment& s : r.segs) {
      for (std::size_t k = 0; k < s.clusters.size(); ++k) {
        const Cluster& cl = s.clusters[k];
        const int end = k + 1 < s.clusters.size() ? s.clusters[k + 1].first : static_cast<int>(s.cells.size());
        double x = cl.x;
        for (int i = cl.first; i < end; ++i) {
          out[s.cells[i]] = {x, r.y};
          x += cells[s.cells[i]].w;
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// HBTs

void legalize_hbts(std::vector<HbtPlacement>& hbts, const HbtSpec& spec, double width, double height,
                   std::span<const int> degree) {
  const double p = std::ceil(spec.pitch() - 1e-9);
  const int cols = static_cast<int>(std::floor(width / p + 1e-9));
  const int rows = static_cast<int>(std::floor(height / p + 1e-9));
  if (static_cast<long long>(hbts.size()) > static_cast<long long>(cols) * rows)
    throw InfeasibleError("HBT legalization: more terminals than grid slots");
  const double off = std::floor(p / 2.0);
  std::vector<std::size_t> order(hbts.size());
  std::iota(order.begin(), order.end(), 0);
  auto deg = [&](std::size_t k) { return degree.empty() ? 0 : degree[hbts[k].net]; };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (deg(a) != deg(b)) return deg(a) > deg(b);
    return hbts[a].net < hbts[b].net;
  });
  std::vector<char> used(static_cast<std::size_t>(cols) * rows, 0);
  for (std::size_t k : order) {
    HbtPlacement& h = hbts[k];
    const int gi = std::clamp(static_cast<int>(std::floor((h.x - off) / p + 0.5)), 0, cols - 1);
    const int gj = std::clamp(static_cast<int>(std::floor((h.y - off) / p + 0.5)), 0, rows - 1);
    double best = std::numeric_limits<double>::infinity();
    int bi = -1, bj = -1;
    for (int r = 0; r < std::max(cols, rows); ++r) {
      if (bi >= 0 && (r - 1) * p > std::sqrt(best)) break;
      for (int i = gi - r; i <= gi + r; ++i) {
        if (i < 0 || i >= cols) continue;
        const bool edge_i = i == gi - r || i == gi + r;
        for (int j = gj - r; j <= gj + r; j += (edge_i ? 1 : 2 * r)) {
          if (j >= 0 && j < rows && !used[static_cast<std::size_t>(i) * rows + j]) {
            const double cx = i * p + off, cy = j * p + off;
            const double d = (cx - h.x) * (cx - h.x) + (cy - h.y) * (cy - h.y);
            if (d < best || (d == best && (i < bi || (i == bi && j < bj)))) best = d, bi = i, bj = j;
          }
          if (r == 0) break;
        }
      }
    }
    used[static_cast<std::size_t>(bi) * rows + bj] = 1;
    h.x = bi * p + off;
    h.y = bj * p + off;
  }
}

// ---------------------------------------------------------------------------

namespace {

bool macros_pack(const Design& design, const PlacementState& state, const Partition& delta, int bit) {
  const Die die = die_from_bit(bit);
  std::vector<Rect> rects;
  for (int i : design.macros()) {
    if (delta[i] != bit) continue;
    const double w = design.width(i, die, state.rot[i]), h = design.height(i, die, state.rot[i]);
    rects.push_back({state.x[i] - 0.5 * w, state.y[i] - 0.5 * h, w, h});
  }
  try {
    legalize_macros(row_spec(design, die), std::move(rects));
  } catch (const InfeasibleError&) {
    return false;
  }
  return true;
}

// A partition can give one die a macro set that no arrangement fits. Moves
// one macro, or swaps a pair, cheapest wirelength change first.
void repair_macro_partition(const Design& design, PlacementState& state) {
  Partition delta = derive_partition(state);
  auto packs = [&] { return macros_pack(design, state, delta, 0) && macros_pack(design, state, delta, 1); };
  if (packs()) return;
  WirelengthModel wl(design);
  const std::vector<double> g = wl.fd_z_gradient_naive(state);
  auto cost = [&](int i) { return (delta[i] == 1 ? -g[i] : g[i]) * 0.25 * state.depth; };
  auto flip = [&](int i) {
    delta[i] ^= 1;
    state.z[i] = delta[i] == 1 ? 0.75 * state.depth : 0.25 * state.depth;
  };
  const std::vector<int>& m = design.macros();
  std::vector<std::pair<double, std::vector<int>>> moves;
  for (std::size_t a = 0; a < m.size(); ++a) {
    moves.push_back({cost(m[a]), {m[a]}});
    for (std::size_t b = a + 1; b < m.size(); ++b)
      if (delta[m[a]] != delta[m[b]]) moves.push_back({cost(m[a]) + cost(m[b]), {m[a], m[b]}});
  }
  std::stable_sort(moves.begin(), moves.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  for (const auto& [c, ids] : moves) {
    for (int i : ids) flip(i);
    if (packs()) {
      spdlog::info("macro partition repair: moved {} macro(s), wirelength change {:.1f}", ids.size(), c);
      return;
    }
    for (int i : ids) flip(i);
  }
  throw InfeasibleError("no macro partition fits both dies");
}

}  // namespace

void balance_utilization(const Design& design, PlacementState& state) {
  repair_macro_partition(design, state);
  const Partition delta = derive_partition(state);
  double used[2] = {0.0, 0.0};
  const double cap[2] = {design.die.max_util[0] * design.die.area(), design.die.max_util[1] * design.die.area()};
  auto area = [&](int i, int d) {
    return design.width(i, die_from_bit(d), state.rot[i]) * design.height(i, die_from_bit(d), state.rot[i]);
  };
  for (std::size_t i = 0; i < design.instances.size(); ++i) used[delta[i]] += area(static_cast<int>(i), delta[i]);
  if (used[0] <= cap[0] && used[1] <= cap[1]) return;
  const int from = used[0] > cap[0] ? 0 : 1, to = 1 - from;
  if (used[to] > cap[to]) throw InfeasibleError("both dies exceed their maximum utilization");

  WirelengthModel wl(design);
  const std::vector<double> g = wl.fd_z_gradient_naive(state);
  std::vector<int> cand;
  for (std::size_t i = 0; i < design.instances.size(); ++i)
    if (delta[i] == from && !design.instances[i].macro) cand.push_back(static_cast<int>(i));
  // Wirelength change of moving to the other die: -g dz/4 from the top, +g dz/4 from the bottom.
  auto cost = [&](int i) { return (from == 1 ? -g[i] : g[i]) * 0.25 * state.depth; };
  std::stable_sort(cand.begin(), cand.end(), [&](int a, int b) { return cost(a) < cost(b); });
  int moved = 0;
  for (int i : cand) {
    if (used[from] <= cap[from]) break;
    const double a_to = area(i, to);
    if (used[to] + a_to > cap[to]) continue;
    used[from] -= area(i, from);
    used[to] += a_to;
    state.z[i] = to == 1 ? 0.75 * state.depth : 0.25 * state.depth;
    ++moved;
  }
  if (used[from] > cap[from]) throw InfeasibleError("cannot balance die utilization");
  spdlog::info("utilization balance: moved {} cells to the {} die", moved, die_name(die_from_bit(to)));
}

Solution legalize(const Design& design, const PlacementState& state, std::vector<HbtPlacement> hbts) {
  const Partition delta = derive_partition(state);
  Solution sol;
  sol.placements.resize(design.instances.size());
  for (Die die : {Die::Top, Die::Bottom}) {
    const RowSpec rows = row_spec(design, die);
    std::vector<int> mids, cids;
    std::vector<Rect> mrects, crects;
    for (std::size_t i = 0; i < design.instances.size(); ++i) {
      if (die_from_bit(delta[i]) != die) continue;
      const int id = static_cast<int>(i);
      const double w = design.width(id, die, state.rot[i]), h = design.height(id, die, state.rot[i]);
      const Rect r{state.x[i] - 0.5 * w, state.y[i] - 0.5 * h, w, h};
      if (design.instances[i].macro) {
        mids.push_back(id);
        mrects.push_back(r);
      } else {
        cids.push_back(id);
        crects.push_back(r);
      }
    }
    const std::vector<Rect> legal_m = legalize_macros(rows, mrects);
    const std::vector<Point> legal_c = legalize_cells(rows, crects, legal_m);
    for (std::size_t k = 0; k < mids.size(); ++k)
      sol.placements[mids[k]] = {die, legal_m[k].x, legal_m[k].y, state.rot[mids[k]]};
    for (std::size_t k = 0; k < cids.size(); ++k)
      sol.placements[cids[k]] = {die, legal_c[k].x, legal_c[k].y, Rotation::R0};
  }
  std::vector<int> degree(design.nets.size());
  for (std::size_t e = 0; e < design.nets.size(); ++e) degree[e] = static_cast<int>(design.nets[e].pins.size());
  legalize_hbts(hbts, design.hbt, design.die.width, design.die.height, degree);
  std::sort(hbts.begin(), hbts.end(), [](const HbtPlacement& a, const HbtPlacement& b) { return a.net < b.net; });
  sol.hbts = std::move(hbts);
  return sol;
}

}  // namespace place3d
