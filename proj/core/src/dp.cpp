#include "place3d/dp.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "place3d/legalize.hpp"
#include "place3d/wirelength.hpp"

namespace place3d {

namespace {

constexpr double kGain = 1e-9;

// Per-net D2D cost with HBTs and the partition held fixed.
class NetCost {
 public:
  NetCost(const Design& d, const Solution& s) : design_(d), sol_(s), delta_(s.partition()), hbt_(d.nets.size(), -1) {
    for (std::size_t k = 0; k < s.hbts.size(); ++k) hbt_[s.hbts[k].net] = static_cast<int>(k);
    cost_.resize(d.nets.size());
    for (std::size_t e = 0; e < d.nets.size(); ++e) cost_[e] = eval(static_cast<int>(e));
    stamp_.assign(d.nets.size(), 0);
  }

  double eval(int e) const {
    const Net& net = design_.nets[e];
    Box b[2];
    for (const PinRef& p : net.pins) b[delta_[p.inst]].add(pin_location(design_, sol_, p));
    if (hbt_[e] >= 0 && !b[0].empty() && !b[1].empty()) {
      const HbtPlacement& h = sol_.hbts[hbt_[e]];
      b[0].add({h.x, h.y});
      b[1].add({h.x, h.y});
    } else if (!b[0].empty() && !b[1].empty()) {
      const Box r = optimal_region(b[1], b[0]);
      b[0].add({r.x.center(), r.y.center()});
      b[1].add({r.x.center(), r.y.center()});
    }
    return b[0].x.span() + b[0].y.span() + b[1].x.span() + b[1].y.span();
  }

  // Nets touched by `insts`, without repeats.
  const std::vector<int>& nets_of(std::span<const int> insts) {
    ++tick_;
    touched_.clear();
    for (int i : insts)
      for (int e : design_.nets_of(i))
        if (stamp_[e] != tick_) stamp_[e] = tick_, touched_.push_back(e);
    return touched_;
  }

  double current(const std::vector<int>& nets) const {
    double s = 0.0;
    for (int e : nets) s += cost_[e];
    return s;
  }
  double fresh(const std::vector<int>& nets) const {
    double s = 0.0;
    for (int e : nets) s += eval(e);
    return s;
  }
  void commit(const std::vector<int>& nets) {
    for (int e : nets) cost_[e] = eval(e);
  }

  const Partition& delta() const { return delta_; }
  int hbt_index(int e) const { return hbt_[e]; }

 private:
  const Design& design_;
  const Solution& sol_;
  Partition delta_;
  std::vector<int> hbt_;
  std::vector<double> cost_;
  std::vector<unsigned> stamp_;
  std::vector<int> touched_;
  unsigned tick_ = 0;
};

struct RowIndex {
  RowSpec spec;
  std::vector<std::vector<int>> cells;                      // per row, sorted by x
  std::vector<std::vector<std::pair<double, double>>> blocked;  // per row, macro x-intervals

  RowIndex(const Design& design, const Solution& sol, Die die) : spec(row_spec(design, die)) {
    const int n = spec.rows();
    cells.resize(n);
    blocked.resize(n);
    for (std::size_t i = 0; i < design.instances.size(); ++i) {
      const PlacedInstance& p = sol.placements[i];
      if (p.die != die) continue;
      const int id = static_cast<int>(i);
      if (design.instances[i].macro) {
        const double h = design.height(id, die, p.rot), w = design.width(id, die, p.rot);
        for (int r = 0; r < n; ++r) {
          const double y0 = r * spec.row_height;
          if (p.y < y0 + spec.row_height - 1e-9 && p.y + h > y0 + 1e-9) blocked[r].emplace_back(p.x, p.x + w);
        }
      } else {
        const int r = row_of(p.y);
        if (r >= 0 && r < n) cells[r].push_back(id);
      }
    }
    for (int r = 0; r < n; ++r) {
      std::sort(cells[r].begin(), cells[r].end(),
                [&](int a, int b) { return sol.placements[a].x < sol.placements[b].x; });
      std::sort(blocked[r].begin(), blocked[r].end());
    }
  }

  int row_of(double y) const { return static_cast<int>(std::lround(y / spec.row_height)); }

  bool blocked_between(int r, double lo, double hi) const {
    for (auto [a, b] : blocked[r])
      if (a < hi - 1e-9 && b > lo + 1e-9) return true;
    return false;
  }
};

double site_up(double x, double site) { return std::ceil(x / site - 1e-9) * site; }

// Connectivity-weighted optimal region of one instance, as the median of the
// bounding intervals of its nets with the instance removed.
Point optimal_target(const Design& design, const Solution& sol, const NetCost& nc, int inst) {
  std::vector<double> xs, ys;
  const Partition& delta = nc.delta();
  for (int e : design.nets_of(inst)) {
    Box b;
    for (const PinRef& p : design.nets[e].pins)
      if (p.inst != inst && delta[p.inst] == delta[inst]) b.add(pin_location(design, sol, p));
    const int h = nc.hbt_index(e);
    if (h >= 0) b.add({sol.hbts[h].x, sol.hbts[h].y});
    if (b.empty()) continue;
    xs.push_back(b.x.lo), xs.push_back(b.x.hi);
    ys.push_back(b.y.lo), ys.push_back(b.y.hi);
  }
  const PlacedInstance& p = sol.placements[inst];
  if (xs.empty()) return {p.x, p.y};
  auto median = [](std::vector<double>& v) {
    std::nth_element(v.begin(), v.begin() + v.size() / 2, v.end());
    const double hi = v[v.size() / 2];
    std::nth_element(v.begin(), v.begin() + (v.size() - 1) / 2, v.end());
    return 0.5 * (hi + v[(v.size() - 1) / 2]);
  };
  const double w = design.width(inst, p.die), h = design.height(inst, p.die);
  return {median(xs) - 0.5 * w, median(ys) - 0.5 * h};
}

}  // namespace

int local_reorder(const Design& design, Solution& sol, Die die, int k) {
  if (k < 2) return 0;
  NetCost nc(design, sol);
  RowIndex rows(design, sol, die);
  const double site = rows.spec.site_width;
  int accepted = 0;
  std::vector<int> perm(k), best_perm(k);
  std::vector<double> old_x(k);
  for (std::size_t r = 0; r < rows.cells.size(); ++r) {
    std::vector<int>& row = rows.cells[r];
    for (std::size_t s = 0; s + k <= row.size(); ++s) {
      const std::span<int> win(row.data() + s, k);
      const double start = sol.placements[win[0]].x;
      const double end = sol.placements[win[k - 1]].x + design.width(win[k - 1], die);
      if (rows.blocked_between(static_cast<int>(r), start, end)) continue;
      for (int t = 0; t < k; ++t) old_x[t] = sol.placements[win[t]].x;
      const std::vector<int> nets = nc.nets_of(win);
      const double base = nc.current(nets);
      double best = base;
      std::iota(perm.begin(), perm.end(), 0);
      bool found = false;
      do {
        double x = start;
        bool fits = true;
        for (int t = 0; t < k; ++t) {
          x = site_up(x, site);
          sol.placements[win[perm[t]]].x = x;
          x += design.width(win[perm[t]], die);
        }
        if (x > end + 1e-9) fits = false;
        if (fits) {
          const double c = nc.fresh(nets);
          if (c < best - kGain) best = c, best_perm = perm, found = true;
        }
      } while (std::next_permutation(perm.begin(), perm.end()));
      for (int t = 0; t < k; ++t) sol.placements[win[t]].x = old_x[t];
      if (!found) continue;
      double x = start;
      std::vector<int> reordered(k);
      for (int t = 0; t < k; ++t) {
        x = site_up(x, site);
        sol.placements[win[best_perm[t]]].x = x;
        x += design.width(win[best_perm[t]], die);
        reordered[t] = win[best_perm[t]];
      }
      std::copy(reordered.begin(), reordered.end(), win.begin());
      nc.commit(nets);
      ++accepted;
    }
  }
  return accepted;
}

int global_swap(const Design& design, Solution& sol, Die die) {
  NetCost nc(design, sol);
  RowIndex rows(design, sol, die);
  const double site = rows.spec.site_width;
  const int nrows = static_cast<int>(rows.cells.size());
  int accepted = 0;
  std::vector<int> order;
  for (std::size_t i = 0; i < design.instances.size(); ++i)
    if (sol.placements[i].die == die && !design.instances[i].macro) order.push_back(static_cast<int>(i));

  for (int i : order) {
    PlacedInstance& pi = sol.placements[i];
    const double wi = design.width(i, die), hi = design.height(i, die);
    const Point target = optimal_target(design, sol, nc, i);
    if (std::abs(target.x - pi.x) < site && std::abs(target.y - pi.y) < rows.spec.row_height) continue;
    const int ri = rows.row_of(pi.y);
    const int rt = std::clamp(rows.row_of(target.y), 0, nrows - 1);

    const int pair[1] = {i};
    double best = 0.0;
    int best_j = -1;
    double best_x = 0.0;
    int best_row = -1;

    for (int r = std::max(0, rt - 1); r <= std::min(nrows - 1, rt + 1); ++r) {
      const std::vector<int>& row = rows.cells[r];
      auto it = std::lower_bound(row.begin(), row.end(), target.x,
                                 [&](int a, double x) { return sol.placements[a].x < x; });
      const std::ptrdiff_t pos = it - row.begin();
      // Swap candidates: nearest cells of identical footprint.
      for (std::ptrdiff_t q = std::max<std::ptrdiff_t>(0, pos - 2);
           q < std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(row.size()), pos + 2); ++q) {
        const int j = row[q];
        if (j == i || design.width(j, die) != wi || design.height(j, die) != hi) continue;
        const int both[2] = {i, j};
        const std::vector<int> nets = nc.nets_of(both);
        const double base = nc.current(nets);
        std::swap(pi.x, sol.placements[j].x);
        std::swap(pi.y, sol.placements[j].y);
        const double gain = nc.fresh(nets) - base;
        std::swap(pi.x, sol.placements[j].x);
        std::swap(pi.y, sol.placements[j].y);
        if (gain < best - kGain) best = gain, best_j = j, best_row = -1;
      }
      // Gap candidate: the free interval in this row closest to the target.
      std::vector<std::pair<double, double>> occ = rows.blocked[r];
      for (int j : row)
        if (j != i) occ.emplace_back(sol.placements[j].x, sol.placements[j].x + design.width(j, die));
      std::sort(occ.begin(), occ.end());
      double cur = 0.0;
      double gx = -1.0, gd = std::numeric_limits<double>::infinity();
      auto consider = [&](double lo, double hi) {
        lo = site_up(lo, site);
        if (hi - lo < wi - 1e-9) return;
        const double xmax = lo + std::floor((hi - wi - lo) / site + 1e-9) * site;
        const double x = std::clamp(lo + std::floor((target.x - lo) / site + 0.5) * site, lo, xmax);
        const double d = std::abs(x - target.x);
        if (d < gd) gd = d, gx = x;
      };
      for (auto [a, b] : occ) {
        if (a > cur) consider(cur, a);
        cur = std::max(cur, b);
      }
      if (cur < rows.spec.width) consider(cur, rows.spec.width);
      if (gx < 0.0) continue;
      const double ry = r * rows.spec.row_height;
      if (gx == pi.x && ry == pi.y) continue;
      const std::vector<int> nets = nc.nets_of(pair);
      const double base = nc.current(nets);
      const double ox = pi.x, oy = pi.y;
      pi.x = gx, pi.y = ry;
      const double gain = nc.fresh(nets) - base;
      pi.x = ox, pi.y = oy;
      if (gain < best - kGain) best = gain, best_j = -1, best_row = r, best_x = gx;
    }

    if (best_j >= 0) {
      const int both[2] = {i, best_j};
      const std::vector<int> nets = nc.nets_of(both);
      PlacedInstance& pj = sol.placements[best_j];
      const int rj = rows.row_of(pj.y);
      std::swap(pi.x, pj.x);
      std::swap(pi.y, pj.y);
      std::replace(rows.cells[ri].begin(), rows.cells[ri].end(), i, -1);
      std::replace(rows.cells[rj].begin(), rows.cells[rj].end(), best_j, i);
      std::replace(rows.cells[ri].begin(), rows.cells[ri].end(), -1, best_j);
      nc.commit(nets);
      ++accepted;
    } else if (best_row >= 0) {
      const std::vector<int> nets = nc.nets_of(pair);
      auto& from = rows.cells[ri];
      from.erase(std::find(from.begin(), from.end(), i));
      pi.x = best_x;
      pi.y = best_row * rows.spec.row_height;
      auto& to = rows.cells[best_row];
      to.insert(std::lower_bound(to.begin(), to.end(), best_x,
                                 [&](int a, double x) { return sol.placements[a].x < x; }),
                i);
      nc.commit(nets);
      ++accepted;
    }
  }
  return accepted;
}

void detailed_place(const Design& design, Solution& sol, int passes) {
  for (int p = 0; p < passes; ++p) {
    int moves = 0;
    for (Die die : {Die::Top, Die::Bottom}) {
      moves += global_swap(design, sol, die);
      moves += local_reorder(design, sol, die);
    }
    spdlog::debug("detailed placement pass {}: {} moves", p, moves);
    if (moves == 0) break;
  }
}

void refine_with_hbt_remap(const Design& design, Solution& sol) {
  const double before = evaluate_score(design, sol).raw;
  std::vector<HbtPlacement> old = sol.hbts;
  std::vector<HbtPlacement> fresh = insert_hbts(design, sol);
  std::vector<int> degree(design.nets.size());
  for (std::size_t e = 0; e < design.nets.size(); ++e) degree[e] = static_cast<int>(design.nets[e].pins.size());
  legalize_hbts(fresh, design.hbt, design.die.width, design.die.height, degree);
  std::sort(fresh.begin(), fresh.end(), [](const HbtPlacement& a, const HbtPlacement& b) { return a.net < b.net; });
  sol.hbts = std::move(fresh);
  if (evaluate_score(design, sol).raw > before) sol.hbts = std::move(old);
  detailed_place(design, sol, 1);
}

}  // namespace place3d
