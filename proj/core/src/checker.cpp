#include "place3d/checker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace place3d {

namespace {

constexpr double kTol = 1e-6;

struct Box2 {
  int id;
  double xl, yl, xh, yh;
};

bool on_grid(double v, double step) {
  const double q = v / step;
  return std::abs(q - std::round(q)) * step <= kTol;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

CheckReport check_solution(const Design& design, const Solution& sol) {
  CheckReport rep;
  auto fail = [&](std::string msg) {
    rep.pass = false;
    rep.violations.push_back(std::move(msg));
  };
  if (sol.placements.size() != design.instances.size()) {
    fail("solution places " + std::to_string(sol.placements.size()) + " of " +
         std::to_string(design.instances.size()) + " instances");
    return rep;
  }
  const double W = design.die.width, H = design.die.height;

  std::vector<Box2> boxes[2];
  double used[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < design.instances.size(); ++i) {
    const PlacedInstance& p = sol.placements[i];
    const Instance& inst = design.instances[i];
    const int id = static_cast<int>(i);
    const int d = die_index(p.die);
    const double w = design.width(id, p.die, p.rot), h = design.height(id, p.die, p.rot);
    const std::string where = "'" + inst.name + "' at (" + fmt(p.x) + ", " + fmt(p.y) + ") on " + die_name(p.die);
    if (p.x < -kTol || p.y < -kTol || p.x + w > W + kTol || p.y + h > H + kTol) fail("outside die: " + where);
    if (!inst.macro) {
      if (p.rot != Rotation::R0) fail("rotated standard cell: " + where);
      if (!on_grid(p.y, design.die.row_height[d])) fail("cell off row: " + where);
      if (!on_grid(p.x, design.die.site_width[d])) fail("cell off site: " + where);
    }
    used[d] += w * h;
    boxes[d].push_back({id, p.x, p.y, p.x + w, p.y + h});
  }

  for (int d = 0; d < 2; ++d) {
    const double cap = design.die.max_util[d] * design.die.area();
    if (used[d] > cap + kTol)
      fail(std::string("utilization of ") + die_name(die_from_bit(static_cast<std::uint8_t>(d))) + " die is " +
           fmt(used[d] / design.die.area()) + ", limit " + fmt(design.die.max_util[d]));
    std::vector<Box2>& b = boxes[d];
    std::sort(b.begin(), b.end(), [](const Box2& a, const Box2& c) { return a.xl < c.xl || (a.xl == c.xl && a.id < c.id); });
    for (std::size_t i = 0; i < b.size(); ++i) {
      for (std::size_t j = i + 1; j < b.size() && b[j].xl < b[i].xh - kTol; ++j) {
        const double oy = std::min(b[i].yh, b[j].yh) - std::max(b[i].yl, b[j].yl);
        const double ox = std::min(b[i].xh, b[j].xh) - std::max(b[i].xl, b[j].xl);
        if (ox > kTol && oy > kTol)
          fail("overlap on " + std::string(die_name(die_from_bit(static_cast<std::uint8_t>(d)))) + " die: '" +
               design.instances[b[i].id].name + "' (" + fmt(b[i].xl) + ", " + fmt(b[i].yl) + ") and '" +
               design.instances[b[j].id].name + "' (" + fmt(b[j].xl) + ", " + fmt(b[j].yl) + ")");
      }
    }
  }

  const Partition delta = sol.partition();
  std::vector<int> count(design.nets.size(), 0);
  bool hbt_ok = true;
  for (const HbtPlacement& h : sol.hbts) {
    if (h.net < 0 || h.net >= static_cast<int>(design.nets.size())) {
      fail("HBT on unknown net index " + std::to_string(h.net));
      hbt_ok = false;
      continue;
    }
    ++count[h.net];
    const double r = 0.5 * design.hbt.size;
    if (h.x - r < -kTol || h.y - r < -kTol || h.x + r > W + kTol || h.y + r > H + kTol)
      fail("HBT outside die: net '" + design.nets[h.net].name + "' at (" + fmt(h.x) + ", " + fmt(h.y) + ")");
  }
  for (std::size_t e = 0; e < design.nets.size(); ++e) {
    const bool crossing = crossing_indicator(design.nets[e], delta) == 1;
    if (crossing && count[e] != 1) {
      fail("crossing net '" + design.nets[e].name + "' has " + std::to_string(count[e]) + " HBTs");
      hbt_ok = false;
    } else if (!crossing && count[e] != 0) {
      fail("non-crossing net '" + design.nets[e].name + "' has " + std::to_string(count[e]) + " HBTs");
      hbt_ok = false;
    }
  }

  const double pitch = design.hbt.pitch();
  std::vector<std::size_t> order(sol.hbts.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return sol.hbts[a].x < sol.hbts[b].x; });
  for (std::size_t a = 0; a < order.size(); ++a) {
    const HbtPlacement& p = sol.hbts[order[a]];
    for (std::size_t b = a + 1; b < order.size() && sol.hbts[order[b]].x - p.x < pitch - kTol; ++b) {
      const HbtPlacement& q = sol.hbts[order[b]];
      if (std::abs(q.y - p.y) < pitch - kTol) {
        auto name = [&](const HbtPlacement& h) {
          return h.net >= 0 && h.net < static_cast<int>(design.nets.size()) ? design.nets[h.net].name : std::string("?");
        };
        fail("HBT spacing: '" + name(p) + "' (" + fmt(p.x) + ", " + fmt(p.y) + ") and '" + name(q) + "' (" + fmt(q.x) +
             ", " + fmt(q.y) + ")");
      }
    }
  }

  if (hbt_ok) rep.score = evaluate_score(design, sol);
  return rep;
}

}  // namespace place3d
