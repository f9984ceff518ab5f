#include <cmath>
#include <limits>
#include <vector>

#include "place3d/model.hpp"
#include "place3d/wirelength.hpp"

namespace place3d {

namespace {

// Coordinates doubled and held in int64 when every one is a half-integer
// of moderate size; the D2D HPWL is then exact.
struct Exact {
  bool ok = true;
  long long from(double v) {
    const double d = 2.0 * v;
    if (!ok || std::abs(d) > 1e15 || d != std::floor(d)) {
      ok = false;
      return 0;
    }
    return static_cast<long long>(d);
  }
};

struct IBox {
  long long xl = std::numeric_limits<long long>::max(), xh = std::numeric_limits<long long>::min();
  long long yl = std::numeric_limits<long long>::max(), yh = std::numeric_limits<long long>::min();
  bool empty() const { return xl > xh; }
  void add(long long x, long long y) {
    xl = std::min(xl, x), xh = std::max(xh, x);
    yl = std::min(yl, y), yh = std::max(yh, y);
  }
  long long hp() const { return empty() ? 0 : (xh - xl) + (yh - yl); }
};

double hp(const Box& b) { return b.x.span() + b.y.span(); }

}  // namespace

Score evaluate_score(const Design& design, const Solution& sol, bool allow_missing_hbts) {
  if (sol.placements.size() != design.instances.size()) throw ScoreError("solution does not place every instance");
  const Partition delta = sol.partition();
  std::vector<const HbtPlacement*> hbt_of(design.nets.size(), nullptr);
  for (const HbtPlacement& h : sol.hbts) {
    if (h.net < 0 || h.net >= static_cast<int>(design.nets.size())) throw ScoreError("HBT references an unknown net");
    if (hbt_of[h.net]) throw ScoreError("net '" + design.nets[h.net].name + "' has more than one HBT");
    hbt_of[h.net] = &h;
  }

  Score score;
  Exact ex;
  long long exact_sum = 0;
  double float_sum = 0.0;
  for (std::size_t e = 0; e < design.nets.size(); ++e) {
    const Net& net = design.nets[e];
    const bool crossing = crossing_indicator(net, delta) == 1;
    const HbtPlacement* h = hbt_of[e];
    if (!crossing && h && !allow_missing_hbts)
      throw ScoreError("non-crossing net '" + net.name + "' has an HBT");
    if (crossing && !h && !allow_missing_hbts) throw ScoreError("crossing net '" + net.name + "' has no HBT");

    Box fb[2];
    IBox ib[2];
    for (const PinRef& p : net.pins) {
      Point q = pin_location(design, sol, p);
      fb[delta[p.inst]].add(q);
      ib[delta[p.inst]].add(ex.from(q.x), ex.from(q.y));
    }
    if (!crossing) {
      float_sum += hp(fb[0]) + hp(fb[1]);
      exact_sum += ib[0].hp() + ib[1].hp();
      continue;
    }
    ++score.hbt_count;
    Point t;
    if (h) {
      t = {h->x, h->y};
    } else {
      Box r = optimal_region(fb[1], fb[0]);
      t = {r.x.center(), r.y.center()};
    }
    for (int d = 0; d < 2; ++d) {
      fb[d].add(t);
      ib[d].add(ex.from(t.x), ex.from(t.y));
    }
    float_sum += hp(fb[0]) + hp(fb[1]);
    exact_sum += ib[0].hp() + ib[1].hp();
  }
  score.exact = ex.ok;
  score.hpwl = ex.ok ? static_cast<double>(exact_sum) / 2.0 : float_sum;
  score.raw = score.hpwl + design.hbt.cost * static_cast<double>(score.hbt_count);
  return score;
}

}  // namespace place3d
