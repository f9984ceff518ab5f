#include "place3d/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace place3d {

namespace {

double lcm(double a, double b) {
  const long long x = std::llround(a), y = std::llround(b);
  return static_cast<double>(std::lcm(x, y));
}

PinShape random_pin(std::mt19937_64& rng, const std::string& name, double w, double h) {
  const long long hx = static_cast<long long>(std::floor(0.5 * w)), hy = static_cast<long long>(std::floor(0.5 * h));
  std::uniform_int_distribution<long long> dx(-hx, hx), dy(-hy, hy);
  const double ox = static_cast<double>(dx(rng));
  const double oy = static_cast<double>(dy(rng));
  return {name, {ox, oy}};
}

int net_degree(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  if (r < 0.6) return 2;
  if (r < 0.8) return 3;
  if (r < 0.95) return std::uniform_int_distribution<int>(4, 6)(rng);
  return std::uniform_int_distribution<int>(7, 15)(rng);
}

}  // namespace

Design generate_synthetic(const SyntheticSpec& spec) {
  if (spec.cells < 2 || spec.macros < 0) throw InfeasibleError("synthetic design needs at least two cells");
  if (spec.macros == 0 && spec.macro_area_ratio > 0.0) throw InfeasibleError("macro area requested without macros");
  std::mt19937_64 rng(spec.seed);
  Design d;
  const int T = die_index(Die::Top), B = die_index(Die::Bottom);
  d.die.row_height[T] = spec.top_row_height;
  d.die.row_height[B] = spec.bottom_row_height;
  d.die.max_util = {spec.max_util, spec.max_util};
  d.hbt = {spec.hbt_size, spec.hbt_spacing, spec.hbt_cost};

  // Standard-cell library, both technologies.
  std::uniform_int_distribution<int> width_dist(3, 14), pin_dist(2, 4);
  for (int k = 0; k < spec.cell_kinds; ++k) {
    const std::string name = "K" + std::to_string(k);
    const double wt = width_dist(rng);
    const double wb = std::round(1.3 * wt);
    CellKind top{name, wt, spec.top_row_height, {}}, bot{name, wb, spec.bottom_row_height, {}};
    const int np = pin_dist(rng);
    for (int p = 0; p < np; ++p) {
      const std::string pn = "P" + std::to_string(p);
      top.pins.push_back(random_pin(rng, pn, top.width, top.height));
      bot.pins.push_back(random_pin(rng, pn, bot.width, bot.height));
    }
    d.tech[T].kinds.push_back(std::move(top));
    d.tech[B].kinds.push_back(std::move(bot));
  }

  std::uniform_int_distribution<int> kind_dist(0, spec.cell_kinds - 1);
  double cell_area_bottom = 0.0;
  for (int i = 0; i < spec.cells; ++i) {
    const int k = kind_dist(rng);
    d.instances.push_back({"C" + std::to_string(i), k, false});
    cell_area_bottom += d.tech[B].kinds[k].width * d.tech[B].kinds[k].height;
  }

  // Die: cells take fraction f of the bottom-die area.
  const double f = std::clamp(1.1 - spec.macro_area_ratio, 0.15, 0.45);
  if (spec.macro_area_ratio + f > 2.0 * spec.max_util * 0.9)
    throw InfeasibleError("macro area ratio exceeds the utilization capacity of the two dies");
  const double area = cell_area_bottom / f;
  const double ystep = lcm(spec.top_row_height, spec.bottom_row_height);
  d.die.height = std::max(ystep, std::round(std::sqrt(area) / ystep) * ystep);
  d.die.width = std::ceil(area / d.die.height);
  const double die_area = d.die.width * d.die.height;

  // Macros with identical footprints on both dies.
  if (spec.macros > 0) {
    std::uniform_real_distribution<double> share(0.7, 1.3), aspect(0.5, 2.0);
    std::vector<double> s(spec.macros);
    for (double& v : s) v = share(rng);
    const double total = std::accumulate(s.begin(), s.end(), 0.0);
    for (int m = 0; m < spec.macros; ++m) {
      const double a = spec.macro_area_ratio * die_area * s[m] / total;
      if (a > spec.max_util * die_area) throw InfeasibleError("a macro exceeds the die utilization limit");
      const double asp = aspect(rng);
      double w = std::max(1.0, std::round(std::sqrt(a * asp)));
      double h = std::max(1.0, std::round(a / w));
      if (w > d.die.width) w = d.die.width, h = std::round(a / w);
      if (h > d.die.height) h = d.die.height, w = std::round(a / h);
      if (w > d.die.width || h > d.die.height) throw InfeasibleError("a macro does not fit in the die");
      const std::string name = "MK" + std::to_string(m);
      CellKind top{name, w, h, {}}, bot{name, w, h, {}};
      for (int p = 0; p < spec.macro_pins; ++p) {
        const PinShape pin = random_pin(rng, "P" + std::to_string(p), w, h);
        top.pins.push_back(pin);
        bot.pins.push_back(pin);
      }
      d.tech[T].kinds.push_back(std::move(top));
      d.tech[B].kinds.push_back(std::move(bot));
      d.instances.push_back({"M" + std::to_string(m), static_cast<int>(d.tech[T].kinds.size()) - 1, true});
    }
  }

  // Nets follow Rent's rule over an implicit binary hierarchy of the cell
  // indices: a net spanning an aligned block of 2^L cells is drawn with
  // weight 2^(L(p-1)), so each block of size s sees about s^p external nets.
  auto add_pin = [&](Net& net, int inst) {
    for (const PinRef& p : net.pins)
      if (p.inst == inst) return false;
    const int np = static_cast<int>(d.tech[T].kinds[d.instances[inst].kind].pins.size());
    net.pins.push_back({inst, std::uniform_int_distribution<int>(0, np - 1)(rng)});
    return true;
  };
  int levels = 1;
  while ((1 << levels) < spec.cells) ++levels;
  std::vector<double> level_weight(levels);
  for (int l = 1; l <= levels; ++l) level_weight[l - 1] = std::pow(2.0, l * (spec.rent_exponent - 1.0));
  std::discrete_distribution<int> level_dist(level_weight.begin(), level_weight.end());
  // Pins of a net rooted at cell c on level l: c plus cells of the enclosing
  // block, at least one of them outside c's half so the net spans the level.
  auto fill = [&](Net& net, int c, int level, int deg) {
    const int size = 1 << level;
    const int lo = c / size * size, hi = std::min(lo + size, spec.cells);
    const int mid = lo + size / 2;
    const bool in_low = c < mid;
    const int olo = in_low ? mid : lo, ohi = in_low ? hi : mid;
    if (olo < ohi) add_pin(net, std::uniform_int_distribution<int>(olo, ohi - 1)(rng));
    std::uniform_int_distribution<int> any(lo, hi - 1);
    for (int t = 0; t < 4 * deg && static_cast<int>(net.pins.size()) < deg; ++t) add_pin(net, any(rng));
  };
  const int total_nets = std::max(1, static_cast<int>(std::lround(spec.nets_per_cell * spec.cells)));
  std::uniform_int_distribution<int> cell_dist(0, spec.cells - 1);
  for (int m = 0; m < spec.macros; ++m) {
    const int inst = spec.cells + m;
    const int anchor = cell_dist(rng);
    for (int p = 0; p < spec.macro_pins; ++p) {
      Net net{"N" + std::to_string(d.nets.size()), {{inst, p}}};
      const int k = std::uniform_int_distribution<int>(1, 4)(rng);
      const int level = std::min(levels, 4 + level_dist(rng));
      add_pin(net, anchor);
      fill(net, anchor, level, k + 1);
      d.nets.push_back(std::move(net));
    }
  }
  while (static_cast<int>(d.nets.size()) < total_nets) {
    const int c = cell_dist(rng);
    const int deg = net_degree(rng);
    // Wider nets need blocks large enough to hold their pins.
    int level = 1 + level_dist(rng);
    while ((1 << level) < 2 * deg && level < levels) ++level;
    Net net{"N" + std::to_string(d.nets.size()), {}};
    add_pin(net, c);
    fill(net, c, level, deg);
    if (net.pins.size() >= 2) d.nets.push_back(std::move(net));
  }

  d.finalize();
  return d;
}

}  // namespace place3d
