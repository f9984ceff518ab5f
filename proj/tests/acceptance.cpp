// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "place3d/checker.hpp"
#include "place3d/dp.hpp"
#include "place3d/flow.hpp"
#include "place3d/rotation.hpp"
#include "support/designs.hpp"
#include "support/oracles.hpp"
#include "support/pipeline.hpp"

using namespace place3d;

namespace {

using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

template <class F>
double seconds(F&& f) {
  const auto t0 = Clock::now();
  f();
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

/// Best of `reps` timings, each running `f` `inner` times.
template <class F>
double best_time(int reps, int inner, F&& f) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) best = std::min(best, seconds([&] {
                                                   for (int i = 0; i < inner; ++i) f();
                                                 }));
  return best;
}

// Every legal solution produced in this run, checked again by criterion 9.
std::vector<std::pair<const Design*, Solution>> g_outputs;
std::vector<std::unique_ptr<Design>> g_designs;

const Design& keep(Design d) {
  g_designs.push_back(std::make_unique<Design>(std::move(d)));
  return *g_designs.back();
}

Cuboid random_box(std::mt19937_64& rng, const GridGeometry& g, double max_frac) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto side = [&](double extent) {
    const double len = (0.02 + max_frac * u(rng)) * extent;
    const double lo = u(rng) * (extent - len);
    return std::pair{lo, lo + len};
  };
  auto [xl, xh] = side(g.dx);
  auto [yl, yh] = side(g.dy);
  auto [zl, zh] = side(g.dz);
  return {xl, xh, yl, yh, zl, zh};
}

// ---------------------------------------------------------------------------

void criterion1(Verdict& v) {
  std::mt19937_64 rng(101);
  double max_err = 0.0;
  for (int t = 0; t < 200; ++t) {
    std::uniform_int_distribution<int> dim(1, 12);
    std::uniform_real_distribution<double> ext(5.0, 500.0), w(0.2, 1.5);
    const GridGeometry g = GridGeometry::make(ext(rng), ext(rng), ext(rng), dim(rng), dim(rng), dim(rng));
    std::vector<Charge> macros;
    const int m = std::uniform_int_distribution<int>(1, 6)(rng);
    for (int k = 0; k < m; ++k) macros.push_back({random_box(rng, g, 0.7), w(rng)});
    const auto got = macro_prefix_density(g, macros);
    const auto ref = oracle::overlap_density(g, macros);
    for (std::size_t b = 0; b < got.size(); ++b) max_err = std::max(max_err, std::abs(got[b] - ref[b]));
  }
  v.require(max_err <= 1e-9, "max abs bin error <= 1e-9");

  const GridGeometry g = GridGeometry::make(1000, 1000, 8, 64, 64, 8);
  std::vector<Charge> few, many;
  for (int k = 0; k < 500; ++k) {
    const Charge c{random_box(rng, g, 0.2), 1.0};
    many.push_back(c);
    if (k < 50) few.push_back(c);
  }
  volatile double sink = 0.0;
  const double t_few = best_time(7, 20, [&] { sink = sink + macro_prefix_density(g, few)[7]; });
  const double t_many = best_time(7, 20, [&] { sink = sink + macro_prefix_density(g, many)[7]; });
  const double ratio = t_many / t_few;
  v.require(ratio <= 2.0, "time ratio for 10x macros <= 2");
  v.detail << "max error " << max_err << " over 200 cases; 50 -> 500 macros time ratio " << ratio;
}

void criterion2(Verdict& v) {
  const GridGeometry g = GridGeometry::make(70.0, 40.0, 25.0, 16, 16, 16);
  PoissonSolver s(g);
  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> idx(0, 15);
  double worst = 0.0;
  for (int t = 0; t < 10; ++t) {
    int j, k, l;
    do j = idx(rng), k = idx(rng), l = idx(rng);
    while (j == 0 && k == 0 && l == 0);
    const double wj = j * std::numbers::pi / g.dx, wk = k * std::numbers::pi / g.dy, wl = l * std::numbers::pi / g.dz;
    std::vector<double> rho(g.size()), expect(g.size());
    for (int a = 0; a < 16; ++a)
      for (int b = 0; b < 16; ++b)
        for (int c = 0; c < 16; ++c) {
          const double r = std::cos(wj * (a + 0.5) * g.wb) * std::cos(wk * (b + 0.5) * g.hb) *
                           std::cos(wl * (c + 0.5) * g.db);
          rho[g.index(a, b, c)] = r;
          expect[g.index(a, b, c)] = r / (wj * wj + wk * wk + wl * wl);
        }
    s.solve(rho, false);
    double err = 0.0, ref = 0.0;
    for (std::size_t b = 0; b < rho.size(); ++b) {
      err = std::max(err, std::abs(s.phi()[b] - expect[b]));
      ref = std::max(ref, std::abs(expect[b]));
    }
    worst = std::max(worst, err / ref);
  }
  v.require(worst <= 1e-6, "eigenfunction relative error <= 1e-6");
  std::vector<double> uniform(g.size(), 0.42);
  s.solve(uniform);
  double umax = 0.0;
  for (double p : s.phi()) umax = std::max(umax, std::abs(p));
  v.require(umax <= 1e-12, "uniform density gives zero potential");
  v.detail << "worst eigenfunction relative error " << worst << "; uniform max |phi| " << umax;
}

void criterion3(Verdict& v) {
  // Wirelength model on 100 random nets spread over both dies.
  std::mt19937_64 rng(303);
  fixture::Builder b(200, 200, 10, 12);
  const int k = b.kind("U", 4, 10, 5, 12, {{1, 2}, {-1, -3}, {0, 4}}, {{2, 1}, {-2, 0}, {1, -5}});
  const int ninst = 80;
  for (int i = 0; i < ninst; ++i) b.inst(k);
  for (int n = 0; n < 100; ++n) {
    const int deg = std::uniform_int_distribution<int>(2, 12)(rng);
    std::vector<PinRef> pins;
    for (int p = 0; p < deg; ++p) pins.push_back({int(rng() % ninst), int(rng() % 3)});
    b.net(pins);
  }
  const Design d = b.build();
  PlacementState s;
  s.resize(ninst);
  s.depth = 100;
  std::uniform_real_distribution<double> pos(10, 190), zz(26, 74);
  for (int i = 0; i < ninst; ++i) s.x[i] = pos(rng), s.y[i] = pos(rng), s.z[i] = zz(rng);
  const WirelengthModel wl(d);
  const WlParams params{5.0, 0.0, 0.0};
  const WirelengthEval ev = wl.evaluate(s, params);
  double scale = 0.0;
  for (int i = 0; i < ninst; ++i) scale = std::max({scale, std::abs(ev.gx[i]), std::abs(ev.gy[i])});
  double wl_err = 0.0;
  const double h = 1e-5;
  for (int i = 0; i < ninst; ++i)
    for (int axis = 0; axis < 2; ++axis) {
      PlacementState a = s, c = s;
      (axis ? a.y : a.x)[i] += h;
      (axis ? c.y : c.x)[i] -= h;
      const double fd = (wl.evaluate(a, params).value - wl.evaluate(c, params).value) / (2 * h);
      const double g = axis ? ev.gy[i] : ev.gx[i];
      wl_err = std::max(wl_err, std::abs(g - fd) / std::max(std::abs(fd), 1e-3 * scale));
    }
  v.require(wl_err <= 1e-4, "wirelength gradient relative error <= 1e-4");

  // Density energy on a 16^3 grid in the smooth regime: background boxes and
  // probes span several bins. The discrete self-energy of a probe ripples
  // with its sub-bin offset, so the central difference uses a half-bin step,
  // which cancels that ripple while staying small against the field scale.
  const GridGeometry g = GridGeometry::make(160, 160, 160, 16, 16, 16);
  std::vector<Charge> background;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 0; c < 25; ++c) {
    auto side = [&] {
      const double len = (0.2 + 0.4 * unit(rng)) * 160.0, lo = unit(rng) * (160.0 - len);
      return std::pair{lo, lo + len};
    };
    const auto [xl, xh] = side();
    const auto [yl, yh] = side();
    const auto [zl, zh] = side();
    background.push_back({{xl, xh, yl, yh, zl, zh}, 1.0});
  }
  DensityField field(g);
  auto energy_with = [&](const Charge& probe) {
    std::vector<Charge> all = background;
    all.push_back(probe);
    std::vector<double> rho(g.size(), 0.0);
    accumulate_direct(g, all, rho);
    field.solve(rho);
    return field.energy();
  };
  double den_err = 0.0;
  std::uniform_real_distribution<double> centre(50, 110);
  for (int t = 0; t < 10; ++t) {
    const double cx = centre(rng), cy = centre(rng), cz = centre(rng), half = 25.0;
    const Charge probe{{cx - half, cx + half, cy - half, cy + half, cz - half, cz + half}, 1.0};
    energy_with(probe);
    const Vec3 grad = field.force_direct(probe);
    const double step = 0.5 * g.wb;
    auto shifted = [&](int axis, double by) {
      Charge p = probe;
      double* lo = axis == 0 ? &p.box.xl : axis == 1 ? &p.box.yl : &p.box.zl;
      lo[0] += by;
      lo[1] += by;
      return energy_with(p);
    };
    const double fd[3] = {(shifted(0, step) - shifted(0, -step)) / (2 * step),
                          (shifted(1, step) - shifted(1, -step)) / (2 * step),
                          (shifted(2, step) - shifted(2, -step)) / (2 * step)};
    const double gv[3] = {grad.x, grad.y, grad.z};
    double num = 0.0, den = 0.0;
    for (int a = 0; a < 3; ++a) num += (gv[a] - fd[a]) * (gv[a] - fd[a]), den += fd[a] * fd[a];
    den_err = std::max(den_err, std::sqrt(num / den));
  }
  v.require(den_err <= 0.02, "density gradient relative error <= 2%");
  v.detail << "wirelength max relative error " << wl_err << "; density max relative error " << den_err;
}

void criterion4(Verdict& v) {
  std::mt19937_64 rng(404);
  int mismatches = 0;
  for (int t = 0; t < 1000; ++t) {
    const int n = std::uniform_int_distribution<int>(1, 24)(rng);
    const int range = std::uniform_int_distribution<int>(1, 12)(rng);  // small ranges force ties
    std::vector<double> px(n), py(n), a(n), b(n);
    std::vector<std::uint8_t> side(n);
    const int mode = t % 4;  // 0: mixed, 1: all bottom, 2: all top, 3: one pin alone
    for (int i = 0; i < n; ++i) {
      px[i] = std::uniform_int_distribution<int>(0, range)(rng);
      py[i] = std::uniform_int_distribution<int>(0, range)(rng);
      side[i] = mode == 0 ? (rng() & 1) : mode == 1 ? 0 : mode == 2 ? 1 : (i == 0);
    }
    net_z_delta_naive(px, py, side, a);
    net_z_delta_incremental(px, py, side, b);
    mismatches += a != b;
  }
  v.require(mismatches == 0, "incremental equals naive on every net");

  std::vector<std::vector<double>> xs, ys;
  std::vector<std::vector<std::uint8_t>> sides;
  for (int t = 0; t < 200; ++t) {
    const int n = std::uniform_int_distribution<int>(64, 256)(rng);
    std::vector<double> x(n), y(n);
    std::vector<std::uint8_t> s(n);
    for (int i = 0; i < n; ++i) x[i] = rng() % 1000, y[i] = rng() % 1000, s[i] = rng() & 1;
    xs.push_back(x), ys.push_back(y), sides.push_back(s);
  }
  std::vector<double> out(256);
  auto run = [&](auto fn) {
    for (std::size_t t = 0; t < xs.size(); ++t) fn(xs[t], ys[t], sides[t], std::span<double>(out.data(), xs[t].size()));
  };
  const double t_naive = best_time(5, 1, [&] { run(net_z_delta_naive); });
  const double t_inc = best_time(5, 1, [&] { run(net_z_delta_incremental); });
  const double speedup = t_naive / t_inc;
  v.require(speedup >= 5.0, "speedup >= 5x on nets with >= 64 pins");
  v.detail << mismatches << " mismatches over 1000 nets; speedup " << speedup << "x on 64-256 pin nets";
}

void criterion5(Verdict& v) {
  std::mt19937_64 rng(505);
  int mismatches = 0;
  for (int t = 0; t < 500; ++t) {
    const int n = std::uniform_int_distribution<int>(1, 10)(rng);
    std::vector<double> x(n), y(n);
    std::vector<std::uint8_t> side(n);
    for (int i = 0; i < n; ++i) {
      x[i] = std::uniform_int_distribution<int>(-15, 15)(rng);
      y[i] = std::uniform_int_distribution<int>(-15, 15)(rng);
      side[i] = rng() & 1;
    }
    // Brute force over every integer HBT position in the plane box.
    double brute = 0.0;
    bool split = false;
    for (int i = 1; i < n; ++i) split = split || side[i] != side[0];
    if (!split) {
      brute = oracle::span_of(x) + oracle::span_of(y);
    } else {
      brute = 1e300;
      const auto [xl, xh] = std::minmax_element(x.begin(), x.end());
      const auto [yl, yh] = std::minmax_element(y.begin(), y.end());
      for (double tx = *xl; tx <= *xh; tx += 1)
        for (double ty = *yl; ty <= *yh; ty += 1) {
          std::vector<double> cx[2], cy[2];
          for (int i = 0; i < n; ++i) cx[side[i]].push_back(x[i]), cy[side[i]].push_back(y[i]);
          double total = 0.0;
          for (int s = 0; s < 2; ++s) {
            cx[s].push_back(tx), cy[s].push_back(ty);
            total += oracle::span_of(cx[s]) + oracle::span_of(cy[s]);
          }
          brute = std::min(brute, total);
        }
    }
    mismatches += bistratal_axis(x, side) + bistratal_axis(y, side) != brute;
  }
  using U8 = std::vector<std::uint8_t>;
  const double fig_a = bistratal_axis(std::vector<double>{0, 2, 1, 3}, U8{1, 1, 0, 0});
  const double fig_b = bistratal_axis(std::vector<double>{0, 1, 2, 3}, U8{1, 1, 0, 0});
  v.require(mismatches == 0, "exact match on 500 nets");
  v.require(fig_a == 4.0 && fig_b == 3.0, "reference configurations give 4 and 3");
  v.detail << mismatches << " mismatches over 500 nets; configurations give " << fig_a << " and " << fig_b;
}

// Independent enumeration: rotation (r, r') maps (ox, oy) to
// ((1-r-r') ox + (r-r') oy, (r'-r) ox + (1-r-r') oy); first minimum in
// lexicographic (r, r') order wins.
std::pair<double, std::vector<int>> enumerate_rotations(const RotationProblem& p) {
  const int m = static_cast<int>(p.macros.size());
  long long total = 1;
  for (int k = 0; k < m; ++k) total *= 4;
  double best = 1e300;
  std::vector<int> best_code(m, 0), code(m);
  for (long long a = 0; a < total; ++a) {
    long long rest = a;
    for (int k = m - 1; k >= 0; --k) code[k] = static_cast<int>(rest % 4), rest /= 4;
    double obj = p.constant;
    for (const RotationNet& net : p.nets) {
      std::vector<double> xs, ys;
      for (const Point& f : net.fixed) xs.push_back(f.x), ys.push_back(f.y);
      for (const auto& [slot, o] : net.macro_pins) {
        const int r = code[slot] / 2, rp = code[slot] % 2;
        xs.push_back(p.centers[slot].x + (1 - r - rp) * o.x + (r - rp) * o.y);
        ys.push_back(p.centers[slot].y + (rp - r) * o.x + (1 - r - rp) * o.y);
      }
      obj += oracle::span_of(xs) + oracle::span_of(ys);
    }
    if (obj < best) best = obj, best_code = code;
  }
  return {best, best_code};
}

Solution continuous_solution(const Design& d, const PlacementState& s, const std::vector<HbtPlacement>& hbts) {
  Solution sol;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const Die die = s.z[i] - 0.5 * s.depth > 0.0 ? Die::Top : Die::Bottom;
    const int id = static_cast<int>(i);
    sol.placements.push_back({die, s.x[i] - 0.5 * d.width(id, die, s.rot[i]), s.y[i] - 0.5 * d.height(id, die, s.rot[i]),
                              s.rot[i]});
  }
  sol.hbts = hbts;
  return sol;
}

void criterion6(Verdict& v) {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> pos(0, 200), off(-15, 15);
  int wrong = 0;
  for (int t = 0; t < 100; ++t) {
    RotationProblem p;
    const int m = 1 + t % 6;
    for (int k = 0; k < m; ++k) p.macros.push_back(k), p.centers.push_back({pos(rng), pos(rng)});
    p.constant = pos(rng);
    const int nets = std::uniform_int_distribution<int>(m, 3 * m)(rng);
    for (int n = 0; n < nets; ++n) {
      RotationNet net;
      for (int f = std::uniform_int_distribution<int>(0, 3)(rng); f > 0; --f) net.fixed.push_back({pos(rng), pos(rng)});
      for (int q = std::uniform_int_distribution<int>(1, 4)(rng); q > 0; --q)
        net.macro_pins.emplace_back(int(rng() % m), Point{std::round(off(rng)), std::round(off(rng))});
      p.nets.push_back(net);
    }
    const auto [best, code] = enumerate_rotations(p);
    for (const RotationSolution& s : {solve_rotation_exact(p), solve_rotation_branch_and_bound(p)}) {
      bool same = std::abs(s.objective - best) <= 1e-9 * std::max(1.0, best);
      for (int k = 0; k < m; ++k) {
        auto [r, rp] = encode_rotation(s.assign[k]);
        same = same && 2 * r + rp == code[k];
      }
      wrong += !same;
    }
  }
  v.require(wrong == 0, "exact solver and branch and bound match enumeration");

  int increased = 0;
  double total_gain = 0.0;
  for (int seed = 1; seed <= 20; ++seed) {
    const Design& d = keep(fixture::small_synthetic(300, 2 + seed % 3, 0.25 + 0.01 * seed, 1000 + seed));
    GpConfig cfg;
    cfg.seed = seed;
    PlacementState s = run_gp3d(d, PlacementState{}, cfg).state;
    const std::vector<HbtPlacement> hbts = insert_hbts(d, s);
    const double before = oracle::raw_score(d, continuous_solution(d, s, hbts));
    const RotationProblem prob = build_rotation_problem(d, s);
    apply_rotation(d, s, prob.macros, solve_rotation_exact(prob).assign);
    const double after = oracle::raw_score(d, continuous_solution(d, s, hbts));
    increased += after > before + 1e-9 * before;
    total_gain += before - after;
  }
  v.require(increased == 0, "rotation never increases the score");
  v.detail << wrong << " solver mismatches over 100 problems; score increased on " << increased
           << " of 20 designs (total decrease " << total_gain << ")";
}

void criterion7(Verdict& v) {
  int below_one = 0, ratio_bad = 0;
  double worst_ratio = 1.0, min_fraction = 1.0;
  for (int t = 0; t < 10; ++t) {
    const Design& d = keep(fixture::small_synthetic(400 + 50 * t, 1 + t % 4, 0.2 + 0.03 * t, 2000 + t));
    GpConfig cfg;
    cfg.seed = t + 1;
    Gp3dProblem prob(d, cfg);
    const PlacementState s = prob.initial_state();
    const double gamma = cfg.gamma_hi * prob.density().grid().wb;
    const GradientBundle b = prob.gradients(s, gamma);
    const double lambda = prob.initial_lambda(b);
    const std::vector<double> div = prob.divisors(s, lambda);
    for (double x : div) below_one += x < 1.0;

    double mg = 0.0, cg = 0.0;
    int mc = 0, cc = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double gx = (b.wx[i] + lambda * b.dx[i]) / div[i], gy = (b.wy[i] + lambda * b.dy[i]) / div[i];
      const double mag = std::hypot(gx, gy);
      if (d.instances[i].macro) mg += mag, ++mc;
      else cg += mag, ++cc;
    }
    const double ratio = (mg / mc) / (cg / cc);
    const double spread = std::max(ratio, 1.0 / ratio);
    worst_ratio = std::max(worst_ratio, spread);
    ratio_bad += spread > 10.0;

    const std::vector<double> lq = prob.divisors(s, lambda, true);
    int small = 0;
    for (std::size_t i = 0; i < s.size(); ++i) small += !d.instances[i].macro && lq[i] < 1.0;
    min_fraction = std::min(min_fraction, static_cast<double>(small) / cc);
  }
  v.require(below_one == 0, "all divisors >= 1");
  v.require(ratio_bad == 0, "macro/cell gradient ratio within 10x");
  v.require(min_fraction >= 0.5, "lambda*q rule leaves >= 50% of cell divisors below 1");
  v.detail << below_one << " divisors below 1; worst macro/cell ratio " << worst_ratio
           << "x; lambda*q rule: min fraction of cell divisors below 1 is " << min_fraction;
}

void criterion8(Verdict& v) {
  SyntheticSpec spec;
  spec.cells = 5000;
  spec.macros = 4;
  spec.macro_area_ratio = 0.35;
  spec.seed = 8;
  const Design& d = keep(generate_synthetic(spec));
  double lo = 1e300, hi = 0.0, worst_ovfl = 0.0, slowest = 0.0;
  bool all_legal = true;
  for (int seed = 1; seed <= 5; ++seed) {
    FlowConfig cfg;
    cfg.gp.seed = seed;
    FlowResult r;
    const double t = seconds([&] { r = run_flow(d, cfg); });
    slowest = std::max(slowest, t);
    worst_ovfl = std::max(worst_ovfl, r.report.overflow);
    all_legal = all_legal && check_solution(d, r.solution).pass;
    lo = std::min(lo, r.report.raw_score);
    hi = std::max(hi, r.report.raw_score);
    g_outputs.emplace_back(&d, std::move(r.solution));
  }
  const double spread = (hi - lo) / lo;
  v.require(worst_ovfl <= 0.10, "overflow <= 0.10");
  v.require(all_legal, "check passes");
  v.require(spread <= 0.10, "score spread <= 10%");
  v.require(slowest <= 300.0, "runtime <= 5 minutes");

  std::string paths;
  for (double ratio : {0.36, 0.88}) {
    SyntheticSpec sp;
    sp.cells = 2000;
    sp.macros = 4;
    sp.macro_area_ratio = ratio;
    sp.seed = 9;
    const Design& dd = keep(generate_synthetic(sp));
    FlowResult r = run_flow(dd, FlowConfig{});
    const FlowPath want = ratio < 0.5 ? FlowPath::Gp3d : FlowPath::Gp2dMulti;
    v.require(select_flow(dd) == want && r.report.path == want, "flow path for macro area ratio");
    paths += (r.report.path == FlowPath::Gp3d ? " 3d" : " 2d");
    g_outputs.emplace_back(&dd, std::move(r.solution));
  }
  v.detail << "5 seeds: score " << lo << ".." << hi << " (spread " << 100 * spread << "%), worst overflow "
           << worst_ovfl << ", slowest run " << slowest << " s; paths for ratios 0.36/0.88:" << paths;
}

void criterion9(Verdict& v) {
  // Fresh pipeline outputs in addition to those of criterion 8.
  for (int t = 0; t < 4; ++t) {
    const Design& d = keep(fixture::small_synthetic(600, t, t ? 0.1 + 0.1 * t : 0.0, 3000 + t));
    FlowConfig cfg;
    cfg.gp.seed = t + 1;
    g_outputs.emplace_back(&d, run_flow(d, cfg).solution);
  }
  int violations = 0;
  for (const auto& [d, s] : g_outputs) violations += static_cast<int>(check_solution(*d, s).violations.size());
  v.require(violations == 0, "zero violations on every pipeline output");

  int increases = 0, illegal = 0, steps = 0;
  for (int t = 0; t < 3; ++t) {
    const Design& d = keep(fixture::small_synthetic(500, 2 + t, 0.3, 4000 + t));
    Solution s = fixture::legalized(d, t + 1);
    double prev = oracle::raw_score(d, s);
    for (int pass = 0; pass < 2; ++pass)
      for (Die die : {Die::Top, Die::Bottom})
        for (int op = 0; op < 2; ++op) {
          op == 0 ? global_swap(d, s, die) : local_reorder(d, s, die, 3);
          const double now = oracle::raw_score(d, s);
          increases += now > prev + 1e-9;
          illegal += !check_solution(d, s).pass;
          prev = now;
          ++steps;
        }
    const double before_refine = prev;
    refine_with_hbt_remap(d, s);
    increases += oracle::raw_score(d, s) > before_refine + 1e-9;
    illegal += !check_solution(d, s).pass;
  }
  v.require(increases == 0 && illegal == 0, "detailed placement is non-increasing and legal");
  v.detail << violations << " violations over " << g_outputs.size() << " pipeline outputs; " << steps
           << " detailed-placement steps with " << increases << " score increases and " << illegal
           << " illegal results";
}

void criterion10(Verdict& v) {
  const Design d = fixture::two_cliques();
  int separated = 0;
  std::ostringstream per_seed;
  for (int seed = 1; seed <= 5; ++seed) {
    GpConfig cfg;
    cfg.seed = seed;
    const GpResult r = run_gp3d(d, PlacementState{}, cfg);
    const Partition delta = derive_partition(r.state);
    int top[2] = {0, 0};
    for (int i = 0; i < 60; ++i) top[i / 30] += delta[i];
    const bool ok = (top[0] == 30 && top[1] == 0) || (top[0] == 0 && top[1] == 30);
    separated += ok;
    per_seed << " " << top[0] << "/" << top[1];
  }
  v.require(separated >= 4, "cliques on opposite dies in >= 4 of 5 seeds");
  v.detail << separated << " of 5 seeds separated; top-die cells per clique:" << per_seed.str();
}

}  // namespace

// Optional arguments pick criteria by number; the default runs all of them.
int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const std::pair<const char*, std::function<void(Verdict&)>> criteria[] = {
      {"macro prefix density", criterion1},   {"spectral Poisson solver", criterion2},
      {"gradient correctness", criterion3},   {"incremental z-gradient", criterion4},
      {"bistratal exactness", criterion5},    {"rotation optimality", criterion6},
      {"preconditioner", criterion7},         {"end-to-end convergence", criterion8},
      {"legality", criterion9},               {"utilization forcing", criterion10},
  };
  int failed = 0;
  int n = 0;
  for (const auto& [name, run] : criteria) {
    ++n;
    if (!only.empty() && !only.count(n)) continue;
    Verdict v;
    double t = 0.0;
    try {
      t = seconds([&] { run(v); });
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << "exception: " << e.what();
    }
    failed += !v.pass;
    std::printf("%s %2d %s (%.1f s): %s\n", v.pass ? "PASS" : "FAIL", n, name, t, v.detail.str().c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
