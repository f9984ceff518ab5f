#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "place3d/gp.hpp"

namespace place3d {

namespace {

constexpr int kTop = 0, kBottom = 1, kHbt = 2;

struct Layer {
  DensityField field;
  std::vector<double> target;
  std::vector<int> cells, macros, fillers, hbts;  // object ids in the packed layout
  double lambda = 0.0;
  double overflow = 0.0;
  double prev_overflow = 1.0;
  explicit Layer(const GridGeometry& g, double t) : field(g), target(g.size(), t) {}
};

double clampc(double v, double half, double extent) {
  return 2.0 * half >= extent ? 0.5 * extent : std::clamp(v, half, extent - half);
}

}  // namespace

GpResult run_gp2d_multi(const Design& design, const PlacementState& init, const GpConfig& config) {
  const std::size_t n = design.instances.size();
  if (init.size() != n) throw std::invalid_argument("gp2d: state does not match the design");
  const Partition delta = derive_partition(init);
  const GridGeometry g3 = make_grid(design, config);
  const GridGeometry g = GridGeometry::make(design.die.width, design.die.height, g3.db, g3.nx, g3.ny, 1);
  const DensityModel fill_model(design, g3);  // filler sizes follow the 3D rule

  // Crossing nets get one movable HBT each.
  GpResult res;
  for (std::size_t e = 0; e < design.nets.size(); ++e)
    if (crossing_indicator(design.nets[e], delta)) res.hbt_nets.push_back(static_cast<int>(e));
  const std::size_t nh = res.hbt_nets.size();
  const FillerSpec& ftop = fill_model.fillers(Die::Top);
  const FillerSpec& fbot = fill_model.fillers(Die::Bottom);
  const std::size_t nft = ftop.count, nfb = fbot.count;
  // Object layout: instances, HBTs, top fillers, bottom fillers.
  const std::size_t nobj = n + nh + nft + nfb;
  std::vector<double> ow(nobj), oh(nobj), weight(nobj, 1.0);
  std::vector<int> layer_of(nobj);

  const double ut = design.die.max_util[die_index(Die::Top)];
  const double ub = design.die.max_util[die_index(Die::Bottom)];
  std::array<Layer, 3> layers{Layer(g, ut), Layer(g, ub), Layer(g, 1.0)};
  for (std::size_t i = 0; i < n; ++i) {
    const Die d = die_from_bit(delta[i]);
    const int id = static_cast<int>(i);
    ow[i] = design.width(id, d, init.rot[i]);
    oh[i] = design.height(id, d, init.rot[i]);
    const int L = d == Die::Top ? kTop : kBottom;
    layer_of[i] = L;
    if (design.instances[i].macro) {
      weight[i] = d == Die::Top ? ut : ub;
      layers[L].macros.push_back(id);
    } else {
      layers[L].cells.push_back(id);
    }
  }
  const double pad = design.hbt.pitch();
  for (std::size_t h = 0; h < nh; ++h) {
    ow[n + h] = oh[n + h] = pad;
    layer_of[n + h] = kHbt;
    layers[kHbt].hbts.push_back(static_cast<int>(n + h));
  }
  for (std::size_t f = 0; f < nft + nfb; ++f) {
    const bool top = f < nft;
    ow[n + nh + f] = top ? ftop.w : fbot.w;
    oh[n + nh + f] = top ? ftop.h : fbot.h;
    layer_of[n + nh + f] = top ? kTop : kBottom;
    layers[top ? kTop : kBottom].fillers.push_back(static_cast<int>(n + nh + f));
  }

  // Initial positions: instances where they are, HBTs at their optimal-region
  // centers, fillers uniformly random.
  std::vector<double> v0(2 * nobj);
  for (std::size_t i = 0; i < n; ++i) v0[i] = init.x[i], v0[nobj + i] = init.y[i];
  WirelengthModel wl(design);
  {
    std::vector<double> px, py;
    wl.pin_positions(init, delta, px, py);
    auto begin = wl.net_pin_begin();
    for (std::size_t h = 0; h < nh; ++h) {
      const int e = res.hbt_nets[h];
      Box b[2];
      for (int k = begin[e]; k < begin[e + 1]; ++k) b[delta[wl.pin_instance()[k]]].add({px[k], py[k]});
      Box r = optimal_region(b[1], b[0]);
      v0[n + h] = r.x.center();
      v0[nobj + n + h] = r.y.center();
    }
  }
  std::mt19937_64 rng(config.seed ^ 0x2545f4914f6cdd1dULL);
  for (std::size_t f = n + nh; f < nobj; ++f) {
    v0[f] = 0.5 * ow[f] + static_cast<double>(rng() >> 11) * 0x1.0p-53 * (g.dx - ow[f]);
    v0[nobj + f] = 0.5 * oh[f] + static_cast<double>(rng() >> 11) * 0x1.0p-53 * (g.dy - oh[f]);
  }

  // Net pin table: instance pins with fixed offsets plus the HBT.
  const auto begin = wl.net_pin_begin();
  const auto pin_inst = wl.pin_instance();
  std::vector<double> off_x(pin_inst.size()), off_y(pin_inst.size());
  {
    std::size_t k = 0;
    for (const Net& net : design.nets)
      for (const PinRef& p : net.pins) {
        Point o = design.pin_offset(p, die_from_bit(delta[p.inst]), init.rot[p.inst]);
        off_x[k] = o.x, off_y[k] = o.y;
        ++k;
      }
  }
  std::vector<int> hbt_of(design.nets.size(), -1);
  for (std::size_t h = 0; h < nh; ++h) hbt_of[res.hbt_nets[h]] = static_cast<int>(n + h);

  const double bin = g.db;
  double gamma = smoothing_gamma(1.0, config.stop_overflow, bin, config.gamma_lo, config.gamma_hi);
  const double depth = g.dz;

  auto charge_of = [&](std::span<const double> v, int o) {
    const double cx = clampc(v[o], 0.5 * ow[o], g.dx), cy = clampc(v[nobj + o], 0.5 * oh[o], g.dy);
    return Charge{clip({cx - 0.5 * ow[o], cx + 0.5 * ow[o], cy - 0.5 * oh[o], cy + 0.5 * oh[o], 0.0, depth}, g), weight[o]};
  };

  // Wirelength value and gradient over all objects.
  auto wirelength = [&](std::span<const double> v, std::span<double> gx, std::span<double> gy, bool smooth) {
    std::fill(gx.begin(), gx.end(), 0.0);
    std::fill(gy.begin(), gy.end(), 0.0);
    double total = 0.0;
    std::vector<double> buf[2], gb;
    std::vector<int> ids[2];
    for (std::size_t e = 0; e < design.nets.size(); ++e) {
      for (int axis = 0; axis < 2; ++axis) {
        const std::size_t base = axis ? nobj : 0;
        std::span<const double> off(axis ? off_y : off_x);
        std::span<double> gr = axis ? gy : gx;
        for (int d = 0; d < 2; ++d) buf[d].clear(), ids[d].clear();
        const bool cross = hbt_of[e] >= 0;
        for (int k = begin[e]; k < begin[e + 1]; ++k) {
          const int i = pin_inst[k];
          const int d = cross ? delta[i] : 0;
          buf[d].push_back(v[base + i] + off[k]);
          ids[d].push_back(i);
        }
        if (cross) {
          for (int d = 0; d < 2; ++d) {
            buf[d].push_back(v[base + hbt_of[e]]);
            ids[d].push_back(hbt_of[e]);
          }
        }
        for (int d = 0; d < (cross ? 2 : 1); ++d) {
          if (buf[d].size() < 2) continue;
          if (!smooth) {
            total += partial_hpwl(buf[d]);
            continue;
          }
          gb.assign(buf[d].size(), 0.0);
          total += wa_smooth(buf[d], gamma, gb);
          for (std::size_t k = 0; k < gb.size(); ++k) gr[ids[d][k]] += gb[k];
        }
      }
    }
    return total;
  };

  // Density of each layer: deposit, solve, forces.
  auto density = [&](std::span<const double> v, std::span<double> gx, std::span<double> gy) {
    for (int L = 0; L < 3; ++L) {
      Layer& layer = layers[L];
      std::vector<Charge> direct, prefix, fill;
      double movable = 0.0;
      for (int o : layer.cells) direct.push_back(charge_of(v, o));
      for (int o : layer.hbts) direct.push_back(charge_of(v, o));
      for (int o : layer.macros) prefix.push_back(charge_of(v, o));
      for (const Charge& c : direct) movable += c.weight * c.box.volume();
      for (const Charge& c : prefix) movable += c.weight * c.box.volume();
      for (int o : layer.fillers) fill.push_back(charge_of(v, o));
      std::vector<double> inst = macro_prefix_density(g, prefix);
      accumulate_direct(g, direct, inst);
      layer.overflow = overflow(g, inst, layer.target, movable);
      std::vector<double> rho = inst;
      accumulate_direct(g, fill, rho);
      layer.field.solve(rho);
      std::size_t k = 0;
      for (int o : layer.cells) {
        Vec3 f = layer.field.force_direct(direct[k++]);
        gx[o] = f.x, gy[o] = f.y;
      }
      for (int o : layer.hbts) {
        Vec3 f = layer.field.force_direct(direct[k++]);
        gx[o] = f.x, gy[o] = f.y;
      }
      k = 0;
      for (int o : layer.macros) {
        Vec3 f = layer.field.force_prefix(prefix[k++]);
        gx[o] = f.x, gy[o] = f.y;
      }
      k = 0;
      for (int o : layer.fillers) {
        Vec3 f = layer.field.force_direct(fill[k++]);
        gx[o] = f.x, gy[o] = f.y;
      }
    }
  };

  std::vector<double> wgx(nobj), wgy(nobj), dgx(nobj), dgy(nobj);
  {
    wirelength(v0, wgx, wgy, true);
    density(v0, dgx, dgy);
    for (int L = 0; L < 3; ++L) {
      double wn = 0.0, dn = 0.0;
      for (std::size_t o = 0; o < nobj; ++o) {
        if (layer_of[o] != L) continue;
        wn += std::abs(wgx[o]) + std::abs(wgy[o]);
        dn += std::abs(dgx[o]) + std::abs(dgy[o]);
      }
      layers[L].lambda = initial_lambda(wn, dn, config.lambda_scale);
      layers[L].prev_overflow = layers[L].overflow;
    }
    const double ovf0 = std::max({layers[0].overflow, layers[1].overflow, layers[2].overflow});
    gamma = smoothing_gamma(ovf0, config.stop_overflow, bin, config.gamma_lo, config.gamma_hi);
  }

  auto grad = [&](std::span<const double> v, std::span<double> out) {
    wirelength(v, wgx, wgy, true);
    density(v, dgx, dgy);
    for (std::size_t o = 0; o < nobj; ++o) {
      const double lam = layers[layer_of[o]].lambda;
      const double q = ow[o] * oh[o] * depth;
      const bool macro = o < n && design.instances[o].macro;
      const int pins = o < n ? design.pin_count(static_cast<int>(o)) : 2;
      const double div = precondition_divisor(macro, pins, lam, q);
      out[o] = (wgx[o] + lam * dgx[o]) / div;
      out[nobj + o] = (wgy[o] + lam * dgy[o]) / div;
      if (!std::isfinite(out[o]) || !std::isfinite(out[nobj + o])) throw std::runtime_error("gp2d: non-finite gradient");
    }
  };
  auto proj = [&](std::span<double> v) {
    for (std::size_t o = 0; o < nobj; ++o) {
      v[o] = clampc(v[o], 0.5 * ow[o], g.dx);
      v[nobj + o] = clampc(v[nobj + o], 0.5 * oh[o], g.dy);
    }
  };

  NesterovOptimizer opt(v0, grad, proj, 1e-2 * bin);
  std::vector<double> best = opt.solution();
  double best_overflow = std::numeric_limits<double>::infinity();
  double prev_wl = std::numeric_limits<double>::infinity();
  int rising = 0;
  std::vector<double> sx(nobj), sy(nobj);
  for (int it = 1; it <= config.max_iters; ++it) {
    NesterovOptimizer::Status st = opt.step();
    if (st == NesterovOptimizer::Status::StepUnderflow) {
      spdlog::warn("gp2d: step size underflow at iteration {}", it);
      break;
    }
    double ovf = 0.0;
    for (const Layer& l : layers) ovf = std::max(ovf, l.overflow);
    IterRecord rec;
    rec.iter = it;
    rec.wl = wirelength(opt.solution(), sx, sy, false);
    rec.hbts = static_cast<long long>(nh);
    rec.overflow = ovf;
    rec.macro_overflow = std::max(layers[kTop].overflow, layers[kBottom].overflow);
    rec.lambda = layers[kTop].lambda;
    rec.gamma = gamma;
    res.history.push_back(rec);
    if (config.on_iter) config.on_iter(rec);
    res.iterations = it;

    if (ovf < best_overflow) {
      best_overflow = ovf;
      best = opt.solution();
      rising = 0;
    } else if (rec.wl > prev_wl) {
      ++rising;
    } else {
      rising = 0;
    }
    prev_wl = rec.wl;
    if (config.divergence_window > 0 && rising >= config.divergence_window) {
      spdlog::warn("gp2d: no progress for {} iterations, reverting to best overflow {:.4f}", rising, best_overflow);
      res.diverged = true;
      break;
    }
    if (st == NesterovOptimizer::Status::ZeroGradient || (ovf <= config.stop_overflow && it >= config.min_iters)) {
      res.converged = true;
      break;
    }
    for (Layer& l : layers) {
      l.lambda *= lambda_multiplier(l.prev_overflow - l.overflow, config.mu_min, config.mu_max);
      l.prev_overflow = l.overflow;
    }
    gamma = std::min(gamma, smoothing_gamma(ovf, config.stop_overflow, bin, config.gamma_lo, config.gamma_hi));
  }

  const std::vector<double>& v = res.diverged ? best : opt.solution();
  density(v, dgx, dgy);
  res.overflow = 0.0;
  for (const Layer& l : layers) res.overflow = std::max(res.overflow, l.overflow);
  res.macro_overflow = std::max(layers[kTop].overflow, layers[kBottom].overflow);
  res.state = init;
  res.state.filler_x.clear(), res.state.filler_y.clear(), res.state.filler_z.clear();
  for (std::size_t i = 0; i < n; ++i) res.state.x[i] = v[i], res.state.y[i] = v[nobj + i];
  res.hbt_pos.resize(nh);
  for (std::size_t h = 0; h < nh; ++h) res.hbt_pos[h] = {v[n + h], v[nobj + n + h]};
  round_depth(res.state);
  spdlog::info("gp2d: {} iterations, layer overflow top {:.4f} bottom {:.4f} hbt {:.4f}", res.iterations,
               layers[kTop].overflow, layers[kBottom].overflow, layers[kHbt].overflow);
  return res;
}

}  // namespace place3d
