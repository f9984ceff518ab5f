#include "place3d/wirelength.hpp"

#include <algorithm>
#include <cmath>

#include "parallel.hpp"

namespace place3d {

double partial_hpwl(std::span<const double> u) {
  if (u.empty()) return 0.0;
  auto [lo, hi] = std::minmax_element(u.begin(), u.end());
  return *hi - *lo;
}

double wa_smooth(std::span<const double> u, double gamma, std::span<double> grad) {
  const std::size_t n = u.size();
  if (n == 0) return 0.0;
  auto [lo_it, hi_it] = std::minmax_element(u.begin(), u.end());
  const double lo = *lo_it, hi = *hi_it;
  double sp = 0.0, sxp = 0.0, sn = 0.0, sxn = 0.0;
  for (double v : u) {
    double ep = std::exp((v - hi) / gamma);
    double en = std::exp((lo - v) / gamma);
    sp += ep;
    sxp += v * ep;
    sn += en;
    sxn += v * en;
  }
  const double wmax = sxp / sp, wmin = sxn / sn;
  if (!grad.empty()) {
    for (std::size_t i = 0; i < n; ++i) {
      double ep = std::exp((u[i] - hi) / gamma);
      double en = std::exp((lo - u[i]) / gamma);
      grad[i] = ep / sp * (1.0 + (u[i] - wmax) / gamma) - en / sn * (1.0 - (u[i] - wmin) / gamma);
    }
  }
  return wmax - wmin;
}

Interval optimal_interval(const Interval& top, const Interval& bottom) {
  double a = std::max(top.lo, bottom.lo);
  double b = std::min(top.hi, bottom.hi);
  return {std::min(a, b), std::max(a, b)};
}

Box optimal_region(const Box& top, const Box& bottom) {
  return {optimal_interval(top.x, bottom.x), optimal_interval(top.y, bottom.y)};
}

namespace {

inline double combine(double full, const Interval& t, const Interval& b) {
  return std::max(full, t.span() + b.span());
}

inline Interval with(Interval iv, double v) {
  iv.add(v);
  return iv;
}

}  // namespace

double bistratal_axis(std::span<const double> u, std::span<const std::uint8_t> side) {
  Interval full, part[2];
  for (std::size_t i = 0; i < u.size(); ++i) {
    full.add(u[i]);
    part[side[i]].add(u[i]);
  }
  return combine(full.span(), part[1], part[0]);
}

void AxisExtrema::add(double v) {
  ++count;
  if (v > max1) {
    max2 = max1;
    max1 = v;
  } else if (v > max2) {
    max2 = v;
  }
  if (v < min1) {
    min2 = min1;
    min1 = v;
  } else if (v < min2) {
    min2 = v;
  }
}

Interval AxisExtrema::without(double v) const {
  if (count <= 1) return {};
  return {v == min1 ? min2 : min1, v == max1 ? max2 : max1};
}

NetBoxes build_net_boxes(std::span<const double> px, std::span<const double> py, std::span<const std::uint8_t> side) {
  NetBoxes nb;
  for (std::size_t i = 0; i < px.size(); ++i) {
    nb.full.add({px[i], py[i]});
    nb.x[side[i]].add(px[i]);
    nb.y[side[i]].add(py[i]);
    ++nb.pins[side[i]];
  }
  return nb;
}

void net_z_delta_naive(std::span<const double> px, std::span<const double> py, std::span<const std::uint8_t> side,
                       std::span<double> out) {
  const std::size_t n = px.size();
  Interval fx, fy;
  for (std::size_t i = 0; i < n; ++i) {
    fx.add(px[i]);
    fy.add(py[i]);
  }
  for (std::size_t p = 0; p < n; ++p) {
    double w[2];
    for (int s = 0; s < 2; ++s) {
      Interval x[2], y[2];
      for (std::size_t i = 0; i < n; ++i) {
        int d = i == p ? s : side[i];
        x[d].add(px[i]);
        y[d].add(py[i]);
      }
      w[s] = combine(fx.span(), x[1], x[0]) + combine(fy.span(), y[1], y[0]);
    }
    out[p] = w[1] - w[0];
  }
}

void net_z_delta_incremental(std::span<const double> px, std::span<const double> py,
                             std::span<const std::uint8_t> side, std::span<double> out) {
  const NetBoxes nb = build_net_boxes(px, py, side);
  const double fxs = nb.full.x.span(), fys = nb.full.y.span();
  const Interval ex[2] = {nb.x[0].extent(), nb.x[1].extent()};
  const Interval ey[2] = {nb.y[0].extent(), nb.y[1].extent()};
  const double w_stay = combine(fxs, ex[1], ex[0]) + combine(fys, ey[1], ey[0]);
  for (std::size_t p = 0; p < px.size(); ++p) {
    const int s = side[p], o = 1 - s;
    Interval mx[2], my[2];
    mx[s] = nb.x[s].without(px[p]);
    my[s] = nb.y[s].without(py[p]);
    mx[o] = with(ex[o], px[p]);
    my[o] = with(ey[o], py[p]);
    const double w_move = combine(fxs, mx[1], mx[0]) + combine(fys, my[1], my[0]);
    out[p] = s == 1 ? w_stay - w_move : w_move - w_stay;
  }
}

WirelengthModel::WirelengthModel(const Design& design) : design_(&design) {
  net_begin_.reserve(design.nets.size() + 1);
  net_begin_.push_back(0);
  for (const Net& net : design.nets) {
    for (const PinRef& p : net.pins) {
      pin_inst_.push_back(p.inst);
      pin_ref_.push_back(p);
    }
    net_begin_.push_back(static_cast<int>(pin_inst_.size()));
  }
}

void WirelengthModel::pin_positions(const PlacementState& s, const Partition& delta, std::vector<double>& px,
                                    std::vector<double>& py) const {
  px.resize(pin_ref_.size());
  py.resize(pin_ref_.size());
  for (std::size_t k = 0; k < pin_ref_.size(); ++k) {
    const PinRef& p = pin_ref_[k];
    Point o = design_->pin_offset(p, die_from_bit(delta[p.inst]), s.rot[p.inst]);
    px[k] = s.x[p.inst] + o.x;
    py[k] = s.y[p.inst] + o.y;
  }
}

WirelengthEval WirelengthModel::evaluate(const PlacementState& s, const WlParams& params, int threads) const {
  const Partition delta = derive_partition(s);
  std::vector<double> px, py;
  pin_positions(s, delta, px, py);
  const std::size_t np = pin_ref_.size();
  const int ne = static_cast<int>(design_->nets.size());
  std::vector<double> gpx(np, 0.0), gpy(np, 0.0), gpz(np, 0.0), pz(np);
  std::vector<std::uint8_t> side(np);
  for (std::size_t k = 0; k < np; ++k) {
    pz[k] = s.z[pin_inst_[k]];
    side[k] = delta[pin_inst_[k]];
  }
  std::vector<double> net_bi(ne, 0.0), net_z(ne, 0.0);
  const double gamma = params.gamma;

  detail::parallel_for(ne, threads, [&](int lo, int hi) {
    std::vector<double> buf[2], gbuf;
    std::vector<int> idx[2];
    for (int e = lo; e < hi; ++e) {
      const int b = net_begin_[e], n = net_begin_[e + 1] - b;
      if (n < 2) continue;
      for (int axis = 0; axis < 2; ++axis) {
        const std::vector<double>& coord = axis == 0 ? px : py;
        std::vector<double>& g = axis == 0 ? gpx : gpy;
        std::span<const double> all(coord.data() + b, n);
        buf[0].clear(), buf[1].clear(), idx[0].clear(), idx[1].clear();
        for (int k = 0; k < n; ++k) {
          buf[side[b + k]].push_back(all[k]);
          idx[side[b + k]].push_back(b + k);
        }
        const double full = partial_hpwl(all);
        const double split = partial_hpwl(buf[0]) + partial_hpwl(buf[1]);
        if (split >= full) {
          for (int d = 0; d < 2; ++d) {
            if (buf[d].size() < 2) continue;
            gbuf.assign(buf[d].size(), 0.0);
            net_bi[e] += wa_smooth(buf[d], gamma, gbuf);
            for (std::size_t k = 0; k < gbuf.size(); ++k) g[idx[d][k]] = gbuf[k];
          }
        } else {
          net_bi[e] += wa_smooth(all, gamma, std::span<double>(g.data() + b, n));
        }
      }
      net_z[e] = wa_smooth(std::span<const double>(pz.data() + b, n), gamma, std::span<double>(gpz.data() + b, n));
    }
  });

  WirelengthEval r;
  for (int e = 0; e < ne; ++e) {
    r.bistratal += net_bi[e];
    r.value += net_bi[e] + params.alpha * net_z[e];
  }
  const std::size_t ni = design_->instances.size();
  r.gx.assign(ni, 0.0);
  r.gy.assign(ni, 0.0);
  r.gz_hbt.assign(ni, 0.0);
  for (std::size_t k = 0; k < np; ++k) {
    r.gx[pin_inst_[k]] += gpx[k];
    r.gy[pin_inst_[k]] += gpy[k];
    r.gz_hbt[pin_inst_[k]] += gpz[k];
  }
  return r;
}

double WirelengthModel::exact_bistratal(const PlacementState& s) const {
  const Partition delta = derive_partition(s);
  std::vector<double> px, py;
  pin_positions(s, delta, px, py);
  std::vector<std::uint8_t> side(pin_inst_.size());
  for (std::size_t k = 0; k < side.size(); ++k) side[k] = delta[pin_inst_[k]];
  double total = 0.0;
  for (std::size_t e = 0; e + 1 < net_begin_.size(); ++e) {
    const int b = net_begin_[e], n = net_begin_[e + 1] - b;
    std::span<const std::uint8_t> sd(side.data() + b, n);
    total += bistratal_axis(std::span<const double>(px.data() + b, n), sd) +
             bistratal_axis(std::span<const double>(py.data() + b, n), sd);
  }
  return total;
}

long long WirelengthModel::crossing_nets(const PlacementState& s) const {
  const Partition delta = derive_partition(s);
  long long c = 0;
  for (const Net& net : design_->nets) c += crossing_indicator(net, delta);
  return c;
}

template <class F>
std::vector<double> WirelengthModel::fd_z_gradient(const PlacementState& s, int threads, F per_net) const {
  const Partition delta = derive_partition(s);
  std::vector<double> px, py;
  pin_positions(s, delta, px, py);
  const std::size_t np = pin_inst_.size();
  std::vector<std::uint8_t> side(np);
  for (std::size_t k = 0; k < np; ++k) side[k] = delta[pin_inst_[k]];
  std::vector<double> dp(np, 0.0);
  const int ne = static_cast<int>(design_->nets.size());
  detail::parallel_for(ne, threads, [&](int lo, int hi) {
    for (int e = lo; e < hi; ++e) {
      const int b = net_begin_[e], n = net_begin_[e + 1] - b;
      per_net(std::span<const double>(px.data() + b, n), std::span<const double>(py.data() + b, n),
              std::span<const std::uint8_t>(side.data() + b, n), std::span<double>(dp.data() + b, n));
    }
  });
  std::vector<double> g(design_->instances.size(), 0.0);
  const double scale = 4.0 / s.depth;
  for (std::size_t k = 0; k < np; ++k) g[pin_inst_[k]] += dp[k];
  for (double& v : g) v *= scale;
  return g;
}

std::vector<double> WirelengthModel::fd_z_gradient_naive(const PlacementState& s, int threads) const {
  return fd_z_gradient(s, threads, net_z_delta_naive);
}

std::vector<double> WirelengthModel::fd_z_gradient_incremental(const PlacementState& s, int threads) const {
  return fd_z_gradient(s, threads, net_z_delta_incremental);
}

std::vector<double> normalize_z_gradient(std::span<const double> gx, std::span<const double> gy,
                                         std::span<const double> gz, std::span<const double> gz_hbt, double alpha) {
  double nx = 0.0, ny = 0.0, nz = 0.0;
  for (double v : gx) nx += std::abs(v);
  for (double v : gy) ny += std::abs(v);
  for (double v : gz) nz += std::abs(v);
  const double k = nz > 0.0 ? (nx + ny) / (2.0 * nz) : 0.0;
  std::vector<double> out(gz.size());
  for (std::size_t i = 0; i < gz.size(); ++i) out[i] = k * gz[i] + alpha * gz_hbt[i];
  return out;
}

}  // namespace place3d
