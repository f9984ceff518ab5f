#include "place3d/density.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "parallel.hpp"

namespace place3d {

GridGeometry GridGeometry::make(double dx, double dy, int nx, int ny, int nz) {
  const double db = 0.5 * (dx / nx + dy / ny);
  return make(dx, dy, nz * db, nx, ny, nz);
}

GridGeometry GridGeometry::make(double dx, double dy, double dz, int nx, int ny, int nz) {
  if (nx < 1 || ny < 1 || nz < 1) throw std::invalid_argument("grid dimensions must be positive");
  GridGeometry g;
  g.nx = nx, g.ny = ny, g.nz = nz;
  g.dx = dx, g.dy = dy, g.dz = dz;
  g.wb = dx / nx, g.hb = dy / ny, g.db = dz / nz;
  return g;
}

int choose_bins(std::size_t count) {
  int n = 4;
  while (n < 512 && static_cast<double>(count) / (4.0 * n * n) >= 4.0) n *= 2;
  return n;
}

Cuboid clip(const Cuboid& c, const GridGeometry& g) {
  Cuboid r;
  r.xl = std::clamp(c.xl, 0.0, g.dx), r.xh = std::clamp(c.xh, 0.0, g.dx);
  r.yl = std::clamp(c.yl, 0.0, g.dy), r.yh = std::clamp(c.yh, 0.0, g.dy);
  r.zl = std::clamp(c.zl, 0.0, g.dz), r.zh = std::clamp(c.zh, 0.0, g.dz);
  return r;
}

namespace {

struct Span1 {
  int lo = 0, hi = -1;
};

Span1 bin_range(double a, double b, double size, int n) {
  Span1 s;
  s.lo = std::clamp(static_cast<int>(std::floor(a / size)), 0, n - 1);
  s.hi = std::clamp(static_cast<int>(std::floor(b / size)), 0, n - 1);
  return s;
}

inline double overlap(double a, double b, double lo, double hi) { return std::max(0.0, std::min(b, hi) - std::max(a, lo)); }

template <class F>
void for_each_overlap(const GridGeometry& g, const Cuboid& c, F&& f) {
  const Span1 sx = bin_range(c.xl, c.xh, g.wb, g.nx);
  const Span1 sy = bin_range(c.yl, c.yh, g.hb, g.ny);
  const Span1 sz = bin_range(c.zl, c.zh, g.db, g.nz);
  for (int i = sx.lo; i <= sx.hi; ++i) {
    const double ox = overlap(c.xl, c.xh, i * g.wb, (i + 1) * g.wb);
    if (ox <= 0.0) continue;
    for (int j = sy.lo; j <= sy.hi; ++j) {
      const double oy = overlap(c.yl, c.yh, j * g.hb, (j + 1) * g.hb);
      if (oy <= 0.0) continue;
      for (int k = sz.lo; k <= sz.hi; ++k) {
        const double oz = overlap(c.zl, c.zh, k * g.db, (k + 1) * g.db);
        if (oz <= 0.0) continue;
        f(g.index(i, j, k), ox * oy * oz);
      }
    }
  }
}

// Hat weights of one normalized coordinate: (index, weight) pairs.
int hat(double t, int n, int idx[2], double w[2]) {
  const double f = std::floor(t);
  const double frac = t - f;
  const int base = static_cast<int>(f);
  int m = 0;
  if (base >= 0 && base < n && 1.0 - frac > 0.0) idx[m] = base, w[m++] = 1.0 - frac;
  if (base + 1 >= 0 && base + 1 < n && frac > 0.0) idx[m] = base + 1, w[m++] = frac;
  return m;
}

// Calls f(bin, weight) for the hat-weighted corners around one point.
template <class F>
void visit_corner(const GridGeometry& g, double x, double y, double z, F&& f) {
  int ix[2], iy[2], iz[2];
  double wx[2], wy[2], wz[2];
  const int mx = hat(x / g.wb, g.nx, ix, wx);
  const int my = hat(y / g.hb, g.ny, iy, wy);
  const int mz = hat(z / g.db, g.nz, iz, wz);
  for (int a = 0; a < mx; ++a)
    for (int b = 0; b < my; ++b)
      for (int c = 0; c < mz; ++c) f(g.index(ix[a], iy[b], iz[c]), wx[a] * wy[b] * wz[c]);
}

constexpr int kChunks = 16;

}  // namespace

void accumulate_direct(const GridGeometry& g, std::span<const Charge> charges, std::span<double> map) {
  const double inv = 1.0 / g.bin_volume();
  for (const Charge& c : charges) {
    const double w = c.weight * inv;
    for_each_overlap(g, c.box, [&](std::size_t b, double v) { map[b] += w * v; });
  }
}

std::vector<std::pair<std::size_t, double>> corner_map(const GridGeometry& g, double x, double y, double z) {
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(8);
  visit_corner(g, x, y, z, [&](std::size_t b, double v) { out.emplace_back(b, v); });
  return out;
}

void prefix_sum_3d(const GridGeometry& g, std::span<double> m) {
  for (int i = 1; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.nz; ++k) m[g.index(i, j, k)] += m[g.index(i - 1, j, k)];
  for (int i = 0; i < g.nx; ++i)
    for (int j = 1; j < g.ny; ++j)
      for (int k = 0; k < g.nz; ++k) m[g.index(i, j, k)] += m[g.index(i, j - 1, k)];
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 1; k < g.nz; ++k) m[g.index(i, j, k)] += m[g.index(i, j, k - 1)];
}

void suffix_sum_3d(const GridGeometry& g, std::span<double> m) {
  for (int i = g.nx - 2; i >= 0; --i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.nz; ++k) m[g.index(i, j, k)] += m[g.index(i + 1, j, k)];
  for (int i = 0; i < g.nx; ++i)
    for (int j = g.ny - 2; j >= 0; --j)
      for (int k = 0; k < g.nz; ++k) m[g.index(i, j, k)] += m[g.index(i, j + 1, k)];
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = g.nz - 2; k >= 0; --k) m[g.index(i, j, k)] += m[g.index(i, j, k + 1)];
}

namespace {

template <class F>
void for_each_corner(const Cuboid& c, F&& f) {
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int d = 0; d < 2; ++d) {
        const double sign = ((a + b + d) & 1) ? -1.0 : 1.0;
        f(a ? c.xh : c.xl, b ? c.yh : c.yl, d ? c.zh : c.zl, sign);
      }
}

}  // namespace

std::vector<double> macro_prefix_density(const GridGeometry& g, std::span<const Charge> charges) {
  std::vector<double> map(g.size(), 0.0);
  // Signed hat weights of both faces along one axis, shared by all eight corners.
  struct Axis {
    int m = 0, idx[4];
    double w[4];
  };
  auto axis = [](double lo, double hi, double step, int n, double scale) {
    Axis a;
    int i[2];
    double w[2];
    for (int side = 0; side < 2; ++side) {
      const int k = hat((side ? hi : lo) / step, n, i, w);
      for (int t = 0; t < k; ++t) a.idx[a.m] = i[t], a.w[a.m++] = (side ? -scale : scale) * w[t];
    }
    return a;
  };
  for (const Charge& c : charges) {
    const Axis ax = axis(c.box.xl, c.box.xh, g.wb, g.nx, c.weight);
    const Axis ay = axis(c.box.yl, c.box.yh, g.hb, g.ny, 1.0);
    const Axis az = axis(c.box.zl, c.box.zh, g.db, g.nz, 1.0);
    for (int a = 0; a < ax.m; ++a)
      for (int b = 0; b < ay.m; ++b) {
        const double wab = ax.w[a] * ay.w[b];
        double* row = map.data() + g.index(ax.idx[a], ay.idx[b], 0);
        for (int d = 0; d < az.m; ++d) row[az.idx[d]] += wab * az.w[d];
      }
  }
  prefix_sum_3d(g, map);
  return map;
}

DensityField::DensityField(const GridGeometry& g) : solver_(g) {}

void DensityField::solve(std::span<const double> rho) {
  rho_.assign(rho.begin(), rho.end());
  solver_.solve(rho_);
  suffix_[0] = solver_.ex();
  suffix_[1] = solver_.ey();
  suffix_[2] = solver_.ez();
  for (auto& m : suffix_) suffix_sum_3d(grid(), m);
}

double DensityField::energy() const {
  const auto& phi = solver_.phi();
  double u = 0.0;
  for (std::size_t b = 0; b < rho_.size(); ++b) u += rho_[b] * phi[b];
  return 0.5 * grid().bin_volume() * u;
}

Vec3 DensityField::force_direct(const Charge& c) const {
  const auto& ex = solver_.ex();
  const auto& ey = solver_.ey();
  const auto& ez = solver_.ez();
  Vec3 f;
  for_each_overlap(grid(), c.box, [&](std::size_t b, double v) {
    f.x += v * ex[b];
    f.y += v * ey[b];
    f.z += v * ez[b];
  });
  return {-c.weight * f.x, -c.weight * f.y, -c.weight * f.z};
}

Vec3 DensityField::force_prefix(const Charge& c) const {
  const GridGeometry& g = grid();
  Vec3 f;
  for_each_corner(c.box, [&](double x, double y, double z, double sign) {
    visit_corner(g, x, y, z, [&](std::size_t b, double v) {
      f.x += sign * v * suffix_[0][b];
      f.y += sign * v * suffix_[1][b];
      f.z += sign * v * suffix_[2][b];
    });
  });
  const double k = -c.weight * g.bin_volume();
  return {k * f.x, k * f.y, k * f.z};
}

double overflow(const GridGeometry& g, std::span<const double> rho, std::span<const double> target, double movable) {
  if (!(movable > 0.0)) return 0.0;
  double over = 0.0;
  for (std::size_t b = 0; b < rho.size(); ++b) over += std::max(rho[b] - target[b], 0.0);
  return over * g.bin_volume() / movable;
}

DensityModel::DensityModel(const Design& design, const GridGeometry& g) : design_(&design), field_(g) {
  for (Die d : {Die::Bottom, Die::Top}) {
    const double area = g.dx * g.dy * (1.0 - design.die.max_util[die_index(d)]);
    FillerSpec& fs = fillers_[die_index(d)];
    if (area <= 0.0) continue;
    double sw = 0.0, sh = 0.0;
    int n = 0;
    for (std::size_t i = 0; i < design.instances.size(); ++i) {
      if (design.instances[i].macro) continue;
      sw += design.kind(static_cast<int>(i), d).width;
      sh += design.kind(static_cast<int>(i), d).height;
      ++n;
    }
    const double w0 = n ? sw / n : g.wb, h0 = n ? sh / n : g.hb;
    fs.count = std::max(1, static_cast<int>(std::floor(area / (w0 * h0))));
    const double s = std::sqrt(area / (fs.count * w0 * h0));
    fs.w = s * w0;
    fs.h = s * h0;
  }
  target_.resize(g.size());
  for (int i = 0; i < g.nx; ++i)
    for (int j = 0; j < g.ny; ++j)
      for (int k = 0; k < g.nz; ++k) {
        const bool top = (k + 0.5) * g.db > 0.5 * g.dz;
        target_[g.index(i, j, k)] = design.die.max_util[die_index(top ? Die::Top : Die::Bottom)];
      }
  for (std::size_t i = 0; i < design.instances.size(); ++i) {
    (design.instances[i].macro ? macro_ids_ : cell_ids_).push_back(static_cast<int>(i));
  }
}

Size2 DensityModel::dynamic_size(int inst, double z, Rotation rot) const {
  const double dz = depth();
  if (!design_->instances[inst].macro) {
    Die d = die_from_bit(partition_bit(z, dz));
    return {design_->width(inst, d, rot), design_->height(inst, d, rot)};
  }
  const double t = 2.0 * std::clamp(z, 0.25 * dz, 0.75 * dz) / dz - 0.5;
  return {t * design_->width(inst, Die::Top, rot) + (1.0 - t) * design_->width(inst, Die::Bottom, rot),
          t * design_->height(inst, Die::Top, rot) + (1.0 - t) * design_->height(inst, Die::Bottom, rot)};
}

double DensityModel::target_at(double z) const {
  const double dz = depth();
  const double t = 2.0 * std::clamp(z, 0.25 * dz, 0.75 * dz) / dz - 0.5;
  return t * design_->die.max_util[die_index(Die::Top)] + (1.0 - t) * design_->die.max_util[die_index(Die::Bottom)];
}

double DensityModel::weight(int inst, double z) const { return design_->instances[inst].macro ? target_at(z) : 1.0; }

double DensityModel::charge(int inst, double z, Rotation rot) const {
  Size2 s = dynamic_size(inst, z, rot);
  return s.w * s.h * 0.5 * depth();
}

namespace {
double centered(double c, double half, double extent) {
  if (2.0 * half >= extent) return 0.5 * extent;
  return std::clamp(c, half, extent - half);
}
}  // namespace

Cuboid DensityModel::instance_box(const PlacementState& s, int inst) const {
  const GridGeometry& g = grid();
  const Size2 sz = dynamic_size(inst, s.z[inst], s.rot[inst]);
  const double cx = centered(s.x[inst], 0.5 * sz.w, g.dx);
  const double cy = centered(s.y[inst], 0.5 * sz.h, g.dy);
  const double cz = std::clamp(s.z[inst], 0.25 * g.dz, 0.75 * g.dz);
  return clip({cx - 0.5 * sz.w, cx + 0.5 * sz.w, cy - 0.5 * sz.h, cy + 0.5 * sz.h, cz - 0.25 * g.dz, cz + 0.25 * g.dz}, g);
}

Cuboid DensityModel::filler_box(const PlacementState& s, std::size_t f) const {
  const GridGeometry& g = grid();
  const FillerSpec& fs = fillers_[die_index(filler_die(f))];
  const double cx = centered(s.filler_x[f], 0.5 * fs.w, g.dx);
  const double cy = centered(s.filler_y[f], 0.5 * fs.h, g.dy);
  const double cz = s.filler_z[f];
  return clip({cx - 0.5 * fs.w, cx + 0.5 * fs.w, cy - 0.5 * fs.h, cy + 0.5 * fs.h, cz - 0.25 * g.dz, cz + 0.25 * g.dz}, g);
}

namespace {

// Fixed chunking keeps the summation order independent of the thread count.
void deposit_chunked(const GridGeometry& g, std::span<const Charge> charges, std::span<double> map, int threads) {
  const int n = static_cast<int>(charges.size());
  if (n < 4 * kChunks) {
    accumulate_direct(g, charges, map);
    return;
  }
  std::vector<std::vector<double>> part(kChunks, std::vector<double>(g.size(), 0.0));
  const int per = (n + kChunks - 1) / kChunks;
  detail::parallel_for(kChunks, threads, [&](int lo, int hi) {
    for (int c = lo; c < hi; ++c) {
      const int b = std::min(n, c * per), e = std::min(n, b + per);
      accumulate_direct(g, charges.subspan(b, e - b), part[c]);
    }
  });
  for (const auto& p : part)
    for (std::size_t b = 0; b < map.size(); ++b) map[b] += p[b];
}

}  // namespace

void DensityModel::deposit(const PlacementState& s, int threads) {
  const GridGeometry& g = grid();
  cell_charges_.clear();
  macro_charges_.clear();
  filler_charges_.clear();
  inst_volume_ = macro_volume_ = 0.0;
  for (int i : cell_ids_) {
    Charge c{instance_box(s, i), 1.0};
    inst_volume_ += c.box.volume();
    cell_charges_.push_back(c);
  }
  for (int i : macro_ids_) {
    Charge c{instance_box(s, i), weight(i, s.z[i])};
    inst_volume_ += c.weight * c.box.volume();
    macro_volume_ += c.weight * c.box.volume();
    macro_charges_.push_back(c);
  }
  for (std::size_t f = 0; f < s.filler_x.size(); ++f) filler_charges_.push_back({filler_box(s, f), 1.0});

  macro_map_ = macro_prefix_density(g, macro_charges_);
  inst_map_ = macro_map_;
  deposit_chunked(g, cell_charges_, inst_map_, threads);
  filler_map_.assign(g.size(), 0.0);
  deposit_chunked(g, filler_charges_, filler_map_, threads);
}

double DensityModel::overflow_of(const PlacementState& s, int threads) {
  deposit(s, threads);
  return overflow(grid(), inst_map_, target_, inst_volume_);
}

DensityEval DensityModel::evaluate(const PlacementState& s, int threads, bool gradient) {
  deposit(s, threads);
  std::vector<double> rho(inst_map_);
  for (std::size_t b = 0; b < rho.size(); ++b) rho[b] += filler_map_[b];
  field_.solve(rho);

  DensityEval r;
  r.energy = field_.energy();
  r.overflow = overflow(grid(), inst_map_, target_, inst_volume_);
  r.macro_overflow = overflow(grid(), macro_map_, target_, macro_volume_);
  if (!gradient) return r;

  const std::size_t ni = design_->instances.size();
  r.gx.assign(ni, 0.0);
  r.gy.assign(ni, 0.0);
  r.gz.assign(ni, 0.0);
  detail::parallel_for(static_cast<int>(cell_ids_.size()), threads, [&](int lo, int hi) {
    for (int k = lo; k < hi; ++k) {
      Vec3 f = field_.force_direct(cell_charges_[k]);
      const int i = cell_ids_[k];
      r.gx[i] = f.x, r.gy[i] = f.y, r.gz[i] = f.z;
    }
  });
  for (std::size_t k = 0; k < macro_ids_.size(); ++k) {
    Vec3 f = field_.force_prefix(macro_charges_[k]);
    const int i = macro_ids_[k];
    r.gx[i] = f.x, r.gy[i] = f.y, r.gz[i] = f.z;
  }
  const std::size_t nf = filler_charges_.size();
  r.fgx.assign(nf, 0.0);
  r.fgy.assign(nf, 0.0);
  detail::parallel_for(static_cast<int>(nf), threads, [&](int lo, int hi) {
    for (int k = lo; k < hi; ++k) {
      Vec3 f = field_.force_direct(filler_charges_[k]);
      r.fgx[k] = f.x, r.fgy[k] = f.y;
    }
  });
  return r;
}

void DensityModel::dump(const std::string& prefix) const { dump_maps(field_.solver(), field_.rho(), prefix); }

void dump_maps(const PoissonSolver& solver, std::span<const double> rho, const std::string& prefix) {
  const GridGeometry& g = solver.grid();
  auto write = [&](const char* name, std::span<const double> m) {
    std::ofstream out(prefix + "." + name + ".bin", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + prefix + "." + name + ".bin");
    out << g.nx << ' ' << g.ny << ' ' << g.nz << " float64\n";
    out.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  };
  write("rho", rho);
  write("phi", solver.phi());
  write("ex", solver.ex());
  write("ey", solver.ey());
  write("ez", solver.ez());
}

}  // namespace place3d
