#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "place3d/model.hpp"

namespace place3d {

/// Bin lattice over the region [0,dx] x [0,dy] x [0,dz]. Maps are stored
/// with z fastest: index = (i * ny + j) * nz + k.
struct GridGeometry {
  int nx = 1, ny = 1, nz = 1;
  double dx = 1.0, dy = 1.0, dz = 1.0;
  double wb = 1.0, hb = 1.0, db = 1.0;

  /// d_b = (w_b + h_b)/2 and d_z = nz * d_b.
  static GridGeometry make(double dx, double dy, int nx, int ny, int nz);
  /// Explicit depth; used for single-layer grids.
  static GridGeometry make(double dx, double dy, double dz, int nx, int ny, int nz);

  std::size_t size() const { return static_cast<std::size_t>(nx) * ny * nz; }
  std::size_t index(int i, int j, int k) const { return (static_cast<std::size_t>(i) * ny + j) * nz + k; }
  double bin_volume() const { return wb * hb * db; }
};

/// Largest power of two n in [4, 512] with `count / n^2 >= 4`.
int choose_bins(std::size_t count);

struct Cuboid {
  double xl = 0, xh = 0, yl = 0, yh = 0, zl = 0, zh = 0;
  double volume() const { return (xh - xl) * (yh - yl) * (zh - zl); }
};

struct Charge {
  Cuboid box;
  double weight = 1.0;
};

struct Vec3 {
  double x = 0.0, y = 0.0, z = 0.0;
};

/// Clips a cuboid to the grid region.
Cuboid clip(const Cuboid& c, const GridGeometry& g);

/// Adds weight * vol(box ∩ b) / vol(b) for each charge by bin traversal.
void accumulate_direct(const GridGeometry& g, std::span<const Charge> charges, std::span<double> map);

/// Sparse bilinear-hat map of one corner point (at most 8 entries); entries
/// past the last bin are dropped.
std::vector<std::pair<std::size_t, double>> corner_map(const GridGeometry& g, double x, double y, double z);

/// Inclusive prefix sum along x, then y, then z.
void prefix_sum_3d(const GridGeometry& g, std::span<double> map);
/// Inclusive suffix sum along every axis.
void suffix_sum_3d(const GridGeometry& g, std::span<double> map);

/// Signed corner maps of every charge followed by one prefix sum.
std::vector<double> macro_prefix_density(const GridGeometry& g, std::span<const Charge> charges);

/// Spectral Neumann Poisson solver, nabla^2 phi = -rho, with the DC term
/// removed. Coefficients a_jkl expand rho in cos(w_j x) cos(w_k y) cos(w_l z)
/// sampled at bin centers.
class PoissonSolver {
 public:
  explicit PoissonSolver(const GridGeometry& g);
  ~PoissonSolver();
  PoissonSolver(const PoissonSolver&) = delete;
  PoissonSolver& operator=(const PoissonSolver&) = delete;

  const GridGeometry& grid() const { return g_; }

  std::vector<double> forward(std::span<const double> map) const;
  std::vector<double> inverse(std::span<const double> coeffs) const;
  /// Computes phi and E = -grad phi for the given density.
  void solve(std::span<const double> rho, bool fields = true);

  double omega_x(int j) const;
  double omega_y(int k) const;
  double omega_z(int l) const;

  const std::vector<double>& coeffs() const { return a_; }
  const std::vector<double>& phi() const { return phi_; }
  const std::vector<double>& ex() const { return ex_; }
  const std::vector<double>& ey() const { return ey_; }
  const std::vector<double>& ez() const { return ez_; }

 private:
  struct Plans;
  GridGeometry g_;
  std::unique_ptr<Plans> plans_;
  std::vector<double> a_, phi_, ex_, ey_, ez_;
};

/// Potential and field over one grid, plus the adjoint needed for forces.
class DensityField {
 public:
  explicit DensityField(const GridGeometry& g);

  const GridGeometry& grid() const { return solver_.grid(); }
  const PoissonSolver& solver() const { return solver_; }

  void solve(std::span<const double> rho);
  const std::vector<double>& rho() const { return rho_; }
  /// 1/2 sum_b vol(b) rho_b phi_b.
  double energy() const;

  /// dU/d(center) = -weight * sum_b vol(box ∩ b) E_b, by bin traversal.
  Vec3 force_direct(const Charge& c) const;
  /// Same quantity from suffix sums of the field maps and the 8 corner maps.
  Vec3 force_prefix(const Charge& c) const;

 private:
  PoissonSolver solver_;
  std::vector<double> rho_;
  std::array<std::vector<double>, 3> suffix_;
};

/// Sum over bins of max(rho_b - target_b, 0) vol(b), divided by `movable`.
double overflow(const GridGeometry& g, std::span<const double> rho, std::span<const double> target, double movable);

struct Size2 {
  double w = 0.0, h = 0.0;
};

/// Filler population of one die.
struct FillerSpec {
  int count = 0;
  double w = 0.0, h = 0.0;
  double volume() const { return count * w * h; }  // times depth/2
};

struct DensityEval {
  double energy = 0.0;
  double overflow = 0.0;
  double macro_overflow = 0.0;
  std::vector<double> gx, gy, gz;  // per instance
  std::vector<double> fgx, fgy;    // per filler
};

/// The 3D electrostatic system of a design: dynamic sizes, weights, fillers,
/// per-die targets and overflow.
class DensityModel {
 public:
  DensityModel(const Design& design, const GridGeometry& g);

  const Design& design() const { return *design_; }
  const GridGeometry& grid() const { return field_.grid(); }
  const DensityField& field() const { return field_; }
  double depth() const { return grid().dz; }

  Size2 dynamic_size(int inst, double z, Rotation rot) const;
  /// Target density at depth z: blended between u- and u+ like a macro.
  double target_at(double z) const;
  double weight(int inst, double z) const;
  double charge(int inst, double z, Rotation rot) const;

  const FillerSpec& fillers(Die d) const { return fillers_[die_index(d)]; }
  std::size_t filler_count() const { return fillers_[0].count + fillers_[1].count; }
  /// Die of filler f (bottom fillers first).
  Die filler_die(std::size_t f) const { return f < static_cast<std::size_t>(fillers_[0].count) ? Die::Bottom : Die::Top; }
  /// Places fillers uniformly at random on their planes.
  template <class Rng>
  void init_fillers(PlacementState& s, Rng& rng) const;

  Cuboid instance_box(const PlacementState& s, int inst) const;
  Cuboid filler_box(const PlacementState& s, std::size_t f) const;

  DensityEval evaluate(const PlacementState& s, int threads = 1, bool gradient = true);
  /// Recomputes the maps and returns the instance-only overflow.
  double overflow_of(const PlacementState& s, int threads = 1);
  const std::vector<double>& instance_map() const { return inst_map_; }
  const std::vector<double>& macro_map() const { return macro_map_; }
  const std::vector<double>& target_map() const { return target_; }

  void dump(const std::string& prefix) const;

 private:
  void deposit(const PlacementState& s, int threads);

  const Design* design_;
  DensityField field_;
  std::array<FillerSpec, 2> fillers_;
  std::vector<double> target_;
  std::vector<double> inst_map_, macro_map_, filler_map_;
  std::vector<Charge> cell_charges_, macro_charges_, filler_charges_;
  std::vector<int> cell_ids_, macro_ids_;
  double inst_volume_ = 0.0, macro_volume_ = 0.0;
};

template <class Rng>
void DensityModel::init_fillers(PlacementState& s, Rng& rng) const {
  const std::size_t n = filler_count();
  s.filler_x.resize(n);
  s.filler_y.resize(n);
  s.filler_z.resize(n);
  const GridGeometry& g = grid();
  for (std::size_t f = 0; f < n; ++f) {
    const FillerSpec& fs = fillers_[die_index(filler_die(f))];
    const double ux = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    const double uy = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    s.filler_x[f] = 0.5 * fs.w + ux * (g.dx - fs.w);
    s.filler_y[f] = 0.5 * fs.h + uy * (g.dy - fs.h);
    s.filler_z[f] = filler_die(f) == Die::Top ? 0.75 * g.dz : 0.25 * g.dz;
  }
}

/// Writes rho, phi, ex, ey, ez as `<prefix>.<name>.bin`: one text header
/// line "nx ny nz float64" followed by raw little-endian doubles.
void dump_maps(const PoissonSolver& solver, std::span<const double> rho, const std::string& prefix);

}  // namespace place3d
