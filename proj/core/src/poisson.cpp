#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>

#include "place3d/density.hpp"

namespace place3d {

namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct PoissonSolver::Plans {
  std::size_t n = 0;
  double* in = nullptr;
  double* out = nullptr;
  fftw_plan fwd = nullptr, inv = nullptr, sx = nullptr, sy = nullptr, sz = nullptr;

  Plans(int nx, int ny, int nz) : n(static_cast<std::size_t>(nx) * ny * nz) {
    std::lock_guard<std::mutex> lock(planner_mutex());
    in = fftw_alloc_real(n);
    out = fftw_alloc_real(n);
    const unsigned flags = FFTW_ESTIMATE;
    fwd = fftw_plan_r2r_3d(nx, ny, nz, in, out, FFTW_REDFT10, FFTW_REDFT10, FFTW_REDFT10, flags);
    inv = fftw_plan_r2r_3d(nx, ny, nz, in, out, FFTW_REDFT01, FFTW_REDFT01, FFTW_REDFT01, flags);
    sx = fftw_plan_r2r_3d(nx, ny, nz, in, out, FFTW_RODFT01, FFTW_REDFT01, FFTW_REDFT01, flags);
    sy = fftw_plan_r2r_3d(nx, ny, nz, in, out, FFTW_REDFT01, FFTW_RODFT01, FFTW_REDFT01, flags);
    sz = fftw_plan_r2r_3d(nx, ny, nz, in, out, FFTW_REDFT01, FFTW_REDFT01, FFTW_RODFT01, flags);
  }
  ~Plans() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    for (fftw_plan p : {fwd, inv, sx, sy, sz}) fftw_destroy_plan(p);
    fftw_free(in);
    fftw_free(out);
  }
  void run(fftw_plan p, std::span<const double> src, std::span<double> dst) const {
    std::memcpy(in, src.data(), n * sizeof(double));
    fftw_execute(p);
    std::memcpy(dst.data(), out, n * sizeof(double));
  }
};

PoissonSolver::PoissonSolver(const GridGeometry& g)
    : g_(g), plans_(std::make_unique<Plans>(g.nx, g.ny, g.nz)) {}

PoissonSolver::~PoissonSolver() = default;

double PoissonSolver::omega_x(int j) const { return j * std::numbers::pi / g_.dx; }
double PoissonSolver::omega_y(int k) const { return k * std::numbers::pi / g_.dy; }
double PoissonSolver::omega_z(int l) const { return l * std::numbers::pi / g_.dz; }

std::vector<double> PoissonSolver::forward(std::span<const double> map) const {
  std::vector<double> y(g_.size());
  plans_->run(plans_->fwd, map, y);
  for (int j = 0; j < g_.nx; ++j) {
    const double fj = (j ? 2.0 : 1.0) / (2.0 * g_.nx);
    for (int k = 0; k < g_.ny; ++k) {
      const double fk = (k ? 2.0 : 1.0) / (2.0 * g_.ny);
      for (int l = 0; l < g_.nz; ++l) y[g_.index(j, k, l)] *= fj * fk * (l ? 2.0 : 1.0) / (2.0 * g_.nz);
    }
  }
  return y;
}

std::vector<double> PoissonSolver::inverse(std::span<const double> coeffs) const {
  std::vector<double> x(coeffs.begin(), coeffs.end());
  for (int j = 0; j < g_.nx; ++j) {
    for (int k = 0; k < g_.ny; ++k) {
      for (int l = 0; l < g_.nz; ++l) x[g_.index(j, k, l)] *= (j ? 0.5 : 1.0) * (k ? 0.5 : 1.0) * (l ? 0.5 : 1.0);
    }
  }
  std::vector<double> out(g_.size());
  plans_->run(plans_->inv, x, out);
  return out;
}

void PoissonSolver::solve(std::span<const double> rho, bool fields) {
  a_ = forward(rho);
  std::vector<double> c(g_.size());
  for (int j = 0; j < g_.nx; ++j) {
    const double wj = omega_x(j);
    for (int k = 0; k < g_.ny; ++k) {
      const double wk = omega_y(k);
      for (int l = 0; l < g_.nz; ++l) {
        const double wl = omega_z(l);
        const double w2 = wj * wj + wk * wk + wl * wl;
        const std::size_t id = g_.index(j, k, l);
        c[id] = (j | k | l) ? a_[id] / w2 : 0.0;
      }
    }
  }
  phi_ = inverse(c);
  if (!fields) return;

  // Sine axis: X[j-1] = c_j w_j / 2 for j >= 1, X[n-1] = 0; cosine axes halve j >= 1.
  std::vector<double> x(g_.size());
  auto field = [&](int axis, std::vector<double>& out) {
    std::fill(x.begin(), x.end(), 0.0);
    for (int j = 0; j < g_.nx; ++j) {
      for (int k = 0; k < g_.ny; ++k) {
        for (int l = 0; l < g_.nz; ++l) {
          const int idx[3] = {j, k, l};
          if (idx[axis] == 0) continue;
          double v = c[g_.index(j, k, l)];
          v *= axis == 0 ? omega_x(j) : axis == 1 ? omega_y(k) : omega_z(l);
          int dst[3] = {j, k, l};
          for (int a = 0; a < 3; ++a) {
            if (a == axis) {
              v *= 0.5;
              dst[a] = idx[a] - 1;
            } else if (idx[a]) {
              v *= 0.5;
            }
          }
          x[g_.index(dst[0], dst[1], dst[2])] = v;
        }
      }
    }
    out.resize(g_.size());
    plans_->run(axis == 0 ? plans_->sx : axis == 1 ? plans_->sy : plans_->sz, x, out);
  };
  field(0, ex_);
  field(1, ey_);
  field(2, ez_);
}

}  // namespace place3d
