#include "place3d/gp.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>

namespace place3d {

void write_iteration_csv_header(std::ostream& out) { out << "iter,wl,hbts,overflow\n"; }

void write_iteration_csv(std::ostream& out, const IterRecord& r) {
  out << r.iter << ',' << r.wl << ',' << r.hbts << ',' << r.overflow << '\n';
}

FlowPath select_flow(double ratio) { return ratio >= 0.5 ? FlowPath::Gp2dMulti : FlowPath::Gp3d; }
FlowPath select_flow(const Design& design) { return select_flow(design.macro_area_ratio()); }

double hbt_penalty_alpha(const Design& d, double depth, double alpha0, double log_base) {
  const double eta = 2.0 * d.hbt.size / (d.die.row_height[0] + d.die.row_height[1]);
  const double arg = std::max(90.0 * d.hbt.cost * eta - 1.0, 1.0 + 1e-6);
  double lg = std::log(arg);
  if (log_base > 0.0) lg /= std::log(log_base);
  return alpha0 * d.die.width * eta * eta / depth * lg;
}

double hbt_cost_alpha(const Design& d, double depth) { return depth > 0.0 ? 2.0 * d.hbt.cost / depth : 0.0; }

double precondition_divisor(bool macro, int pins, double lambda, double q) {
  return std::max(1.0, (macro ? pins : 0) + lambda * q);
}

double lambda_q_divisor(double lambda, double q) { return lambda * q; }

double initial_lambda(double wl_norm, double density_norm, double scale) {
  if (!(wl_norm > 0.0) || !(density_norm > 0.0)) return scale;
  return scale * wl_norm / density_norm;
}

double lambda_multiplier(double drop, double mu_min, double mu_max) {
  constexpr double kFast = 0.005;
  if (drop <= 0.0) return mu_max;
  if (drop >= kFast) return mu_min;
  return mu_max - (mu_max - mu_min) * drop / kFast;
}

double smoothing_gamma(double overflow, double stop, double bin, double lo, double hi) {
  const double t = stop < 1.0 ? std::clamp((overflow - stop) / (1.0 - stop), 0.0, 1.0) : 0.0;
  return bin * lo * std::pow(hi / lo, t);
}

// ---------------------------------------------------------------------------

namespace {
double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}
double max_abs(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}
}  // namespace

NesterovOptimizer::NesterovOptimizer(std::vector<double> v0, Gradient grad, Projection proj, double probe)
    : grad_(std::move(grad)), proj_(std::move(proj)), probe_(probe) {
  project(v0);
  u_ = v0;
  v_ = std::move(v0);
  gv_.assign(v_.size(), 0.0);
  grad_(v_, gv_);
  const double gmax = max_abs(gv_);
  if (gmax == 0.0) {
    v_prev_ = v_;
    g_prev_ = gv_;
    return;
  }
  v_prev_ = v_;
  for (std::size_t i = 0; i < v_.size(); ++i) v_prev_[i] -= probe_ / gmax * gv_[i];
  project(v_prev_);
  g_prev_.assign(v_.size(), 0.0);
  grad_(v_prev_, g_prev_);
  const double dg = dist(gv_, g_prev_);
  alpha_ = dg > 0.0 ? dist(v_, v_prev_) / dg : probe_ / gmax;
}

void NesterovOptimizer::project(std::vector<double>& v) const {
  if (proj_) proj_(v);
}

void NesterovOptimizer::refresh() { grad_(v_, gv_); }

NesterovOptimizer::Status NesterovOptimizer::step() {
  if (max_abs(gv_) == 0.0) return Status::ZeroGradient;
  const double dg = dist(gv_, g_prev_);
  double alpha = dg > 0.0 ? dist(v_, v_prev_) / dg : alpha_;
  if (!(alpha > 0.0) || !std::isfinite(alpha)) alpha = alpha_;
  const std::size_t n = v_.size();
  const double a_next = 0.5 * (1.0 + std::sqrt(4.0 * a_ * a_ + 1.0));
  const double coef = (a_ - 1.0) / a_next;
  std::vector<double> u_new(n), v_new(n), g_new(n);
  for (int tries = 0; tries < 10; ++tries) {
    if (!(alpha > 1e-300)) return Status::StepUnderflow;
    for (std::size_t i = 0; i < n; ++i) u_new[i] = v_[i] - alpha * gv_[i];
    project(u_new);
    for (std::size_t i = 0; i < n; ++i) v_new[i] = u_new[i] + coef * (u_new[i] - u_[i]);
    project(v_new);
    grad_(v_new, g_new);
    const double d = dist(g_new, gv_);
    const double alpha_hat = d > 0.0 ? dist(v_new, v_) / d : alpha;
    if (alpha_hat >= 0.95 * alpha) break;
    alpha = alpha_hat;
  }
  // Momentum restart once the gradient turns against the last move.
  double turn = 0.0;
  for (std::size_t i = 0; i < n; ++i) turn += g_new[i] * (u_new[i] - u_[i]);
  alpha_ = alpha;
  v_prev_ = std::move(v_);
  g_prev_ = std::move(gv_);
  u_ = std::move(u_new);
  v_ = std::move(v_new);
  gv_ = std::move(g_new);
  a_ = turn > 0.0 ? 1.0 : a_next;
  return Status::Ok;
}

// ---------------------------------------------------------------------------

GridGeometry make_grid(const Design& design, const GpConfig& config) {
  std::size_t cells = 0;
  for (const Instance& inst : design.instances) cells += !inst.macro;
  const int n = config.bins > 0 ? config.bins : choose_bins(cells);
  return GridGeometry::make(design.die.width, design.die.height, n, n, config.nz);
}

Gp3dProblem::Gp3dProblem(const Design& design, const GpConfig& config)
    : design_(&design), config_(config), wl_(design), density_(design, make_grid(design, config)) {
  alpha_ = hbt_penalty_alpha(design, density_.depth(), config.alpha0, config.alpha_log_base);
  if (config.alpha_cost_floor) alpha_ = std::max(alpha_, hbt_cost_alpha(design, density_.depth()));
  if (config.alpha_override >= 0.0) alpha_ = config.alpha_override;
}

PlacementState Gp3dProblem::initial_state() const {
  const GridGeometry& g = density_.grid();
  PlacementState s;
  s.depth = g.dz;
  s.resize(design_->instances.size());
  std::mt19937_64 rng(config_.seed);
  std::normal_distribution<double> nx(0.5 * g.dx, config_.init_sigma * g.dx);
  std::normal_distribution<double> ny(0.5 * g.dy, config_.init_sigma * g.dy);
  std::normal_distribution<double> nz(0.5 * g.dz, config_.init_sigma * g.dz);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s.x[i] = nx(rng);
    s.y[i] = ny(rng);
    s.z[i] = nz(rng);
  }
  density_.init_fillers(s, rng);
  project(s);
  return s;
}

void Gp3dProblem::project(PlacementState& s) const {
  const GridGeometry& g = density_.grid();
  auto clampc = [](double v, double half, double extent) {
    return 2.0 * half >= extent ? 0.5 * extent : std::clamp(v, half, extent - half);
  };
  for (std::size_t i = 0; i < s.size(); ++i) {
    s.z[i] = std::clamp(s.z[i], 0.25 * g.dz, 0.75 * g.dz);
    Size2 sz = density_.dynamic_size(static_cast<int>(i), s.z[i], s.rot[i]);
    s.x[i] = clampc(s.x[i], 0.5 * sz.w, g.dx);
    s.y[i] = clampc(s.y[i], 0.5 * sz.h, g.dy);
  }
  for (std::size_t f = 0; f < s.filler_x.size(); ++f) {
    const FillerSpec& fs = density_.fillers(density_.filler_die(f));
    s.filler_x[f] = clampc(s.filler_x[f], 0.5 * fs.w, g.dx);
    s.filler_y[f] = clampc(s.filler_y[f], 0.5 * fs.h, g.dy);
  }
}

GradientBundle Gp3dProblem::gradients(const PlacementState& s, double gamma) {
  GradientBundle b;
  WirelengthEval w = wl_.evaluate(s, {gamma, alpha_, design_->hbt.cost}, config_.threads);
  std::vector<double> gz = wl_.fd_z_gradient_incremental(s, config_.threads);
  b.wz = normalize_z_gradient(w.gx, w.gy, gz, w.gz_hbt, alpha_);
  b.wx = std::move(w.gx);
  b.wy = std::move(w.gy);
  b.wl_value = w.value;
  DensityEval d = density_.evaluate(s, config_.threads, true);
  b.dx = std::move(d.gx);
  b.dy = std::move(d.gy);
  b.dz = std::move(d.gz);
  b.fdx = std::move(d.fgx);
  b.fdy = std::move(d.fgy);
  b.energy = d.energy;
  b.overflow = d.overflow;
  b.macro_overflow = d.macro_overflow;
  b.q.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) b.q[i] = density_.charge(static_cast<int>(i), s.z[i], s.rot[i]);
  return b;
}

double Gp3dProblem::initial_lambda(const GradientBundle& b) const {
  double wn = 0.0, dn = 0.0;
  for (std::size_t i = 0; i < b.wx.size(); ++i) {
    wn += std::abs(b.wx[i]) + std::abs(b.wy[i]) + std::abs(b.wz[i]);
    dn += std::abs(b.dx[i]) + std::abs(b.dy[i]) + std::abs(b.dz[i]);
  }
  for (std::size_t f = 0; f < b.fdx.size(); ++f) dn += std::abs(b.fdx[f]) + std::abs(b.fdy[f]);
  return place3d::initial_lambda(wn, dn, config_.lambda_scale);
}

std::vector<double> Gp3dProblem::divisors(const PlacementState& s, double lambda, bool lambda_q_only) const {
  std::vector<double> out;
  out.reserve(s.size() + s.filler_x.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const int id = static_cast<int>(i);
    const double q = density_.charge(id, s.z[i], s.rot[i]);
    out.push_back(lambda_q_only ? lambda_q_divisor(lambda, q)
                                : precondition_divisor(design_->instances[i].macro, design_->pin_count(id), lambda, q));
  }
  for (std::size_t f = 0; f < s.filler_x.size(); ++f) {
    const FillerSpec& fs = density_.fillers(density_.filler_die(f));
    const double q = fs.w * fs.h * 0.5 * density_.depth();
    out.push_back(lambda_q_only ? lambda_q_divisor(lambda, q) : std::max(1.0, lambda * q));
  }
  return out;
}

void round_depth(PlacementState& s) {
  for (double& z : s.z) z = partition_bit(z, s.depth) ? 0.75 * s.depth : 0.25 * s.depth;
}

namespace {

struct Layout3d {
  std::size_t n = 0, nf = 0;

  std::vector<double> pack(const PlacementState& s) const {
    std::vector<double> v;
    v.reserve(3 * n + 2 * nf);
    v.insert(v.end(), s.x.begin(), s.x.end());
    v.insert(v.end(), s.y.begin(), s.y.end());
    v.insert(v.end(), s.z.begin(), s.z.end());
    v.insert(v.end(), s.filler_x.begin(), s.filler_x.end());
    v.insert(v.end(), s.filler_y.begin(), s.filler_y.end());
    return v;
  }
  void unpack(std::span<const double> v, PlacementState& s) const {
    std::copy_n(v.begin(), n, s.x.begin());
    std::copy_n(v.begin() + n, n, s.y.begin());
    std::copy_n(v.begin() + 2 * n, n, s.z.begin());
    std::copy_n(v.begin() + 3 * n, nf, s.filler_x.begin());
    std::copy_n(v.begin() + 3 * n + nf, nf, s.filler_y.begin());
  }
};

bool all_finite(const GradientBundle& b) {
  for (const auto* v : {&b.wx, &b.wy, &b.wz, &b.dx, &b.dy, &b.dz, &b.fdx, &b.fdy})
    for (double x : *v)
      if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

GpResult run_gp3d(const Design& design, const PlacementState& init, const GpConfig& config) {
  Gp3dProblem prob(design, config);
  PlacementState s = init.size() == design.instances.size() ? init : prob.initial_state();
  s.depth = prob.depth();
  if (s.filler_x.size() != prob.density().filler_count()) {
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    prob.density().init_fillers(s, rng);
  }
  prob.project(s);

  const Layout3d lay{s.size(), s.filler_x.size()};
  const double bin = prob.density().grid().db;
  double gamma = smoothing_gamma(1.0, config.stop_overflow, bin, config.gamma_lo, config.gamma_hi);
  GradientBundle first = prob.gradients(s, gamma);
  double lambda = config.lambda_init > 0.0 ? config.lambda_init : prob.initial_lambda(first);
  const double lambda0 = lambda;
  if (init.size() == design.instances.size())
    gamma = smoothing_gamma(first.overflow, config.stop_overflow, bin, config.gamma_lo, config.gamma_hi);
  spdlog::debug("gp3d: {} instances, {} fillers, grid {}x{}x{}, alpha {:.4g}, lambda0 {:.4g}", lay.n, lay.nf,
                prob.density().grid().nx, prob.density().grid().ny, prob.density().grid().nz, prob.alpha(), lambda);

  double last_overflow = first.overflow, last_macro_overflow = first.macro_overflow;
  PlacementState work = s;
  auto grad = [&](std::span<const double> v, std::span<double> g) {
    lay.unpack(v, work);
    GradientBundle b = prob.gradients(work, gamma);
    if (!all_finite(b)) throw std::runtime_error("gp3d: non-finite gradient");
    const std::vector<double> div = prob.divisors(work, lambda);
    const std::size_t n = lay.n;
    for (std::size_t i = 0; i < n; ++i) {
      g[i] = (b.wx[i] + lambda * b.dx[i]) / div[i];
      g[n + i] = (b.wy[i] + lambda * b.dy[i]) / div[i];
      g[2 * n + i] = (b.wz[i] + lambda * b.dz[i]) / div[i];
    }
    for (std::size_t f = 0; f < lay.nf; ++f) {
      g[3 * n + f] = lambda * b.fdx[f] / div[n + f];
      g[3 * n + lay.nf + f] = lambda * b.fdy[f] / div[n + f];
    }
    last_overflow = b.overflow;
    last_macro_overflow = b.macro_overflow;
  };
  PlacementState pwork = s;
  auto proj = [&](std::span<double> v) {
    lay.unpack(v, pwork);
    prob.project(pwork);
    std::vector<double> p = lay.pack(pwork);
    std::copy(p.begin(), p.end(), v.begin());
  };

  NesterovOptimizer opt(lay.pack(s), grad, proj, 1e-2 * bin);
  GpResult res;
  double prev_overflow = last_overflow;
  double best_overflow = std::numeric_limits<double>::infinity();
  std::vector<double> best = opt.solution();
  double prev_wl = std::numeric_limits<double>::infinity();
  int rising = 0;

  for (int it = 1; it <= config.max_iters; ++it) {
    NesterovOptimizer::Status st = opt.step();
    if (st == NesterovOptimizer::Status::StepUnderflow) {
      spdlog::warn("gp3d: step size underflow at iteration {}", it);
      break;
    }
    lay.unpack(opt.solution(), s);
    IterRecord rec;
    rec.iter = it;
    rec.wl = prob.wirelength().exact_bistratal(s);
    rec.hbts = prob.wirelength().crossing_nets(s);
    rec.overflow = last_overflow;
    rec.macro_overflow = last_macro_overflow;
    rec.lambda = lambda;
    rec.gamma = gamma;
    res.history.push_back(rec);
    if (config.on_iter) config.on_iter(rec);
    res.iterations = it;

    if (rec.overflow < best_overflow) {
      best_overflow = rec.overflow;
      best = opt.solution();
      rising = 0;
    } else if (rec.wl > prev_wl) {
      ++rising;
    } else {
      rising = 0;
    }
    prev_wl = rec.wl;
    if (config.divergence_window > 0 && rising >= config.divergence_window) {
      spdlog::warn("gp3d: no progress for {} iterations, reverting to best overflow {:.4f}", rising, best_overflow);
      res.diverged = true;
      break;
    }
    if (st == NesterovOptimizer::Status::ZeroGradient) {
      res.converged = true;
      break;
    }
    if (rec.overflow <= config.stop_overflow && it >= config.min_iters) {
      res.converged = true;
      break;
    }
    lambda *= lambda_multiplier(prev_overflow - rec.overflow, config.mu_min, config.mu_max);
    prev_overflow = rec.overflow;
    gamma = std::min(gamma, smoothing_gamma(rec.overflow, config.stop_overflow, bin, config.gamma_lo, config.gamma_hi));
  }
  lay.unpack(res.diverged ? best : opt.solution(), s);
  DensityEval fin = prob.density().evaluate(s, config.threads, false);
  res.overflow = fin.overflow;
  res.macro_overflow = fin.macro_overflow;
  res.lambda = lambda;
  res.lambda_initial = lambda0;
  if (!config.dump_fields.empty()) prob.density().dump(config.dump_fields);
  round_depth(s);
  res.state = std::move(s);
  spdlog::info("gp3d: {} iterations, overflow {:.4f}, {}", res.iterations, res.overflow,
               res.converged ? "converged" : (res.diverged ? "diverged" : "iteration limit"));
  return res;
}

}  // namespace place3d
