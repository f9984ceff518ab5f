#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "place3d/density.hpp"
#include "place3d/model.hpp"
#include "place3d/wirelength.hpp"

namespace place3d {

struct IterRecord {
  int iter = 0;
  double wl = 0.0;  // exact bistratal (3D) or D2D HPWL with current HBTs (2D)
  long long hbts = 0;
  double overflow = 0.0;
  double macro_overflow = 0.0;
  double lambda = 0.0;
  double gamma = 0.0;
};

struct GpConfig {
  std::uint64_t seed = 1;
  int threads = 1;
  int nz = 8;
  int bins = 0;  // per planar axis; 0 picks from the instance count
  double stop_overflow = 0.10;
  int max_iters = 1500;
  int min_iters = 30;
  double mu_min = 1.01, mu_max = 1.05;
  double gamma_hi = 4.0, gamma_lo = 0.5;  // multiples of the bin extent d_b
  double lambda_scale = 1e-3;
  double lambda_init = 0.0;  // > 0 replaces the computed initial density weight
  double alpha0 = 3.5e-3;
  double alpha_log_base = 0.0;  // 0 selects the natural log
  double alpha_override = -1.0;  // >= 0 replaces the computed alpha
  bool alpha_cost_floor = true;  // raise alpha to hbt_cost_alpha when smaller
  double init_sigma = 0.02;      // fraction of the extent
  int divergence_window = 50;
  std::string dump_fields;  // prefix for final field maps; empty disables
  std::function<void(const IterRecord&)> on_iter;
};

void write_iteration_csv_header(std::ostream& out);
void write_iteration_csv(std::ostream& out, const IterRecord& r);

struct GpResult {
  PlacementState state;
  std::vector<IterRecord> history;
  int iterations = 0;
  double overflow = 0.0;
  double macro_overflow = 0.0;
  bool converged = false;
  bool diverged = false;
  double lambda_initial = 0.0;
  double lambda = 0.0;  // final density weight
  // Multi-die mode only: one entry per crossing net.
  std::vector<int> hbt_nets;
  std::vector<Point> hbt_pos;
};

enum class FlowPath { Gp3d, Gp2dMulti };
/// Macro area ratio of at least one half selects the multi-die 2D path.
FlowPath select_flow(const Design& design);
FlowPath select_flow(double macro_area_ratio);

/// alpha0 (d_x eta^2 / d_z) log(90 beta eta - 1), eta = 2w' / (RH+ + RH-).
double hbt_penalty_alpha(const Design& design, double depth, double alpha0 = 3.5e-3, double log_base = 0.0);

/// 2 beta / d_z: the weight at which a net split across the dies, whose pins
/// sit d_z / 2 apart, pays exactly its HBT cost in the smoothed objective.
double hbt_cost_alpha(const Design& design, double depth);

/// Diagonal preconditioner entries.
double precondition_divisor(bool macro, int pins, double lambda, double q);
/// The lambda*q-only rule, kept for comparison.
double lambda_q_divisor(double lambda, double q);

/// 1e-3 * |grad W|_1 / |grad U|_1, with 1e-3 whenever either norm vanishes.
double initial_lambda(double wl_norm, double density_norm, double scale = 1e-3);
/// Multiplier in [mu_min, mu_max] from the per-iteration overflow decrease.
double lambda_multiplier(double overflow_drop, double mu_min = 1.01, double mu_max = 1.05);
/// d_b * lo * (hi/lo)^t with t = clamp((ovfl - stop)/(1 - stop), 0, 1).
double smoothing_gamma(double overflow, double stop, double bin, double lo = 0.5, double hi = 4.0);

/// Accelerated gradient descent with a Lipschitz step estimate and
/// backtracking. The gradient callback must return the (preconditioned)
/// search gradient; the projection keeps iterates feasible.
class NesterovOptimizer {
 public:
  using Gradient = std::function<void(std::span<const double> v, std::span<double> g)>;
  using Projection = std::function<void(std::span<double> v)>;
  enum class Status { Ok, ZeroGradient, StepUnderflow };

  NesterovOptimizer(std::vector<double> v0, Gradient grad, Projection project = {}, double probe = 1e-3);

  Status step();
  const std::vector<double>& solution() const { return u_; }
  const std::vector<double>& reference() const { return v_; }
  double step_size() const { return alpha_; }
  /// Gradient at the reference point cached from the last evaluation.
  const std::vector<double>& gradient() const { return gv_; }
  /// Discards cached gradients (after the objective changes).
  void refresh();

 private:
  void project(std::vector<double>& v) const;

  Gradient grad_;
  Projection proj_;
  double probe_;
  std::vector<double> u_, v_, gv_, v_prev_, g_prev_;
  double a_ = 1.0;
  double alpha_ = 0.0;
};

struct GradientBundle {
  std::vector<double> wx, wy, wz;  // wirelength, z already normalized
  std::vector<double> dx, dy, dz;  // density
  std::vector<double> fdx, fdy;    // filler density
  std::vector<double> q;           // instance charges
  double wl_value = 0.0;
  double energy = 0.0;
  double overflow = 0.0;
  double macro_overflow = 0.0;
};

/// Objective pieces of the 3D global placement problem.
class Gp3dProblem {
 public:
  Gp3dProblem(const Design& design, const GpConfig& config);

  const Design& design() const { return *design_; }
  const WirelengthModel& wirelength() const { return wl_; }
  DensityModel& density() { return density_; }
  double alpha() const { return alpha_; }
  double depth() const { return density_.depth(); }

  PlacementState initial_state() const;
  GradientBundle gradients(const PlacementState& s, double gamma);
  /// lambda_0 from the bundle's wirelength and density gradient norms.
  double initial_lambda(const GradientBundle& b) const;
  std::vector<double> divisors(const PlacementState& s, double lambda, bool lambda_q_only = false) const;
  void project(PlacementState& s) const;

 private:
  const Design* design_;
  GpConfig config_;
  WirelengthModel wl_;
  DensityModel density_;
  double alpha_ = 0.0;
};

GridGeometry make_grid(const Design& design, const GpConfig& config);

/// 3D global placement. An empty `init` starts from the seeded center cloud.
GpResult run_gp3d(const Design& design, const PlacementState& init, const GpConfig& config);

/// Multi-die 2D placement with the partition of `state` fixed; HBTs are
/// movable objects on their own layer.
GpResult run_gp2d_multi(const Design& design, const PlacementState& state, const GpConfig& config);

/// Snaps z to the die planes: z > d_z/2 goes to 3d_z/4, else d_z/4.
void round_depth(PlacementState& s);

}  // namespace place3d
