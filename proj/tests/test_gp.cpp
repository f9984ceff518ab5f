#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "place3d/gp.hpp"
#include "place3d/synthetic.hpp"
#include "support/designs.hpp"

using namespace place3d;

TEST(Preconditioner, Divisors) {
  EXPECT_DOUBLE_EQ(precondition_divisor(true, 5, 0.3, 1.0), 5.3);
  EXPECT_DOUBLE_EQ(precondition_divisor(false, 5, 0.3, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(precondition_divisor(false, 5, 7.0, 1.0), 7.0);
  EXPECT_DOUBLE_EQ(lambda_q_divisor(0.3, 1.0), 0.3);
}

TEST(Schedules, InitialLambda) {
  EXPECT_EQ(initial_lambda(0.0, 5.0), 1e-3);
  EXPECT_EQ(initial_lambda(5.0, 0.0), 1e-3);
  EXPECT_DOUBLE_EQ(initial_lambda(5.0, 5.0), 1e-3);
  EXPECT_DOUBLE_EQ(initial_lambda(8.0, 2.0), 4e-3);
}

TEST(Schedules, LambdaGrowth) {
  EXPECT_EQ(lambda_multiplier(-0.1), 1.05);
  EXPECT_EQ(lambda_multiplier(0.5), 1.01);
  const double mid = lambda_multiplier(0.0025);
  EXPECT_GT(mid, 1.01);
  EXPECT_LT(mid, 1.05);
  double lambda = 1.0;
  for (int i = 0; i < 100; ++i) lambda *= 1.02;
  EXPECT_NEAR(lambda, 7.2446, 1e-3);
}

TEST(Schedules, GammaDecreasesWithOverflow) {
  const double bin = 10.0;
  EXPECT_DOUBLE_EQ(smoothing_gamma(1.0, 0.1, bin), 40.0);
  EXPECT_DOUBLE_EQ(smoothing_gamma(0.05, 0.1, bin), 5.0);
  double prev = smoothing_gamma(1.0, 0.1, bin);
  for (double o = 0.95; o > 0.0; o -= 0.05) {
    const double g = smoothing_gamma(o, 0.1, bin);
    EXPECT_LE(g, prev);
    EXPECT_GT(g, 0.0);
    prev = g;
  }
}

TEST(FlowSelect, MacroAreaRule) {
  EXPECT_EQ(select_flow(0.88), FlowPath::Gp2dMulti);
  EXPECT_EQ(select_flow(0.36), FlowPath::Gp3d);
  EXPECT_EQ(select_flow(0.5), FlowPath::Gp2dMulti);
}

TEST(Nesterov, QuadraticConvergesToMinimizer) {
  const std::vector<double> a{1, 4, 0.5, 9, 2}, c{3, -1, 7, 0.25, -5};
  auto grad = [&](std::span<const double> v, std::span<double> g) {
    for (std::size_t i = 0; i < v.size(); ++i) g[i] = 2 * a[i] * (v[i] - c[i]);
  };
  NesterovOptimizer opt(std::vector<double>(5, 0.0), grad);
  int it = 0;
  double err = 1.0;
  for (; it < 200 && err > 1e-6; ++it) {
    if (opt.step() != NesterovOptimizer::Status::Ok) break;
    err = 0.0;
    for (int i = 0; i < 5; ++i) err = std::max(err, std::abs(opt.solution()[i] - c[i]));
  }
  EXPECT_LE(err, 1e-6);
  EXPECT_LE(it, 200);
}

TEST(Nesterov, ZeroGradientLeavesStateUnchanged) {
  const std::vector<double> v0{1, 2, 3};
  NesterovOptimizer opt(v0, [](std::span<const double>, std::span<double> g) { std::fill(g.begin(), g.end(), 0.0); });
  EXPECT_EQ(opt.step(), NesterovOptimizer::Status::ZeroGradient);
  EXPECT_EQ(opt.solution(), v0);
}

TEST(Nesterov, ProjectionIsApplied) {
  auto grad = [](std::span<const double> v, std::span<double> g) {
    for (std::size_t i = 0; i < v.size(); ++i) g[i] = 2 * (v[i] + 10);
  };
  auto proj = [](std::span<double> v) {
    for (double& x : v) x = std::max(x, 1.0);
  };
  NesterovOptimizer opt({5, 5}, grad, proj);
  for (int i = 0; i < 50; ++i) opt.step();
  EXPECT_EQ(opt.solution()[0], 1.0);
  EXPECT_EQ(opt.solution()[1], 1.0);
}

TEST(Gp3dProblem, ProjectionClampsDepth) {
  const Design d = fixture::two_cliques(4);
  GpConfig cfg;
  Gp3dProblem prob(d, cfg);
  PlacementState s = prob.initial_state();
  s.z[0] = -5.0;
  s.z[1] = 10 * prob.depth();
  prob.project(s);
  EXPECT_EQ(s.z[0], 0.25 * prob.depth());
  EXPECT_EQ(s.z[1], 0.75 * prob.depth());
}

TEST(Gp3dProblem, ZeroLambdaIsPureWirelength) {
  const Design d = fixture::two_cliques(6);
  Gp3dProblem prob(d, GpConfig{});
  const PlacementState s = prob.initial_state();
  const GradientBundle b = prob.gradients(s, 4.0);
  const WirelengthEval w = prob.wirelength().evaluate(s, {4.0, prob.alpha(), d.hbt.cost});
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_DOUBLE_EQ(b.wx[i], w.gx[i]);
}

TEST(Gp3dProblem, PreconditionedStepDescends) {
  SyntheticSpec spec;
  spec.cells = 50;
  spec.macros = 1;
  spec.macro_area_ratio = 0.2;
  const Design d = generate_synthetic(spec);
  GpConfig cfg;
  cfg.bins = 8;
  std::mt19937_64 rng(5);
  int descents = 0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    cfg.seed = t + 1;
    Gp3dProblem p2(d, cfg);
    PlacementState s = p2.initial_state();
    std::uniform_real_distribution<double> jx(0.2 * d.die.width, 0.8 * d.die.width), jy(0.2 * d.die.height, 0.8 * d.die.height);
    for (std::size_t i = 0; i < s.size(); ++i) s.x[i] = jx(rng), s.y[i] = jy(rng);
    p2.project(s);
    const double gamma = 20.0;
    const GradientBundle b = p2.gradients(s, gamma);
    const double lambda = p2.initial_lambda(b);
    const std::vector<double> div = p2.divisors(s, lambda);
    const double f0 = b.wl_value + lambda * b.energy;
    std::vector<double> step(2 * s.size());
    double gmax = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      step[2 * i] = (b.wx[i] + lambda * b.dx[i]) / div[i];
      step[2 * i + 1] = (b.wy[i] + lambda * b.dy[i]) / div[i];
      gmax = std::max({gmax, std::abs(step[2 * i]), std::abs(step[2 * i + 1])});
    }
    const double eta = 1e-3 * d.die.width / gmax;
    PlacementState s2 = s;
    for (std::size_t i = 0; i < s.size(); ++i) s2.x[i] -= eta * step[2 * i], s2.y[i] -= eta * step[2 * i + 1];
    const GradientBundle b2 = p2.gradients(s2, gamma);
    descents += b2.wl_value + lambda * b2.energy < f0;
  }
  EXPECT_GE(descents, static_cast<int>(std::ceil(0.95 * trials)));
}

TEST(RunGp3d, SingleInstanceStaysInterior) {
  fixture::Builder b(100, 100, 10, 10, 0.8);
  const int k = b.kind("U", 10, 10, {{0, 0}});
  const int i = b.inst(k);
  b.net({{i, 0}});
  const Design d = b.build();
  const GpResult r = run_gp3d(d, PlacementState{}, GpConfig{});
  EXPECT_FALSE(r.diverged);
  EXPECT_LE(r.overflow, 0.10);
  EXPECT_GE(r.state.x[0], 5.0);
  EXPECT_LE(r.state.x[0], 95.0);
  EXPECT_GE(r.state.z[0], 0.25 * r.state.depth);
  EXPECT_LE(r.state.z[0], 0.75 * r.state.depth);
}

TEST(RunGp3d, IsDeterministicForASeed) {
  const Design d = fixture::two_cliques(10);
  GpConfig cfg;
  cfg.seed = 3;
  const GpResult a = run_gp3d(d, PlacementState{}, cfg), b = run_gp3d(d, PlacementState{}, cfg);
  EXPECT_EQ(a.state.x, b.state.x);
  EXPECT_EQ(a.state.z, b.state.z);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(RoundDepth, SnapsToDiePlanes) {
  PlacementState s;
  s.resize(3);
  s.depth = 8;
  s.z = {2.5, 4.0, 4.1};
  round_depth(s);
  EXPECT_EQ(s.z, (std::vector<double>{2, 2, 6}));
}

namespace {

// Cells on both dies; `cross` adds one net between the two groups.
Design split_design(bool cross) {
  fixture::Builder b(120, 120, 10, 10, 0.8);
  const int k = b.kind("U", 10, 10, {{0, 0}});
  for (int i = 0; i < 8; ++i) b.inst(k);
  for (int g = 0; g < 2; ++g)
    for (int i = 0; i < 3; ++i) b.net({{4 * g + i, 0}, {4 * g + i + 1, 0}});
  if (cross) b.net({{0, 0}, {7, 0}});
  return b.build();
}

PlacementState split_state(const Design& d, const GpConfig& cfg) {
  Gp3dProblem prob(d, cfg);
  PlacementState s = prob.initial_state();
  for (int i = 0; i < 8; ++i) s.z[i] = i < 4 ? 0.75 * s.depth : 0.25 * s.depth;
  s.x[0] = 20, s.y[0] = 20;
  s.x[7] = 100, s.y[7] = 90;
  return s;
}

}  // namespace

TEST(RunGp2d, NoCrossingNetsMeansNoHbts) {
  const Design d = split_design(false);
  GpConfig cfg;
  const GpResult r = run_gp2d_multi(d, split_state(d, cfg), cfg);
  EXPECT_TRUE(r.hbt_nets.empty());
  EXPECT_TRUE(r.hbt_pos.empty());
}

TEST(RunGp2d, HbtSettlesInOptimalRegion) {
  const Design d = split_design(true);
  GpConfig cfg;
  const GpResult r = run_gp2d_multi(d, split_state(d, cfg), cfg);
  ASSERT_EQ(r.hbt_nets.size(), 1u);
  const Point h = r.hbt_pos[0];
  const double ax = r.state.x[0], ay = r.state.y[0], bx = r.state.x[7], by = r.state.y[7];
  // For a two-pin net the optimal region is the box spanned by both pins.
  auto gap = [](double v, double p, double q) { return std::max({0.0, std::min(p, q) - v, v - std::max(p, q)}); };
  EXPECT_LE(gap(h.x, ax, bx), 0.05 * d.die.width);
  EXPECT_LE(gap(h.y, ay, by), 0.05 * d.die.height);
  // The partition is never changed by the 2D stage.
  for (int i = 0; i < 8; ++i) EXPECT_EQ(partition_bit(r.state.z[i], r.state.depth), i < 4 ? 1 : 0);
}

TEST(HbtPenalty, PositiveForContestParameters) {
  const Design d = generate_synthetic(SyntheticSpec{});
  EXPECT_GT(hbt_penalty_alpha(d, 100.0), 0.0);
  EXPECT_DOUBLE_EQ(hbt_penalty_alpha(d, 100.0, 3.5e-3, 10.0) * std::log(10.0), hbt_penalty_alpha(d, 100.0));
}

TEST(HbtPenalty, CostFloorMatchesBetaForASplitNet) {
  const Design d = fixture::two_cliques();
  GpConfig cfg;
  const Gp3dProblem floored(d, cfg);
  // A split net has pins d_z/2 apart; at the floor it pays exactly beta.
  EXPECT_DOUBLE_EQ(hbt_cost_alpha(d, floored.depth()) * 0.5 * floored.depth(), d.hbt.cost);
  EXPECT_DOUBLE_EQ(floored.alpha(), std::max(hbt_penalty_alpha(d, floored.depth()), hbt_cost_alpha(d, floored.depth())));
  cfg.alpha_cost_floor = false;
  EXPECT_DOUBLE_EQ(Gp3dProblem(d, cfg).alpha(), hbt_penalty_alpha(d, floored.depth()));
  cfg.alpha_override = 0.25;
  EXPECT_DOUBLE_EQ(Gp3dProblem(d, cfg).alpha(), 0.25);
}
