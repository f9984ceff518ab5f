#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "place3d/density.hpp"
#include "place3d/synthetic.hpp"
#include "place3d/wirelength.hpp"

using namespace place3d;

namespace {

const GridGeometry kGrid = GridGeometry::make(1000, 1000, 64, 64, 8);

std::vector<Charge> macro_charges(int n) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Charge> out;
  for (int i = 0; i < n; ++i) {
    const double w = 40 + 160 * u(rng), h = 40 + 160 * u(rng);
    const double x = u(rng) * (kGrid.dx - w), y = u(rng) * (kGrid.dy - h), z = u(rng) * 0.5 * kGrid.dz;
    out.push_back({{x, x + w, y, y + h, z, z + 0.5 * kGrid.dz}, 1.0});
  }
  return out;
}

void BM_MacroDensityDirect(benchmark::State& state) {
  const auto charges = macro_charges(static_cast<int>(state.range(0)));
  std::vector<double> map(kGrid.size());
  for (auto _ : state) {
    std::fill(map.begin(), map.end(), 0.0);
    accumulate_direct(kGrid, charges, map);
    benchmark::DoNotOptimize(map.data());
  }
}
BENCHMARK(BM_MacroDensityDirect)->Arg(50)->Arg(500);

void BM_MacroDensityPrefix(benchmark::State& state) {
  const auto charges = macro_charges(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(macro_prefix_density(kGrid, charges));
}
BENCHMARK(BM_MacroDensityPrefix)->Arg(50)->Arg(500);

void BM_PoissonSolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GridGeometry g = GridGeometry::make(1000, 1000, n, n, 8);
  PoissonSolver solver(g);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> rho(g.size());
  for (double& v : rho) v = u(rng);
  for (auto _ : state) solver.solve(rho);
}
BENCHMARK(BM_PoissonSolve)->Arg(32)->Arg(64)->Arg(128);

struct ZFixture {
  Design design;
  PlacementState state;
};

const ZFixture& z_fixture() {
  static const ZFixture f = [] {
    SyntheticSpec spec;
    spec.cells = 20000;
    spec.macros = 4;
    ZFixture out{generate_synthetic(spec), {}};
    out.state.resize(out.design.instances.size());
    out.state.depth = 800;
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < out.state.size(); ++i) {
      out.state.x[i] = u(rng) * out.design.die.width;
      out.state.y[i] = u(rng) * out.design.die.height;
      out.state.z[i] = u(rng) * out.state.depth;
    }
    return out;
  }();
  return f;
}

// Rent nets are mostly low degree, where the incremental pass gains nothing;
// its advantage shows on nets with tens of pins.
void BM_ZGradientNaive(benchmark::State& state) {
  const ZFixture& f = z_fixture();
  const WirelengthModel wl(f.design);
  for (auto _ : state) benchmark::DoNotOptimize(wl.fd_z_gradient_naive(f.state));
}
BENCHMARK(BM_ZGradientNaive)->Unit(benchmark::kMillisecond);

void BM_ZGradientIncremental(benchmark::State& state) {
  const ZFixture& f = z_fixture();
  const WirelengthModel wl(f.design);
  for (auto _ : state) benchmark::DoNotOptimize(wl.fd_z_gradient_incremental(f.state));
}
BENCHMARK(BM_ZGradientIncremental)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
