#include <benchmark/benchmark.h>

#include <cmath>

#include "mfao/reconstruct.hpp"

using namespace mfao;

namespace {

DiscretizationPtr grid(int dim, std::size_t nodes) {
  if (dim == 2) return Discretization::make(Domain::box(2, {0, 0, 0}, {1, 1, 0}), nodes, AngularGrid::circle(32));
  return Discretization::make(Domain::box(3, {0, 0, 0}, {1, 1, 1}), nodes, AngularGrid::sphere(8, 16));
}

RadianceField smooth_field(const DiscretizationPtr& d, std::size_t columns) {
  RadianceField u(d, columns);
  for (std::size_t i = 0; i < u.angles(); ++i) {
    for (std::size_t n = 0; n < u.nodes(); ++n) {
      const Vec3 x = d->spatial.node(n);
      for (std::size_t c = 0; c < columns; ++c) u(i, n, c) = 1.0 + 0.3 * std::cos(3.0 * x[0] + x[1] + 0.2 * i + c);
    }
  }
  return u;
}

Transport make_transport(int dim, std::size_t nodes) {
  const auto d = grid(dim, nodes);
  return Transport(phantom_library("gaussian-bumps", {}, d->domain), d);
}

void BM_Lift(benchmark::State& state) {
  const Transport t = make_transport(static_cast<int>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  const RadianceField S = smooth_field(t.disc_ptr(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(t.lift(S));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(S.nodes() * S.angles()));
}

void BM_Scatter(benchmark::State& state) {
  const Transport t = make_transport(static_cast<int>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  const RadianceField u = smooth_field(t.disc_ptr(), 1);
  for (auto _ : state) benchmark::DoNotOptimize(t.scatter(u));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(u.nodes() * u.angles()));
}

void BM_KApply(benchmark::State& state) {
  const Transport t = make_transport(static_cast<int>(state.range(0)), static_cast<std::size_t>(state.range(1)));
  const RadianceField u = smooth_field(t.disc_ptr(), 4);
  for (auto _ : state) benchmark::DoNotOptimize(t.K_apply(u));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(u.nodes() * u.angles() * u.columns()));
}

void BM_Solve(benchmark::State& state) {
  const Transport t = make_transport(2, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(t.solve({constant_source(1.0)}));
}

void BM_PointPipeline(benchmark::State& state) {
  const Transport t = make_transport(2, static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(run_point_pipeline(t));
}

}  // namespace

BENCHMARK(BM_Lift)->Args({2, 33})->Args({2, 65})->Args({3, 13})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Scatter)->Args({2, 65})->Args({3, 13})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KApply)->Args({2, 65})->Args({3, 13})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Solve)->Arg(33)->Arg(65)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PointPipeline)->Arg(33)->Unit(benchmark::kMillisecond)->Iterations(1);
BENCHMARK_MAIN();
