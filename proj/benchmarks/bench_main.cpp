#include <benchmark/benchmark.h>

#include "gapx/densities.hpp"
#include "gapx/extrapolator.hpp"
#include "gapx/minimax.hpp"
#include "gapx/oracle_sim.hpp"

namespace {

gapx::FunctionalSpec example_functional() {
  gapx::FunctionalSpec f;
  f.a = {gapx::CVector::Ones(2), gapx::CVector::Ones(2)};
  return f;
}

const gapx::MissingPattern& example_gap() {
  static const gapx::MissingPattern s({{2, 1}});
  return s;
}

void BM_FourierTable(benchmark::State& state) {
  const gapx::SpectralModel m = gapx::make_ar1_pair(0.5, 0.3, static_cast<int>(state.range(0)));
  const gapx::GridSamples g = gapx::GridSamples::sample(m);
  for (auto _ : state) benchmark::DoNotOptimize(gapx::fourier_coeffs(g.F, 128));
}
BENCHMARK(BM_FourierTable)->Arg(1024)->Arg(4096)->Unit(benchmark::kMicrosecond);

void BM_MeanSquareError(benchmark::State& state) {
  const gapx::SpectralModel m = gapx::make_ar1_pair(0.5, 0.3);
  const auto f = example_functional();
  for (auto _ : state)
    benchmark::DoNotOptimize(gapx::mean_square_error(m, example_gap(), f, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_MeanSquareError)->Arg(32)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_Estimate(benchmark::State& state) {
  const gapx::SpectralModel m = gapx::make_ar1_pair(0.5, 0.3);
  const auto f = example_functional();
  for (auto _ : state) benchmark::DoNotOptimize(gapx::estimate(m, example_gap(), f));
}
BENCHMARK(BM_Estimate)->Unit(benchmark::kMillisecond);

void BM_ProjectionOracle(benchmark::State& state) {
  const gapx::SpectralModel m = gapx::make_ar1_pair(0.5, 0.3);
  const auto f = example_functional();
  for (auto _ : state)
    benchmark::DoNotOptimize(gapx::projection_oracle(m, example_gap(), f, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_ProjectionOracle)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_PathSampler(benchmark::State& state) {
  const gapx::SpectralModel m = gapx::make_ar1_pair(0.5, 0.3);
  const gapx::PathSampler sampler(m, static_cast<int>(state.range(0)));
  std::uint64_t rep = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sampler.draw(1, rep++));
}
BENCHMARK(BM_PathSampler)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_MemberDelta(benchmark::State& state) {
  gapx::DensityClass cls;
  cls.family.f_shape = {gapx::ShapeKind::ma, 2, -0.9, 0.9};
  gapx::FunctionalSpec f;
  f.a = {gapx::CVector::Ones(1), gapx::CVector::Ones(1)};
  const std::vector<double> theta{0.3, -0.2};
  for (auto _ : state)
    benchmark::DoNotOptimize(gapx::member_delta(cls, gapx::MissingPattern(), f, theta, 64));
}
BENCHMARK(BM_MemberDelta)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
