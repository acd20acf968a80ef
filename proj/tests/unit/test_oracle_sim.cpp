#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "gapx/densities.hpp"
#include "gapx/errors.hpp"
#include "gapx/extrapolator.hpp"
#include "gapx/oracle_sim.hpp"

using namespace gapx;

namespace {

FunctionalSpec ones(int T, int N) {
  FunctionalSpec f;
  f.a.assign(static_cast<std::size_t>(N + 1), CVector::Ones(T));
  return f;
}

SpectralModel scalar(MatrixDensity F, MatrixDensity G = MatrixDensity::zero(1)) {
  SpectralModel m;
  m.dim = 1;
  m.F = std::move(F);
  m.G = std::move(G);
  m.Fxe = MatrixDensity::zero(1);
  m.Fex = MatrixDensity::zero(1);
  return m;
}

const MissingPattern& example_gap() {
  static const MissingPattern s({{2, 1}});
  return s;
}

/// Mean and standard error over replications of a per-path statistic.
struct Moments {
  double mean = 0.0;
  double se = 0.0;
};

template <class F>
Moments replicate(const PathSampler& sampler, int reps, std::uint64_t seed, F&& stat) {
  std::vector<double> v;
  for (int r = 0; r < reps; ++r) v.push_back(stat(sampler.draw(seed, static_cast<std::uint64_t>(r))));
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= reps;
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= (reps - 1);
  return {mean, std::sqrt(var / reps)};
}

/// Average of x_a(t + n) conj(x_b(t)) along one path.
double lag_product(const CMatrix& x, int a, int b, int n) {
  cplx s = 0.0;
  const int L = static_cast<int>(x.cols());
  int count = 0;
  for (int t = std::max(0, -n); t + n < L && t < L; ++t, ++count) s += x(a, t + n) * std::conj(x(b, t));
  return s.real() / count;
}

}  // namespace

TEST(ProjectionOracle, ExampleOneWindowFifty) {
  const SpectralModel m = make_ar1_pair(0.5, 0.3);
  const OracleResult o = projection_oracle(m, example_gap(), ones(2, 1), 50);
  const double spectral = mean_square_error(m, example_gap(), ones(2, 1), 64);
  EXPECT_NEAR(o.delta_oracle, 15.69, 1e-4);
  EXPECT_GE(o.delta_oracle, spectral - 1e-10);
  EXPECT_EQ(o.window, 50);
  EXPECT_EQ(o.taps_oracle.size(), 48u);
}

TEST(ProjectionOracle, GapCoversWindowWhiteSignal) {
  const SpectralModel m = scalar(white_density(CMatrix::Identity(1, 1)));
  FunctionalSpec f;
  f.a = {CVector::Constant(1, 2.0), CVector::Constant(1, -1.0), CVector::Constant(1, 0.5)};
  const OracleResult o = projection_oracle(m, MissingPattern({{1, 4}}), f, 5);
  EXPECT_NEAR(o.delta_oracle, 4.0 + 1.0 + 0.25, 1e-12);
  EXPECT_TRUE(o.taps_oracle.empty());
}

TEST(ProjectionOracle, TapsMatchSpectralAndMinimizeQuadratic) {
  const SpectralModel m = scalar(ar1_density(0.4), ar1_density(-0.3, 0.5));
  FunctionalSpec f;
  f.a = {CVector::Constant(1, 1.0), CVector::Constant(1, 0.5)};
  const MissingPattern S({{2, 0}});
  const OracleResult o = projection_oracle(m, S, f, 20);
  const EstimateResult r = estimate(m, S, f);
  for (const auto& [j, tap] : o.taps_oracle) EXPECT_LT((tap - r.taps.at(j)).norm(), 1e-4) << j;

  // The oracle taps minimize the frequency-domain error over taps on the window.
  const GridSamples g = GridSamples::sample(m);
  auto error_of = [&](const std::map<int, CVector>& taps) {
    std::vector<CVector> h;
    for (double l : g.lambda) {
      CVector v = CVector::Zero(1);
      for (const auto& [j, t] : taps) v += t * std::exp(cplx(0.0, j * l));
      h.push_back(v);
    }
    return error_for_characteristic(g, f, h);
  };
  const double at_oracle = error_of(o.taps_oracle);
  EXPECT_NEAR(at_oracle, o.delta_oracle, 1e-10 * o.delta_oracle);
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 10; ++trial) {
    auto perturbed = o.taps_oracle;
    for (auto& [j, t] : perturbed) t(0) += 1e-3 * cplx(n(rng), n(rng));
    EXPECT_GT(error_of(perturbed), at_oracle);
  }
}

TEST(ProjectionOracle, NonincreasingInWindowAndAboveSpectral) {
  CMatrix phi(2, 2);
  phi << 0.6, 0.2, -0.1, 0.5;
  SpectralModel m;
  m.dim = 2;
  m.F = var1_density(phi, CMatrix::Identity(2, 2));
  m.G = white_density(0.3 * CMatrix::Identity(2, 2));
  m.Fxe = MatrixDensity::zero(2);
  m.Fex = MatrixDensity::zero(2);
  const MissingPattern S({{3, 2}});
  const double spectral = mean_square_error(m, S, ones(2, 2), 64);
  double previous = std::numeric_limits<double>::infinity();
  for (int L : {5, 10, 20, 50, 100, 200}) {
    const double d = projection_oracle(m, S, ones(2, 2), L).delta_oracle;
    EXPECT_LE(d, previous + 1e-12);
    EXPECT_GE(d, spectral - 1e-10);
    previous = d;
  }
  EXPECT_NEAR(previous, spectral, 1e-8 * spectral);
}

TEST(ProjectionOracle, DegenerateObservations) {
  CMatrix s(2, 2);
  s << 1, 1, 1, 1;
  SpectralModel m;
  m.dim = 2;
  m.F = white_density(s);
  m.G = MatrixDensity::zero(2);
  m.Fxe = MatrixDensity::zero(2);
  m.Fex = MatrixDensity::zero(2);
  EXPECT_THROW(projection_oracle(m, MissingPattern(), ones(2, 0), 4), DegenerateObservations);
}

TEST(SamplePaths, WhiteLagOneIsZero) {
  const PathSampler sampler(scalar(white_density(CMatrix::Identity(1, 1))), 256);
  const Moments mo = replicate(sampler, 400, 3, [](const SamplePath& p) { return lag_product(p.xi, 0, 0, 1); });
  EXPECT_LT(std::abs(mo.mean), 3 * mo.se);
  const Moments v = replicate(sampler, 400, 3, [](const SamplePath& p) { return lag_product(p.xi, 0, 0, 0); });
  EXPECT_LT(std::abs(v.mean - 1.0), 3 * v.se);
}

TEST(SamplePaths, Ar1LagOneCovariance) {
  const PathSampler sampler(scalar(ar1_density(0.5)), 256);
  EXPECT_TRUE(sampler.real_valued());
  const Moments mo = replicate(sampler, 400, 5, [](const SamplePath& p) { return lag_product(p.xi, 0, 0, 1); });
  EXPECT_LT(std::abs(mo.mean - 0.5 / 0.75), 3 * mo.se);
}

TEST(SamplePaths, ExampleOneCrossCovariance) {
  const SpectralModel m = make_ar1_pair(0.5, 0.3);
  const PathSampler sampler(m, 256);
  for (int n : {-1, 0, 2}) {
    const double expect = covariance(m, n)(1, 0).real();
    const Moments mo = replicate(sampler, 400, 11, [n](const SamplePath& p) { return lag_product(p.xi, 1, 0, n); });
    EXPECT_LT(std::abs(mo.mean - expect), 3 * mo.se) << n;
  }
}

TEST(SamplePaths, DeterministicGivenSeed) {
  SimulationConfig cfg;
  cfg.path_length = 64;
  cfg.replications = 3;
  cfg.seed = 42;
  const auto a = sample_paths(make_ar1_pair(0.5, 0.3), cfg);
  const auto b = sample_paths(make_ar1_pair(0.5, 0.3), cfg);
  ASSERT_EQ(a.size(), 3u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].xi, b[i].xi);
    EXPECT_EQ(a[i].eta, b[i].eta);
  }
  EXPECT_NE(a[0].xi, a[1].xi);
  EXPECT_EQ(a[0].xi.rows(), 2);
  EXPECT_EQ(a[0].xi.cols(), 64);
}

TEST(CounterRng, StreamsAreIndependentAndRepeatable) {
  CounterRng a(1, 0), b(1, 0), c(1, 1), d(2, 0);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
}

TEST(MonteCarlo, ZeroTapsGiveFunctionalVariance) {
  const SpectralModel m = make_ar1_pair(0.5, 0.3);
  const FunctionalSpec f = ones(2, 1);
  double var = 0.0;
  for (int j = 0; j <= 1; ++j)
    for (int k = 0; k <= 1; ++k) var += (f.a[j].transpose() * covariance(m, j - k) * f.a[k].conjugate()).value().real();
  SimulationConfig cfg;
  cfg.path_length = 64;
  cfg.replications = 4000;
  cfg.seed = 2;
  const MonteCarloResult mc = monte_carlo_mse(m, example_gap(), f, TapSet{}, cfg);
  EXPECT_LT(std::abs(mc.mse_hat - var), 3 * mc.std_error);
}

TEST(MonteCarlo, ExampleOneOptimalTaps) {
  const SpectralModel m = make_ar1_pair(0.5, 0.3);
  SolverOptions opts;
  opts.obs_window = 30;
  const EstimateResult r = estimate(m, example_gap(), ones(2, 1), opts);
  SimulationConfig cfg;
  cfg.path_length = 64;
  cfg.replications = 4000;
  cfg.seed = 7;
  const MonteCarloResult mc = monte_carlo_mse(m, example_gap(), ones(2, 1), r.taps, cfg);
  EXPECT_LT(std::abs(mc.mse_hat - 15.69), 3 * mc.std_error);
  const MonteCarloResult again = monte_carlo_mse(m, example_gap(), ones(2, 1), r.taps, cfg);
  EXPECT_EQ(mc.mse_hat, again.mse_hat);
  EXPECT_EQ(mc.std_error, again.std_error);
  EXPECT_EQ(mc.squared_errors, again.squared_errors);
}

TEST(MonteCarlo, ZeroFunctionalIsExactlyZero) {
  FunctionalSpec f;
  f.a = {CVector::Zero(2), CVector::Zero(2)};
  SimulationConfig cfg;
  cfg.path_length = 32;
  cfg.replications = 50;
  const MonteCarloResult mc = monte_carlo_mse(make_ar1_pair(0.5, 0.3), example_gap(), f, TapSet{}, cfg);
  EXPECT_EQ(mc.mse_hat, 0.0);
  EXPECT_EQ(mc.std_error, 0.0);
}

TEST(MonteCarlo, OracleTapsBeatPerturbations) {
  const SpectralModel m = scalar(ar1_density(0.6), white_density(CMatrix::Constant(1, 1, 0.4)));
  FunctionalSpec f;
  f.a = {CVector::Constant(1, 1.0), CVector::Constant(1, -0.5)};
  const MissingPattern S({{2, 1}});
  const OracleResult o = projection_oracle(m, S, f, 12);
  TapSet taps;
  for (const auto& [j, t] : o.taps_oracle) {
    taps.lags.push_back(j);
    taps.taps.push_back(t);
  }
  SimulationConfig cfg;
  cfg.path_length = 32;
  cfg.replications = 2000;
  cfg.seed = 13;
  const double base = monte_carlo_mse(m, S, f, taps, cfg).mse_hat;
  std::mt19937_64 rng(21);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 5; ++trial) {
    TapSet p = taps;
    for (auto& t : p.taps) t(0) += 0.1 * n(rng);
    EXPECT_GT(monte_carlo_mse(m, S, f, p, cfg).mse_hat, base);
  }
}

TEST(MonteCarlo, RejectsTapsOnMissingOrFutureLags) {
  SimulationConfig cfg;
  cfg.path_length = 32;
  cfg.replications = 2;
  TapSet bad;
  bad.lags = {-2};
  bad.taps = {CVector::Ones(2)};
  EXPECT_THROW(monte_carlo_mse(make_ar1_pair(0.5, 0.3), example_gap(), ones(2, 1), bad, cfg), InvalidParameter);
  bad.lags = {0};
  EXPECT_THROW(monte_carlo_mse(make_ar1_pair(0.5, 0.3), example_gap(), ones(2, 1), bad, cfg), InvalidParameter);
}
