#include "gapx/oracle_sim.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <unsupported/Eigen/FFT>

#include "gapx/errors.hpp"

namespace gapx {

namespace {

std::uint64_t splitmix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

FourierTable covariances(const SpectralModel& model, int max_lag, Component c) {
  SpectralModel m = model;
  while (m.grid_size < 4 * max_lag) m.grid_size *= 2;
  return covariance_table(m, max_lag, c);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream)
    : key_(splitmix(splitmix(seed) ^ (stream * kGolden + 0x632be59bd9b4e019ULL))) {}

CounterRng::result_type CounterRng::operator()() {
  ++counter_;
  return splitmix(key_ + counter_ * kGolden);
}

OracleResult projection_oracle(const SpectralModel& model, const MissingPattern& pattern,
                               const FunctionalSpec& functional, int obs_window) {
  if (obs_window < 0) throw InvalidParameter("observation window must be nonnegative");
  if (functional.dim() != model.dim)
    throw InvalidParameter("functional dimension does not match model dimension");
  const int d = model.dim;
  const int N = functional.horizon();

  std::vector<int> obs;
  for (int j = -obs_window; j <= -1; ++j)
    if (!pattern.contains(j)) obs.push_back(j);

  const int max_lag = std::max(obs_window + N, 1);
  const FourierTable Rx = covariances(model, max_lag, Component::signal);
  const FourierTable Rz = covariances(model, max_lag, Component::observed);
  const FourierTable Rc = covariances(model, max_lag, Component::signal_cross);

  OracleResult out;
  out.window = obs_window;
  cplx var{0.0, 0.0};
  for (int m = 0; m <= N; ++m)
    for (int k = 0; k <= N; ++k)
      var += (functional.a[m].transpose() * Rx(m - k) * functional.a[k].conjugate())(0, 0);
  out.variance = var.real();

  const int n = static_cast<int>(obs.size()) * d;
  if (n == 0) {
    out.delta_oracle = out.variance;
    return out;
  }
  CMatrix sigma(n, n);
  CVector b = CVector::Zero(n);
  for (std::size_t p = 0; p < obs.size(); ++p) {
    for (std::size_t q = 0; q < obs.size(); ++q)
      sigma.block(static_cast<Eigen::Index>(p) * d, static_cast<Eigen::Index>(q) * d, d, d) =
          Rz(obs[p] - obs[q]);
    // E[zeta(j) Y^*] = sum_m E[xi(m) zeta(j)^*]^* conj(a(m))
    for (int m = 0; m <= N; ++m)
      b.segment(static_cast<Eigen::Index>(p) * d, d) +=
          Rc(m - obs[p]).adjoint() * functional.a[m].conjugate();
  }
  sigma = 0.5 * (sigma + sigma.adjoint());
  Eigen::LLT<CMatrix> llt(sigma);
  if (llt.info() != Eigen::Success)
    throw DegenerateObservations("observation covariance over a window of " +
                                 std::to_string(obs_window) + " is not positive definite");
  CVector u = llt.solve(b);
  u += llt.solve(b - sigma * u);
  out.delta_oracle = out.variance - b.dot(u).real();
  for (std::size_t p = 0; p < obs.size(); ++p)
    out.taps_oracle[obs[p]] = u.segment(static_cast<Eigen::Index>(p) * d, d).conjugate();
  return out;
}

PathSampler::PathSampler(const SpectralModel& model, int path_length)
    : dim_(model.dim), path_length_(path_length) {
  if (path_length < 1) throw InvalidParameter("path length must be positive");
  embedding_ = 2;
  while (embedding_ < 2 * path_length) embedding_ *= 2;
  const int M = embedding_;
  const int half = M / 2;
  const int D = 2 * dim_;

  const int grid = std::max(model.grid_size, 4 * half);
  const std::vector<double> lambda = quadrature_grid(grid);
  std::vector<CMatrix> joint(lambda.size(), CMatrix::Zero(D, D));
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    const double l = lambda[i];
    joint[i].topLeftCorner(dim_, dim_) = model.F(l);
    joint[i].bottomRightCorner(dim_, dim_) = model.G(l);
    joint[i].topRightCorner(dim_, dim_) = model.Fxe(l);
    joint[i].bottomLeftCorner(dim_, dim_) = model.Fex(l);
  }
  const FourierTable coeff = fourier_coeffs(joint, half);

  // Circulant generator c(k): R(k) for k < M/2, R(-(M-k)) above.
  double scale = 0.0;
  double imag = 0.0;
  std::vector<CMatrix> c(static_cast<std::size_t>(M));
  for (int k = 0; k < M; ++k) {
    const int lag = k <= half ? k : k - M;
    c[k] = coeff(-lag);
    scale = std::max(scale, c[k].cwiseAbs().maxCoeff());
    imag = std::max(imag, c[k].imag().cwiseAbs().maxCoeff());
  }
  c[half] = 0.5 * (c[half] + c[half].adjoint());
  real_ = imag <= 1e-12 * std::max(scale, 1e-300);

  std::vector<CMatrix> lam(static_cast<std::size_t>(M), CMatrix::Zero(D, D));
  Eigen::FFT<double> fft;
  std::vector<cplx> x(static_cast<std::size_t>(M));
  std::vector<cplx> X;
  for (int r = 0; r < D; ++r) {
    for (int s = 0; s < D; ++s) {
      for (int k = 0; k < M; ++k) x[k] = c[k](r, s);
      fft.fwd(X, x);
      for (int m = 0; m < M; ++m) lam[m](r, s) = X[m];
    }
  }

  root_.resize(static_cast<std::size_t>(M));
  double top = 0.0;
  double worst = 0.0;
  std::vector<Eigen::SelfAdjointEigenSolver<CMatrix>> eig(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    eig[m].compute(0.5 * (lam[m] + lam[m].adjoint()));
    top = std::max(top, eig[m].eigenvalues().maxCoeff());
    worst = std::min(worst, eig[m].eigenvalues().minCoeff());
  }
  clipped_ = top > 0.0 ? worst / top : 0.0;
  if (clipped_ < -1e-8)
    throw SimulationMethod("circulant embedding of order " + std::to_string(M) +
                           " has a negative eigenvalue (relative " + std::to_string(clipped_) +
                           "); increase the path length to enlarge the embedding");
  for (int m = 0; m < M; ++m) {
    const Eigen::VectorXd ev = eig[m].eigenvalues().cwiseMax(0.0).cwiseSqrt();
    root_[m] = eig[m].eigenvectors() * ev.asDiagonal();
  }
}

SamplePath PathSampler::draw(std::uint64_t seed, std::uint64_t replication) const {
  const int M = embedding_;
  const int D = 2 * dim_;
  CounterRng rng(seed, replication);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  std::vector<std::vector<cplx>> y(static_cast<std::size_t>(D),
                                   std::vector<cplx>(static_cast<std::size_t>(M)));
  CVector w(D);
  for (int m = 0; m < M; ++m) {
    for (int r = 0; r < D; ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      w(r) = cplx(re, im);
    }
    const CVector v = root_[m] * w;
    for (int r = 0; r < D; ++r) y[r][m] = v(r);
  }
  Eigen::FFT<double> fft;
  SamplePath path{CMatrix(dim_, path_length_), CMatrix(dim_, path_length_)};
  std::vector<cplx> x;
  const double gain = std::sqrt(static_cast<double>(M));
  for (int r = 0; r < D; ++r) {
    fft.inv(x, y[r]);
    CMatrix& target = r < dim_ ? path.xi : path.eta;
    const int row = r % dim_;
    for (int t = 0; t < path_length_; ++t) {
      const cplx v = x[t] * gain;
      target(row, t) = real_ ? cplx(std::sqrt(2.0) * v.real(), 0.0) : v;
    }
  }
  return path;
}

std::vector<SamplePath> sample_paths(const SpectralModel& model, const SimulationConfig& config) {
  if (config.replications < 1) throw InvalidParameter("replications must be at least 1");
  const PathSampler sampler(model, config.path_length);
  std::vector<SamplePath> out;
  out.reserve(static_cast<std::size_t>(config.replications));
  for (int r = 0; r < config.replications; ++r)
    out.push_back(sampler.draw(config.seed, static_cast<std::uint64_t>(r)));
  return out;
}

MonteCarloResult monte_carlo_mse(const SpectralModel& model, const MissingPattern& pattern,
                                 const FunctionalSpec& functional, const TapSet& taps,
                                 const SimulationConfig& config) {
  if (config.replications < 1) throw InvalidParameter("replications must be at least 1");
  const int N = functional.horizon();
  int base = std::max(config.window, 0);
  for (std::size_t i = 0; i < taps.lags.size(); ++i) {
    const int j = taps.lags[i];
    if (j >= 0) throw InvalidParameter("tap at nonnegative lag " + std::to_string(j));
    if (pattern.contains(j))
      throw InvalidParameter("tap at lag " + std::to_string(j) + " uses a missing observation");
    base = std::max(base, -j);
  }
  if (config.path_length < base + N + 1)
    throw InvalidParameter("path length " + std::to_string(config.path_length) +
                           " is shorter than window + horizon + 1 = " +
                           std::to_string(base + N + 1));

  MonteCarloResult res;
  res.squared_errors.resize(static_cast<std::size_t>(config.replications));
  if (functional.is_zero() &&
      std::all_of(taps.taps.begin(), taps.taps.end(), [](const CVector& v) { return v.norm() == 0.0; }))
    return res;

  const PathSampler sampler(model, config.path_length);
  for (int r = 0; r < config.replications; ++r) {
    const SamplePath p = sampler.draw(config.seed, static_cast<std::uint64_t>(r));
    cplx e{0.0, 0.0};
    for (int m = 0; m <= N; ++m) e += (functional.a[m].transpose() * p.xi.col(base + m)).value();
    for (std::size_t i = 0; i < taps.lags.size(); ++i) {
      const int t = base + taps.lags[i];
      e -= (taps.taps[i].transpose() * (p.xi.col(t) + p.eta.col(t))).value();
    }
    res.squared_errors[r] = std::norm(e);
  }
  double sum = 0.0;
  for (double v : res.squared_errors) sum += v;
  const double R = static_cast<double>(config.replications);
  res.mse_hat = sum / R;
  if (config.replications > 1) {
    double ss = 0.0;
    for (double v : res.squared_errors) ss += (v - res.mse_hat) * (v - res.mse_hat);
    res.std_error = std::sqrt(ss / (R - 1.0) / R);
  }
  return res;
}

}  // namespace gapx
