#include "gapx/spectral_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <unsupported/Eigen/FFT>

#include "gapx/errors.hpp"

namespace gapx {

CMatrix SpectralModel::eval(Component c, double lambda) const {
  switch (c) {
    case Component::signal: return F(lambda);
    case Component::noise: return G(lambda);
    case Component::cross_xe: return Fxe(lambda);
    case Component::cross_ex: return Fex(lambda);
    case Component::signal_cross: return F(lambda) + Fxe(lambda);
    case Component::observed: {
      CMatrix z = F(lambda);
      if (!G.is_zero()) z += G(lambda);
      if (!Fxe.is_zero()) z += Fxe(lambda);
      if (!Fex.is_zero()) z += Fex(lambda);
      return z;
    }
  }
  return CMatrix::Zero(dim, dim);
}

std::optional<double> SpectralModel::pole_radius() const {
  double r = 0.0;
  for (const MatrixDensity* d : {&F, &G, &Fxe, &Fex}) {
    if (d->is_zero()) continue;
    if (!d->pole_radius()) return std::nullopt;
    r = std::max(r, *d->pole_radius());
  }
  return r;
}

bool is_power_of_two(int n) noexcept { return n > 0 && (n & (n - 1)) == 0; }

std::vector<double> quadrature_grid(int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) g[m] = -kPi + 2.0 * kPi * m / n;
  return g;
}

double min_eigenvalue(const CMatrix& m) {
  const CMatrix h = 0.5 * (m + m.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

namespace {

bool all_finite(const CMatrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const cplx v = m.data()[i];
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  }
  return true;
}

void check_dim(const MatrixDensity& d, int dim, const char* name) {
  if (!d.is_zero() && d.dim() != dim) {
    std::ostringstream os;
    os << "density " << name << " has dimension " << d.dim() << ", model dimension is "
       << dim;
    throw InvalidParameter(os.str());
  }
}

}  // namespace

void SpectralModel::validate(double tol) const {
  if (dim < 1) throw InvalidParameter("model dimension must be positive");
  if (!is_power_of_two(grid_size) || grid_size < 64)
    throw InvalidParameter("grid_size must be a power of two >= 64, got " +
                           std::to_string(grid_size));
  if (F.is_zero() && G.is_zero()) {
    // Allowed: check_minimality reports it.
  }
  check_dim(F, dim, "F");
  check_dim(G, dim, "G");
  check_dim(Fxe, dim, "F_xe");
  check_dim(Fex, dim, "F_ex");
  if (Fxe.is_zero() != Fex.is_zero())
    throw InvalidParameter("cross-densities F_xe and F_ex must both be zero or both be set");

  for (double l : quadrature_grid(grid_size)) {
    const CMatrix f = F(l);
    const CMatrix g = G(l);
    const double scale = 1.0 + f.norm() + g.norm();
    for (const auto& [m, name] : {std::pair{&f, "F"}, std::pair{&g, "G"}}) {
      if (!all_finite(*m))
        throw SingularDensity(std::string(name) + " is not finite at lambda=" +
                                  std::to_string(l), l);
      if ((*m - m->adjoint()).norm() > tol * scale)
        throw InvalidParameter(std::string(name) + " is not Hermitian at lambda=" +
                               std::to_string(l));
      if (min_eigenvalue(*m) < -tol * scale)
        throw InvalidParameter(std::string(name) +
                               " is not positive semidefinite at lambda=" +
                               std::to_string(l));
    }
    if (!uncorrelated()) {
      const CMatrix xe = Fxe(l);
      const CMatrix ex = Fex(l);
      if ((ex - xe.adjoint()).norm() > tol * scale)
        throw InvalidParameter("F_ex is not the adjoint of F_xe at lambda=" +
                               std::to_string(l));
      const CMatrix z = f + g + xe + ex;
      if (min_eigenvalue(z) < -tol * scale)
        throw InvalidParameter("F_zeta is not positive semidefinite at lambda=" +
                               std::to_string(l));
    }
  }
}

GridSamples GridSamples::sample(const SpectralModel& model) {
  GridSamples s;
  s.lambda = quadrature_grid(model.grid_size);
  const std::size_t n = s.lambda.size();
  s.F.reserve(n);
  s.G.reserve(n);
  s.Fxe.reserve(n);
  s.Fex.reserve(n);
  s.observed.reserve(n);
  for (double l : s.lambda) {
    s.F.push_back(model.F(l));
    s.G.push_back(model.G(l));
    s.Fxe.push_back(model.Fxe(l));
    s.Fex.push_back(model.Fex(l));
    s.observed.push_back(s.F.back() + s.G.back() + s.Fxe.back() + s.Fex.back());
  }
  return s;
}

FourierTable::FourierTable(int dim, int max_lag)
    : dim_(dim),
      max_lag_(max_lag),
      coeff_(static_cast<std::size_t>(2 * max_lag + 1), CMatrix::Zero(dim, dim)) {}

const CMatrix& FourierTable::operator()(int lag) const {
  if (!has_lag(lag))
    throw InsufficientLag("Fourier table does not cover lag " + std::to_string(lag) +
                              " (max lag " + std::to_string(max_lag_) + ")",
                          lag);
  return coeff_[static_cast<std::size_t>(lag + max_lag_)];
}

CMatrix& FourierTable::at(int lag) {
  if (!has_lag(lag))
    throw InsufficientLag("Fourier table does not cover lag " + std::to_string(lag), lag);
  return coeff_[static_cast<std::size_t>(lag + max_lag_)];
}

FourierTable FourierTable::transposed() const {
  FourierTable t(dim_, max_lag_);
  for (int k = -max_lag_; k <= max_lag_; ++k) t.at(k) = (*this)(k).transpose();
  return t;
}

namespace {

// Forward DFT X[k] = sum_m x_m e^{-2 pi i k m / n}; coefficient at lag k on
// the grid starting at -pi is (-1)^k X[k mod n] / n.
std::vector<cplx> lag_coefficients(const std::vector<cplx>& x, int max_lag) {
  const int n = static_cast<int>(x.size());
  Eigen::FFT<double> fft;
  std::vector<cplx> spec;
  fft.fwd(spec, x);
  std::vector<cplx> out(static_cast<std::size_t>(2 * max_lag + 1));
  for (int k = -max_lag; k <= max_lag; ++k) {
    const int idx = ((k % n) + n) % n;
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    out[static_cast<std::size_t>(k + max_lag)] = sign * spec[idx] / static_cast<double>(n);
  }
  return out;
}

void check_grid(int n, int max_lag) {
  if (n < 4 * max_lag || n < 1)
    throw InvalidParameter("quadrature grid of " + std::to_string(n) +
                           " nodes is too coarse for max lag " + std::to_string(max_lag) +
                           " (need n >= 4L)");
}

}  // namespace

FourierTable fourier_coeffs(std::span<const CMatrix> samples, int max_lag) {
  const int n = static_cast<int>(samples.size());
  check_grid(n, max_lag);
  const int dim = static_cast<int>(samples.front().rows());
  const std::vector<double> grid = quadrature_grid(n);
  for (int m = 0; m < n; ++m)
    if (!all_finite(samples[m]))
      throw SingularDensity("non-finite matrix entry at lambda=" + std::to_string(grid[m]),
                            grid[m]);
  FourierTable table(dim, max_lag);
  std::vector<cplx> x(static_cast<std::size_t>(n));
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) {
      for (int m = 0; m < n; ++m) x[m] = samples[m](r, c);
      const auto coeff = lag_coefficients(x, max_lag);
      for (int k = -max_lag; k <= max_lag; ++k)
        table.at(k)(r, c) = coeff[static_cast<std::size_t>(k + max_lag)];
    }
  }
  return table;
}

FourierTable fourier_coeffs(const std::function<CMatrix(double)>& fn, int max_lag,
                            int grid_size) {
  check_grid(grid_size, max_lag);
  std::vector<CMatrix> samples;
  samples.reserve(static_cast<std::size_t>(grid_size));
  for (double l : quadrature_grid(grid_size)) samples.push_back(fn(l));
  return fourier_coeffs(samples, max_lag);
}

std::vector<cplx> fourier_coeffs_scalar(std::span<const cplx> samples, int max_lag) {
  check_grid(static_cast<int>(samples.size()), max_lag);
  return lag_coefficients(std::vector<cplx>(samples.begin(), samples.end()), max_lag);
}

std::vector<CVector> fourier_coeffs_vector(std::span<const CVector> samples, int max_lag) {
  const int n = static_cast<int>(samples.size());
  check_grid(n, max_lag);
  const int dim = static_cast<int>(samples.front().size());
  std::vector<CVector> out(static_cast<std::size_t>(2 * max_lag + 1), CVector::Zero(dim));
  std::vector<cplx> x(static_cast<std::size_t>(n));
  for (int r = 0; r < dim; ++r) {
    for (int m = 0; m < n; ++m) x[m] = samples[m](r);
    const auto coeff = lag_coefficients(x, max_lag);
    for (std::size_t i = 0; i < coeff.size(); ++i) out[i](r) = coeff[i];
  }
  return out;
}

FourierTable covariance_table(const SpectralModel& model, int max_lag, Component component) {
  const FourierTable coeff = fourier_coeffs(
      [&](double l) { return model.eval(component, l); }, max_lag, model.grid_size);
  // R(n) is the Fourier coefficient at lag -n.
  FourierTable cov(model.dim, max_lag);
  for (int n = -max_lag; n <= max_lag; ++n) cov.at(n) = coeff(-n);
  return cov;
}

CMatrix covariance(const SpectralModel& model, int n, Component component) {
  const int lag = std::abs(n);
  int grid = model.grid_size;
  while (grid < 4 * lag) grid *= 2;
  SpectralModel m = model;
  m.grid_size = grid;
  return covariance_table(m, lag, component)(n);
}

MinimalityReport check_minimality(const SpectralModel& model, double condition_ceiling) {
  MinimalityReport rep;
  const std::vector<double> grid = quadrature_grid(model.grid_size);
  double sum = 0.0;
  rep.pass = true;
  for (double l : grid) {
    const CMatrix z = model.observed(l);
    if (!all_finite(z)) {
      rep.pass = false;
      rep.value = std::numeric_limits<double>::infinity();
      rep.max_condition = std::numeric_limits<double>::infinity();
      rep.worst_lambda = l;
      rep.message = "F_zeta is not finite at lambda=" + std::to_string(l);
      return rep;
    }
    const CMatrix h = 0.5 * (z + z.adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    const double cond = (lo > 0.0) ? hi / lo : std::numeric_limits<double>::infinity();
    if (cond > rep.max_condition) {
      rep.max_condition = cond;
      rep.worst_lambda = l;
    }
    if (lo > 0.0) {
      sum += (1.0 / es.eigenvalues().array()).sum();
    } else {
      sum = std::numeric_limits<double>::infinity();
    }
  }
  rep.value = std::isfinite(sum) ? sum / static_cast<double>(grid.size())
                                 : std::numeric_limits<double>::infinity();
  rep.pass = std::isfinite(rep.value) && rep.max_condition <= condition_ceiling;
  if (!rep.pass) {
    std::ostringstream os;
    os << "F_zeta is singular or ill-conditioned (cond " << rep.max_condition
       << ") at lambda=" << rep.worst_lambda;
    rep.message = os.str();
  }
  return rep;
}

}  // namespace gapx
