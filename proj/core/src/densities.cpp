#include "gapx/densities.hpp"

#include <algorithm>
#include <cmath>

#include "gapx/errors.hpp"

namespace gapx {

namespace {

void require_unit_interval(double b, const char* name) {
  if (!(std::abs(b) < 1.0))
    throw InvalidParameter(std::string("parameter ") + name + "=" + std::to_string(b) +
                           " must lie in (-1, 1)");
}

double ar1_value(double b, double lambda) {
  // |1 - b e^{il}|^2 = 1 - 2 b cos l + b^2
  return 1.0 / (1.0 - 2.0 * b * std::cos(lambda) + b * b);
}

double spectral_radius(const CMatrix& phi) {
  Eigen::ComplexEigenSolver<CMatrix> es(phi, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace

SpectralModel make_ar1_pair(double b1, double b2, int grid_size) {
  require_unit_interval(b1, "b1");
  require_unit_interval(b2, "b2");
  SpectralModel m;
  m.dim = 2;
  m.grid_size = grid_size;
  const double radius = std::max(std::abs(b1), std::abs(b2));
  m.F = MatrixDensity(
      2,
      [b1, b2](double l) {
        const double f = ar1_value(b1, l);
        const double g = ar1_value(b2, l);
        CMatrix out(2, 2);
        out << f, f, f, f + g;
        return out;
      },
      radius);
  m.G = MatrixDensity::zero(2);
  m.Fxe = MatrixDensity::zero(2);
  m.Fex = MatrixDensity::zero(2);
  return m;
}

MatrixDensity ar1_density(double b, double scale) {
  require_unit_interval(b, "b");
  if (!(scale > 0.0)) throw InvalidParameter("AR(1) scale must be positive");
  return MatrixDensity(
      1,
      [b, scale](double l) {
        CMatrix out(1, 1);
        out(0, 0) = scale * ar1_value(b, l);
        return out;
      },
      std::abs(b));
}

MatrixDensity white_density(const CMatrix& sigma) {
  if (sigma.rows() != sigma.cols()) throw InvalidParameter("white density must be square");
  return MatrixDensity(
      static_cast<int>(sigma.rows()), [sigma](double) { return sigma; }, 0.0);
}

MatrixDensity var1_density(const CMatrix& phi, const CMatrix& sigma) {
  if (phi.rows() != phi.cols() || sigma.rows() != phi.rows() || sigma.cols() != phi.cols())
    throw InvalidParameter("VAR(1) coefficient and innovation matrices must be square and conformant");
  const double radius = spectral_radius(phi);
  if (!(radius < 1.0))
    throw InvalidParameter("VAR(1) coefficient matrix has spectral radius " +
                           std::to_string(radius) + " >= 1");
  const int dim = static_cast<int>(phi.rows());
  return MatrixDensity(
      dim,
      [phi, sigma, dim](double l) {
        const CMatrix transfer =
            (CMatrix::Identity(dim, dim) - phi * std::polar(1.0, -l)).inverse();
        return CMatrix(transfer * sigma * transfer.adjoint());
      },
      radius);
}

SpectralModel make_joint_var1(const CMatrix& phi, const CMatrix& sigma, int dim,
                              int grid_size) {
  if (phi.rows() != 2 * dim)
    throw InvalidParameter("joint VAR(1) must have dimension 2T");
  const MatrixDensity joint = var1_density(phi, sigma);
  auto block = [joint, dim](int r, int c) {
    return MatrixDensity(
        dim,
        [joint, dim, r, c](double l) {
          return CMatrix(joint(l).block(r * dim, c * dim, dim, dim));
        },
        joint.pole_radius());
  };
  SpectralModel m;
  m.dim = dim;
  m.grid_size = grid_size;
  m.F = block(0, 0);
  m.G = block(1, 1);
  m.Fxe = block(0, 1);
  m.Fex = block(1, 0);
  return m;
}

cplx RationalEntry::operator()(double lambda) const {
  auto poly = [lambda](const std::vector<cplx>& c) {
    const int p = static_cast<int>(c.size() - 1) / 2;
    cplx s{0.0, 0.0};
    for (int m = 0; m < static_cast<int>(c.size()); ++m)
      s += c[static_cast<std::size_t>(m)] * std::polar(1.0, (m - p) * lambda);
    return s;
  };
  return poly(num) / poly(den);
}

MatrixDensity rational_density(int dim, const EntryMap& entries, bool hermitian) {
  for (const auto& [idx, e] : entries) {
    if (idx.first < 0 || idx.second < 0 || idx.first >= dim || idx.second >= dim)
      throw InvalidParameter("rational entry index out of range");
    if (e.num.size() % 2 == 0 || e.den.size() % 2 == 0)
      throw InvalidParameter(
          "rational entry coefficient lists must have odd length (centred lags)");
    if (hermitian && idx.first > idx.second)
      throw InvalidParameter(
          "Hermitian rational density: give entries with row <= column only");
  }
  return MatrixDensity(dim, [dim, entries, hermitian](double l) {
    CMatrix out = CMatrix::Zero(dim, dim);
    for (const auto& [idx, e] : entries) {
      const cplx v = e(l);
      out(idx.first, idx.second) = v;
      if (hermitian && idx.first != idx.second) out(idx.second, idx.first) = std::conj(v);
    }
    if (hermitian)
      for (int k = 0; k < dim; ++k) out(k, k) = out(k, k).real();
    return out;
  });
}

MatrixDensity grid_density(std::vector<double> lambda, std::vector<CMatrix> values) {
  if (lambda.size() != values.size() || lambda.size() < 2)
    throw InvalidParameter("grid density needs at least two nodes with matching values");
  for (std::size_t i = 1; i < lambda.size(); ++i)
    if (!(lambda[i] > lambda[i - 1]))
      throw InvalidParameter("grid density nodes must be strictly increasing");
  if (lambda.front() < -kPi - 1e-12 || lambda.back() >= kPi + 1e-12)
    throw InvalidParameter("grid density nodes must lie in [-pi, pi)");
  const int dim = static_cast<int>(values.front().rows());
  return MatrixDensity(dim, [lambda = std::move(lambda), values = std::move(values)](double l) {
    // Wrap into [lambda_0, lambda_0 + 2 pi).
    double x = std::fmod(l - lambda.front(), 2.0 * kPi);
    if (x < 0) x += 2.0 * kPi;
    x += lambda.front();
    const auto it = std::upper_bound(lambda.begin(), lambda.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - lambda.begin());
    const std::size_t lo = hi - 1;
    const double x0 = lambda[lo];
    std::size_t next = hi;
    double x1;
    if (hi == lambda.size()) {
      next = 0;
      x1 = lambda.front() + 2.0 * kPi;
    } else {
      x1 = lambda[hi];
    }
    const double w = (x - x0) / (x1 - x0);
    return CMatrix((1.0 - w) * values[lo] + w * values[next]);
  });
}

MatrixDensity adjoint_density(const MatrixDensity& x) {
  if (x.is_zero()) return MatrixDensity::zero(x.dim());
  return MatrixDensity(
      x.dim(), [x](double l) { return CMatrix(x(l).adjoint()); }, x.pole_radius());
}

}  // namespace gapx
