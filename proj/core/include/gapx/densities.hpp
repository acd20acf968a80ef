#pragma once

#include <map>
#include <utility>
#include <vector>

#include "gapx/spectral_model.hpp"

namespace gapx {

/// Two-dimensional model (xi_1, xi_1 + eta) with AR(1) components:
/// F = [[f, f], [f, f + g]], f = |1 - b1 e^{il}|^-2, g = |1 - b2 e^{il}|^-2,
/// observed without noise.
SpectralModel make_ar1_pair(double b1, double b2, int grid_size = kDefaultGridSize);

/// Scalar AR(1) density scale * |1 - b e^{il}|^-2.
MatrixDensity ar1_density(double b, double scale = 1.0);

/// Constant density Sigma.
MatrixDensity white_density(const CMatrix& sigma);

/// Density of x(t) = Phi x(t-1) + e(t), Cov e = Sigma:
/// (I - Phi e^{-il})^{-1} Sigma (I - Phi e^{-il})^{-*}.
MatrixDensity var1_density(const CMatrix& phi, const CMatrix& sigma);

/// Signal and noise taken as the two halves of a 2T-dimensional VAR(1);
/// off-diagonal blocks become the cross-densities.
SpectralModel make_joint_var1(const CMatrix& phi, const CMatrix& sigma, int dim,
                              int grid_size = kDefaultGridSize);

/// Ratio of trigonometric polynomials
///   (sum_m num[m] e^{i (m - p) l}) / (sum_m den[m] e^{i (m - q) l})
/// with num of length 2p+1 and den of length 2q+1 (centred lags).
struct RationalEntry {
  std::vector<cplx> num{cplx(1.0)};
  std::vector<cplx> den{cplx(1.0)};

  cplx operator()(double lambda) const;
};

using EntryMap = std::map<std::pair<int, int>, RationalEntry>;

/// Matrix density built entrywise (0-based indices). With hermitian set,
/// only entries with row <= col are read and the lower triangle is the
/// conjugate mirror.
MatrixDensity rational_density(int dim, const EntryMap& entries, bool hermitian);

/// Tabulated density, periodic linear interpolation in lambda. Nodes must
/// be strictly increasing inside [-pi, pi).
MatrixDensity grid_density(std::vector<double> lambda, std::vector<CMatrix> values);

/// Conjugate-transpose mirror X(l)^* of a density.
MatrixDensity adjoint_density(const MatrixDensity& x);

}  // namespace gapx
