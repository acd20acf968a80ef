#pragma once

#include <string>
#include <vector>

#include "gapx/density_class.hpp"
#include "gapx/minimax.hpp"

namespace gapx {

/// Fitted multiplier term of one characterization equation.
struct MultiplierFit {
  std::string name;
  /// Global multiplier (alpha^2, beta_k^2, an entry of alpha alpha^*, ...).
  double value = 0.0;
  /// Pointwise multiplier on the grid (gamma functions); empty for
  /// constant terms.
  std::vector<double> pointwise;
};

struct EquationResidual {
  /// "signal" (stationarity in F), "noise" (stationarity in G) or
  /// "l1_budget" (the equality on the L1 distance to the anchor).
  std::string equation;
  /// Relative L2 residual ||LHS - fit|| / ||LHS|| over the grid; 0 when
  /// the left side vanishes identically.
  double residual = 0.0;
  double lhs_norm = 0.0;
  std::vector<MultiplierFit> multipliers;
};

struct ResidualReport {
  std::vector<EquationResidual> equations;

  double max_residual() const noexcept;
};

/// Throws UnsupportedClass for T > 2 or a pair outside (D0_k, DVU_k),
/// (Deps_k, D1delta_k).
void check_supported(const DensityClass& cls);

/// Fits the Lagrange multipliers of the stationarity equations at the
/// result's (F0, G0) under their sign and support conditions and returns
/// the remaining residuals. With x^T = A^T G0 + C^T and y^T = A^T F0 - C^T
/// (C the transfer function of the solved coefficients) the equations read
///   conj(x) x^T = (F0 + G0) Phi_F (F0 + G0),
///   conj(y) y^T = (F0 + G0) Phi_G (F0 + G0),
/// with Phi_F, Phi_G structured by the F and G constraints. Throws
/// UnsupportedClass for T > 2 or a pair outside (D0_k, DVU_k),
/// (Deps_k, D1delta_k).
ResidualReport characterization_residuals(const LeastFavorableResult& result,
                                          const DensityClass& cls,
                                          const FunctionalSpec& functional);

}  // namespace gapx
