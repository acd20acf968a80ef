#pragma once

#include <string>
#include <vector>

#include "gapx/operator_system.hpp"
#include "gapx/spectral_model.hpp"

namespace gapx {

/// Linear functional A_N xi = sum_{j=0}^{N} a(j)^T xi(j).
struct FunctionalSpec {
  std::vector<CVector> a;
  /// Set when the coefficients are the whole functional rather than the
  /// truncation of an infinite one.
  bool finite_horizon = true;

  int horizon() const noexcept { return static_cast<int>(a.size()) - 1; }
  int dim() const noexcept { return a.empty() ? 0 : static_cast<int>(a.front().size()); }
  bool is_zero() const noexcept;
};

enum class Variant { general, uncorrelated, noiseless, finite_horizon };

std::string to_string(Variant v);

/// Variant implied by the zero structure of the model.
Variant select_variant(const SpectralModel& model, const FunctionalSpec& functional);

struct SolverOptions {
  /// Future truncation K; 0 selects the default and enables K doubling
  /// until the error stabilises.
  int truncation = 0;
  int max_truncation = 1024;
  double condition_ceiling = kDefaultConditionCeiling;
  /// Relative tolerance for the convergence and consistency checks.
  double tol = 1e-8;
  /// Tap window L_obs; 0 selects min(4K, grid_size / 4).
  int obs_window = 0;
};

/// max(32, N + 8 max(1, ceil(1 / (1 - rho)))) with rho the largest pole
/// radius, or N + 64 when the radius is unknown.
int default_truncation(const SpectralModel& model, const FunctionalSpec& functional);

struct Diagnostics {
  int truncation = 0;
  int grid_size = 0;
  int obs_window = 0;
  double cond_B = 0.0;
  double solve_residual = 0.0;
  /// |delta(2K) - delta(K)| / delta(K); negative when not computed.
  double truncation_change = -1.0;
  /// |delta_operator - delta_quadrature| / max(delta, tiny).
  double delta_discrepancy = 0.0;
  /// max norm of Fourier coefficients of h on U_K.
  double gap_constraint = 0.0;
  /// max norm of Fourier coefficients of A^T(F+F_xe) - h^T F_zeta at
  /// observed indices in [-L_obs, -1].
  double orthogonality = 0.0;
  /// Squared norm of h coefficients at observed indices below -L_obs.
  double tap_tail_mass = 0.0;
};

struct TapSet {
  std::vector<int> lags;
  std::vector<CVector> taps;
  double tail_mass = 0.0;

  /// Tap at lag j, or zero vector when j is not in the set.
  CVector at(int j) const;
};

struct EstimateResult {
  Variant variant = Variant::general;
  IndexMap index_map;
  /// Solved c(j) aligned with index_map.entries().
  std::vector<CVector> c;
  std::vector<double> lambda;
  std::vector<CVector> h_grid;
  TapSet taps;
  /// Mean-square error from the operator form.
  double delta = 0.0;
  /// Mean-square error by quadrature of the integral error expression.
  double delta_quadrature = 0.0;
  Diagnostics diagnostics;
};

/// Full pipeline: coefficients c, spectral characteristic h on the grid,
/// filter taps and both mean-square error routes.
EstimateResult estimate(const SpectralModel& model, const MissingPattern& pattern,
                        const FunctionalSpec& functional, const SolverOptions& options = {});

/// Spectral characteristic only (c and h_grid populated, taps empty).
EstimateResult spectral_characteristic(const SpectralModel& model, const MissingPattern& pattern,
                                       const FunctionalSpec& functional, int K);

double mean_square_error(const SpectralModel& model, const MissingPattern& pattern,
                         const FunctionalSpec& functional, int K);

/// Fourier coefficients of h at observed lags -L_obs..-1 outside S.
TapSet filter_taps(const EstimateResult& result, int obs_window, const MissingPattern& pattern);

/// Fourier coefficients of h_grid at lags -L..L (index lag + L).
std::vector<CVector> h_coefficients(const EstimateResult& result, int max_lag);

/// A(e^{il}) = sum_j a(j) e^{ijl}.
CVector transfer(const FunctionalSpec& functional, double lambda);

/// Mean-square error of an arbitrary characteristic h (sampled on the
/// model grid) under the densities in samples:
///   (1/2pi) \int (A-h)^T F conj(A-h) + h^T G conj(h)
///              - (A-h)^T F_xe conj(h) - h^T F_ex conj(A-h).
double error_for_characteristic(const GridSamples& samples, const FunctionalSpec& functional,
                                const std::vector<CVector>& h_grid);

}  // namespace gapx
