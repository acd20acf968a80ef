#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gapx/density_class.hpp"
#include "gapx/extrapolator.hpp"
#include "gapx/operator_system.hpp"

namespace gapx {

struct OptConfig {
  int starts = 16;
  int budget = 2000;
  /// Fixed truncation K used for every evaluation.
  int truncation = 64;
  std::uint64_t seed = 1;
  /// Coordinate steps stop shrinking below this fraction of the box width.
  double step_tol = 1e-10;
};

struct Evaluation {
  std::vector<double> theta;
  /// Mean-square error of the optimal estimate at theta; NaN when the
  /// member failed the minimality or invertibility checks.
  double delta = 0.0;
};

struct SaddleEntry {
  std::vector<double> theta;
  /// Delta(h0; F, G) by quadrature.
  double delta = 0.0;
  bool pass = true;
};

struct SaddleReport {
  /// Delta(h0; F0, G0) by quadrature, the reference of every entry.
  double reference = 0.0;
  double tol = 0.0;
  std::vector<SaddleEntry> entries;

  bool all_pass() const noexcept;
  int violations() const noexcept;
};

struct LeastFavorableResult {
  std::vector<double> theta_star;
  MatrixDensity F0;
  MatrixDensity G0;
  double delta_star = 0.0;
  bool at_boundary = false;
  std::vector<Evaluation> evaluations;
  /// Full solution at theta_star: c, h0 on the grid and both error routes.
  EstimateResult estimate;
  SpectralModel model;
};

/// Mean-square error of the optimal estimate for the member at theta.
double member_delta(const DensityClass& cls, const MissingPattern& pattern,
                    const FunctionalSpec& functional, std::span<const double> theta, int K);

/// Solution at an arbitrary theta in the same form maximize_delta returns.
LeastFavorableResult evaluate_member(const DensityClass& cls, const MissingPattern& pattern,
                                     const FunctionalSpec& functional,
                                     std::span<const double> theta, int K);

/// Multi-start coordinate search for the member with the largest error.
/// Discrete families are enumerated.
LeastFavorableResult maximize_delta(const DensityClass& cls, const MissingPattern& pattern,
                                    const FunctionalSpec& functional, const OptConfig& opt = {});

/// Checks Delta(h0; F, G) <= Delta(h0; F0, G0) + tol max(1, Delta(h0; F0, G0))
/// on n_samples members drawn uniformly from the family box.
SaddleReport verify_saddle_point(const LeastFavorableResult& result, const DensityClass& cls,
                                 const FunctionalSpec& functional, int n_samples,
                                 double tol = 1e-6, std::uint64_t seed = 1);

/// Uniform random parameter vectors inside the family box (indices for
/// discrete families), reproducible from the seed.
std::vector<std::vector<double>> sample_parameters(const DensityClass& cls, int n,
                                                   std::uint64_t seed);

}  // namespace gapx
