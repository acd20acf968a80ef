#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gapx/spectral_model.hpp"

namespace gapx {

enum class ConstraintKind { D0, DVU, Deps, D1delta };

/// Admissible set for one density (signal F or noise G). The variant k in
/// 1..4 selects the trace, diagonal, weighted (<B, .>) or matrix form.
struct ConstraintSet {
  ConstraintKind kind = ConstraintKind::D0;
  int variant = 1;
  /// p or q for variants 1 and 3 (moment classes and epsilon classes).
  double level = 1.0;
  /// p_k or q_k for variant 2.
  std::vector<double> levels;
  /// P or Q for variant 4.
  CMatrix moment;
  /// B_1 or B_2 for variant 3.
  CMatrix weight;
  /// V and U of the band classes.
  MatrixDensity lower;
  MatrixDensity upper;
  /// F_1 or G_1 of the epsilon and delta-neighbourhood classes.
  MatrixDensity anchor;
  double eps = 0.1;
  /// delta for variants 1 and 3 of the L1 class.
  double delta = 0.1;
  /// delta_k for variant 2.
  std::vector<double> deltas;
  /// delta_i^j for variant 4.
  Eigen::MatrixXd delta_matrix;
};

/// "D0_1", "DVU_3", "Deps_2", "D1delta_4".
std::string kind_name(const ConstraintSet& c);
/// Inverse of kind_name; throws InvalidParameter on an unknown name.
std::pair<ConstraintKind, int> parse_kind(const std::string& name);

enum class ShapeKind { flat, cepstral, ma, ar };

/// Positive scalar shape s_theta(l) used to build class members:
///   cepstral: exp(sum_k theta_k cos(k l))
///   ma:       |a(e^{il})|^2, a from reflection coefficients theta
///   ar:       1 / |a(e^{il})|^2, same polynomial
struct ShapeBasis {
  ShapeKind kind = ShapeKind::cepstral;
  int order = 1;
  double lo = -1.0;
  double hi = 1.0;

  int parameters() const noexcept { return kind == ShapeKind::flat ? 0 : order; }
  double operator()(std::span<const double> theta, double lambda) const;
};

std::string shape_name(ShapeKind k);
ShapeKind parse_shape(const std::string& name);

/// Polynomial coefficients 1, a_1, ..., a_m from reflection coefficients.
std::vector<double> reflection_to_poly(std::span<const double> kappa);

struct DensityPair {
  MatrixDensity F;
  MatrixDensity G;
};

/// Parameterization theta -> (F_theta, G_theta). Each constrained density
/// uses one or T copies of its shape basis (see shape_count), parameters
/// concatenated F first. A nonempty member list makes the family discrete
/// and the parameter is the member index.
struct Family {
  ShapeBasis f_shape;
  ShapeBasis g_shape;
  std::vector<DensityPair> members;

  bool discrete() const noexcept { return !members.empty(); }
};

struct DensityClass {
  int dim = 1;
  ConstraintSet f;
  /// Absent for the noiseless problem.
  std::optional<ConstraintSet> g;
  Family family;
  /// Quadrature grid on which the moment and L1 constraints are enforced.
  int grid_size = kDefaultGridSize;

  bool noiseless() const noexcept { return !g.has_value(); }
};

/// Number of independent shape copies a constraint consumes: T for the
/// per-diagonal constructions, 1 for the scalar-multiplier ones.
int shape_count(const ConstraintSet& c, int dim);

/// Total parameter dimension d (1 for discrete families).
int family_dimension(const DensityClass& cls);

/// Box bounds of the parameter vector.
std::pair<std::vector<double>, std::vector<double>> family_bounds(const DensityClass& cls);

/// Member at theta. Throws InfeasibleClass when the class constants admit
/// no member of this construction and UnsupportedClass when the
/// construction needs diagonal class data that is not diagonal.
DensityPair family_member(const DensityClass& cls, std::span<const double> theta);

/// Uncorrelated model (F_theta, G_theta) on the class grid.
SpectralModel member_model(const DensityClass& cls, std::span<const double> theta);

/// Largest relative violation of the constraint by density x on a grid
/// (moments, pointwise bounds, L1 budget, positivity).
double constraint_violation(const ConstraintSet& c, const MatrixDensity& x, int dim, int grid);

/// Validates the class data (dimensions, positive definiteness of P, Q, B,
/// eps in (0, 1], nonnegative budgets). Throws InvalidParameter.
void validate_class(const DensityClass& cls);

}  // namespace gapx
