#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace gapx {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr int kDefaultGridSize = 4096;
inline constexpr double kDefaultConditionCeiling = 1e12;

/// Matrix-valued function on [-pi, pi]. A default-constructed density of a
/// given dimension is identically zero; the zero flag lets the solver pick
/// the uncorrelated / noiseless formulas without sampling.
class MatrixDensity {
 public:
  using Fn = std::function<CMatrix(double)>;

  MatrixDensity() = default;
  explicit MatrixDensity(int dim) : dim_(dim) {}
  MatrixDensity(int dim, Fn fn, std::optional<double> pole_radius = {})
      : dim_(dim), fn_(std::move(fn)), pole_radius_(pole_radius) {}

  static MatrixDensity zero(int dim) { return MatrixDensity(dim); }

  int dim() const noexcept { return dim_; }
  bool is_zero() const noexcept { return !fn_; }
  /// Largest modulus of the rational density's poles, when known.
  std::optional<double> pole_radius() const noexcept { return pole_radius_; }

  CMatrix operator()(double lambda) const {
    if (!fn_) return CMatrix::Zero(dim_, dim_);
    return fn_(lambda);
  }

 private:
  int dim_ = 0;
  Fn fn_;
  std::optional<double> pole_radius_;
};

/// Which spectral function of the model to integrate.
enum class Component {
  signal,       // F
  noise,        // G
  cross_xe,     // F_xi_eta
  cross_ex,     // F_eta_xi
  observed,     // F_zeta = F + F_xe + F_ex + G
  signal_cross  // F + F_xe, the signal/observation cross-density
};

/// Density quadruple (F, G, F_xe, F_ex) of a T-dimensional signal xi and
/// additive noise eta, with the quadrature grid used to integrate it.
struct SpectralModel {
  int dim = 1;
  MatrixDensity F;
  MatrixDensity G;
  MatrixDensity Fxe;
  MatrixDensity Fex;
  int grid_size = kDefaultGridSize;

  bool uncorrelated() const noexcept { return Fxe.is_zero() && Fex.is_zero(); }
  bool noiseless() const noexcept { return uncorrelated() && G.is_zero(); }

  CMatrix eval(Component c, double lambda) const;
  CMatrix observed(double lambda) const { return eval(Component::observed, lambda); }

  /// Largest known pole radius over all components, if every nonzero
  /// component reports one.
  std::optional<double> pole_radius() const;

  /// Checks dimensions, grid size and the pointwise Hermitian / PSD
  /// invariants on the grid. Throws InvalidParameter on violation.
  void validate(double tol = 1e-10) const;
};

/// Equispaced nodes lambda_m = -pi + 2 pi m / n, m = 0..n-1.
std::vector<double> quadrature_grid(int n);

bool is_power_of_two(int n) noexcept;

/// Densities sampled once on the model grid.
struct GridSamples {
  std::vector<double> lambda;
  std::vector<CMatrix> F, G, Fxe, Fex, observed;

  static GridSamples sample(const SpectralModel& model);
  int size() const noexcept { return static_cast<int>(lambda.size()); }
};

/// Fourier coefficients coeff(k) = (1/2pi) \int fn(l) e^{-ikl} dl for
/// k in [-L, L].
class FourierTable {
 public:
  FourierTable() = default;
  FourierTable(int dim, int max_lag);

  int dim() const noexcept { return dim_; }
  int max_lag() const noexcept { return max_lag_; }
  bool has_lag(int lag) const noexcept { return lag >= -max_lag_ && lag <= max_lag_; }

  /// Throws InsufficientLag when the lag is outside the table.
  const CMatrix& operator()(int lag) const;
  CMatrix& at(int lag);

  /// Table of the transposed function: coeff(k)^T for every k.
  FourierTable transposed() const;

 private:
  int dim_ = 0;
  int max_lag_ = 0;
  std::vector<CMatrix> coeff_;
};

/// Rectangle-rule Fourier coefficients of matrix samples taken on
/// quadrature_grid(samples.size()). Requires samples.size() >= 4 * max_lag.
FourierTable fourier_coeffs(std::span<const CMatrix> samples, int max_lag);

/// Samples fn on an n-point grid and integrates it. Throws SingularDensity
/// naming the first node with a non-finite entry.
FourierTable fourier_coeffs(const std::function<CMatrix(double)>& fn, int max_lag,
                            int grid_size);

/// Scalar variant used for per-entry work (h, r_F, ...).
std::vector<cplx> fourier_coeffs_scalar(std::span<const cplx> samples, int max_lag);

/// Vector-valued variant: returns coefficient vectors indexed by lag + max_lag.
std::vector<CVector> fourier_coeffs_vector(std::span<const CVector> samples, int max_lag);

/// R(n) = (1/2pi) \int e^{in l} X(l) dl of the selected component.
CMatrix covariance(const SpectralModel& model, int n,
                   Component component = Component::signal);

/// Covariances R(-L..L) in a table indexed by n.
FourierTable covariance_table(const SpectralModel& model, int max_lag,
                              Component component = Component::signal);

struct MinimalityReport {
  /// (1/2pi) \int Tr F_zeta^{-1}; infinite when a node is singular.
  double value = 0.0;
  bool pass = false;
  double max_condition = 0.0;
  /// Node with the worst conditioning (the offending node when pass is false).
  double worst_lambda = 0.0;
  std::string message;
};

MinimalityReport check_minimality(const SpectralModel& model,
                                  double condition_ceiling = kDefaultConditionCeiling);

/// Smallest eigenvalue of a Hermitian matrix (Hermitian part is used).
double min_eigenvalue(const CMatrix& m);

}  // namespace gapx
