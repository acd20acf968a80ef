#include "gapx/density_class.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "gapx/errors.hpp"

namespace gapx {

namespace {

using Shape = std::function<double(double)>;

const char* base_name(ConstraintKind k) {
  switch (k) {
    case ConstraintKind::D0: return "D0";
    case ConstraintKind::DVU: return "DVU";
    case ConstraintKind::Deps: return "Deps";
    case ConstraintKind::D1delta: return "D1delta";
  }
  return "?";
}

double grid_mean(const std::vector<double>& grid, const std::function<double(double)>& fn) {
  double s = 0.0;
  for (double l : grid) s += fn(l);
  return s / static_cast<double>(grid.size());
}

double inner(const CMatrix& b, const CMatrix& x) {
  return (b.conjugate().cwiseProduct(x)).sum().real();
}

CMatrix hermitian_sqrt(const CMatrix& m) {
  Eigen::SelfAdjointEigenSolver<CMatrix> es(0.5 * (m + m.adjoint()));
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

bool is_diagonal(const CMatrix& m) {
  const CMatrix off = m - CMatrix(m.diagonal().asDiagonal());
  return off.norm() <= 1e-14 * (1.0 + m.norm());
}

bool density_is_diagonal(const MatrixDensity& d, const std::vector<double>& grid) {
  if (d.is_zero()) return true;
  for (std::size_t i = 0; i < grid.size(); i += 64)
    if (!is_diagonal(d(grid[i]))) return false;
  return true;
}

void require_diagonal(const MatrixDensity& d, const std::vector<double>& grid, const char* what) {
  if (!density_is_diagonal(d, grid))
    throw UnsupportedClass(std::string("diagonal family construction needs diagonal ") + what);
}

/// Smallest t >= 0 with mean(lo + min(1, t s) (hi - lo)) = target, where
/// mean(lo) <= target <= mean(hi). Returns +inf when w == 1 is needed.
double band_scale(const std::vector<double>& grid, const std::function<double(double)>& lo,
                  const std::function<double(double)>& hi, const Shape& s, double target,
                  const std::string& what) {
  const double mlo = grid_mean(grid, lo);
  const double mhi = grid_mean(grid, hi);
  const double tol = 1e-12 * std::max(1.0, std::abs(target));
  if (target < mlo - tol || target > mhi + tol)
    throw InfeasibleClass(what + ": moment " + std::to_string(target) +
                          " lies outside the band [" + std::to_string(mlo) + ", " +
                          std::to_string(mhi) + "]");
  if (target <= mlo + tol) return 0.0;
  if (target >= mhi - tol) return std::numeric_limits<double>::infinity();
  std::vector<double> lv, gap, sv;
  for (double l : grid) {
    lv.push_back(lo(l));
    gap.push_back(hi(l) - lo(l));
    sv.push_back(s(l));
  }
  auto mean_at = [&](double t) {
    double m = 0.0;
    for (std::size_t i = 0; i < lv.size(); ++i) m += lv[i] + std::min(1.0, t * sv[i]) * gap[i];
    return m / static_cast<double>(lv.size());
  };
  double a = 0.0;
  double b = 1.0;
  while (mean_at(b) < target) {
    b *= 2.0;
    if (b > 1e300) return std::numeric_limits<double>::infinity();
  }
  for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
    const double mid = 0.5 * (a + b);
    (mean_at(mid) < target ? a : b) = mid;
  }
  return 0.5 * (a + b);
}

double band_weight(double t, double s) {
  if (std::isinf(t)) return 1.0;
  return std::min(1.0, t * s);
}

/// tau with mean(|u| m) tau = budget, u = s / mean(s) - 1, capped so that
/// 1 + tau u stays nonnegative on the grid.
struct Perturbation {
  double mean_s = 1.0;
  double tau = 0.0;
};

Perturbation l1_perturbation(const std::vector<double>& grid, const Shape& s,
                             const std::function<double(double)>& mass, double budget) {
  Perturbation p;
  p.mean_s = grid_mean(grid, s);
  double weighted = 0.0;
  double umin = 0.0;
  for (double l : grid) {
    const double u = s(l) / p.mean_s - 1.0;
    weighted += std::abs(u) * std::abs(mass(l));
    umin = std::min(umin, u);
  }
  weighted /= static_cast<double>(grid.size());
  if (weighted <= 0.0 || budget <= 0.0) return p;
  p.tau = budget / weighted;
  if (umin < 0.0) p.tau = std::min(p.tau, 1.0 / (-umin));
  return p;
}

MatrixDensity realize_d0(const ConstraintSet& c, int T, const std::vector<Shape>& s,
                         const std::vector<double>& grid) {
  std::vector<double> m(static_cast<std::size_t>(T));
  for (int k = 0; k < T; ++k) m[k] = grid_mean(grid, s[k]);
  auto diag = [s, T](double l) {
    CMatrix d = CMatrix::Zero(T, T);
    for (int k = 0; k < T; ++k) d(k, k) = s[k](l);
    return d;
  };
  switch (c.variant) {
    case 1:
    case 3: {
      double total = 0.0;
      for (int k = 0; k < T; ++k)
        total += (c.variant == 1 ? 1.0 : c.weight(k, k).real()) * m[k];
      const double scale = c.level / total;
      return MatrixDensity(T, [diag, scale](double l) { return CMatrix(scale * diag(l)); });
    }
    case 2: {
      std::vector<double> scale(static_cast<std::size_t>(T));
      for (int k = 0; k < T; ++k) scale[k] = c.levels[k] / m[k];
      return MatrixDensity(T, [diag, scale, T](double l) {
        CMatrix d = diag(l);
        for (int k = 0; k < T; ++k) d(k, k) *= scale[k];
        return d;
      });
    }
    default: {
      const CMatrix root = hermitian_sqrt(c.moment);
      return MatrixDensity(T, [diag, m, root, T](double l) {
        CMatrix d = diag(l);
        for (int k = 0; k < T; ++k) d(k, k) /= m[k];
        return CMatrix(root * d * root);
      });
    }
  }
}

MatrixDensity realize_dvu(const ConstraintSet& c, int T, const std::vector<Shape>& s,
                          const std::vector<double>& grid) {
  const MatrixDensity V = c.lower;
  const MatrixDensity U = c.upper;
  if (c.variant == 1 || c.variant == 3) {
    const CMatrix B = c.variant == 1 ? CMatrix::Identity(T, T) : c.weight;
    auto lo = [V, B](double l) { return inner(B, V(l)); };
    auto hi = [U, B](double l) { return inner(B, U(l)); };
    const double t = band_scale(grid, lo, hi, s[0], c.level, "band class");
    const Shape s0 = s[0];
    return MatrixDensity(T, [V, U, t, s0](double l) {
      const double w = band_weight(t, s0(l));
      const CMatrix v = V(l);
      return CMatrix(v + w * (U(l) - v));
    });
  }
  require_diagonal(V, grid, "lower bound V");
  require_diagonal(U, grid, "upper bound U");
  std::vector<double> target(static_cast<std::size_t>(T));
  if (c.variant == 2) {
    target = c.levels;
  } else {
    if (!is_diagonal(c.moment)) throw UnsupportedClass("diagonal family construction needs diagonal Q");
    for (int k = 0; k < T; ++k) target[k] = c.moment(k, k).real();
  }
  std::vector<double> t(static_cast<std::size_t>(T));
  for (int k = 0; k < T; ++k) {
    auto lo = [V, k](double l) { return V(l)(k, k).real(); };
    auto hi = [U, k](double l) { return U(l)(k, k).real(); };
    t[k] = band_scale(grid, lo, hi, s[k], target[k], "band class component " + std::to_string(k + 1));
  }
  return MatrixDensity(T, [V, U, t, s, T](double l) {
    const CMatrix v = V(l);
    const CMatrix u = U(l);
    CMatrix g = CMatrix::Zero(T, T);
    for (int k = 0; k < T; ++k) g(k, k) = v(k, k) + band_weight(t[k], s[k](l)) * (u(k, k) - v(k, k));
    return g;
  });
}

MatrixDensity realize_deps(const ConstraintSet& c, int T, const std::vector<Shape>& s,
                           const std::vector<double>& grid) {
  const MatrixDensity F1 = c.anchor;
  const double eps = c.eps;
  std::vector<double> m(static_cast<std::size_t>(T));
  for (int k = 0; k < T; ++k) m[k] = grid_mean(grid, s[k]);
  auto diag = [s, T](double l) {
    CMatrix d = CMatrix::Zero(T, T);
    for (int k = 0; k < T; ++k) d(k, k) = s[k](l);
    return d;
  };
  auto residual_power = [&](double target, double anchor_mean, const std::string& what) {
    const double pw = (target - (1.0 - eps) * anchor_mean) / eps;
    if (pw < -1e-12 * std::max(1.0, std::abs(target)))
      throw InfeasibleClass(what + ": anchor power exceeds the moment level");
    return std::max(pw, 0.0);
  };
  CMatrix wmat;
  switch (c.variant) {
    case 1:
    case 3: {
      const CMatrix B = c.variant == 1 ? CMatrix::Identity(T, T) : c.weight;
      const double am = grid_mean(grid, [F1, B](double l) { return inner(B, F1(l)); });
      const double pw = residual_power(c.level, am, "epsilon class");
      double total = 0.0;
      for (int k = 0; k < T; ++k) total += B(k, k).real() * m[k];
      wmat = CMatrix::Identity(T, T) * (pw / total);
      break;
    }
    case 2: {
      wmat = CMatrix::Zero(T, T);
      for (int k = 0; k < T; ++k) {
        const double am = grid_mean(grid, [F1, k](double l) { return F1(l)(k, k).real(); });
        wmat(k, k) = residual_power(c.levels[k], am, "epsilon class component " + std::to_string(k + 1)) / m[k];
      }
      break;
    }
    default: {
      CMatrix mean1 = CMatrix::Zero(T, T);
      for (double l : grid) mean1 += F1(l);
      mean1 /= static_cast<double>(grid.size());
      const CMatrix pw = (c.moment - (1.0 - eps) * mean1) / eps;
      if (min_eigenvalue(pw) < -1e-12 * (1.0 + pw.norm()))
        throw InfeasibleClass("epsilon class: P - (1 - eps) mean(F1) is not positive semidefinite");
      const CMatrix root = hermitian_sqrt(pw);
      return MatrixDensity(T, [F1, eps, diag, m, root, T](double l) {
        CMatrix d = diag(l);
        for (int k = 0; k < T; ++k) d(k, k) /= m[k];
        return CMatrix((1.0 - eps) * F1(l) + eps * root * d * root);
      });
    }
  }
  return MatrixDensity(T, [F1, eps, diag, wmat](double l) {
    return CMatrix((1.0 - eps) * F1(l) + eps * (wmat * diag(l)));
  });
}

MatrixDensity realize_d1delta(const ConstraintSet& c, int T, const std::vector<Shape>& s,
                              const std::vector<double>& grid) {
  const MatrixDensity G1 = c.anchor;
  if (c.variant == 2) {
    std::vector<Perturbation> p;
    for (int k = 0; k < T; ++k)
      p.push_back(l1_perturbation(grid, s[k], [G1, k](double l) { return G1(l)(k, k).real(); },
                                  c.deltas[k]));
    return MatrixDensity(T, [G1, p, s, T](double l) {
      Eigen::VectorXd d(T);
      for (int k = 0; k < T; ++k)
        d(k) = std::sqrt(std::max(0.0, 1.0 + p[k].tau * (s[k](l) / p[k].mean_s - 1.0)));
      return CMatrix(d.asDiagonal() * G1(l) * d.asDiagonal());
    });
  }
  Perturbation p;
  if (c.variant == 4) {
    // One scalar multiplier for every entry, sized by the tightest budget.
    p.mean_s = grid_mean(grid, s[0]);
    p.tau = std::numeric_limits<double>::infinity();
    for (int i = 0; i < T; ++i) {
      for (int j = 0; j < T; ++j) {
        auto mass = [G1, i, j](double l) { return std::abs(G1(l)(i, j)); };
        if (grid_mean(grid, mass) <= 0.0) continue;
        p.tau = std::min(p.tau, l1_perturbation(grid, s[0], mass, c.delta_matrix(i, j)).tau);
      }
    }
    if (std::isinf(p.tau)) p.tau = 0.0;
  } else {
    const CMatrix B = c.variant == 1 ? CMatrix::Identity(T, T) : c.weight;
    p = l1_perturbation(grid, s[0], [G1, B](double l) { return inner(B, G1(l)); }, c.delta);
  }
  const Shape s0 = s[0];
  return MatrixDensity(T, [G1, p, s0](double l) {
    const double f = std::max(0.0, 1.0 + p.tau * (s0(l) / p.mean_s - 1.0));
    return CMatrix(f * G1(l));
  });
}

MatrixDensity realize(const ConstraintSet& c, int T, const ShapeBasis& basis,
                      std::span<const double> theta, int grid_size) {
  const int copies = shape_count(c, T);
  const int per = basis.parameters();
  std::vector<Shape> shapes;
  for (int k = 0; k < copies; ++k) {
    std::vector<double> th(theta.begin() + k * per, theta.begin() + (k + 1) * per);
    shapes.push_back([basis, th](double l) { return basis(th, l); });
  }
  const std::vector<double> grid = quadrature_grid(grid_size);
  switch (c.kind) {
    case ConstraintKind::D0: return realize_d0(c, T, shapes, grid);
    case ConstraintKind::DVU: return realize_dvu(c, T, shapes, grid);
    case ConstraintKind::Deps: return realize_deps(c, T, shapes, grid);
    case ConstraintKind::D1delta: return realize_d1delta(c, T, shapes, grid);
  }
  throw UnsupportedClass("unknown constraint kind");
}

void check_pd(const CMatrix& m, int T, const std::string& what) {
  if (m.rows() != T || m.cols() != T)
    throw InvalidParameter(what + " must be " + std::to_string(T) + "x" + std::to_string(T));
  if ((m - m.adjoint()).norm() > 1e-12 * (1.0 + m.norm()))
    throw InvalidParameter(what + " must be Hermitian");
  if (!(min_eigenvalue(m) > 0.0)) throw InvalidParameter(what + " must be positive definite");
}

void validate_constraint(const ConstraintSet& c, int T, const char* side) {
  const std::string name = std::string(side) + " constraint " + kind_name(c);
  if (c.variant < 1 || c.variant > 4) throw InvalidParameter(name + ": variant must be 1..4");
  if (c.variant == 2 && c.kind != ConstraintKind::D1delta &&
      static_cast<int>(c.levels.size()) != T)
    throw InvalidParameter(name + ": needs " + std::to_string(T) + " moment levels");
  if (c.variant == 2 && c.kind == ConstraintKind::D1delta && static_cast<int>(c.deltas.size()) != T)
    throw InvalidParameter(name + ": needs " + std::to_string(T) + " L1 budgets");
  if (c.variant == 3) check_pd(c.weight, T, name + " weight matrix");
  if (c.variant == 4 && c.kind != ConstraintKind::D1delta) check_pd(c.moment, T, name + " moment matrix");
  if (c.variant == 4 && c.kind == ConstraintKind::D1delta &&
      (c.delta_matrix.rows() != T || c.delta_matrix.cols() != T))
    throw InvalidParameter(name + ": needs a " + std::to_string(T) + "x" + std::to_string(T) +
                           " budget matrix");
  if ((c.variant == 1 || c.variant == 3) && c.kind != ConstraintKind::D1delta && !(c.level > 0.0))
    throw InvalidParameter(name + ": moment level must be positive");
  for (double v : c.levels)
    if (!(v > 0.0)) throw InvalidParameter(name + ": moment levels must be positive");
  if (c.kind == ConstraintKind::DVU) {
    for (const MatrixDensity* d : {&c.lower, &c.upper})
      if (!d->is_zero() && d->dim() != T) throw InvalidParameter(name + ": band density dimension");
    if (c.upper.is_zero()) throw InvalidParameter(name + ": upper bound U is required");
  }
  if (c.kind == ConstraintKind::Deps || c.kind == ConstraintKind::D1delta) {
    if (c.anchor.is_zero() || c.anchor.dim() != T)
      throw InvalidParameter(name + ": anchor density of dimension " + std::to_string(T) + " is required");
  }
  if (c.kind == ConstraintKind::Deps && !(c.eps > 0.0 && c.eps <= 1.0))
    throw InvalidParameter(name + ": eps must lie in (0, 1]");
  if (c.kind == ConstraintKind::D1delta) {
    if (c.delta < 0.0) throw InvalidParameter(name + ": delta must be nonnegative");
    for (double v : c.deltas)
      if (v < 0.0) throw InvalidParameter(name + ": delta_k must be nonnegative");
    if (c.delta_matrix.size() > 0 && c.delta_matrix.minCoeff() < 0.0)
      throw InvalidParameter(name + ": delta_i^j must be nonnegative");
  }
}

}  // namespace

std::string kind_name(const ConstraintSet& c) {
  return std::string(base_name(c.kind)) + "_" + std::to_string(c.variant);
}

std::pair<ConstraintKind, int> parse_kind(const std::string& name) {
  const auto pos = name.rfind('_');
  if (pos == std::string::npos) throw InvalidParameter("unknown class kind '" + name + "'");
  const std::string base = name.substr(0, pos);
  const std::string k = name.substr(pos + 1);
  if (k.size() != 1 || k[0] < '1' || k[0] > '4')
    throw InvalidParameter("class kind '" + name + "' needs a variant 1..4");
  for (ConstraintKind kind :
       {ConstraintKind::D0, ConstraintKind::DVU, ConstraintKind::Deps, ConstraintKind::D1delta})
    if (base == base_name(kind)) return {kind, k[0] - '0'};
  throw InvalidParameter("unknown class kind '" + name + "'");
}

std::vector<double> reflection_to_poly(std::span<const double> kappa) {
  std::vector<double> a{1.0};
  for (double k : kappa) {
    std::vector<double> next(a.size() + 1, 0.0);
    const std::size_t m = a.size();
    for (std::size_t j = 0; j < m; ++j) next[j] = a[j];
    for (std::size_t j = 1; j <= m; ++j) next[j] += k * a[m - j];
    a = std::move(next);
  }
  return a;
}

double ShapeBasis::operator()(std::span<const double> theta, double lambda) const {
  switch (kind) {
    case ShapeKind::flat: return 1.0;
    case ShapeKind::cepstral: {
      double s = 0.0;
      for (std::size_t k = 0; k < theta.size(); ++k)
        s += theta[k] * std::cos(static_cast<double>(k + 1) * lambda);
      return std::exp(s);
    }
    case ShapeKind::ma:
    case ShapeKind::ar: {
      const std::vector<double> a = reflection_to_poly(theta);
      cplx v{0.0, 0.0};
      for (std::size_t j = 0; j < a.size(); ++j)
        v += a[j] * std::polar(1.0, static_cast<double>(j) * lambda);
      const double m = std::norm(v);
      return kind == ShapeKind::ma ? m : 1.0 / m;
    }
  }
  return 1.0;
}

std::string shape_name(ShapeKind k) {
  switch (k) {
    case ShapeKind::flat: return "flat";
    case ShapeKind::cepstral: return "cepstral";
    case ShapeKind::ma: return "ma";
    case ShapeKind::ar: return "ar";
  }
  return "?";
}

ShapeKind parse_shape(const std::string& name) {
  for (ShapeKind k : {ShapeKind::flat, ShapeKind::cepstral, ShapeKind::ma, ShapeKind::ar})
    if (name == shape_name(k)) return k;
  throw InvalidParameter("unknown shape basis '" + name + "'");
}

int shape_count(const ConstraintSet& c, int dim) {
  switch (c.kind) {
    case ConstraintKind::D0:
    case ConstraintKind::Deps: return dim;
    case ConstraintKind::DVU: return (c.variant == 1 || c.variant == 3) ? 1 : dim;
    case ConstraintKind::D1delta: return c.variant == 2 ? dim : 1;
  }
  return 1;
}

int family_dimension(const DensityClass& cls) {
  if (cls.family.discrete()) return 1;
  int d = shape_count(cls.f, cls.dim) * cls.family.f_shape.parameters();
  if (cls.g) d += shape_count(*cls.g, cls.dim) * cls.family.g_shape.parameters();
  return d;
}

std::pair<std::vector<double>, std::vector<double>> family_bounds(const DensityClass& cls) {
  if (cls.family.discrete())
    return {{0.0}, {static_cast<double>(cls.family.members.size() - 1)}};
  std::vector<double> lo, hi;
  const int nf = shape_count(cls.f, cls.dim) * cls.family.f_shape.parameters();
  for (int i = 0; i < nf; ++i) {
    lo.push_back(cls.family.f_shape.lo);
    hi.push_back(cls.family.f_shape.hi);
  }
  if (cls.g) {
    const int ng = shape_count(*cls.g, cls.dim) * cls.family.g_shape.parameters();
    for (int i = 0; i < ng; ++i) {
      lo.push_back(cls.family.g_shape.lo);
      hi.push_back(cls.family.g_shape.hi);
    }
  }
  return {lo, hi};
}

DensityPair family_member(const DensityClass& cls, std::span<const double> theta) {
  if (static_cast<int>(theta.size()) != family_dimension(cls))
    throw InvalidParameter("parameter vector has length " + std::to_string(theta.size()) +
                           ", family dimension is " + std::to_string(family_dimension(cls)));
  if (cls.family.discrete()) {
    const double idx = std::round(theta[0]);
    const auto n = static_cast<double>(cls.family.members.size());
    const auto i = static_cast<std::size_t>(std::clamp(idx, 0.0, n - 1.0));
    return cls.family.members[i];
  }
  const int nf = shape_count(cls.f, cls.dim) * cls.family.f_shape.parameters();
  DensityPair out;
  out.F = realize(cls.f, cls.dim, cls.family.f_shape, theta.subspan(0, static_cast<std::size_t>(nf)),
                  cls.grid_size);
  out.G = cls.g ? realize(*cls.g, cls.dim, cls.family.g_shape,
                          theta.subspan(static_cast<std::size_t>(nf)), cls.grid_size)
                : MatrixDensity::zero(cls.dim);
  return out;
}

SpectralModel member_model(const DensityClass& cls, std::span<const double> theta) {
  const DensityPair p = family_member(cls, theta);
  SpectralModel m;
  m.dim = cls.dim;
  m.F = p.F;
  m.G = p.G;
  m.Fxe = MatrixDensity::zero(cls.dim);
  m.Fex = MatrixDensity::zero(cls.dim);
  m.grid_size = cls.grid_size;
  return m;
}

double constraint_violation(const ConstraintSet& c, const MatrixDensity& x, int dim, int grid_size) {
  const std::vector<double> grid = quadrature_grid(grid_size);
  const double n = static_cast<double>(grid.size());
  const int T = dim;
  const CMatrix B = c.variant == 3 ? c.weight : CMatrix::Identity(T, T);
  double worst = 0.0;
  double scale = 0.0;
  CMatrix mean = CMatrix::Zero(T, T);
  std::vector<CMatrix> xs;
  for (double l : grid) {
    xs.push_back(x(l));
    mean += xs.back();
    scale = std::max(scale, xs.back().norm());
  }
  mean /= n;
  scale = std::max(scale, 1e-300);
  for (const CMatrix& v : xs) worst = std::max(worst, -min_eigenvalue(v) / scale);

  auto moment_violation = [&](const std::vector<double>& target) {
    double w = 0.0;
    switch (c.variant) {
      case 1:
      case 3: w = std::abs(inner(B, mean) - target[0]) / target[0]; break;
      case 2:
        for (int k = 0; k < T; ++k)
          w = std::max(w, std::abs(mean(k, k).real() - target[k]) / target[k]);
        break;
      default: w = (mean - c.moment).norm() / c.moment.norm(); break;
    }
    return w;
  };
  const std::vector<double> targets =
      c.variant == 2 ? c.levels : std::vector<double>{c.level};

  switch (c.kind) {
    case ConstraintKind::D0: worst = std::max(worst, moment_violation(targets)); break;
    case ConstraintKind::DVU: {
      worst = std::max(worst, moment_violation(targets));
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const CMatrix v = c.lower(grid[i]);
        const CMatrix u = c.upper(grid[i]);
        const CMatrix& g = xs[i];
        double lo = 0.0;
        double hi = 0.0;
        switch (c.variant) {
          case 1:
          case 3:
            lo = inner(B, v) - inner(B, g);
            hi = inner(B, g) - inner(B, u);
            break;
          case 2:
            for (int k = 0; k < T; ++k) {
              lo = std::max(lo, (v(k, k) - g(k, k)).real());
              hi = std::max(hi, (g(k, k) - u(k, k)).real());
            }
            break;
          default:
            lo = -min_eigenvalue(g - v);
            hi = -min_eigenvalue(u - g);
            break;
        }
        worst = std::max(worst, std::max(lo, hi) / scale);
      }
      break;
    }
    case ConstraintKind::Deps: {
      worst = std::max(worst, moment_violation(targets));
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const CMatrix w = xs[i] - (1.0 - c.eps) * c.anchor(grid[i]);
        double v = 0.0;
        switch (c.variant) {
          case 1:
          case 3: v = -inner(B, w); break;
          case 2:
            for (int k = 0; k < T; ++k) v = std::max(v, -w(k, k).real());
            break;
          default: v = -min_eigenvalue(w); break;
        }
        worst = std::max(worst, v / scale);
      }
      break;
    }
    case ConstraintKind::D1delta: {
      Eigen::MatrixXd l1 = Eigen::MatrixXd::Zero(T, T);
      double scalar = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const CMatrix d = xs[i] - c.anchor(grid[i]);
        scalar += std::abs(inner(B, d));
        l1 += d.cwiseAbs();
      }
      scalar /= n;
      l1 /= n;
      auto excess = [](double value, double budget) {
        return std::max(0.0, value - budget) / std::max(budget, 1e-300);
      };
      switch (c.variant) {
        case 1:
        case 3: worst = std::max(worst, excess(scalar, c.delta)); break;
        case 2:
          for (int k = 0; k < T; ++k) worst = std::max(worst, excess(l1(k, k), c.deltas[k]));
          break;
        default:
          for (int i = 0; i < T; ++i)
            for (int j = 0; j < T; ++j) worst = std::max(worst, excess(l1(i, j), c.delta_matrix(i, j)));
          break;
      }
      break;
    }
  }
  return worst;
}

void validate_class(const DensityClass& cls) {
  if (cls.dim < 1) throw InvalidParameter("class dimension must be positive");
  if (!is_power_of_two(cls.grid_size) || cls.grid_size < 64)
    throw InvalidParameter("class grid must be a power of two >= 64");
  validate_constraint(cls.f, cls.dim, "F");
  if (cls.g) validate_constraint(*cls.g, cls.dim, "G");
  const Family& fam = cls.family;
  for (const ShapeBasis* b : {&fam.f_shape, &fam.g_shape}) {
    if (b->order < 0) throw InvalidParameter("shape order must be nonnegative");
    if (b->parameters() > 0 && !(b->lo < b->hi))
      throw InvalidParameter("shape box needs lo < hi");
  }
  for (const DensityPair& p : fam.members) {
    if (p.F.is_zero() || p.F.dim() != cls.dim)
      throw InvalidParameter("discrete family member has a missing or mis-sized F");
    if (!p.G.is_zero() && p.G.dim() != cls.dim)
      throw InvalidParameter("discrete family member has a mis-sized G");
  }
  if (family_dimension(cls) > 8)
    throw InvalidParameter("family dimension " + std::to_string(family_dimension(cls)) +
                           " exceeds 8");
}

}  // namespace gapx
