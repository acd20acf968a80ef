#include "gapx/characterization.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "gapx/errors.hpp"

namespace gapx {

double ResidualReport::max_residual() const noexcept {
  double m = 0.0;
  for (const auto& e : equations) m = std::max(m, e.residual);
  return m;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kActive = 1e-7;

enum class Rule { constant_nonneg, constant_free, band, scaled };

/// One term m(l) M(l) of the fit. band: m = g + gamma(l), gamma in
/// [lo(l), hi(l)], g >= 0. scaled: m = g s(l), s in [lo(l), hi(l)], g >= 0.
struct Channel {
  std::string name;
  Rule rule = Rule::constant_nonneg;
  std::vector<CMatrix> M;
  std::vector<double> lo;
  std::vector<double> hi;
  double g = 0.0;
  std::vector<double> gamma;
  /// Band terms without a global part keep g at 0.
  bool has_global = true;
  bool frozen = false;

  double coefficient(std::size_t i) const {
    switch (rule) {
      case Rule::constant_nonneg:
      case Rule::constant_free: return g;
      case Rule::band: return g + gamma[i];
      case Rule::scaled: return g * gamma[i];
    }
    return 0.0;
  }
};

double frob(const CMatrix& a, const CMatrix& b) { return (a.conjugate().cwiseProduct(b)).sum().real(); }

double inner(const CMatrix& b, const CMatrix& x) { return frob(b, x); }

double golden_min(const std::function<double(double)>& f, double a, double b) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 120 && b - a > 1e-15 * std::max(1.0, b); ++it) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return f(a) < f(x) ? (f(a) < f(b) ? a : b) : (f(x) < f(b) ? x : b);
}

double dist(double t, double lo, double hi) {
  if (t < lo) return lo - t;
  if (t > hi) return t - hi;
  return 0.0;
}

void fit_channel(Channel& ch, const std::vector<CMatrix>& R) {
  const std::size_t n = R.size();
  std::vector<double> w(n), t(n);
  double tmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] = frob(ch.M[i], ch.M[i]);
    t[i] = w[i] > 0.0 ? frob(ch.M[i], R[i]) / w[i] : 0.0;
    tmax = std::max(tmax, std::abs(t[i]));
  }
  switch (ch.rule) {
    case Rule::constant_nonneg:
    case Rule::constant_free: {
      double num = 0.0;
      double den = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        num += w[i] * t[i];
        den += w[i];
      }
      ch.g = den > 0.0 ? num / den : 0.0;
      if (ch.rule == Rule::constant_nonneg) ch.g = std::max(ch.g, 0.0);
      return;
    }
    case Rule::band: {
      auto phi = [&](double g) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = dist(t[i] - g, ch.lo[i], ch.hi[i]);
          s += w[i] * d * d;
        }
        return s;
      };
      ch.g = ch.has_global ? golden_min(phi, 0.0, 2.0 * tmax + 1e-300) : 0.0;
      for (std::size_t i = 0; i < n; ++i) ch.gamma[i] = std::clamp(t[i] - ch.g, ch.lo[i], ch.hi[i]);
      return;
    }
    case Rule::scaled: {
      auto phi = [&](double g) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = dist(t[i], g * ch.lo[i], g * ch.hi[i]);
          s += w[i] * d * d;
        }
        return s;
      };
      ch.g = golden_min(phi, 0.0, 2.0 * tmax + 1e-300);
      for (std::size_t i = 0; i < n; ++i)
        ch.gamma[i] = ch.g > 0.0 ? std::clamp(t[i] / ch.g, ch.lo[i], ch.hi[i]) : ch.lo[i] == ch.hi[i] ? ch.lo[i] : 0.0;
      return;
    }
  }
}

double objective(const std::vector<Channel>& chs, const std::vector<CMatrix>& lhs) {
  double s = 0.0;
  for (std::size_t i = 0; i < lhs.size(); ++i) {
    CMatrix r = lhs[i];
    for (const Channel& c : chs) r -= c.coefficient(i) * c.M[i];
    s += r.squaredNorm();
  }
  return s;
}

void fit_all(std::vector<Channel>& chs, const std::vector<CMatrix>& lhs) {
  const std::size_t n = lhs.size();
  double prev = kInf;
  for (int sweep = 0; sweep < 60; ++sweep) {
    for (std::size_t c = 0; c < chs.size(); ++c) {
      if (chs[c].frozen) continue;
      std::vector<CMatrix> R(lhs);
      for (std::size_t o = 0; o < chs.size(); ++o) {
        if (o == c) continue;
        for (std::size_t i = 0; i < n; ++i) R[i] -= chs[o].coefficient(i) * chs[o].M[i];
      }
      fit_channel(chs[c], R);
    }
    const double obj = objective(chs, lhs);
    if (chs.size() == 1 || prev - obj <= 1e-13 * std::max(prev, 1e-300)) break;
    prev = obj;
  }
}

struct Grid {
  std::vector<double> lambda;
  std::vector<CMatrix> F, G, Z, lhs_signal, lhs_noise;
};

Grid build_grid(const LeastFavorableResult& r, const FunctionalSpec& functional) {
  Grid g;
  const GridSamples s = GridSamples::sample(r.model);
  const EstimateResult& e = r.estimate;
  const auto& entries = e.index_map.entries();
  g.lambda = s.lambda;
  for (int m = 0; m < s.size(); ++m) {
    const double l = s.lambda[m];
    CVector C = CVector::Zero(r.model.dim);
    for (std::size_t p = 0; p < entries.size(); ++p) C += e.c[p] * std::polar(1.0, entries[p] * l);
    const CVector A = transfer(functional, l);
    const CVector x = s.G[m].transpose() * A + C;
    const CVector y = s.F[m].transpose() * A - C;
    g.F.push_back(s.F[m]);
    g.G.push_back(s.G[m]);
    g.Z.push_back(s.F[m] + s.G[m]);
    g.lhs_signal.push_back(x.conjugate() * x.transpose());
    g.lhs_noise.push_back(y.conjugate() * y.transpose());
  }
  return g;
}

std::vector<CMatrix> sandwich(const std::vector<CMatrix>& Z, const CMatrix& E) {
  std::vector<CMatrix> out;
  out.reserve(Z.size());
  for (const CMatrix& z : Z) out.push_back(z * E * z);
  return out;
}

CMatrix unit(int T, int a, int b) {
  CMatrix e = CMatrix::Zero(T, T);
  e(a, b) = 1.0;
  return e;
}

/// Scalar functional of the constraint (trace, diagonal entry, <B, .>).
std::function<double(const CMatrix&)> functional_of(const ConstraintSet& c, int k) {
  if (c.variant == 3) {
    const CMatrix B = c.weight;
    return [B](const CMatrix& x) { return inner(B, x); };
  }
  if (c.variant == 1 || k < 0) return [](const CMatrix& x) { return x.trace().real(); };
  return [k](const CMatrix& x) { return x(k, k).real(); };
}

/// Pointwise bounds on gamma from the activity of the density x against
/// the class bounds: lower active allows gamma <= 0, upper allows >= 0.
void activity(const ConstraintSet& c, int k, const std::vector<double>& lambda,
              const std::vector<CMatrix>& x, std::vector<double>& lo, std::vector<double>& hi) {
  const auto fn = functional_of(c, k);
  const std::size_t n = lambda.size();
  lo.assign(n, 0.0);
  hi.assign(n, 0.0);
  double scale = 0.0;
  for (const CMatrix& v : x) scale = std::max(scale, std::abs(fn(v)));
  scale = std::max(scale, 1e-300);
  for (std::size_t i = 0; i < n; ++i) {
    const double v = fn(x[i]);
    if (c.kind == ConstraintKind::DVU) {
      if (v - fn(c.lower(lambda[i])) <= kActive * scale) lo[i] = -kInf;
      if (fn(c.upper(lambda[i])) - v <= kActive * scale) hi[i] = kInf;
    } else {
      if (v - (1.0 - c.eps) * fn(c.anchor(lambda[i])) <= kActive * scale) lo[i] = -kInf;
    }
  }
}

/// s(l) range for the L1 classes: sign of the deviation from the anchor,
/// or [-1, 1] where the deviation vanishes.
void sign_range(const std::vector<double>& dev, std::vector<double>& lo, std::vector<double>& hi) {
  double scale = 0.0;
  for (double d : dev) scale = std::max(scale, std::abs(d));
  scale = std::max(scale, 1e-300);
  lo.resize(dev.size());
  hi.resize(dev.size());
  for (std::size_t i = 0; i < dev.size(); ++i) {
    if (std::abs(dev[i]) <= kActive * scale) {
      lo[i] = -1.0;
      hi[i] = 1.0;
    } else {
      lo[i] = hi[i] = dev[i] > 0.0 ? 1.0 : -1.0;
    }
  }
}

std::vector<Channel> channels_for(const ConstraintSet& c, int T, const Grid& g,
                                  const std::vector<CMatrix>& x, const std::string& prefix) {
  const std::size_t n = g.lambda.size();
  std::vector<Channel> chs;
  auto make = [&](std::string name, Rule rule, std::vector<CMatrix> M) {
    Channel ch;
    ch.name = std::move(name);
    ch.rule = rule;
    ch.M = std::move(M);
    ch.lo.assign(n, 0.0);
    ch.hi.assign(n, 0.0);
    ch.gamma.assign(n, 0.0);
    return ch;
  };
  const bool pointwise_band = c.kind == ConstraintKind::DVU || c.kind == ConstraintKind::Deps;
  const Rule global = c.kind == ConstraintKind::D1delta ? Rule::scaled
                      : pointwise_band                  ? Rule::band
                                                        : Rule::constant_nonneg;

  if (c.variant == 1 || c.variant == 3) {
    const CMatrix E = c.variant == 1 ? CMatrix::Identity(T, T) : CMatrix(c.weight.transpose());
    Channel ch = make(prefix + "^2", global, sandwich(g.Z, E));
    if (pointwise_band) {
      activity(c, -1, g.lambda, x, ch.lo, ch.hi);
    } else if (c.kind == ConstraintKind::D1delta) {
      const CMatrix B = c.variant == 1 ? CMatrix::Identity(T, T) : c.weight;
      std::vector<double> dev(n);
      for (std::size_t i = 0; i < n; ++i) dev[i] = inner(B, x[i] - c.anchor(g.lambda[i]));
      sign_range(dev, ch.lo, ch.hi);
    }
    chs.push_back(std::move(ch));
    return chs;
  }
  if (c.variant == 2 || c.kind == ConstraintKind::D1delta) {
    for (int k = 0; k < T; ++k) {
      Channel ch = make(prefix + "_" + std::to_string(k + 1) + "^2", global, sandwich(g.Z, unit(T, k, k)));
      if (pointwise_band) {
        activity(c, k, g.lambda, x, ch.lo, ch.hi);
      } else if (c.kind == ConstraintKind::D1delta) {
        std::vector<double> dev(n);
        for (std::size_t i = 0; i < n; ++i) dev[i] = (x[i] - c.anchor(g.lambda[i]))(k, k).real();
        sign_range(dev, ch.lo, ch.hi);
      }
      chs.push_back(std::move(ch));
    }
    if (c.variant == 4) {
      // Off-diagonal beta_ij gamma_ij with free phase, split into real and
      // imaginary parts bounded by their own multipliers.
      for (int a = 0; a < T; ++a) {
        for (int b = a + 1; b < T; ++b) {
          const CMatrix re = unit(T, a, b) + unit(T, b, a);
          const CMatrix im = cplx(0.0, 1.0) * (unit(T, a, b) - unit(T, b, a));
          std::vector<double> dre(n), dim(n);
          for (std::size_t i = 0; i < n; ++i) {
            const cplx d = (x[i] - c.anchor(g.lambda[i]))(a, b);
            dre[i] = d.real();
            dim[i] = d.imag();
          }
          const std::string ab = std::to_string(a + 1) + std::to_string(b + 1);
          Channel cr = make(prefix + "_" + ab + "_re", Rule::scaled, sandwich(g.Z, re));
          sign_range(dre, cr.lo, cr.hi);
          Channel ci = make(prefix + "_" + ab + "_im", Rule::scaled, sandwich(g.Z, im));
          sign_range(dim, ci.lo, ci.hi);
          chs.push_back(std::move(cr));
          chs.push_back(std::move(ci));
        }
      }
    }
    return chs;
  }
  // Variant 4 of the moment, band and epsilon classes: a rank-one global
  // term plus diagonal pointwise terms.
  for (int a = 0; a < T; ++a) {
    chs.push_back(make(prefix + "_" + std::to_string(a + 1) + std::to_string(a + 1), Rule::constant_free,
                       sandwich(g.Z, unit(T, a, a))));
    for (int b = a + 1; b < T; ++b) {
      const std::string ab = std::to_string(a + 1) + std::to_string(b + 1);
      chs.push_back(make(prefix + "_" + ab + "_re", Rule::constant_free,
                         sandwich(g.Z, unit(T, a, b) + unit(T, b, a))));
      chs.push_back(make(prefix + "_" + ab + "_im", Rule::constant_free,
                         sandwich(g.Z, cplx(0.0, 1.0) * (unit(T, a, b) - unit(T, b, a)))));
    }
  }
  if (pointwise_band) {
    for (int k = 0; k < T; ++k) {
      Channel ch = make("Gamma_" + std::to_string(k + 1), Rule::band, sandwich(g.Z, unit(T, k, k)));
      activity(c, k, g.lambda, x, ch.lo, ch.hi);
      // The global part lives in the rank-one term.
      ch.has_global = false;
      chs.push_back(std::move(ch));
    }
  }
  return chs;
}

/// Replaces the free Hermitian global term by its nearest rank-one PSD
/// matrix and refits the remaining terms.
void project_rank_one(std::vector<Channel>& chs, int T, const std::vector<CMatrix>& lhs) {
  CMatrix phi = CMatrix::Zero(T, T);
  std::size_t idx = 0;
  for (int a = 0; a < T; ++a) {
    phi(a, a) = chs[idx++].g;
    for (int b = a + 1; b < T; ++b) {
      const double re = chs[idx++].g;
      const double im = chs[idx++].g;
      phi(a, b) = cplx(re, im);
      phi(b, a) = cplx(re, -im);
    }
  }
  Eigen::SelfAdjointEigenSolver<CMatrix> es(phi);
  const double top = std::max(0.0, es.eigenvalues()(T - 1));
  const CVector v = es.eigenvectors().col(T - 1);
  const CMatrix r1 = top * v * v.adjoint();
  idx = 0;
  for (int a = 0; a < T; ++a) {
    chs[idx].g = r1(a, a).real();
    chs[idx++].frozen = true;
    for (int b = a + 1; b < T; ++b) {
      chs[idx].g = r1(a, b).real();
      chs[idx++].frozen = true;
      chs[idx].g = r1(a, b).imag();
      chs[idx++].frozen = true;
    }
  }
  fit_all(chs, lhs);
}

EquationResidual solve_equation(const ConstraintSet& c, int T, const Grid& g,
                                const std::vector<CMatrix>& x, const std::vector<CMatrix>& lhs,
                                const std::string& equation, const std::string& prefix) {
  std::vector<Channel> chs = channels_for(c, T, g, x, prefix);
  fit_all(chs, lhs);
  const bool rank_one = c.variant == 4 && c.kind != ConstraintKind::D1delta;
  if (rank_one) {
    project_rank_one(chs, T, lhs);
  }
  EquationResidual e;
  e.equation = equation;
  double lhs2 = 0.0;
  for (const CMatrix& m : lhs) lhs2 += m.squaredNorm();
  e.lhs_norm = std::sqrt(lhs2 / static_cast<double>(lhs.size()));
  e.residual = lhs2 > 0.0 ? std::sqrt(objective(chs, lhs) / lhs2) : 0.0;
  for (const Channel& ch : chs) {
    MultiplierFit m;
    m.name = ch.name;
    m.value = ch.g;
    if (ch.rule == Rule::band || ch.rule == Rule::scaled) m.pointwise = ch.gamma;
    e.multipliers.push_back(std::move(m));
  }
  return e;
}

EquationResidual l1_budget(const ConstraintSet& c, int T, const Grid& g, const std::vector<CMatrix>& x) {
  EquationResidual e;
  e.equation = "l1_budget";
  const std::size_t n = g.lambda.size();
  const CMatrix B = c.variant == 3 ? c.weight : CMatrix::Identity(T, T);
  Eigen::MatrixXd l1 = Eigen::MatrixXd::Zero(T, T);
  double scalar = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const CMatrix d = x[i] - c.anchor(g.lambda[i]);
    scalar += std::abs(inner(B, d));
    l1 += d.cwiseAbs();
  }
  scalar /= static_cast<double>(n);
  l1 /= static_cast<double>(n);
  auto rel = [](double v, double budget) { return std::abs(v - budget) / std::max(budget, 1e-300); };
  switch (c.variant) {
    case 1:
    case 3:
      e.residual = rel(scalar, c.delta);
      e.lhs_norm = scalar;
      break;
    case 2:
      for (int k = 0; k < T; ++k) e.residual = std::max(e.residual, rel(l1(k, k), c.deltas[k]));
      e.lhs_norm = l1.diagonal().sum();
      break;
    default:
      for (int a = 0; a < T; ++a)
        for (int b = 0; b < T; ++b)
          if (c.delta_matrix(a, b) > 0.0 || l1(a, b) > 0.0)
            e.residual = std::max(e.residual, rel(l1(a, b), c.delta_matrix(a, b)));
      e.lhs_norm = l1.sum();
      break;
  }
  return e;
}

}  // namespace

void check_supported(const DensityClass& cls) {
  if (cls.dim > 2)
    throw UnsupportedClass("characterization residuals are implemented for T <= 2, got T=" +
                           std::to_string(cls.dim));
  if (!cls.g) return;
  const ConstraintKind f = cls.f.kind;
  const ConstraintKind g = cls.g->kind;
  const bool paired = (f == ConstraintKind::D0 && g == ConstraintKind::DVU) ||
                      (f == ConstraintKind::Deps && g == ConstraintKind::D1delta);
  if (!paired || cls.f.variant != cls.g->variant)
    throw UnsupportedClass("no characterization equations for the pair " + kind_name(cls.f) +
                           " x " + kind_name(*cls.g));
}

ResidualReport characterization_residuals(const LeastFavorableResult& result,
                                          const DensityClass& cls,
                                          const FunctionalSpec& functional) {
  check_supported(cls);
  const Grid g = build_grid(result, functional);
  const int T = cls.dim;
  ResidualReport rep;
  rep.equations.push_back(solve_equation(cls.f, T, g, g.F, g.lhs_signal, "signal", "alpha"));
  if (cls.f.kind == ConstraintKind::D1delta) rep.equations.push_back(l1_budget(cls.f, T, g, g.F));
  if (cls.g) {
    rep.equations.push_back(solve_equation(*cls.g, T, g, g.G, g.lhs_noise, "noise", "beta"));
    if (cls.g->kind == ConstraintKind::D1delta) rep.equations.push_back(l1_budget(*cls.g, T, g, g.G));
  }
  return rep;
}

}  // namespace gapx
