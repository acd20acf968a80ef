#include "gapx/extrapolator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gapx/errors.hpp"

namespace gapx {

bool FunctionalSpec::is_zero() const noexcept {
  return std::all_of(a.begin(), a.end(), [](const CVector& v) { return v.norm() == 0.0; });
}

std::string to_string(Variant v) {
  switch (v) {
    case Variant::general: return "general";
    case Variant::uncorrelated: return "uncorrelated";
    case Variant::noiseless: return "noiseless";
    case Variant::finite_horizon: return "finite-horizon";
  }
  return "unknown";
}

Variant select_variant(const SpectralModel& model, const FunctionalSpec& functional) {
  if (!model.uncorrelated()) return Variant::general;
  if (model.G.is_zero()) return Variant::noiseless;
  return functional.finite_horizon ? Variant::finite_horizon : Variant::uncorrelated;
}

int default_truncation(const SpectralModel& model, const FunctionalSpec& functional) {
  const int N = std::max(0, functional.horizon());
  const auto rho = model.pole_radius();
  if (!rho) return std::max(32, N + 64);
  const double inv = 1.0 / (1.0 - *rho);
  const int factor = std::max(1, static_cast<int>(std::ceil(inv - 1e-9)));
  return std::max(32, N + 8 * factor);
}

CVector TapSet::at(int j) const {
  for (std::size_t i = 0; i < lags.size(); ++i)
    if (lags[i] == j) return taps[i];
  const Eigen::Index d = taps.empty() ? 0 : taps.front().size();
  return CVector::Zero(d);
}

CVector transfer(const FunctionalSpec& functional, double lambda) {
  CVector s = CVector::Zero(functional.dim());
  for (std::size_t j = 0; j < functional.a.size(); ++j)
    s += functional.a[j] * std::polar(1.0, static_cast<double>(j) * lambda);
  return s;
}

namespace {

void check_inputs(const SpectralModel& model, const FunctionalSpec& functional) {
  if (functional.a.empty()) throw InvalidParameter("functional has no coefficients");
  if (functional.dim() != model.dim)
    throw InvalidParameter("functional dimension " + std::to_string(functional.dim()) +
                           " does not match model dimension " + std::to_string(model.dim));
  for (const CVector& v : functional.a)
    if (v.size() != model.dim) throw InvalidParameter("functional coefficients have mixed dimensions");
}

struct Solved {
  OperatorSystem sys;
  CoefficientSolution sol;
  CVector a_vec;
  double delta = 0.0;
};

Solved solve_at(const GridSamples& samples, const MissingPattern& pattern,
                const FunctionalSpec& functional, int K, bool noiseless, double ceiling) {
  if (K < functional.horizon())
    throw InvalidParameter("truncation K=" + std::to_string(K) +
                           " is below the functional horizon N=" +
                           std::to_string(functional.horizon()));
  Solved s;
  const IndexMap map = build_index_map(pattern, K, functional.dim());
  const OperatorTables tables = operator_tables(samples, map.span(), noiseless);
  s.sys = build_operator_system(tables, map);
  s.a_vec = layout_vector(map, functional.a);
  s.sol = solve_coefficients(s.sys, s.a_vec, ceiling);
  if (noiseless) {
    s.delta = s.a_vec.dot(s.sol.c).real();
  } else {
    s.delta = s.sol.rhs.dot(s.sol.c).real() + s.a_vec.dot(s.sys.Qmat * s.a_vec).real();
  }
  if (s.delta < -1e-8) {
    std::ostringstream os;
    os << "negative mean-square error " << s.delta << " from the operator form";
    throw InternalConsistency(os.str());
  }
  return s;
}

std::vector<CVector> characteristic_on_grid(const GridSamples& samples,
                                            const FunctionalSpec& functional,
                                            const IndexMap& map, const CVector& c) {
  const int d = map.dim();
  const auto& entries = map.entries();
  std::vector<CVector> h(static_cast<std::size_t>(samples.size()));
  for (int m = 0; m < samples.size(); ++m) {
    const double l = samples.lambda[m];
    CVector C = CVector::Zero(d);
    for (std::size_t p = 0; p < entries.size(); ++p)
      C += c.segment(static_cast<Eigen::Index>(p) * d, d) *
           std::polar(1.0, entries[p] * l);
    const CVector A = transfer(functional, l);
    const CMatrix P = samples.F[m] + samples.Fxe[m];
    // h = F_zeta^{-T} (P^T A - C)
    const CMatrix zt = samples.observed[m].transpose();
    h[m] = Eigen::LLT<CMatrix>(0.5 * (zt + zt.adjoint())).solve(P.transpose() * A - C);
  }
  return h;
}

void check_model(const SpectralModel& model, double ceiling) {
  model.validate();
  const MinimalityReport rep = check_minimality(model, ceiling);
  if (!rep.pass)
    throw NonInvertibleOperator("minimality condition fails: " + rep.message,
                                rep.max_condition);
}

int truncation_cap(const SpectralModel& model, const MissingPattern& pattern,
                   const SolverOptions& options) {
  return std::min(options.max_truncation, model.grid_size / 4 - pattern.extent());
}

}  // namespace

double error_for_characteristic(const GridSamples& samples, const FunctionalSpec& functional,
                                const std::vector<CVector>& h_grid) {
  double sum = 0.0;
  for (int m = 0; m < samples.size(); ++m) {
    const CVector A = transfer(functional, samples.lambda[m]);
    const CVector& h = h_grid[static_cast<std::size_t>(m)];
    const CVector u = A - h;
    cplx v = (u.transpose() * samples.F[m] * u.conjugate())(0, 0);
    v += (h.transpose() * samples.G[m] * h.conjugate())(0, 0);
    v -= (u.transpose() * samples.Fxe[m] * h.conjugate())(0, 0);
    v -= (h.transpose() * samples.Fex[m] * u.conjugate())(0, 0);
    sum += v.real();
  }
  return sum / static_cast<double>(samples.size());
}

std::vector<CVector> h_coefficients(const EstimateResult& result, int max_lag) {
  return fourier_coeffs_vector(result.h_grid, max_lag);
}

EstimateResult spectral_characteristic(const SpectralModel& model, const MissingPattern& pattern,
                                       const FunctionalSpec& functional, int K) {
  check_inputs(model, functional);
  check_model(model, kDefaultConditionCeiling);
  const GridSamples samples = GridSamples::sample(model);
  const Solved s = solve_at(samples, pattern, functional, K, model.noiseless(),
                            kDefaultConditionCeiling);
  EstimateResult r;
  r.variant = select_variant(model, functional);
  r.index_map = s.sys.index_map;
  for (int p = 0; p < r.index_map.blocks(); ++p)
    r.c.push_back(s.sol.c.segment(p * model.dim, model.dim));
  r.lambda = samples.lambda;
  r.h_grid = characteristic_on_grid(samples, functional, r.index_map, s.sol.c);
  r.delta = s.delta;
  r.delta_quadrature = error_for_characteristic(samples, functional, r.h_grid);
  r.diagnostics.truncation = K;
  r.diagnostics.grid_size = model.grid_size;
  r.diagnostics.cond_B = s.sys.cond_B;
  r.diagnostics.solve_residual = s.sol.residual;
  return r;
}

double mean_square_error(const SpectralModel& model, const MissingPattern& pattern,
                         const FunctionalSpec& functional, int K) {
  check_inputs(model, functional);
  check_model(model, kDefaultConditionCeiling);
  const GridSamples samples = GridSamples::sample(model);
  return solve_at(samples, pattern, functional, K, model.noiseless(), kDefaultConditionCeiling)
      .delta;
}

TapSet filter_taps(const EstimateResult& result, int obs_window, const MissingPattern& pattern) {
  const int n = static_cast<int>(result.h_grid.size());
  const int max_lag = n / 4;
  if (obs_window > max_lag)
    throw InvalidParameter("tap window " + std::to_string(obs_window) +
                           " exceeds grid resolution limit " + std::to_string(max_lag));
  const auto coeff = fourier_coeffs_vector(result.h_grid, max_lag);
  TapSet taps;
  for (int j = -obs_window; j <= -1; ++j) {
    if (pattern.contains(j)) continue;
    taps.lags.push_back(j);
    taps.taps.push_back(coeff[static_cast<std::size_t>(j + max_lag)]);
  }
  for (int j = -max_lag; j < -obs_window; ++j)
    if (!pattern.contains(j))
      taps.tail_mass += coeff[static_cast<std::size_t>(j + max_lag)].squaredNorm();
  return taps;
}

EstimateResult estimate(const SpectralModel& model, const MissingPattern& pattern,
                        const FunctionalSpec& functional, const SolverOptions& options) {
  check_inputs(model, functional);
  check_model(model, options.condition_ceiling);
  const GridSamples samples = GridSamples::sample(model);
  const bool noiseless = model.noiseless();
  const int cap = truncation_cap(model, pattern, options);

  int K = options.truncation > 0 ? options.truncation : default_truncation(model, functional);
  K = std::max(K, functional.horizon());
  if (K > cap)
    throw InvalidParameter("truncation K=" + std::to_string(K) + " needs a grid of at least " +
                           std::to_string(4 * (K + pattern.extent())) + " nodes");

  Solved s = solve_at(samples, pattern, functional, K, noiseless, options.condition_ceiling);
  double change = -1.0;
  auto rel = [](double a, double b) {
    const double scale = std::max(std::abs(b), 1e-300);
    return a == b ? 0.0 : std::abs(a - b) / scale;
  };
  if (options.truncation > 0) {
    if (2 * K <= cap) {
      const Solved s2 =
          solve_at(samples, pattern, functional, 2 * K, noiseless, options.condition_ceiling);
      change = rel(s2.delta, s.delta);
    }
  } else {
    while (2 * K <= cap) {
      Solved s2 =
          solve_at(samples, pattern, functional, 2 * K, noiseless, options.condition_ceiling);
      change = rel(s2.delta, s.delta);
      K *= 2;
      s = std::move(s2);
      if (change <= options.tol) break;
    }
  }

  EstimateResult r;
  r.variant = select_variant(model, functional);
  r.index_map = s.sys.index_map;
  for (int p = 0; p < r.index_map.blocks(); ++p)
    r.c.push_back(s.sol.c.segment(p * model.dim, model.dim));
  r.lambda = samples.lambda;
  r.h_grid = characteristic_on_grid(samples, functional, r.index_map, s.sol.c);
  r.delta = s.delta;
  r.delta_quadrature = error_for_characteristic(samples, functional, r.h_grid);

  Diagnostics& d = r.diagnostics;
  d.truncation = K;
  d.grid_size = model.grid_size;
  d.cond_B = s.sys.cond_B;
  d.solve_residual = s.sol.residual;
  d.truncation_change = change;
  d.delta_discrepancy = rel(r.delta_quadrature, r.delta);
  if (r.delta < 1e-14 && std::abs(r.delta_quadrature) < 1e-14) d.delta_discrepancy = 0.0;

  const int max_lag = model.grid_size / 4;
  d.obs_window = options.obs_window > 0 ? options.obs_window : std::min(4 * K, max_lag);
  r.taps = filter_taps(r, d.obs_window, pattern);
  d.tap_tail_mass = r.taps.tail_mass;

  const auto hc = fourier_coeffs_vector(r.h_grid, max_lag);
  for (int j : r.index_map.entries())
    if (std::abs(j) <= max_lag)
      d.gap_constraint = std::max(d.gap_constraint, hc[static_cast<std::size_t>(j + max_lag)].norm());

  // Orthogonality: P^T A - F_zeta^T h must vanish at observed indices.
  std::vector<CVector> g(r.h_grid.size());
  for (int m = 0; m < samples.size(); ++m) {
    const CVector A = transfer(functional, samples.lambda[m]);
    const CMatrix P = samples.F[m] + samples.Fxe[m];
    g[m] = P.transpose() * A - samples.observed[m].transpose() * r.h_grid[m];
  }
  const auto gc = fourier_coeffs_vector(g, max_lag);
  for (int j = -d.obs_window; j <= -1; ++j)
    if (!pattern.contains(j))
      d.orthogonality = std::max(d.orthogonality, gc[static_cast<std::size_t>(j + max_lag)].norm());

  if (r.delta_quadrature < -1e-8) {
    std::ostringstream os;
    os << "negative mean-square error " << r.delta_quadrature << " from quadrature";
    throw InternalConsistency(os.str());
  }
  return r;
}

}  // namespace gapx
