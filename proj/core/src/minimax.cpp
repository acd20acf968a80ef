#include "gapx/minimax.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "gapx/errors.hpp"
#include "gapx/oracle_sim.hpp"

namespace gapx {

bool SaddleReport::all_pass() const noexcept { return violations() == 0; }

int SaddleReport::violations() const noexcept {
  return static_cast<int>(
      std::count_if(entries.begin(), entries.end(), [](const SaddleEntry& e) { return !e.pass; }));
}

double member_delta(const DensityClass& cls, const MissingPattern& pattern,
                    const FunctionalSpec& functional, std::span<const double> theta, int K) {
  return mean_square_error(member_model(cls, theta), pattern, functional, K);
}

LeastFavorableResult evaluate_member(const DensityClass& cls, const MissingPattern& pattern,
                                     const FunctionalSpec& functional,
                                     std::span<const double> theta, int K) {
  LeastFavorableResult r;
  r.theta_star.assign(theta.begin(), theta.end());
  r.model = member_model(cls, theta);
  r.F0 = r.model.F;
  r.G0 = r.model.G;
  r.estimate = spectral_characteristic(r.model, pattern, functional, K);
  r.delta_star = r.estimate.delta;
  return r;
}

namespace {

class Search {
 public:
  Search(const DensityClass& cls, const MissingPattern& pattern, const FunctionalSpec& functional,
         int K, int budget)
      : cls_(cls), pattern_(pattern), functional_(functional), K_(K), budget_(budget) {}

  /// -inf for members whose operators cannot be formed.
  double operator()(const std::vector<double>& theta) {
    const auto it = cache_.find(theta);
    if (it != cache_.end()) return it->second;
    if (exhausted()) return -std::numeric_limits<double>::infinity();
    double d;
    try {
      d = member_delta(cls_, pattern_, functional_, theta, K_);
    } catch (const NonInvertibleOperator&) {
      d = std::numeric_limits<double>::quiet_NaN();
    } catch (const SingularDensity&) {
      d = std::numeric_limits<double>::quiet_NaN();
    }
    evaluations_.push_back({theta, d});
    const double v = std::isnan(d) ? -std::numeric_limits<double>::infinity() : d;
    cache_.emplace(theta, v);
    return v;
  }

  bool exhausted() const noexcept { return static_cast<int>(evaluations_.size()) >= budget_; }
  int used() const noexcept { return static_cast<int>(evaluations_.size()); }
  std::vector<Evaluation>& evaluations() { return evaluations_; }

 private:
  const DensityClass& cls_;
  const MissingPattern& pattern_;
  const FunctionalSpec& functional_;
  int K_;
  int budget_;
  std::map<std::vector<double>, double> cache_;
  std::vector<Evaluation> evaluations_;
};

struct Point {
  std::vector<double> x;
  double f = -std::numeric_limits<double>::infinity();
};

Point compass(Search& eval, Point p, const std::vector<double>& lo, const std::vector<double>& hi,
              double step, double stop, int cap) {
  const std::size_t d = p.x.size();
  const int start = eval.used();
  while (step >= stop && eval.used() - start < cap && !eval.exhausted()) {
    bool improved = false;
    for (std::size_t i = 0; i < d && !improved; ++i) {
      const double w = hi[i] - lo[i];
      for (double sign : {1.0, -1.0}) {
        std::vector<double> y = p.x;
        y[i] = std::clamp(p.x[i] + sign * step * w, lo[i], hi[i]);
        if (y[i] == p.x[i]) continue;
        const double fy = eval(y);
        if (fy > p.f) {
          p.x = std::move(y);
          p.f = fy;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return p;
}

}  // namespace

std::vector<std::vector<double>> sample_parameters(const DensityClass& cls, int n,
                                                   std::uint64_t seed) {
  const auto [lo, hi] = family_bounds(cls);
  std::vector<std::vector<double>> out;
  for (int i = 0; i < n; ++i) {
    CounterRng rng(seed, static_cast<std::uint64_t>(i));
    std::vector<double> x(lo.size());
    if (cls.family.discrete()) {
      std::uniform_int_distribution<int> pick(0, static_cast<int>(cls.family.members.size()) - 1);
      x[0] = pick(rng);
    } else {
      for (std::size_t k = 0; k < lo.size(); ++k)
        x[k] = std::uniform_real_distribution<double>(lo[k], hi[k])(rng);
    }
    out.push_back(std::move(x));
  }
  return out;
}

LeastFavorableResult maximize_delta(const DensityClass& cls, const MissingPattern& pattern,
                                    const FunctionalSpec& functional, const OptConfig& opt) {
  validate_class(cls);
  if (opt.starts < 1 || opt.budget < 1) throw InvalidParameter("optimizer needs starts and budget >= 1");
  const auto [lo, hi] = family_bounds(cls);
  Search eval(cls, pattern, functional, opt.truncation,
              cls.family.discrete() ? static_cast<int>(cls.family.members.size()) : opt.budget);

  Point best;
  if (cls.family.discrete()) {
    for (std::size_t i = 0; i < cls.family.members.size(); ++i) {
      const std::vector<double> x{static_cast<double>(i)};
      const double f = eval(x);
      if (f > best.f) best = {x, f};
    }
  } else if (lo.empty()) {
    best = {{}, eval({})};
  } else {
    std::vector<std::vector<double>> starts;
    std::vector<double> centre(lo.size());
    for (std::size_t k = 0; k < lo.size(); ++k) centre[k] = 0.5 * (lo[k] + hi[k]);
    starts.push_back(centre);
    for (auto& x : sample_parameters(cls, opt.starts - 1, opt.seed)) starts.push_back(std::move(x));

    const int coarse_cap = std::max(1, opt.budget / 2 / opt.starts);
    for (const auto& x : starts) {
      Point p{x, eval(x)};
      p = compass(eval, p, lo, hi, 0.25, 1e-3, coarse_cap);
      if (p.f > best.f) best = p;
      if (eval.exhausted()) break;
    }
    best = compass(eval, best, lo, hi, 1e-3, opt.step_tol, opt.budget);
  }
  if (!std::isfinite(best.f))
    throw InfeasibleClass("no family member admits a well-posed estimation problem");

  LeastFavorableResult r = evaluate_member(cls, pattern, functional, best.x, opt.truncation);
  r.evaluations = std::move(eval.evaluations());
  if (!cls.family.discrete()) {
    for (std::size_t k = 0; k < lo.size(); ++k) {
      const double margin = 1e-6 * (hi[k] - lo[k]);
      if (best.x[k] <= lo[k] + margin || best.x[k] >= hi[k] - margin) r.at_boundary = true;
    }
  }
  return r;
}

SaddleReport verify_saddle_point(const LeastFavorableResult& result, const DensityClass& cls,
                                 const FunctionalSpec& functional, int n_samples, double tol,
                                 std::uint64_t seed) {
  SaddleReport rep;
  rep.tol = tol;
  const std::vector<CVector>& h0 = result.estimate.h_grid;
  rep.reference = error_for_characteristic(GridSamples::sample(result.model), functional, h0);
  const double bound = rep.reference + tol * std::max(1.0, rep.reference);
  for (const auto& theta : sample_parameters(cls, n_samples, seed)) {
    SpectralModel m = member_model(cls, theta);
    m.grid_size = result.model.grid_size;
    SaddleEntry e;
    e.theta = theta;
    e.delta = error_for_characteristic(GridSamples::sample(m), functional, h0);
    e.pass = e.delta <= bound;
    rep.entries.push_back(std::move(e));
  }
  return rep;
}

}  // namespace gapx
