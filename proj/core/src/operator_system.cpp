#include "gapx/operator_system.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "gapx/errors.hpp"

namespace gapx {

MissingPattern::MissingPattern(std::vector<Interval> intervals)
    : intervals_(std::move(intervals)) {
  for (const Interval& iv : intervals_) {
    if (iv.M < 1 || iv.N < 0) {
      std::ostringstream os;
      os << "gap interval (M=" << iv.M << ", N=" << iv.N
         << ") must satisfy M >= 1 and N >= 0";
      throw InvalidPattern(os.str());
    }
  }
  std::sort(intervals_.begin(), intervals_.end(),
            [](const Interval& a, const Interval& b) { return a.first() < b.first(); });
  for (std::size_t i = 1; i < intervals_.size(); ++i) {
    if (intervals_[i].first() <= intervals_[i - 1].last()) {
      std::ostringstream os;
      os << "gap intervals [" << intervals_[i - 1].first() << ", " << intervals_[i - 1].last()
         << "] and [" << intervals_[i].first() << ", " << intervals_[i].last() << "] overlap";
      throw InvalidPattern(os.str());
    }
  }
}

MissingPattern MissingPattern::from_points(std::vector<int> points) {
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  std::vector<Interval> out;
  std::size_t i = 0;
  while (i < points.size()) {
    if (points[i] >= 0)
      throw InvalidPattern("gap point " + std::to_string(points[i]) +
                           " is not strictly negative");
    std::size_t j = i;
    while (j + 1 < points.size() && points[j + 1] == points[j] + 1) ++j;
    const int first = points[i];
    const int last = points[j];
    if (last >= 0)
      throw InvalidPattern("gap point " + std::to_string(last) + " is not strictly negative");
    out.push_back(Interval{-last, last - first});
    i = j + 1;
  }
  return MissingPattern(std::move(out));
}

std::vector<int> MissingPattern::points() const {
  std::vector<int> pts;
  for (const Interval& iv : intervals_)
    for (int j = iv.first(); j <= iv.last(); ++j) pts.push_back(j);
  return pts;
}

int MissingPattern::size() const noexcept {
  int n = 0;
  for (const Interval& iv : intervals_) n += iv.N + 1;
  return n;
}

bool MissingPattern::contains(int j) const noexcept {
  for (const Interval& iv : intervals_)
    if (j >= iv.first() && j <= iv.last()) return true;
  return false;
}

int MissingPattern::extent() const noexcept {
  int e = 0;
  for (const Interval& iv : intervals_) e = std::max(e, iv.M + iv.N);
  return e;
}

IndexMap::IndexMap(std::vector<int> entries, int K, int dim)
    : entries_(std::move(entries)), K_(K), dim_(dim) {
  gap_blocks_ = static_cast<int>(
      std::count_if(entries_.begin(), entries_.end(), [](int j) { return j < 0; }));
}

std::pair<int, int> IndexMap::block_of(int position) const {
  if (position < 0 || position >= scalar_size())
    throw InvalidParameter("index map position out of range");
  return {entries_[static_cast<std::size_t>(position / dim_)], position % dim_};
}

int IndexMap::position_of(int j) const noexcept {
  const auto it = std::find(entries_.begin(), entries_.end(), j);
  return it == entries_.end() ? -1 : static_cast<int>(it - entries_.begin());
}

int IndexMap::span() const noexcept {
  if (entries_.empty()) return 0;
  const auto [lo, hi] = std::minmax_element(entries_.begin(), entries_.end());
  return *hi - *lo;
}

IndexMap build_index_map(const MissingPattern& pattern, int K, int dim) {
  if (K < 0) throw InvalidParameter("truncation K must be nonnegative");
  if (dim < 1) throw InvalidParameter("dimension must be positive");
  std::vector<int> entries = pattern.points();
  for (int j = 0; j <= K; ++j) entries.push_back(j);
  return IndexMap(std::move(entries), K, dim);
}

CMatrix assemble(const FourierTable& table, const IndexMap& index_map) {
  const int d = index_map.dim();
  if (table.dim() != d) throw InvalidParameter("Fourier table dimension does not match index map");
  const auto& e = index_map.entries();
  const int nb = index_map.blocks();
  CMatrix out(index_map.scalar_size(), index_map.scalar_size());
  for (int p = 0; p < nb; ++p)
    for (int q = 0; q < nb; ++q)
      out.block(p * d, q * d, d, d) = table(e[static_cast<std::size_t>(p)] -
                                            e[static_cast<std::size_t>(q)]);
  return out;
}

namespace {

CMatrix hermitian_inverse(const CMatrix& m, double lambda) {
  Eigen::LLT<CMatrix> llt(0.5 * (m + m.adjoint()));
  if (llt.info() != Eigen::Success)
    throw SingularDensity("F_zeta is not positive definite at lambda=" + std::to_string(lambda),
                          lambda);
  CMatrix inv = llt.solve(CMatrix::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.adjoint());
}

}  // namespace

OperatorTables operator_tables(const GridSamples& samples, int max_lag, bool noiseless) {
  const int n = samples.size();
  const int dim = static_cast<int>(samples.F.front().rows());
  std::vector<CMatrix> b(static_cast<std::size_t>(n));
  std::vector<CMatrix> r;
  std::vector<CMatrix> q;
  if (!noiseless) {
    r.resize(static_cast<std::size_t>(n));
    q.resize(static_cast<std::size_t>(n));
  }
  for (int m = 0; m < n; ++m) {
    const CMatrix zinv = hermitian_inverse(samples.observed[m], samples.lambda[m]);
    b[m] = zinv;
    if (!noiseless) {
      const CMatrix p = samples.F[m] + samples.Fxe[m];
      const CMatrix p_adj = samples.F[m] + samples.Fex[m];
      r[m] = p * zinv;
      q[m] = samples.F[m] - p * zinv * p_adj;
    }
  }
  OperatorTables t;
  t.noiseless = noiseless;
  t.B = fourier_coeffs(b, max_lag);
  if (noiseless) {
    t.R = FourierTable(dim, max_lag);
    t.R.at(0) = CMatrix::Identity(dim, dim);
    t.Q = FourierTable(dim, max_lag);
  } else {
    t.R = fourier_coeffs(r, max_lag);
    t.Q = fourier_coeffs(q, max_lag);
  }
  return t;
}

OperatorSystem build_operator_system(const OperatorTables& tables, const IndexMap& index_map) {
  if (tables.B.max_lag() < index_map.span())
    throw InsufficientLag("operator tables cover lags up to " +
                              std::to_string(tables.B.max_lag()) + ", index set needs " +
                              std::to_string(index_map.span()),
                          index_map.span());
  OperatorSystem sys;
  sys.index_map = index_map;
  sys.noiseless = tables.noiseless;
  sys.Bmat = assemble(tables.B.transposed(), index_map);
  sys.Rmat = assemble(tables.R.transposed(), index_map);
  sys.Qmat = assemble(tables.Q.transposed(), index_map);
  const CMatrix h = 0.5 * (sys.Bmat + sys.Bmat.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  sys.cond_B = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  return sys;
}

CoefficientSolution solve_coefficients(const OperatorSystem& sys, const CVector& a_vec,
                                       double condition_ceiling) {
  if (a_vec.size() != sys.Bmat.rows())
    throw InvalidParameter("layout vector length does not match operator size");
  if (!(sys.cond_B <= condition_ceiling)) {
    std::ostringstream os;
    os << "operator B is not invertible within the condition ceiling (cond_B=" << sys.cond_B
       << ", ceiling=" << condition_ceiling << ")";
    throw NonInvertibleOperator(os.str(), sys.cond_B);
  }
  CoefficientSolution sol;
  sol.rhs = sys.noiseless ? a_vec : CVector(sys.Rmat * a_vec);
  Eigen::LLT<CMatrix> llt(sys.Bmat);
  if (llt.info() != Eigen::Success)
    throw NonInvertibleOperator("Cholesky factorization of operator B failed", sys.cond_B);
  sol.c = llt.solve(sol.rhs);
  for (int it = 0; it < 2; ++it) {
    const CVector r = sol.rhs - sys.Bmat * sol.c;
    sol.c += llt.solve(r);
  }
  const double rn = sol.rhs.norm();
  sol.residual = rn > 0.0 ? (sys.Bmat * sol.c - sol.rhs).norm() / rn : 0.0;
  return sol;
}

CVector layout_vector(const IndexMap& index_map, std::span<const CVector> a) {
  const int d = index_map.dim();
  CVector v = CVector::Zero(index_map.scalar_size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    if (a[j].size() != d) throw InvalidParameter("functional coefficient has wrong dimension");
    const int p = index_map.position_of(static_cast<int>(j));
    if (p < 0) {
      if (a[j].norm() == 0.0) continue;
      throw InvalidParameter("functional horizon exceeds truncation K");
    }
    v.segment(p * d, d) = a[j];
  }
  return v;
}

CMatrix ar1_pair_psi(double b1, double b2, int j) {
  CMatrix out = CMatrix::Zero(2, 2);
  if (j == 0) {
    out << 1.0, 1.0, 0.0, -1.0;
  } else if (j == 1) {
    out << -b1, -b2, 0.0, b2;
  }
  return out;
}

CMatrix ar1_pair_theta(double b1, double b2, int j) {
  CMatrix out = CMatrix::Zero(2, 2);
  if (j < 0) return out;
  const double p1 = std::pow(b1, j);
  const double p2 = std::pow(b2, j);
  out << p1, p1, 0.0, -p2;
  return out;
}

CMatrix factorized_inverse_check(double b1, double b2, int i, int j) {
  if (!(std::abs(b1) < 1.0) || !(std::abs(b2) < 1.0))
    throw InvalidParameter("AR(1) pair parameters must lie in (-1, 1)");
  if (i < 0 || j < 0) throw InvalidParameter("factorized inverse indices must be nonnegative");
  CMatrix out = CMatrix::Zero(2, 2);
  for (int l = 0; l <= std::min(i, j); ++l)
    out += ar1_pair_theta(b1, b2, i - l).adjoint() * ar1_pair_theta(b1, b2, j - l);
  return out;
}

}  // namespace gapx
