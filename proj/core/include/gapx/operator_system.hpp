#pragma once

#include <span>
#include <utility>
#include <vector>

#include "gapx/spectral_model.hpp"

namespace gapx {

/// Gap set S as a union of intervals {-M-N, ..., -M}, M >= 1, N >= 0.
class MissingPattern {
 public:
  struct Interval {
    int M = 1;
    int N = 0;
    int first() const noexcept { return -M - N; }
    int last() const noexcept { return -M; }
    bool operator==(const Interval&) const = default;
  };

  MissingPattern() = default;
  /// Validates and sorts by first point. Throws InvalidPattern on overlap
  /// or when an interval leaves the strictly negative integers.
  explicit MissingPattern(std::vector<Interval> intervals);
  /// Groups arbitrary negative integers into maximal runs.
  static MissingPattern from_points(std::vector<int> points);

  const std::vector<Interval>& intervals() const noexcept { return intervals_; }
  /// Gap points in ascending order.
  std::vector<int> points() const;
  int size() const noexcept;
  bool empty() const noexcept { return intervals_.empty(); }
  bool contains(int j) const noexcept;
  /// Largest M + N, 0 for the empty pattern.
  int extent() const noexcept;

  bool operator==(const MissingPattern&) const = default;

 private:
  std::vector<Interval> intervals_;
};

/// Ordered index set U_K = S u {0..K}: gap points first (ascending), then
/// 0..K. Each index owns a block of dim scalar positions.
class IndexMap {
 public:
  IndexMap() = default;
  IndexMap(std::vector<int> entries, int K, int dim);

  const std::vector<int>& entries() const noexcept { return entries_; }
  int K() const noexcept { return K_; }
  int dim() const noexcept { return dim_; }
  int blocks() const noexcept { return static_cast<int>(entries_.size()); }
  int scalar_size() const noexcept { return blocks() * dim_; }
  /// Number of leading gap blocks.
  int gap_blocks() const noexcept { return gap_blocks_; }

  /// (sequence index j, coordinate k in 0..dim-1) of a scalar position.
  std::pair<int, int> block_of(int position) const;
  /// Block position of sequence index j, or -1 when j is not in U_K.
  int position_of(int j) const noexcept;
  /// Largest |j_p - j_q| over the index set.
  int span() const noexcept;

 private:
  std::vector<int> entries_;
  int K_ = 0;
  int dim_ = 1;
  int gap_blocks_ = 0;
};

IndexMap build_index_map(const MissingPattern& pattern, int K, int dim);

/// Literal block layout: block (p, q) of the result is table(j_p - j_q).
CMatrix assemble(const FourierTable& table, const IndexMap& index_map);

/// Coefficient tables that define the compound operators:
///   B ~ F_zeta^{-1},  R ~ (F + F_xe) F_zeta^{-1},
///   Q ~ F - (F + F_xe) F_zeta^{-1} (F + F_ex).
struct OperatorTables {
  FourierTable B;
  FourierTable R;
  FourierTable Q;
  bool noiseless = false;
};

OperatorTables operator_tables(const GridSamples& samples, int max_lag, bool noiseless);

/// Compound matrices on U_K. In column-vector form the normal equations
/// read Bmat c = Rmat a with block (p, q) equal to the lag-(j_p - j_q)
/// coefficient transposed; for real even densities this is the plain
/// Toeplitz layout.
struct OperatorSystem {
  CMatrix Bmat;
  CMatrix Rmat;
  CMatrix Qmat;
  IndexMap index_map;
  double cond_B = 0.0;
  bool noiseless = false;
};

OperatorSystem build_operator_system(const OperatorTables& tables, const IndexMap& index_map);

struct CoefficientSolution {
  CVector c;
  /// ||Bmat c - rhs|| / ||rhs|| (0 when rhs vanishes).
  double residual = 0.0;
  CVector rhs;
};

/// Solves Bmat c = Rmat a (noiseless: Bmat c = a) by Cholesky with two
/// steps of iterative refinement. Throws NonInvertibleOperator when cond_B
/// exceeds the ceiling or the factorization fails.
CoefficientSolution solve_coefficients(const OperatorSystem& sys, const CVector& a_vec,
                                       double condition_ceiling = kDefaultConditionCeiling);

/// Layout vector (0, ..., 0, a(0), ..., a(N), 0, ...) over the index map.
CVector layout_vector(const IndexMap& index_map, std::span<const CVector> a);

/// Closed-form factors of the two-component AR(1) example:
///   psi(0) = [[1, 1], [0, -1]], psi(1) = [[-b1, -b2], [0, b2]],
///   theta(j) = [[b1^j, b1^j], [0, -b2^j]].
CMatrix ar1_pair_psi(double b1, double b2, int j);
CMatrix ar1_pair_theta(double b1, double b2, int j);

/// sum_{l=0}^{min(i,j)} theta(i-l)^* theta(j-l): entry (i, j) of the inverse
/// of the semi-infinite Toeplitz block for the AR(1) pair.
CMatrix factorized_inverse_check(double b1, double b2, int i, int j);

}  // namespace gapx
