#include <algorithm>
#include <cmath>
#include <tuple>

#include <gtest/gtest.h>

#include "gapx/characterization.hpp"
#include "gapx/densities.hpp"
#include "gapx/errors.hpp"
#include "gapx/minimax.hpp"

using namespace gapx;

namespace {

FunctionalSpec ones(int T, int N) {
  FunctionalSpec f;
  f.a.assign(static_cast<std::size_t>(N + 1), CVector::Ones(T));
  return f;
}

CMatrix scaled_identity(int T, double s) { return CMatrix::Identity(T, T) * s; }

CMatrix weight(int T) {
  if (T == 1) return CMatrix::Constant(1, 1, 2.0);
  CMatrix b(2, 2);
  b << 2.0, 0.3, 0.3, 1.0;
  return b;
}

MatrixDensity smooth_anchor(int T) {
  CMatrix phi = CMatrix::Zero(T, T);
  for (int k = 0; k < T; ++k) phi(k, k) = 0.4 - 0.3 * k;
  return var1_density(phi, CMatrix::Identity(T, T));
}

/// Feasible constraint data of the given kind and variant.
ConstraintSet make_constraint(ConstraintKind kind, int variant, int T) {
  ConstraintSet c;
  c.kind = kind;
  c.variant = variant;
  c.weight = weight(T);
  const double trB = c.weight.trace().real();
  switch (kind) {
    case ConstraintKind::D0:
      c.level = variant == 3 ? 1.5 * trB : 1.5 * T;
      c.levels.assign(T, 1.5);
      c.moment = scaled_identity(T, 1.0);
      if (T == 2) c.moment(0, 1) = c.moment(1, 0) = 0.2;
      break;
    case ConstraintKind::DVU:
      c.lower = white_density(scaled_identity(T, 0.5));
      c.upper = white_density(scaled_identity(T, 3.0));
      c.level = variant == 3 ? 1.5 * trB : 1.5 * T;
      c.levels.assign(T, 1.5);
      c.moment = scaled_identity(T, 1.5);
      break;
    case ConstraintKind::Deps:
      c.anchor = white_density(CMatrix::Identity(T, T));
      c.eps = 0.2;
      c.level = variant == 3 ? 2.0 * trB : 2.0 * T;
      c.levels.assign(T, 2.0);
      c.moment = scaled_identity(T, 2.0);
      break;
    case ConstraintKind::D1delta:
      c.anchor = smooth_anchor(T);
      c.delta = 0.3;
      c.deltas = std::vector<double>{0.2, 0.3};
      c.deltas.resize(T);
      c.delta_matrix = Eigen::MatrixXd::Constant(T, T, 0.25);
      break;
  }
  return c;
}

DensityClass single_constraint_class(ConstraintKind kind, int variant, int T) {
  DensityClass cls;
  cls.dim = T;
  cls.f = make_constraint(kind, variant, T);
  cls.family.f_shape = {ShapeKind::cepstral, 2, -1.0, 1.0};
  cls.grid_size = 256;
  return cls;
}

/// Scalar noiseless D0_1 class with p = 1 and a two-parameter MA family.
DensityClass d0_class() {
  DensityClass cls;
  cls.dim = 1;
  cls.f.kind = ConstraintKind::D0;
  cls.f.variant = 1;
  cls.f.level = 1.0;
  cls.family.f_shape = {ShapeKind::ma, 2, -0.9, 0.9};
  return cls;
}

SpectralModel scalar_model(const MatrixDensity& F) {
  SpectralModel m;
  m.dim = 1;
  m.F = F;
  m.G = MatrixDensity::zero(1);
  m.Fxe = MatrixDensity::zero(1);
  m.Fex = MatrixDensity::zero(1);
  return m;
}

DensityClass discrete_class(std::vector<DensityPair> members) {
  DensityClass cls;
  cls.dim = 1;
  cls.family.members = std::move(members);
  return cls;
}

}  // namespace

class FamilyMembers : public ::testing::TestWithParam<std::tuple<ConstraintKind, int, int>> {};

TEST_P(FamilyMembers, SatisfyTheirConstraints) {
  const auto [kind, variant, T] = GetParam();
  const DensityClass cls = single_constraint_class(kind, variant, T);
  validate_class(cls);
  for (const auto& theta : sample_parameters(cls, 10, 3)) {
    const DensityPair p = family_member(cls, theta);
    EXPECT_LE(constraint_violation(cls.f, p.F, T, cls.grid_size), 1e-8) << kind_name(cls.f) << " T=" << T;
  }
}

INSTANTIATE_TEST_SUITE_P(
    AllKinds, FamilyMembers,
    ::testing::Combine(::testing::Values(ConstraintKind::D0, ConstraintKind::DVU, ConstraintKind::Deps,
                                         ConstraintKind::D1delta),
                       ::testing::Values(1, 2, 3, 4), ::testing::Values(1, 2)));

TEST(FamilyMembers, NoiseConstraintInTheSecondBlock) {
  DensityClass cls = single_constraint_class(ConstraintKind::D0, 2, 2);
  cls.g = make_constraint(ConstraintKind::DVU, 2, 2);
  cls.family.g_shape = {ShapeKind::ar, 1, -0.5, 0.5};
  EXPECT_EQ(family_dimension(cls), 2 * 2 + 2 * 1);
  for (const auto& theta : sample_parameters(cls, 5, 9)) {
    const DensityPair p = family_member(cls, theta);
    EXPECT_LE(constraint_violation(cls.f, p.F, 2, cls.grid_size), 1e-8);
    EXPECT_LE(constraint_violation(*cls.g, p.G, 2, cls.grid_size), 1e-8);
  }
}

TEST(FamilyMembers, ViolationDetectsOffClassDensity) {
  const ConstraintSet c = make_constraint(ConstraintKind::D0, 1, 1);
  EXPECT_NEAR(constraint_violation(c, white_density(scaled_identity(1, 3.0)), 1, 256), 1.0, 1e-12);
}

TEST(SampleParameters, InsideBoxAndReproducible) {
  const DensityClass cls = d0_class();
  const auto a = sample_parameters(cls, 50, 4);
  EXPECT_EQ(a, sample_parameters(cls, 50, 4));
  EXPECT_NE(a, sample_parameters(cls, 50, 5));
  for (const auto& t : a) {
    ASSERT_EQ(t.size(), 2u);
    for (double x : t) {
      EXPECT_GE(x, -0.9);
      EXPECT_LE(x, 0.9);
    }
  }
}

TEST(MaximizeDelta, EvaluationsMatchTheExtrapolator) {
  DensityClass cls = d0_class();
  OptConfig opt;
  opt.budget = 200;
  opt.starts = 4;
  opt.truncation = 48;
  const MissingPattern S({{2, 1}});
  const FunctionalSpec f = ones(1, 1);
  const LeastFavorableResult r = maximize_delta(cls, S, f, opt);
  ASSERT_FALSE(r.evaluations.empty());
  for (std::size_t i = 0; i < r.evaluations.size(); i += 17) {
    const Evaluation& e = r.evaluations[i];
    SolverOptions so;
    so.truncation = opt.truncation;
    const double d = estimate(member_model(cls, e.theta), S, f, so).delta;
    EXPECT_NEAR(e.delta, d, 1e-10 * d);
    EXPECT_LE(e.delta, r.delta_star * (1 + 1e-12));
  }
  EXPECT_NEAR(r.delta_star, member_delta(cls, S, f, r.theta_star, opt.truncation), 1e-12 * r.delta_star);
}

TEST(MaximizeDelta, SingletonFamily) {
  const SpectralModel m = scalar_model(ar1_density(0.6));
  const DensityClass cls = discrete_class({{m.F, MatrixDensity::zero(1)}});
  const MissingPattern S({{3, 1}});
  const FunctionalSpec f = ones(1, 2);
  OptConfig opt;
  const LeastFavorableResult r = maximize_delta(cls, S, f, opt);
  SolverOptions so;
  so.truncation = opt.truncation;
  EXPECT_NEAR(r.delta_star, estimate(m, S, f, so).delta, 1e-12);
  EXPECT_EQ(r.evaluations.size(), 1u);
  EXPECT_TRUE(verify_saddle_point(r, cls, f, 10).all_pass());
}

TEST(MaximizeDelta, DiscreteFamilyPicksDominatingMemberAndIgnoresOrder) {
  const MissingPattern S({{2, 1}});
  const FunctionalSpec f = ones(1, 1);
  const DensityPair a{ar1_density(0.2), MatrixDensity::zero(1)};
  const DensityPair b{ar1_density(0.8, 2.0), MatrixDensity::zero(1)};
  const double da = member_delta(discrete_class({a}), S, f, std::vector<double>{0.0}, 64);
  const double db = member_delta(discrete_class({b}), S, f, std::vector<double>{0.0}, 64);
  ASSERT_GT(db, da);
  const LeastFavorableResult r1 = maximize_delta(discrete_class({a, b}), S, f);
  const LeastFavorableResult r2 = maximize_delta(discrete_class({b, a}), S, f);
  EXPECT_EQ(r1.theta_star, std::vector<double>{1.0});
  EXPECT_EQ(r2.theta_star, std::vector<double>{0.0});
  EXPECT_DOUBLE_EQ(r1.delta_star, db);
  EXPECT_DOUBLE_EQ(r2.delta_star, db);
  const DensityClass both = discrete_class({a, b});
  EXPECT_TRUE(verify_saddle_point(r1, both, f, 20).all_pass());
}

TEST(Saddle, LeastFavorableD0Member) {
  const DensityClass cls = d0_class();
  const FunctionalSpec f = ones(1, 1);
  const LeastFavorableResult r = maximize_delta(cls, MissingPattern(), f);
  const SaddleReport rep = verify_saddle_point(r, cls, f, 100, 1e-6);
  EXPECT_TRUE(rep.all_pass()) << rep.violations();
  EXPECT_EQ(rep.entries.size(), 100u);
  EXPECT_NEAR(rep.reference, r.delta_star, 1e-8 * r.delta_star);
  for (const auto& theta : sample_parameters(cls, 30, 77))
    EXPECT_LE(member_delta(cls, MissingPattern(), f, theta, 64), r.delta_star + 1e-6 * std::max(1.0, r.delta_star));

  const ResidualReport res = characterization_residuals(r, cls, f);
  ASSERT_EQ(res.equations.size(), 1u);
  EXPECT_EQ(res.equations[0].equation, "signal");
  std::vector<double> others;
  for (const auto& theta : sample_parameters(cls, 20, 123))
    others.push_back(characterization_residuals(evaluate_member(cls, MissingPattern(), f, theta, 64), cls, f)
                         .max_residual());
  std::nth_element(others.begin(), others.begin() + 10, others.end());
  EXPECT_LE(res.max_residual(), 0.1 * others[10]);
}

TEST(Saddle, NonOptimalMemberIsRejected) {
  const DensityClass cls = d0_class();
  const FunctionalSpec f = ones(1, 1);
  const LeastFavorableResult flat = evaluate_member(cls, MissingPattern(), f, std::vector<double>{0.0, 0.0}, 64);
  const SaddleReport rep = verify_saddle_point(flat, cls, f, 100, 1e-6);
  EXPECT_GT(rep.violations(), 0);
}

TEST(Characterization, ZeroFunctionalHasZeroResidual) {
  const DensityClass cls = d0_class();
  FunctionalSpec f;
  f.a = {CVector::Zero(1), CVector::Zero(1)};
  const LeastFavorableResult r = evaluate_member(cls, MissingPattern({{1, 1}}), f, std::vector<double>{0.3, -0.2}, 64);
  EXPECT_EQ(r.delta_star, 0.0);
  const ResidualReport rep = characterization_residuals(r, cls, f);
  EXPECT_EQ(rep.max_residual(), 0.0);
  for (const auto& e : rep.equations)
    for (const auto& m : e.multipliers) EXPECT_EQ(m.value, 0.0) << m.name;
}

TEST(Characterization, UnsupportedClasses) {
  DensityClass cls = single_constraint_class(ConstraintKind::D0, 1, 3);
  EXPECT_THROW(check_supported(cls), UnsupportedClass);
  cls = single_constraint_class(ConstraintKind::D0, 1, 1);
  cls.g = make_constraint(ConstraintKind::Deps, 1, 1);
  EXPECT_THROW(check_supported(cls), UnsupportedClass);
  cls.g = make_constraint(ConstraintKind::DVU, 2, 1);
  EXPECT_THROW(check_supported(cls), UnsupportedClass);
  cls.g = make_constraint(ConstraintKind::DVU, 1, 1);
  EXPECT_NO_THROW(check_supported(cls));
}

TEST(DensityClass, InfeasibleAndInvalidData) {
  DensityClass cls = single_constraint_class(ConstraintKind::DVU, 1, 1);
  cls.f.level = 10.0;
  EXPECT_THROW(family_member(cls, std::vector<double>{0.1, 0.2}), InfeasibleClass);
  cls = single_constraint_class(ConstraintKind::Deps, 1, 1);
  cls.f.level = 0.5;
  EXPECT_THROW(family_member(cls, std::vector<double>{0.1, 0.2}), InfeasibleClass);
  cls.f.eps = 1.5;
  EXPECT_THROW(validate_class(cls), InvalidParameter);
  cls = single_constraint_class(ConstraintKind::D0, 4, 2);
  cls.f.moment(0, 0) = -1.0;
  EXPECT_THROW(validate_class(cls), InvalidParameter);
  EXPECT_THROW(family_member(d0_class(), std::vector<double>{0.1}), InvalidParameter);
  EXPECT_EQ(parse_kind("D1delta_3"), (std::pair{ConstraintKind::D1delta, 3}));
  EXPECT_THROW(parse_kind("D2_1"), InvalidParameter);
}

TEST(ShapeBasis, ReflectionPolynomial) {
  const std::vector<double> k{0.5, -0.3};
  const std::vector<double> a = reflection_to_poly(k);
  ASSERT_EQ(a.size(), 3u);
  EXPECT_NEAR(a[1], 0.5 + 0.5 * -0.3, 1e-15);
  EXPECT_NEAR(a[2], -0.3, 1e-15);
  const ShapeBasis ma{ShapeKind::ma, 2, -1, 1};
  const ShapeBasis ar{ShapeKind::ar, 2, -1, 1};
  for (double l : {-2.0, 0.0, 1.3}) EXPECT_NEAR(ma(k, l) * ar(k, l), 1.0, 1e-14);
}
