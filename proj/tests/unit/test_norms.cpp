#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "support/reference.hpp"

using namespace sqmean;
using sqtest::ref::ell_scan;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

std::vector<Norm> symmetric_zoo(std::size_t d) {
  return {Norm::lp(d, 1.0), Norm::lp(d, 1.5), Norm::lp(d, 2.0), Norm::lp(d, 3.0), Norm::lp(d, 4.0),
          Norm::linf(d),    Norm::top_k(d, 1), Norm::top_k(d, std::max<std::size_t>(1, d / 2)),
          parse_norm("gauge:linf-l2-max", d), parse_norm("gauge:l1-linf-sum", d), parse_norm("gauge:topk-half", d)};
}

}  // namespace

TEST(EvalNorm, PythagoreanTriple) {
  Vector v = Vector::Zero(6);
  v(0) = 3;
  v(1) = 4;
  EXPECT_DOUBLE_EQ(Norm::lp(6, 2.0)(v), 5.0);
}

TEST(EvalNorm, MaxNormOfFirstBasisVector) { EXPECT_DOUBLE_EQ(Norm::linf(5)(Vector::Unit(5, 0)), 1.0); }

TEST(EvalNorm, TraceNormOfIdentity) {
  EXPECT_NEAR(Norm::schatten(2, 1.0)(flatten(Matrix::Identity(2, 2))), 2.0, 1e-12);
}

TEST(EvalNorm, RejectsDimensionMismatchAndNonFinite) {
  const Norm n = Norm::lp(3, 2.0);
  EXPECT_THROW(n(Vector::Zero(4)), std::invalid_argument);
  Vector bad = Vector::Zero(3);
  bad(1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(n(bad), std::invalid_argument);
  bad(1) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(eval_norm(n, bad), std::invalid_argument);
}

TEST(EvalNorm, FirstBasisVectorHasUnitNormForEveryKind) {
  for (std::size_t d : {1u, 2u, 7u, 32u}) {
    for (const auto& n : symmetric_zoo(d)) EXPECT_NEAR(n(Vector::Unit(static_cast<Eigen::Index>(d), 0)), 1.0, 1e-9) << n.name();
  }
  for (double p : {1.0, 2.0, 3.0, std::numeric_limits<double>::infinity()}) {
    const Norm s = Norm::schatten(3, p);
    EXPECT_NEAR(s(Vector::Unit(9, 0)), 1.0, 1e-9);
  }
}

TEST(EvalNorm, AgreesWithDirectFormulas) {
  Rng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = sqtest::uniform_index(rng, 1, 40);
    const Vector v = sqtest::gaussian(d, rng);
    for (double p : {1.0, 1.5, 2.0, 3.0, 7.0}) EXPECT_NEAR(Norm::lp(d, p)(v), sqtest::ref::lp(v, p), 1e-12 * (1 + v.norm()));
    EXPECT_DOUBLE_EQ(Norm::linf(d)(v), v.cwiseAbs().maxCoeff());
    const std::size_t k = sqtest::uniform_index(rng, 1, d);
    EXPECT_NEAR(Norm::top_k(d, k)(v), sqtest::ref::top_k(v, k), 1e-12 * (1 + v.lpNorm<1>()));
  }
}

TEST(EvalNorm, NormAxiomsOnRandomProbes) {
  Rng rng(12);
  for (const auto& n : symmetric_zoo(9)) {
    EXPECT_EQ(n(Vector::Zero(9)), 0.0);
    for (int trial = 0; trial < 100; ++trial) {
      const Vector x = sqtest::gaussian(9, rng);
      const Vector y = sqtest::gaussian(9, rng);
      const double a = sqtest::uniform(rng, -5, 5);
      EXPECT_NEAR(n(a * x), std::abs(a) * n(x), 1e-12 * (1 + std::abs(a) * n(x))) << n.name();
      EXPECT_LE(n(x + y), n(x) + n(y) + 1e-12) << n.name();
      const auto perm = sqtest::permutation(9, rng);
      const auto s = sqtest::signs(9, rng);
      Vector px(9);
      for (std::size_t i = 0; i < 9; ++i) px(static_cast<Eigen::Index>(i)) = s[i] * x(static_cast<Eigen::Index>(perm[i]));
      EXPECT_NEAR(n(px), n(x), 1e-12 * (1 + n(x))) << n.name();
    }
  }
}

TEST(Schatten, DiagonalMatrixMatchesLpOfDiagonal) {
  Rng rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = sqtest::uniform_index(rng, 1, 6);
    const Vector diag = sqtest::gaussian(d, rng);
    const Matrix m = diag.asDiagonal();
    for (double p : {1.0, 2.0, 3.0, 4.0, std::numeric_limits<double>::infinity()}) {
      EXPECT_NEAR(Norm::schatten(d, p)(flatten(m)), sqtest::ref::lp(diag, p), 1e-10);
    }
  }
}

TEST(Schatten, MatchesIndependentSvdOnRandomMatrices) {
  Rng rng(14);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t d = sqtest::uniform_index(rng, 1, 8);
    const Vector v = sqtest::gaussian(d * d, rng);
    for (double p : {1.0, 2.0, 4.0, std::numeric_limits<double>::infinity()}) {
      EXPECT_NEAR(Norm::schatten(d, p)(v), sqtest::ref::schatten(to_matrix(v, d), p), 1e-9 * (1 + v.norm()));
    }
    EXPECT_NEAR(Norm::schatten(d, 2.0)(v), v.norm(), 1e-10 * (1 + v.norm()));
  }
}

TEST(SingularValues, DiagonalWithNegativeEntry) {
  Matrix m(2, 2);
  m << 2, 0, 0, -3;
  const Vector s = singular_values(m);
  EXPECT_NEAR(s(0), 3.0, 1e-14);
  EXPECT_NEAR(s(1), 2.0, 1e-14);
}

TEST(SingularValues, SignedPermutationMatrixHasFlatSpectrum) {
  // d = 4, p = 2: every singular value is 4^{-1/2}.
  const Vector y = schatten_matrix({2, 0, 3, 1}, {1, -1, -1, 1}, 2.0);
  const Vector s = singular_values(to_matrix(y, 4));
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(s(i), 0.5, 1e-12);
}

TEST(SingularValues, MatchesEigensolveOfGram) {
  Rng rng(15);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = trial < 50 ? 3 : sqtest::uniform_index(rng, 1, 10);
    Matrix m = to_matrix(sqtest::gaussian(d * d, rng), d);
    if (trial % 7 == 0 && d > 1) m.col(0) = m.col(1);  // rank deficient
    const Vector s = singular_values(m);
    const Vector r = sqtest::ref::singular_values(m);
    ASSERT_EQ(s.size(), r.size());
    // The Gram route squares the condition number; compare squares.
    for (Eigen::Index i = 0; i < s.size(); ++i) EXPECT_NEAR(s(i) * s(i), r(i) * r(i), 1e-12 * m.squaredNorm()) << "d=" << d;
    for (Eigen::Index i = 1; i < s.size(); ++i) EXPECT_GE(s(i - 1), s(i));
    EXPECT_NEAR(s.squaredNorm(), m.squaredNorm(), 1e-9 * m.squaredNorm());
  }
}

TEST(SingularValues, FrozenThreeByThreeCase) {
  // Values fixed from the Gram-eigensolve oracle.
  Matrix m(3, 3);
  m << 1, 2, 0, 0, 1, -1, 3, 0, 1;
  const Vector r = sqtest::ref::singular_values(m);
  const Vector s = singular_values(m);
  const double frozen[3] = {3.377202853972958, 2.273890554964218, 0.6510934089371738};
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(r(i), frozen[i], 1e-12);
    EXPECT_NEAR(s(i), frozen[i], 1e-12);
  }
}

TEST(SingularValues, RejectsNonSquareAndNonFinite) {
  EXPECT_THROW(singular_values(Matrix::Zero(2, 3)), std::invalid_argument);
  Matrix m = Matrix::Identity(2, 2);
  m(0, 1) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(singular_values(m), std::invalid_argument);
}

TEST(RandomOrthogonal, IsOrthogonalAndSeeded) {
  for (std::size_t d : {1u, 2u, 16u, 64u}) {
    const Matrix q = random_orthogonal(d, 99);
    EXPECT_LE((q.transpose() * q - Matrix::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d))).norm(), 1e-9);
    EXPECT_EQ(q, random_orthogonal(d, 99));
  }
  EXPECT_NE(random_orthogonal(8, 1), random_orthogonal(8, 2));
}

TEST(EllX, SmallCases) {
  EXPECT_EQ(ell_X(Norm::lp(16, 1.0), 0.25), 4u);
  EXPECT_EQ(ell_X(Norm::linf(8), 0.5), 8u);
  // Oracle: direct scan of k t^2 <= 1.
  const Norm l2 = Norm::lp(200, 2.0);
  EXPECT_EQ(ell_scan(l2, 0.1, 200), 100u);
  EXPECT_EQ(ell_X(l2, 0.1), 100u);
}

TEST(MX, SmallCases) {
  EXPECT_DOUBLE_EQ(m_X(Norm::lp(16, 1.0), 0.25), 0.5);
  EXPECT_DOUBLE_EQ(m_X(Norm::linf(9), 1.0), 3.0);
  const Norm l4 = Norm::lp(100000, 4.0);
  const std::size_t ell = ell_X(l4, 0.1);
  EXPECT_EQ(ell, 10000u);
  std::size_t direct = 0;
  while (static_cast<double>(direct + 1) * std::pow(0.1, 4.0) <= 1.0 + 1e-12) ++direct;
  EXPECT_EQ(ell, direct);
  EXPECT_NEAR(m_X(l4, 0.1), 0.1 * std::sqrt(static_cast<double>(direct)), 1e-12);
  EXPECT_NEAR(m_X(l4, 0.1), 10.0, 1e-12);
}

TEST(EllX, MatchesScanForLpFormula) {
  for (std::size_t d : {1u, 5u, 17u, 64u}) {
    for (double p : {1.0, 1.5, 2.0, 3.0, 4.0}) {
      const Norm n = Norm::lp(d, p);
      for (double t : {1.0, 0.9, 0.5, 0.3, 0.25, 0.1, 0.05, 0.01}) {
        const auto expected = std::min<std::size_t>(d, static_cast<std::size_t>(std::floor(std::pow(t, -p) * (1 + 1e-12))));
        EXPECT_EQ(ell_X(n, t), expected) << "d=" << d << " p=" << p << " t=" << t;
        EXPECT_EQ(ell_X(n, t), ell_scan(n, t, d));
      }
    }
  }
}

TEST(EllX, BoundaryTiesAreAccepted) {
  // t = k^{-1/p} exactly on the boundary; rounding must not drop k.
  for (std::size_t k : {3u, 7u, 10u, 27u}) {
    const double t = std::pow(static_cast<double>(k), -1.0 / 3.0);
    EXPECT_EQ(ell_X(Norm::lp(64, 3.0), t), k);
  }
}

TEST(LevelProfile, InvariantsAcrossNormsAndGrid) {
  for (const auto& n : symmetric_zoo(33)) {
    std::size_t prev = 0;
    for (int i = 0; i <= 40; ++i) {
      const double t = std::pow(2.0, -i / 4.0);
      const auto lp = level_profile(n, t);
      EXPECT_EQ(lp.ell, ell_X(n, t));
      EXPECT_EQ(lp.m, t * std::sqrt(static_cast<double>(lp.ell)));
      EXPECT_EQ(m_X(n, t), lp.m);
      EXPECT_LE(lp.ell, n.dim());
      EXPECT_GE(lp.ell, prev) << n.name();  // t decreases along the grid
      EXPECT_EQ(lp.ell, ell_scan(n, t, n.dim())) << n.name() << " t=" << t;
      prev = lp.ell;
    }
    EXPECT_GE(ell_X(n, 1.0), 1u);
  }
}

TEST(EllX, RejectsBadInput) {
  EXPECT_THROW(ell_X(Norm::lp(4, 2.0), 0.0), std::invalid_argument);
  EXPECT_THROW(ell_X(Norm::lp(4, 2.0), 1.5), std::invalid_argument);
  EXPECT_THROW(ell_X(Norm::schatten(2, 2.0), 0.5), std::invalid_argument);
  EXPECT_THROW(m_X(Norm::schatten(2, 2.0), 0.5), std::invalid_argument);
}

TEST(Validate, LpPasses) {
  const auto r = validate_symmetric(Norm::lp(10, 3.0), 100, 1);
  EXPECT_TRUE(r.passed);
  EXPECT_TRUE(r.failures().empty());
}

TEST(Validate, AsymmetricGaugeFailsOnPermutation) {
  const Norm g = parse_norm("gauge:asym-first", 10);
  const auto r = validate_symmetric(g, 100, 1);
  EXPECT_FALSE(r.passed);
  const auto f = r.failures();
  EXPECT_NE(std::find(f.begin(), f.end(), "permutation"), f.end());
  // Explicit violating permutation: swapping e_1 and e_2.
  EXPECT_NE(g(Vector::Unit(10, 0)), g(Vector::Unit(10, 1)));
}

TEST(Validate, TopTwoGaugePassesAndMatchesDefinition) {
  const Norm g = Norm::gauge(12, "top2-user", [](const Vector& x) { return sqtest::ref::top_k(x, 2); });
  EXPECT_FALSE(g.trusted());
  const auto r = validate_symmetric(g, 100, 3);
  EXPECT_TRUE(r.passed);
  const Norm c = g.certified(r);
  EXPECT_TRUE(c.trusted());
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const Vector x = sqtest::gaussian(12, rng);
    EXPECT_NEAR(c(x), sqtest::ref::top_k(x, 2), 1e-12 * (1 + x.norm()));
  }
}

TEST(Validate, CertificationRequiresMatchingPassingReport) {
  const Norm g = parse_norm("gauge:asym-first", 6);
  EXPECT_THROW(g.certified(validate_symmetric(g, 50, 1)), ValidationError);
  const Norm ok = parse_norm("gauge:linf-l2-max", 6);
  EXPECT_THROW(ok.certified(validate_symmetric(parse_norm("gauge:linf-l2-max", 7), 50, 1)), ValidationError);
  EXPECT_NO_THROW(ok.certified(validate_symmetric(ok, 50, 1)));
}

TEST(Validate, DeterministicUnderSeed) {
  const Norm g = parse_norm("gauge:asym-first", 8);
  const auto a = validate_symmetric(g, 64, 5);
  const auto b = validate_symmetric(g, 64, 5);
  EXPECT_EQ(a.permutation, b.permutation);
  EXPECT_EQ(a.triangle, b.triangle);
}

TEST(ParseNorm, MiniFormat) {
  EXPECT_EQ(parse_norm("lp:3", 5).p(), 3.0);
  EXPECT_TRUE(std::isinf(parse_norm("lp:inf", 5).p()));
  EXPECT_TRUE(std::isinf(parse_norm("linf", 5).p()));
  EXPECT_EQ(parse_norm("topk:2", 5).name(), "topk:2");
  const Norm s = parse_norm("schatten:4:3", std::nullopt);
  EXPECT_EQ(s.kind(), NormKind::SchattenP);
  EXPECT_EQ(s.dim(), 9u);
  EXPECT_EQ(s.side(), 3u);
  EXPECT_NO_THROW(parse_norm("schatten:4:3", 9));
  EXPECT_THROW(parse_norm("schatten:4:3", 10), std::invalid_argument);
  EXPECT_THROW(parse_norm("lp:0.5", 5), std::invalid_argument);
  EXPECT_THROW(parse_norm("lp:x", 5), std::invalid_argument);
  EXPECT_THROW(parse_norm("lp:2", std::nullopt), std::invalid_argument);
  EXPECT_THROW(parse_norm("gauge:no-such-gauge", 5), std::invalid_argument);
  EXPECT_THROW(parse_norm("ell2", 5), std::invalid_argument);
}

TEST(ParseNorm, RegistryAcceptsNewGauges) {
  register_gauge("test-l1", [](std::size_t) { return [](const Vector& x) { return 3.0 * x.lpNorm<1>(); }; });
  const auto names = registered_gauges();
  EXPECT_NE(std::find(names.begin(), names.end(), "test-l1"), names.end());
  const Norm n = parse_norm("gauge:test-l1", 4);
  EXPECT_NEAR(n(vec({1, -1, 2, 0})), 4.0, 1e-12);  // rescaled so ||e_1|| = 1
  EXPECT_NEAR(n.e1_scale(), 1.0 / 3.0, 1e-15);
}

TEST(FlatNorm, CountsLeadingCoordinates) {
  EXPECT_NEAR(flat_norm(Norm::lp(10, 2.0), 0.5, 4), 1.0, 1e-15);
  EXPECT_NEAR(flat_norm(Norm::lp(10, 1.0), 0.1, 10), 1.0, 1e-15);
  EXPECT_EQ(flat_norm(Norm::linf(10), 0.3, 0), 0.0);
}
