#include "rsoliton/fixtures.hpp"
#include "rsoliton/lie_algebra.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace rsoliton;

namespace {

// Structure constants in a new basis f_a = sum_i P(i, a) e_i:
// ad'(f_a) = P^{-1} ad(P e_a) P.
LieAlgebra change_basis(const LieAlgebra& alg, const Matrix& p) {
  const int n = alg.dim();
  const Matrix pinv = p.inverse();
  std::vector<Matrix> ads(n);
  for (int a = 0; a < n; ++a) ads[a] = pinv * ad(alg, p.col(a)) * p;
  // remove rounding so c(i,j,k) = -c(j,i,k) holds exactly
  std::vector<Matrix> exact(n, Matrix::Zero(n, n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) exact[i](k, j) = 0.5 * (ads[i](k, j) - ads[j](k, i));
  return LieAlgebra::from_ad(alg.basis_names(), exact);
}

Matrix random_invertible(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix p(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) p(i, j) = g(rng);
  return p + 3.0 * Matrix::Identity(n, n);
}

}  // namespace

TEST(LieAlgebra, EveryFixtureIsValid) {
  for (const auto& name : fixtures::concrete_names()) {
    const Diagnostics d = validate(fixture(name).metric.algebra());
    EXPECT_TRUE(d.valid) << name;
    EXPECT_LT(d.jacobi_residual, 1e-12) << name;
  }
}

TEST(LieAlgebra, MirrorEntriesAreConsistent) {
  LieAlgebra a({"X", "Y", "Z"}, {{0, 1, 2, 1.0}, {1, 0, 2, -1.0}});
  EXPECT_EQ(a, fixtures::h3());
  EXPECT_DOUBLE_EQ(a.structure(1, 0, 2), -1.0);
}

TEST(LieAlgebra, RejectsAntisymmetryViolations) {
  try {
    LieAlgebra({"X", "Y"}, {{0, 1, 1, 1.0}, {1, 0, 1, 1.0}});
    FAIL() << "expected AntisymmetryViolation";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::AntisymmetryViolation);
  }
  EXPECT_THROW(LieAlgebra({"X", "Y"}, {{0, 0, 1, 2.0}}), Error);
}

TEST(LieAlgebra, RejectsOutOfRangeIndices) {
  try {
    LieAlgebra({"X", "Y"}, {{0, 2, 1, 1.0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
}

TEST(LieAlgebra, DetectsJacobiFailure) {
  // [X,Y] = Z, [Y,Z] = X, [Z,X] = Z is not a Lie bracket
  LieAlgebra bad({"X", "Y", "Z"}, {{0, 1, 2, 1.0}, {1, 2, 0, 1.0}, {2, 0, 2, 1.0}});
  const Diagnostics d = validate(bad);
  EXPECT_FALSE(d.valid);
  EXPECT_GT(d.jacobi_residual, 0.1);
  try {
    require_valid(bad, Tolerances{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidAlgebra);
  }
}

TEST(LieAlgebra, BracketChecksLengths) {
  const LieAlgebra h = fixtures::h3();
  EXPECT_THROW(bracket(h, Vector::Zero(2), Vector::Zero(3)), Error);
  const Vector z = bracket(h, Vector::Unit(3, 0), Vector::Unit(3, 1));
  EXPECT_EQ(z, Vector::Unit(3, 2));
}

TEST(LieAlgebra, SeriesAndFlags) {
  const Diagnostics h = validate(fixtures::h5());
  EXPECT_TRUE(h.nilpotent);
  EXPECT_TRUE(h.solvable);
  EXPECT_TRUE(h.unimodular);
  EXPECT_EQ(h.lower_central_dims, (std::vector<int>{5, 1, 0}));

  const Diagnostics hyp = validate(fixtures::hyperbolic_plane());
  EXPECT_TRUE(hyp.solvable);
  EXPECT_FALSE(hyp.nilpotent);
  EXPECT_FALSE(hyp.unimodular);
  EXPECT_EQ(hyp.derived_dims, (std::vector<int>{2, 1, 0}));

  const Diagnostics sl = validate(fixtures::sl2());
  EXPECT_FALSE(sl.solvable);
  EXPECT_TRUE(sl.unimodular);
  EXPECT_EQ(sl.derived_dims, (std::vector<int>{3}));
}

TEST(Nilradical, KnownDimensions) {
  EXPECT_EQ(nilradical(fixtures::h5()).dim(), 5);
  EXPECT_EQ(nilradical(fixtures::hyperbolic_plane()).dim(), 1);
  EXPECT_EQ(nilradical(fixtures::h3_einstein_extension()).dim(), 3);
  EXPECT_EQ(nilradical(abelian(4)).dim(), 4);
  EXPECT_THROW(nilradical(fixtures::sl2()), Error);
}

TEST(Nilradical, RotationalPartDoesNotCount) {
  // e(2) = T ⋉ R^2: ad T is a rotation, nilradical is the translation part
  LieAlgebra e2 = semidirect({fixtures::rotation(2, 0, 1)}, abelian(2), {"T"});
  const SubspaceBasis n = nilradical(e2);
  ASSERT_EQ(n.dim(), 2);
  EXPECT_TRUE(span_contains(n.vectors, Matrix(Matrix::Identity(3, 3).rightCols(2)), 1e-10));
}

TEST(Nilradical, MixedRealAndImaginaryRoots) {
  // ad A = diag(1, 1) + rotation on (U1, U2) and 1 on W: A is not nilpotent
  Matrix d = Matrix::Identity(3, 3);
  d(0, 1) = -2.0;
  d(1, 0) = 2.0;
  LieAlgebra s = semidirect({d}, abelian(3), {"A"});
  EXPECT_EQ(nilradical(s).dim(), 3);
}

TEST(Nilradical, NonSemisimpleComplementElement) {
  // [X1~, X2] = Y2, [X1~, Y2] = -X2 and the h5 brackets: 4-dim nilradical
  LieAlgebra r({"X1", "Y1", "X2", "Y2", "Z"},
               {{0, 1, 4, 1.0}, {2, 3, 4, 1.0}, {0, 2, 3, 1.0}, {0, 3, 2, -1.0}});
  ASSERT_TRUE(validate(r).valid);
  const SubspaceBasis n = nilradical(r);
  ASSERT_EQ(n.dim(), 4);
  Matrix expected = Matrix::Zero(5, 4);
  expected(1, 0) = expected(2, 1) = expected(3, 2) = expected(4, 3) = 1.0;
  EXPECT_TRUE(span_contains(n.vectors, expected, 1e-10));
}

TEST(Nilradical, InvariantUnderBasisChange) {
  std::mt19937_64 rng(11);
  const std::vector<LieAlgebra> algebras{fixtures::h3_einstein_extension(), fixtures::hyperbolic_plane(),
                                         semidirect({fixtures::rotation(2, 0, 1)}, abelian(2), {"T"}),
                                         direct_sum(fixtures::hyperbolic_plane(), fixtures::h3())};
  for (const auto& a : algebras) {
    for (int trial = 0; trial < 5; ++trial) {
      const Matrix p = random_invertible(a.dim(), rng);
      const LieAlgebra b = change_basis(a, p);
      EXPECT_LT(jacobi_residual(b), 1e-9);
      EXPECT_EQ(nilradical(b).dim(), nilradical(a).dim());
      const SubspaceBasis nb = nilradical(b);
      EXPECT_TRUE(span_contains(nilradical(a).vectors, p * nb.vectors, 1e-8));
    }
  }
}

TEST(Nilradical, IsAnIdeal) {
  const LieAlgebra s = direct_sum(fixtures::h3_einstein_extension(), fixtures::hyperbolic_plane());
  const SubspaceBasis n = nilradical(s);
  EXPECT_TRUE(is_ideal(s, n.vectors, 1e-10));
  EXPECT_TRUE(is_nilpotent(restrict_to(s, n.vectors, std::vector<std::string>(n.dim(), "n"))));
}

TEST(Semidirect, ValidatesGenerators) {
  const LieAlgebra h = fixtures::h3();
  Matrix not_derivation = Matrix::Identity(3, 3);
  try {
    semidirect({not_derivation}, h);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotADerivation);
  }
  const Matrix a = Vector((Vector(3) << 1.0, 0.0, 1.0).finished()).asDiagonal();
  const Matrix b = fixtures::rotation(3, 0, 1);
  try {
    semidirect({a, b}, h);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonCommutingGenerators);
  }
}

TEST(Semidirect, RankOneExtensionOfH3) {
  const LieAlgebra s = fixtures::h3_einstein_extension();
  EXPECT_EQ(s.basis_names(), (std::vector<std::string>{"A", "X", "Y", "Z"}));
  EXPECT_DOUBLE_EQ(s.structure(0, 3, 3), 1.0);
  EXPECT_DOUBLE_EQ(s.structure(0, 1, 1), 0.5);
  EXPECT_FALSE(is_unimodular(s));
  EXPECT_DOUBLE_EQ(ad_traces(s)(0), 2.0);
}

TEST(Derivations, ResidualOfInnerDerivationVanishes) {
  const LieAlgebra s = fixtures::h3_einstein_extension();
  for (int i = 0; i < s.dim(); ++i) EXPECT_LT(derivation_residual(s, s.ad_basis(i)), 1e-14);
}
