#include "rsoliton/fixtures.hpp"
#include "rsoliton/soliton.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace rsoliton;

namespace {

Matrix diag(std::initializer_list<double> v) {
  Vector d(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) d(i++) = x;
  return d.asDiagonal();
}

}  // namespace

TEST(Derivations, Dimensions) {
  // Der(h3) = {[[a,b,0],[c,d,0],[e,f,a+d]]}, Der(R^n) = gl(n)
  EXPECT_EQ(derivation_algebra(fixtures::h3()).dim(), 6);
  EXPECT_EQ(derivation_algebra(abelian(3)).dim(), 9);
  EXPECT_EQ(derivation_algebra(fixtures::sl2()).dim(), 3);
  EXPECT_EQ(skew_derivations(fixture("h3").metric).dim(), 1);
  EXPECT_EQ(skew_derivations(fixture("h5").metric).dim(), 4);  // u(2)
  EXPECT_EQ(skew_derivations(fixture("abelian_3").metric).dim(), 3);
}

TEST(Derivations, BasisElementsSatisfyLeibniz) {
  for (const auto& name : fixtures::concrete_names()) {
    const MetricLieAlgebra& m = fixture(name).metric;
    for (const auto& d : derivation_algebra(m.algebra()).matrices)
      EXPECT_LT(derivation_residual(m.algebra(), d), 1e-12) << name;
    for (const auto& d : skew_derivations(m).matrices) {
      EXPECT_LT(derivation_residual(m.algebra(), d), 1e-12) << name;
      EXPECT_LT(max_abs(m.gram() * d + d.transpose() * m.gram()), 1e-12) << name;
    }
  }
}

TEST(Classify, HeisenbergNilsoliton) {
  const SolitonVerdict v = classify(fixture("h3").metric);
  EXPECT_EQ(v.cls, SolitonClass::algebraic);
  EXPECT_NEAR(v.c, -1.5, 1e-10);
  EXPECT_LT(max_abs(v.d - diag({1, 1, 2})), 1e-10);
  EXPECT_LT(v.residual, 1e-10);
}

TEST(Classify, FiveDimensionalHeisenberg) {
  // Ric = diag(-1/2 x4, 1): c = -2, D = Ric - c Id = diag(3/2 x4, 3)
  const SolitonVerdict v = classify(fixture("h5").metric);
  EXPECT_EQ(v.cls, SolitonClass::algebraic);
  EXPECT_NEAR(v.c, -2.0, 1e-10);
  EXPECT_LT(max_abs(v.d - diag({1.5, 1.5, 1.5, 1.5, 3})), 1e-10);
}

TEST(Classify, EinsteinAndFlat) {
  EXPECT_EQ(classify(fixture("abelian_3").metric).cls, SolitonClass::flat);
  const SolitonVerdict hyp = classify(fixture("hyperbolic_plane").metric);
  EXPECT_EQ(hyp.cls, SolitonClass::einstein);
  EXPECT_NEAR(hyp.c, -1.0, 1e-12);
  const SolitonVerdict ext = classify(MetricLieAlgebra::orthonormal(fixtures::h3_einstein_extension()));
  EXPECT_EQ(ext.cls, SolitonClass::einstein);
  EXPECT_NEAR(ext.c, -1.5, 1e-12);
}

TEST(Classify, OrthonormalSl2IsNotASoliton) {
  const SolitonVerdict v = classify(fixture("sl2").metric);
  EXPECT_EQ(v.cls, SolitonClass::none);
  EXPECT_GT(v.stages.semi_algebraic, 0.1);
}

TEST(Classify, NilsolitonUnderScalingAndAutomorphism) {
  // pull back by the automorphism T = [[a,b,0],[c,d,0],[e,f,ad-bc]] and scale:
  // still a soliton with c scaled by 1/lambda
  Matrix t(3, 3);
  t << 1.5, 0.3, 0.0, -0.2, 0.8, 0.0, 0.4, -1.1, 1.5 * 0.8 + 0.3 * 0.2;
  const double lambda = 2.5;
  Matrix q = lambda * t.transpose() * t;
  q = (0.5 * (q + q.transpose())).eval();
  const SolitonVerdict v = classify(MetricLieAlgebra(fixtures::h3(), q));
  EXPECT_TRUE(is_algebraic_class(v.cls));
  EXPECT_NEAR(v.c, -1.5 / lambda, 1e-9);
  EXPECT_LT(derivation_residual(fixtures::h3(), v.d), 1e-9);
}

TEST(Classify, NonAlgebraicProductWithEuclideanMotions) {
  // s1 (+) e(2): Ric = diag(-3/2 x4, 0 x3) cannot be c Id + D
  const Fixture f = fixture("example_6_1");
  const LieAlgebra s = direct_sum(fixtures::h3_einstein_extension(),
                                  semidirect({fixtures::rotation(2, 0, 1)}, abelian(2), {"T"}));
  const SolitonVerdict v = classify(MetricLieAlgebra::orthonormal(s));
  EXPECT_EQ(v.cls, SolitonClass::none);
  EXPECT_GT(v.stages.algebraic, 0.1);
  EXPECT_TRUE(is_algebraic_class(classify(f.metric).cls));
}

TEST(SemiAlgebraic, ImpliesAlgebraicOnSolvableFixtures) {
  for (const auto& name : fixtures::concrete_names()) {
    const MetricLieAlgebra& m = fixture(name).metric;
    if (!is_solvable(m.algebra())) {
      EXPECT_THROW(semi_algebraic_implies_algebraic_check(m, classify(m)), Error);
      continue;
    }
    const SemiAlgebraicCheck c = semi_algebraic_implies_algebraic_check(m, classify(m));
    if (c.applicable) {
      EXPECT_TRUE(c.holds) << name << " residual " << c.derivation_residual;
    }
  }
}

TEST(PreEinstein, HeisenbergValues) {
  const PreEinstein p3 = pre_einstein_derivation(fixtures::h3());
  EXPECT_LT(max_abs(p3.d1 - diag({2.0 / 3, 2.0 / 3, 4.0 / 3})), 1e-12);
  EXPECT_LT(p3.trace_residual, 1e-12);
  const PreEinstein p5 = pre_einstein_derivation(fixtures::h5());
  EXPECT_LT(max_abs(p5.d1 - diag({0.75, 0.75, 0.75, 0.75, 1.5})), 1e-12);
  const PreEinstein pa = pre_einstein_derivation(abelian(3));
  EXPECT_LT(max_abs(pa.d1 - Matrix::Identity(3, 3)), 1e-12);
}

TEST(PreEinstein, RejectsNonNilpotent) {
  try {
    pre_einstein_derivation(fixtures::hyperbolic_plane());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotNilpotent);
  }
}

TEST(PreEinstein, NilsolitonDerivationIsMultipleOfIt) {
  for (const std::string name : {"h3", "h5", "h3xh3"}) {
    const MetricLieAlgebra& m = fixture(name).metric;
    const SolitonVerdict v = classify(m);
    const PreEinstein p = pre_einstein_derivation(m.algebra());
    EXPECT_LT(max_abs(v.d + v.c * p.d1), 1e-9) << name;
  }
}

TEST(Structure, PassesOnCompletelySolvableSolsolitons) {
  const std::vector<MetricLieAlgebra> cases{
      fixture("h3").metric, fixture("h5").metric, fixture("hyperbolic_plane").metric,
      MetricLieAlgebra::orthonormal(fixtures::h3_einstein_extension()),
      MetricLieAlgebra::orthonormal(semidirect({Matrix::Identity(3, 3)}, abelian(3), {"A"}))};
  for (const auto& m : cases) {
    const SolitonVerdict v = classify(m);
    const StructureReport r = solvsoliton_structure_check(m, v);
    EXPECT_TRUE(r.abelian);
    EXPECT_TRUE(r.ad_symmetric);
    EXPECT_TRUE(r.derivation_shape);
    EXPECT_TRUE(r.kernel_contained);
    EXPECT_TRUE(r.all_pass);
  }
}

TEST(Structure, ReportsFailuresOnNonSoliton) {
  // the non-reductive modification of h5 is not a solvsoliton
  LieAlgebra r({"X1", "Y1", "X2", "Y2", "Z"},
               {{0, 1, 4, 1.0}, {2, 3, 4, 1.0}, {0, 2, 3, 1.0}, {0, 3, 2, -1.0}});
  const MetricLieAlgebra m = MetricLieAlgebra::orthonormal(r);
  const StructureReport s = solvsoliton_structure_check(m, classify(m));
  EXPECT_EQ(s.nilradical_dim, 4);
  ASSERT_EQ(s.complement_semisimple.size(), 1u);
  EXPECT_FALSE(s.complement_semisimple[0]);
  EXPECT_FALSE(s.all_pass);
}

TEST(Search, FindsKnownSoliton) {
  SearchOptions o;
  o.restarts = 3;
  o.seed = 1;
  const SearchResult r = soliton_residual_search(fixtures::h3(), o);
  EXPECT_LT(r.best_residual, 1e-6);
}

TEST(Search, DeterministicForSeedAndThreads) {
  SearchOptions o;
  o.restarts = 4;
  o.seed = 9;
  o.iterations = 50;
  const SearchResult a = soliton_residual_search(fixtures::sl2(), o);
  o.threads = 4;
  const SearchResult b = soliton_residual_search(fixtures::sl2(), o);
  EXPECT_EQ(a.restart_residuals, b.restart_residuals);
}
