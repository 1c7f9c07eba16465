#ifndef RSOLITON_FIXTURES_HPP
#define RSOLITON_FIXTURES_HPP

// Named test algebras. The three example_* entries are (source, phi) pairs: the
// metric algebra is the solvsoliton s and the map phi builds the modification.

#include "rsoliton/common.hpp"
#include "rsoliton/curvature.hpp"
#include "rsoliton/lie_algebra.hpp"
#include "rsoliton/modification.hpp"
#include "rsoliton/soliton.hpp"

#include <optional>
#include <string>
#include <vector>

namespace rsoliton {

struct Fixture {
  std::string name;
  MetricLieAlgebra metric;
  std::optional<ModificationMap> phi;
};

namespace fixtures {

inline LieAlgebra heisenberg(int pairs, const std::string& suffix = "") {
  std::vector<std::string> names;
  std::vector<BracketEntry> entries;
  const int z = 2 * pairs;
  for (int p = 0; p < pairs; ++p) {
    const std::string idx = pairs == 1 ? "" : std::to_string(p + 1);
    names.push_back("X" + idx + suffix);
    names.push_back("Y" + idx + suffix);
    entries.push_back({2 * p, 2 * p + 1, z, 1.0});
  }
  names.push_back("Z" + suffix);
  return LieAlgebra(std::move(names), entries);
}

inline LieAlgebra h3() { return heisenberg(1); }
inline LieAlgebra h5() { return heisenberg(2); }

inline LieAlgebra h3xh3() {
  return LieAlgebra({"X1", "Y1", "Z1", "X2", "Y2", "Z2"}, {{0, 1, 2, 1.0}, {3, 4, 5, 1.0}});
}

inline LieAlgebra hyperbolic_plane() { return LieAlgebra({"A", "N"}, {{0, 1, 1, 1.0}}); }

/// sl(2,R) in the basis H, E, F: [H,E] = 2E, [H,F] = -2F, [E,F] = H.
inline LieAlgebra sl2() { return LieAlgebra({"H", "E", "F"}, {{0, 1, 1, 2.0}, {0, 2, 2, -2.0}, {1, 2, 0, 1.0}}); }

/// Rotation generator on coordinates (a, b) of an n-dim space: a -> b, b -> -a.
inline Matrix rotation(int n, int a, int b) {
  Matrix j = Matrix::Zero(n, n);
  j(b, a) = 1.0;
  j(a, b) = -1.0;
  return j;
}

/// R A ⋉ h3 with ad A = diag(1/2, 1/2, 1): the rank-one Einstein extension of
/// the h3 nilsoliton by its soliton derivation (scaled to make c = -3/2).
inline LieAlgebra h3_einstein_extension() {
  Matrix d = Vector((Vector(3) << 0.5, 0.5, 1.0).finished()).asDiagonal();
  return semidirect({d}, h3(), {"A"});
}

inline Matrix kbasis_coeffs(const std::vector<Matrix>& kbasis, const std::vector<Matrix>& images) {
  const int n = static_cast<int>(images.size());
  Matrix design(images.front().size(), kbasis.size());
  for (size_t a = 0; a < kbasis.size(); ++a) design.col(a) = vec(kbasis[a]);
  Matrix coeffs(n, kbasis.size());
  auto cod = design.completeOrthogonalDecomposition();
  for (int i = 0; i < n; ++i) {
    Vector c = cod.solve(vec(images[i]));
    for (Eigen::Index a = 0; a < c.size(); ++a) {
      const double r = std::round(c(a) * 1024.0) / 1024.0;
      c(a) = std::abs(c(a) - r) < 1e-12 ? r : c(a);
    }
    coeffs.row(i) = c.transpose();
  }
  return coeffs;
}

inline ModificationMap map_from_images(const MetricLieAlgebra& source, const std::vector<Matrix>& images) {
  std::vector<Matrix> kb = skew_derivations(source).matrices;
  return ModificationMap(source, kb, kbasis_coeffs(kb, images));
}

inline Fixture example_6_1() {
  // source: s1 (+) R^3 with basis A, X, Y, Z, T, U1, U2; phi(T) rotates (U1, U2),
  // turning the abelian factor into e(2) = t ⋉ R^2
  const LieAlgebra s1 = h3_einstein_extension();
  LieAlgebra flat({"T", "U1", "U2"}, {});
  MetricLieAlgebra source = MetricLieAlgebra::orthonormal(direct_sum(s1, flat));
  std::vector<Matrix> images(7, Matrix::Zero(7, 7));
  images[4] = rotation(7, 5, 6);
  return {"example_6_1", source, map_from_images(source, images)};
}

inline Fixture example_6_2() {
  MetricLieAlgebra source = MetricLieAlgebra::orthonormal(h5());
  std::vector<Matrix> images(5, Matrix::Zero(5, 5));
  images[0] = rotation(5, 2, 3);  // X2 -> Y2, Y2 -> -X2
  return {"example_6_2", source, map_from_images(source, images)};
}

inline Fixture example_6_3() {
  // n = n1 (+) n2, n1 = h3, n2 = h3 (+) h3; phi(X) and phi(Y) rotate the
  // horizontal planes of the two factors of n2
  LieAlgebra n = direct_sum(heisenberg(1), direct_sum(heisenberg(1, "b"), heisenberg(1, "c")));
  MetricLieAlgebra source = MetricLieAlgebra::orthonormal(n);
  std::vector<Matrix> images(9, Matrix::Zero(9, 9));
  images[0] = rotation(9, 3, 4);
  images[1] = rotation(9, 6, 7);
  return {"example_6_3", source, map_from_images(source, images)};
}

inline std::vector<std::string> names() {
  return {"abelian_n", "h3", "h5", "h3xh3", "hyperbolic_plane", "sl2", "example_6_1", "example_6_2", "example_6_3"};
}

/// The nine catalog entries with abelian_n instantiated at n = 3.
inline std::vector<std::string> concrete_names() {
  return {"abelian_3", "h3", "h5", "h3xh3", "hyperbolic_plane", "sl2", "example_6_1", "example_6_2", "example_6_3"};
}

}  // namespace fixtures

inline Fixture fixture(const std::string& name) {
  using namespace fixtures;
  if (name.rfind("abelian_", 0) == 0) {
    const std::string tail = name.substr(8);
    if (!tail.empty() && tail.size() <= 3 && tail.find_first_not_of("0123456789") == std::string::npos) {
      const int n = std::stoi(tail);
      if (n >= 1 && n <= 128) return {name, MetricLieAlgebra::orthonormal(abelian(n)), std::nullopt};
    }
  }
  if (name == "h3") return {name, MetricLieAlgebra::orthonormal(h3()), std::nullopt};
  if (name == "h5") return {name, MetricLieAlgebra::orthonormal(h5()), std::nullopt};
  if (name == "h3xh3") return {name, MetricLieAlgebra::orthonormal(h3xh3()), std::nullopt};
  if (name == "hyperbolic_plane") return {name, MetricLieAlgebra::orthonormal(hyperbolic_plane()), std::nullopt};
  if (name == "sl2") return {name, MetricLieAlgebra::orthonormal(sl2()), std::nullopt};
  if (name == "example_6_1") return example_6_1();
  if (name == "example_6_2") return example_6_2();
  if (name == "example_6_3") return example_6_3();
  throw Error(ErrorKind::UnknownFixture, "no fixture named '" + name + "'");
}

}  // namespace rsoliton

#endif  // RSOLITON_FIXTURES_HPP
