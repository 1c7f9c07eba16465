#ifndef RSOLITON_LIE_ALGEBRA_HPP
#define RSOLITON_LIE_ALGEBRA_HPP

#include "rsoliton/common.hpp"
#include "rsoliton/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace rsoliton {

/// One structure constant: [e_i, e_j] has coefficient `value` on e_k.
struct BracketEntry {
  int i = 0;
  int j = 0;
  int k = 0;
  double value = 0.0;

  friend bool operator==(const BracketEntry&, const BracketEntry&) = default;
};

/// Finite-dimensional real Lie algebra given by structure constants over a
/// labelled basis. Immutable after construction; antisymmetry is exact by
/// construction (only i < j constants are stored).
class LieAlgebra {
 public:
  LieAlgebra() = default;

  /// Entries may use either order (i, j) or (j, i); when both appear they must
  /// be exact negatives of each other.
  LieAlgebra(std::vector<std::string> names, const std::vector<BracketEntry>& entries)
      : names_(std::move(names)) {
    const int n = static_cast<int>(names_.size());
    if (n < 1) throw Error(ErrorKind::DimensionMismatch, "Lie algebra needs dim >= 1");
    std::map<std::tuple<int, int, int>, double> given;
    for (const auto& e : entries) {
      if (e.i < 0 || e.j < 0 || e.k < 0 || e.i >= n || e.j >= n || e.k >= n)
        throw Error(ErrorKind::DimensionMismatch, "bracket index out of range");
      if (e.i == e.j) {
        if (e.value != 0.0)
          throw Error(ErrorKind::AntisymmetryViolation,
                      "[e" + std::to_string(e.i) + ", e" + std::to_string(e.i) + "] must vanish");
        continue;
      }
      auto key = std::make_tuple(e.i, e.j, e.k);
      auto it = given.find(key);
      if (it != given.end() && it->second != e.value)
        throw Error(ErrorKind::AntisymmetryViolation, "conflicting duplicate structure constant");
      given[key] = e.value;
    }
    std::map<std::tuple<int, int, int>, double> upper;
    for (const auto& [key, v] : given) {
      auto [i, j, k] = key;
      if (i < j) {
        upper[key] = v;
        continue;
      }
      auto mirror = std::make_tuple(j, i, k);
      auto m = given.find(mirror);
      if (m != given.end() && m->second != -v)
        throw Error(ErrorKind::AntisymmetryViolation,
                    "c[" + std::to_string(i) + "][" + std::to_string(j) + "][" + std::to_string(k) +
                        "] is not the negative of its mirror");
      upper[mirror] = -v;
    }
    for (const auto& [key, v] : upper) {
      if (v == 0.0) continue;
      auto [i, j, k] = key;
      entries_.push_back({i, j, k, v});
    }
    build_ad();
  }

  /// From the adjoint matrices of the basis: ad[i](k, j) = c[i][j][k].
  static LieAlgebra from_ad(std::vector<std::string> names, const std::vector<Matrix>& ad) {
    const int n = static_cast<int>(names.size());
    if (static_cast<int>(ad.size()) != n)
      throw Error(ErrorKind::DimensionMismatch, "need one adjoint matrix per basis vector");
    std::vector<BracketEntry> entries;
    for (int i = 0; i < n; ++i) {
      if (ad[i].rows() != n || ad[i].cols() != n)
        throw Error(ErrorKind::DimensionMismatch, "adjoint matrix has wrong shape");
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          if (ad[i](k, j) != 0.0) entries.push_back({i, j, k, ad[i](k, j)});
    }
    return LieAlgebra(std::move(names), entries);
  }

  int dim() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& basis_names() const { return names_; }
  /// Nonzero constants with i < j, sorted by (i, j, k).
  const std::vector<BracketEntry>& entries() const { return entries_; }
  const Matrix& ad_basis(int i) const { return ad_[i]; }

  double structure(int i, int j, int k) const { return ad_[i](k, j); }

  Vector bracket_basis(int i, int j) const { return ad_[i].col(j); }

  friend bool operator==(const LieAlgebra& a, const LieAlgebra& b) {
    return a.names_ == b.names_ && a.entries_ == b.entries_;
  }

 private:
  void build_ad() {
    const int n = dim();
    ad_.assign(n, Matrix::Zero(n, n));
    for (const auto& e : entries_) {
      ad_[e.i](e.k, e.j) += e.value;
      ad_[e.j](e.k, e.i) -= e.value;
    }
  }

  std::vector<std::string> names_;
  std::vector<BracketEntry> entries_;
  std::vector<Matrix> ad_;
};

/// Coordinate basis of a subspace, one column per basis vector, written in the
/// algebra's input basis.
struct SubspaceBasis {
  int ambient_dim = 0;
  Matrix vectors;

  int dim() const { return static_cast<int>(vectors.cols()); }

  static SubspaceBasis zero(int n) { return {n, Matrix(n, 0)}; }
  static SubspaceBasis whole(int n) { return {n, Matrix::Identity(n, n)}; }
};

inline void check_length(const LieAlgebra& alg, const Vector& x) {
  if (x.size() != alg.dim())
    throw Error(ErrorKind::DimensionMismatch, "vector length " + std::to_string(x.size()) +
                                                  " does not match dim " + std::to_string(alg.dim()));
}

inline Matrix ad(const LieAlgebra& alg, const Vector& x) {
  check_length(alg, x);
  Matrix out = Matrix::Zero(alg.dim(), alg.dim());
  for (int i = 0; i < alg.dim(); ++i)
    if (x(i) != 0.0) out += x(i) * alg.ad_basis(i);
  return out;
}

inline Vector bracket(const LieAlgebra& alg, const Vector& x, const Vector& y) {
  check_length(alg, y);
  return ad(alg, x) * y;
}

/// max over i < j < k of the sup-norm of the cyclic Jacobi sum on basis vectors.
inline double jacobi_residual(const LieAlgebra& alg) {
  const int n = alg.dim();
  double worst = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        Vector s = alg.ad_basis(i) * alg.bracket_basis(j, k) + alg.ad_basis(j) * alg.bracket_basis(k, i) +
                   alg.ad_basis(k) * alg.bracket_basis(i, j);
        worst = std::max(worst, s.cwiseAbs().maxCoeff());
      }
  return worst;
}

/// Span of [u, v] for u in span(a), v in span(b).
inline Matrix bracket_span(const LieAlgebra& alg, const Matrix& a, const Matrix& b, double rtol) {
  const int n = alg.dim();
  Matrix spanning(n, a.cols() * b.cols());
  Eigen::Index c = 0;
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    Matrix adu = ad(alg, a.col(i));
    for (Eigen::Index j = 0; j < b.cols(); ++j) spanning.col(c++) = adu * b.col(j);
  }
  return span_basis(spanning, rtol);
}

inline std::vector<SubspaceBasis> derived_series(const LieAlgebra& alg, const Tolerances& tol = {}) {
  const int n = alg.dim();
  std::vector<SubspaceBasis> out{SubspaceBasis::whole(n)};
  while (out.back().dim() > 0) {
    Matrix next = bracket_span(alg, out.back().vectors, out.back().vectors, tol.rank);
    if (next.cols() == out.back().dim()) break;
    out.push_back({n, next});
  }
  return out;
}

inline std::vector<SubspaceBasis> lower_central_series(const LieAlgebra& alg, const Tolerances& tol = {}) {
  const int n = alg.dim();
  std::vector<SubspaceBasis> out{SubspaceBasis::whole(n)};
  const Matrix all = Matrix::Identity(n, n);
  while (out.back().dim() > 0) {
    Matrix next = bracket_span(alg, all, out.back().vectors, tol.rank);
    if (next.cols() == out.back().dim()) break;
    out.push_back({n, next});
  }
  return out;
}

inline bool is_solvable(const LieAlgebra& alg, const Tolerances& tol = {}) {
  return derived_series(alg, tol).back().dim() == 0;
}

inline bool is_nilpotent(const LieAlgebra& alg, const Tolerances& tol = {}) {
  return lower_central_series(alg, tol).back().dim() == 0;
}

/// t[i] = tr ad(e_i).
inline Vector ad_traces(const LieAlgebra& alg) {
  Vector t(alg.dim());
  for (int i = 0; i < alg.dim(); ++i) t(i) = alg.ad_basis(i).trace();
  return t;
}

inline bool is_unimodular(const LieAlgebra& alg, const Tolerances& tol = {}) {
  return alg.dim() == 0 || ad_traces(alg).cwiseAbs().maxCoeff() <= tol.jacobi;
}

struct Diagnostics {
  bool antisymmetry_ok = true;
  double jacobi_residual = 0.0;
  bool valid = true;
  bool solvable = false;
  bool nilpotent = false;
  bool unimodular = false;
  std::vector<int> derived_dims;
  std::vector<int> lower_central_dims;
};

inline Diagnostics validate(const LieAlgebra& alg, const Tolerances& tol = {}) {
  Diagnostics d;
  d.jacobi_residual = jacobi_residual(alg);
  d.valid = d.jacobi_residual <= tol.jacobi;
  if (!d.valid) return d;
  for (const auto& s : derived_series(alg, tol)) d.derived_dims.push_back(s.dim());
  for (const auto& s : lower_central_series(alg, tol)) d.lower_central_dims.push_back(s.dim());
  d.solvable = d.derived_dims.back() == 0;
  d.nilpotent = d.lower_central_dims.back() == 0;
  d.unimodular = is_unimodular(alg, tol);
  return d;
}

inline void require_valid(const LieAlgebra& alg, const Tolerances& tol) {
  const double r = jacobi_residual(alg);
  if (r > tol.jacobi)
    throw Error(ErrorKind::InvalidAlgebra, "Jacobi residual " + std::to_string(r) + " exceeds tolerance");
}

/// sup over basis pairs of |D[x,y] - [Dx,y] - [x,Dy]|.
inline double derivation_residual(const LieAlgebra& alg, const Matrix& d) {
  const int n = alg.dim();
  if (d.rows() != n || d.cols() != n) throw Error(ErrorKind::DimensionMismatch, "derivation shape");
  double worst = 0.0;
  for (int i = 0; i < n; ++i) {
    Matrix lhs = d * alg.ad_basis(i) - alg.ad_basis(i) * d - ad(alg, d.col(i));
    worst = std::max(worst, max_abs(lhs));
  }
  return worst;
}

inline bool is_ideal(const LieAlgebra& alg, const Matrix& sub, double rtol) {
  const Matrix all = Matrix::Identity(alg.dim(), alg.dim());
  return span_contains(sub, bracket_span(alg, all, sub, rtol), rtol);
}

/// Structure constants of the subalgebra spanned by `sub` (columns), written in
/// that basis. Requires span(sub) to be closed under the bracket.
inline LieAlgebra restrict_to(const LieAlgebra& alg, const Matrix& sub, std::vector<std::string> names) {
  const Eigen::Index m = sub.cols();
  auto solver = sub.completeOrthogonalDecomposition();
  std::vector<Matrix> ad_sub(m, Matrix::Zero(m, m));
  for (Eigen::Index i = 0; i < m; ++i) {
    Matrix adu = ad(alg, sub.col(i));
    ad_sub[i] = solver.solve(adu * sub);
  }
  // clean round-off so the restricted constants stay exactly antisymmetric
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      for (Eigen::Index k = 0; k < m; ++k) {
        double a = ad_sub[i](k, j);
        if (std::abs(a) < 1e-13) ad_sub[i](k, j) = 0.0;
      }
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i; j < m; ++j)
      for (Eigen::Index k = 0; k < m; ++k) {
        double s = 0.5 * (ad_sub[i](k, j) - ad_sub[j](k, i));
        ad_sub[i](k, j) = s;
        ad_sub[j](k, i) = -s;
      }
  return LieAlgebra::from_ad(std::move(names), ad_sub);
}

/// Maximal nilpotent ideal of a solvable algebra.
///
/// Every root of ad (a weight of the complexified adjoint action) is a linear
/// functional vanishing on [s,s], and the nilradical is their common kernel.
/// For a generic u the functionals v -> tr((ad u)^q ad v), q = 0..n-1, span the
/// same space as the roots (Vandermonde argument on the distinct root values at
/// u), so the nilradical is [s,s] plus the null space of that linear system on
/// a complement. Several random u are stacked for conditioning.
inline SubspaceBasis nilradical(const LieAlgebra& alg, const Tolerances& tol = {}) {
  require_valid(alg, tol);
  const int n = alg.dim();
  auto series = derived_series(alg, tol);
  if (series.back().dim() != 0) throw Error(ErrorKind::NotSolvable, "nilradical requires a solvable algebra");
  const Matrix derived = series.size() > 1 ? series[1].vectors : Matrix(n, 0);
  const Matrix complement = orthogonal_complement(derived, Matrix::Identity(n, n), tol.rank);
  const Eigen::Index r = complement.cols();
  if (r == 0) return {n, derived};

  std::mt19937_64 rng(0x5eed'1234ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int samples = static_cast<int>(r) + 2;
  Matrix rows(samples * n, r);
  Eigen::Index row = 0;
  for (int s = 0; s < samples; ++s) {
    Vector coeff(r);
    for (Eigen::Index a = 0; a < r; ++a) coeff(a) = normal(rng);
    Matrix adu = ad(alg, complement * coeff);
    const double norm = adu.norm();
    if (norm > 0.0) adu /= norm;
    Matrix power = Matrix::Identity(n, n);
    for (int q = 0; q < n; ++q) {
      for (Eigen::Index a = 0; a < r; ++a) rows(row, a) = (power * ad(alg, complement.col(a))).trace();
      const double rn = rows.row(row).norm();
      if (rn > 0.0) rows.row(row) /= rn;
      ++row;
      power = power * adu;
    }
  }
  Matrix kernel = null_space(rows, tol.eig);
  Matrix result = derived;
  if (kernel.cols() > 0) result = sum_of(derived, complement * kernel, tol.rank);
  else result = span_basis(derived, tol.rank);
  return {n, result};
}

/// Direct sum a (+) b, brackets block-diagonal.
inline LieAlgebra direct_sum(const LieAlgebra& a, const LieAlgebra& b) {
  std::vector<std::string> names = a.basis_names();
  names.insert(names.end(), b.basis_names().begin(), b.basis_names().end());
  std::vector<BracketEntry> entries = a.entries();
  for (auto e : b.entries()) {
    e.i += a.dim();
    e.j += a.dim();
    e.k += a.dim();
    entries.push_back(e);
  }
  return LieAlgebra(std::move(names), entries);
}

/// t ⋉ b for commuting derivations D_a of b: [t_a, y] = D_a y and [t_a, t_b] = 0.
/// The new generators come first in the basis.
inline LieAlgebra semidirect(const std::vector<Matrix>& derivs, const LieAlgebra& b,
                             std::vector<std::string> generator_names = {}, const Tolerances& tol = {}) {
  const int m = static_cast<int>(derivs.size());
  const int n = b.dim();
  for (int a = 0; a < m; ++a) {
    if (derivs[a].rows() != n || derivs[a].cols() != n)
      throw Error(ErrorKind::DimensionMismatch, "derivation has wrong shape");
    const double r = derivation_residual(b, derivs[a]);
    if (r >= tol.deriv)
      throw Error(ErrorKind::NotADerivation,
                  "generator " + std::to_string(a) + " has Leibniz residual " + std::to_string(r));
  }
  for (int a = 0; a < m; ++a)
    for (int c = a + 1; c < m; ++c)
      if (max_abs(commutator(derivs[a], derivs[c])) >= tol.comm)
        throw Error(ErrorKind::NonCommutingGenerators,
                    "generators " + std::to_string(a) + " and " + std::to_string(c) + " do not commute");
  if (generator_names.empty())
    for (int a = 0; a < m; ++a) generator_names.push_back("T" + std::to_string(a + 1));
  if (static_cast<int>(generator_names.size()) != m)
    throw Error(ErrorKind::DimensionMismatch, "one name per generator required");
  std::vector<std::string> names = generator_names;
  names.insert(names.end(), b.basis_names().begin(), b.basis_names().end());
  std::vector<BracketEntry> entries;
  for (int a = 0; a < m; ++a)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (derivs[a](k, j) != 0.0) entries.push_back({a, m + j, m + k, derivs[a](k, j)});
  for (auto e : b.entries()) {
    e.i += m;
    e.j += m;
    e.k += m;
    entries.push_back(e);
  }
  return LieAlgebra(std::move(names), entries);
}

inline LieAlgebra abelian(int n) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("E" + std::to_string(i + 1));
  return LieAlgebra(std::move(names), {});
}

}  // namespace rsoliton

#endif  // RSOLITON_LIE_ALGEBRA_HPP
