#ifndef RSOLITON_MODIFICATION_HPP
#define RSOLITON_MODIFICATION_HPP

// Modifications r = (id + phi) s of a solvsoliton s by a linear map phi from s
// into its skew-symmetric derivations k, and the tests that decide whether the
// resulting solvable group is again a solvsoliton.

#include "rsoliton/common.hpp"
#include "rsoliton/curvature.hpp"
#include "rsoliton/lie_algebra.hpp"
#include "rsoliton/linalg.hpp"
#include "rsoliton/soliton.hpp"

#include <algorithm>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace rsoliton {

/// phi: s -> k, stored as coefficients over a basis of k:
/// phi(e_i) = sum_a coeffs(i, a) * kbasis[a].
class ModificationMap {
 public:
  ModificationMap() = default;

  ModificationMap(MetricLieAlgebra source, std::vector<Matrix> kbasis, Matrix coeffs)
      : source_(std::move(source)), kbasis_(std::move(kbasis)), coeffs_(std::move(coeffs)) {
    const int n = source_.dim();
    if (coeffs_.rows() != n || coeffs_.cols() != static_cast<Eigen::Index>(kbasis_.size()))
      throw Error(ErrorKind::DimensionMismatch, "phi coefficients must be dim x |kbasis|");
    for (const auto& k : kbasis_)
      if (k.rows() != n || k.cols() != n) throw Error(ErrorKind::DimensionMismatch, "k basis matrix shape");
    images_.assign(n, Matrix::Zero(n, n));
    for (int i = 0; i < n; ++i)
      for (size_t a = 0; a < kbasis_.size(); ++a)
        if (coeffs_(i, a) != 0.0) images_[i] += coeffs_(i, a) * kbasis_[a];
  }

  /// The zero map over the computed k of `source`.
  static ModificationMap zero(const MetricLieAlgebra& source, const Tolerances& tol = {}) {
    auto k = skew_derivations(source, tol).matrices;
    const Eigen::Index kd = static_cast<Eigen::Index>(k.size());
    return ModificationMap(source, std::move(k), Matrix::Zero(source.dim(), kd));
  }

  /// From explicit image matrices; coefficients are taken over `kbasis`.
  static ModificationMap from_images(const MetricLieAlgebra& source, std::vector<Matrix> kbasis,
                                     const std::vector<Matrix>& images) {
    const int n = source.dim();
    if (static_cast<int>(images.size()) != n) throw Error(ErrorKind::DimensionMismatch, "one image per basis vector");
    Matrix design(n * n, kbasis.size());
    for (size_t a = 0; a < kbasis.size(); ++a) design.col(a) = vec(kbasis[a]);
    Matrix coeffs = Matrix::Zero(n, kbasis.size());
    if (!kbasis.empty()) {
      auto cod = design.completeOrthogonalDecomposition();
      for (int i = 0; i < n; ++i) {
        Vector c = cod.solve(vec(images[i]));
        for (Eigen::Index a = 0; a < c.size(); ++a)
          if (std::abs(c(a)) < 1e-14) c(a) = 0.0;
        coeffs.row(i) = c.transpose();
      }
    }
    ModificationMap m(source, std::move(kbasis), coeffs);
    m.images_ = images;  // keep exact inputs; in-k residual reports any mismatch
    return m;
  }

  const MetricLieAlgebra& source() const { return source_; }
  const std::vector<Matrix>& kbasis() const { return kbasis_; }
  const Matrix& coeffs() const { return coeffs_; }
  const std::vector<Matrix>& images() const { return images_; }
  const Matrix& image(int i) const { return images_[i]; }

  Matrix apply(const Vector& x) const {
    const int n = source_.dim();
    Matrix out = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
      if (x(i) != 0.0) out += x(i) * images_[i];
    return out;
  }

  bool is_zero() const {
    for (const auto& m : images_)
      if (max_abs(m) != 0.0) return false;
    return true;
  }

 private:
  MetricLieAlgebra source_;
  std::vector<Matrix> kbasis_;
  Matrix coeffs_;
  std::vector<Matrix> images_;
};

struct ConditionReport {
  double derived_residual = 0.0;  // (i) phi on [s,s]
  double abelian_residual = 0.0;  // (ii) commutators of images
  double in_k_residual = 0.0;     // images are skew-symmetric derivations
  double closure_residual = 0.0;  // phi(phi(x) y), i.e. [r,r] ⊂ Ker phi
  bool kills_derived = false;
  bool abelian = false;
  bool in_k = false;
  bool closed = false;
  bool all_pass = false;
  SolitonClass source_class = SolitonClass::none;
};

/// Checks (i) [s,s] ⊂ Ker phi, (ii) phi(s) abelian, images in k, and closure
/// [r,r] ⊂ Ker phi. The last one is what makes r a subalgebra of k ⋉ s; it does
/// not follow from (i) and (ii) for arbitrary linear maps.
inline ConditionReport validate_modification(const ModificationMap& phi, const Tolerances& tol = {}) {
  const MetricLieAlgebra& src = phi.source();
  const LieAlgebra& alg = src.algebra();
  const int n = src.dim();
  require_valid(alg, tol);
  if (!is_solvable(alg, tol)) throw Error(ErrorKind::SourceNotSolvsoliton, "source algebra is not solvable");
  const SolitonVerdict verdict = classify(src, tol);
  if (!is_algebraic_class(verdict.cls))
    throw Error(ErrorKind::SourceNotSolvsoliton,
                "source metric classifies as " + std::string(to_string(verdict.cls)));

  ConditionReport r;
  r.source_class = verdict.cls;
  const auto series = derived_series(alg, tol);
  const Matrix derived = series.size() > 1 ? series[1].vectors : Matrix(n, 0);
  for (Eigen::Index c = 0; c < derived.cols(); ++c)
    r.derived_residual = std::max(r.derived_residual, max_abs(phi.apply(derived.col(c))));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      r.abelian_residual = std::max(r.abelian_residual, max_abs(commutator(phi.image(i), phi.image(j))));
  for (int i = 0; i < n; ++i) {
    const Matrix& img = phi.image(i);
    r.in_k_residual = std::max(r.in_k_residual, derivation_residual(alg, img));
    r.in_k_residual = std::max(r.in_k_residual, max_abs(src.gram() * img + img.transpose() * src.gram()));
    for (int j = 0; j < n; ++j)
      r.closure_residual = std::max(r.closure_residual, max_abs(phi.apply(img.col(j))));
  }
  const double cut = tol.rank * 100;  // coefficients come from SVD bases, allow round-off
  r.kills_derived = r.derived_residual <= cut;
  r.abelian = r.abelian_residual < tol.comm;
  r.in_k = r.in_k_residual < tol.deriv;
  r.closed = r.closure_residual <= cut;
  r.all_pass = r.kills_derived && r.abelian && r.in_k && r.closed;
  return r;
}

struct ModifiedAlgebra {
  MetricLieAlgebra r;  // basis {(id + phi) e_i}, metric transported from the source
  std::shared_ptr<const ModificationMap> provenance;
};

/// Structure constants of r from [X + phi(X), Y + phi(Y)] = [X,Y] + phi(X)Y - phi(Y)X,
/// written in the basis {(id + phi) e_i}. The Gram matrix of the source is
/// reused unchanged, which is exactly <(id+phi)x, (id+phi)y>' = <x, y>.
inline ModifiedAlgebra build_modification(const ModificationMap& phi, const Tolerances& tol = {}) {
  const ConditionReport cond = validate_modification(phi, tol);
  if (!cond.all_pass) {
    std::string why;
    if (!cond.kills_derived) why += " (i) phi does not vanish on [s,s];";
    if (!cond.abelian) why += " (ii) phi(s) is not abelian;";
    if (!cond.in_k) why += " images are not skew-symmetric derivations;";
    if (!cond.closed) why += " [r,r] is not contained in Ker phi;";
    throw Error(ErrorKind::ConditionsViolated, "modification conditions fail:" + why);
  }
  const MetricLieAlgebra& src = phi.source();
  const LieAlgebra& alg = src.algebra();
  const int n = src.dim();
  std::vector<Matrix> ad_r(n);
  for (int i = 0; i < n; ++i) {
    ad_r[i] = alg.ad_basis(i) + phi.image(i);
    for (int j = 0; j < n; ++j) ad_r[i].col(j) -= phi.image(j).col(i);
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k)
        if (std::abs(ad_r[i](k, j)) < 1e-14) ad_r[i](k, j) = 0.0;
  // exact antisymmetry: average the two computed halves
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const double s = 0.5 * (ad_r[i](k, j) - ad_r[j](k, i));
        ad_r[i](k, j) = s;
        ad_r[j](k, i) = -s;
      }
  std::vector<std::string> names = alg.basis_names();
  for (int i = 0; i < n; ++i)
    if (max_abs(phi.image(i)) != 0.0) names[i] += "~";
  LieAlgebra r = LieAlgebra::from_ad(std::move(names), ad_r);
  const double jac = jacobi_residual(r);
  if (jac > tol.jacobi)
    throw Error(ErrorKind::JacobiFailure, "modified algebra violates Jacobi (residual " + std::to_string(jac) + ")");
  if (!is_solvable(r, tol)) throw Error(ErrorKind::JacobiFailure, "modified algebra is not solvable");
  return {MetricLieAlgebra(std::move(r), src.gram()), std::make_shared<const ModificationMap>(phi)};
}

struct CriterionVerdict {
  std::optional<bool> nil_in_kernel;  // (ii), needs provenance
  bool reductive_elements = false;    // (iii)
  bool abelian_reductive_complement = false;  // (iv)
  // details
  int nilradical_dim = 0;
  Matrix complement;  // n(r)^⊥ in r coordinates
  std::vector<bool> basis_semisimple;
  std::vector<double> basis_max_real;
  int samples_checked = 0;
  bool complement_abelian = false;
  int hyperbolic_rank = 0;  // rank of the real-part weight matrix on the complement
  double nil_kernel_residual = 0.0;
  bool solvsoliton = false;
  bool consistent = true;
};

namespace detail {

/// Real parts of the joint eigenvalues of a commuting family of semisimple
/// operators, one column per operator. Uses the eigenbasis of a generic
/// combination, in which every member is (block-)diagonal.
inline Matrix joint_real_weights(const std::vector<Matrix>& ops, std::mt19937_64& rng) {
  if (ops.empty()) return Matrix();
  const Eigen::Index n = ops.front().rows();
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix generic = Matrix::Zero(n, n);
  for (const auto& o : ops) generic += normal(rng) * o;
  Eigen::EigenSolver<Matrix> es(generic, true);
  const CMatrix v = es.eigenvectors();
  const CMatrix vinv = v.inverse();
  Matrix w(n, ops.size());
  for (size_t a = 0; a < ops.size(); ++a) {
    CMatrix d = vinv * ops[a].cast<std::complex<double>>() * v;
    for (Eigen::Index k = 0; k < n; ++k) w(k, a) = d(k, k).real();
  }
  return w;
}

}  // namespace detail

/// Decides whether the solvable metric Lie algebra r is a solvsoliton by the
/// three equivalent conditions: (ii) n(s) ⊂ Ker phi (provenance needed), (iii)
/// ad of n(r)^⊥ consists of semisimple operators whose spectra are not purely
/// imaginary (basis plus random unit combinations), (iv) n(r)^⊥ is an abelian
/// subalgebra acting semisimply with no nonzero element of purely imaginary
/// spectrum (checked exactly on a basis through the joint weights).
inline CriterionVerdict solvsoliton_criterion(const MetricLieAlgebra& r, const ModificationMap* provenance = nullptr,
                                              const Tolerances& tol = {}, int samples = 25) {
  const LieAlgebra& alg = r.algebra();
  const int n = r.dim();
  if (!is_solvable(alg, tol)) throw Error(ErrorKind::NotSolvable, "criterion needs a solvable algebra");
  CriterionVerdict v;
  const Matrix nil = nilradical(alg, tol).vectors;
  v.nilradical_dim = static_cast<int>(nil.cols());
  v.complement = orthogonal_complement(nil, r.gram(), tol.rank);
  const Matrix comp_on = q_orthonormalize(v.complement, r.gram());
  const Eigen::Index m = comp_on.cols();

  std::vector<Matrix> ads;
  bool basis_ok = true;
  for (Eigen::Index i = 0; i < m; ++i) {
    ads.push_back(ad(alg, comp_on.col(i)));
    const SemisimpleTest t = semisimplicity(ads.back(), tol);
    v.basis_semisimple.push_back(t.semisimple);
    v.basis_max_real.push_back(t.max_abs_real);
    if (!t.semisimple || t.max_abs_real <= tol.eig) basis_ok = false;
  }

  bool samples_ok = basis_ok;
  std::mt19937_64 rng(0xC0FFEEULL + static_cast<std::uint64_t>(n));
  std::normal_distribution<double> normal(0.0, 1.0);
  if (m > 1) {
    for (int s = 0; s < samples && samples_ok; ++s) {
      Vector coeff(m);
      for (Eigen::Index i = 0; i < m; ++i) coeff(i) = normal(rng);
      coeff.normalize();
      const SemisimpleTest t = semisimplicity(ad(alg, comp_on * coeff), tol);
      ++v.samples_checked;
      if (!t.semisimple || t.max_abs_real <= tol.eig) samples_ok = false;
    }
  }
  v.reductive_elements = samples_ok;

  double abel = 0.0;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = i + 1; j < m; ++j) abel = std::max(abel, max_abs(bracket(alg, comp_on.col(i), comp_on.col(j))));
  v.complement_abelian = abel < tol.comm;
  bool all_basis_semisimple = true;
  for (bool b : v.basis_semisimple) all_basis_semisimple = all_basis_semisimple && b;
  if (v.complement_abelian && all_basis_semisimple && m > 0) {
    const Matrix w = detail::joint_real_weights(ads, rng);
    v.hyperbolic_rank = numerical_rank(w, tol.eig);
  }
  v.abelian_reductive_complement = v.complement_abelian && all_basis_semisimple && v.hyperbolic_rank == m;

  if (provenance != nullptr) {
    const MetricLieAlgebra& src = provenance->source();
    const Matrix src_nil = nilradical(src.algebra(), tol).vectors;
    for (Eigen::Index c = 0; c < src_nil.cols(); ++c)
      v.nil_kernel_residual = std::max(v.nil_kernel_residual, max_abs(provenance->apply(src_nil.col(c))));
    v.nil_in_kernel = v.nil_kernel_residual <= tol.rank * 100;
    v.consistent = (*v.nil_in_kernel == v.reductive_elements) && (*v.nil_in_kernel == v.abelian_reductive_complement);
  } else {
    v.consistent = v.reductive_elements == v.abelian_reductive_complement;
  }
  v.solvsoliton = v.nil_in_kernel.value_or(v.abelian_reductive_complement) && v.abelian_reductive_complement &&
                  v.reductive_elements;
  return v;
}

inline CriterionVerdict solvsoliton_criterion(const ModifiedAlgebra& mod, const Tolerances& tol = {}) {
  return solvsoliton_criterion(mod.r, mod.provenance.get(), tol);
}

struct ModificationStructureReport {
  double derived_residual = 0.0;  // (a)
  bool derived_in_kernel = false;
  bool kernel_containment = false;  // (b)
  double k_on_a_residual = 0.0;     // (c)
  double k_commutes_residual = 0.0;
  bool k_annihilates_a = false;
  bool n1_stable = false;  // (d)
  bool a_n0_stable = false;
  bool all_pass = false;
};

/// Properties every modification of a solvsoliton must have: (a) phi([s,s]) = 0,
/// (b) Ker(ad_r H~) ∩ [s,s] ⊂ Ker(ad_s H) ∩ [s,s] with H~ = (id+phi)H,
/// (c) k annihilates a = n^⊥ and commutes with ad A, (d) n1 = Im ad H and
/// a + n0 are k-stable.
inline ModificationStructureReport modification_structure_tests(const ModifiedAlgebra& mod, const Tolerances& tol = {}) {
  if (!mod.provenance) throw Error(ErrorKind::MissingProvenance, "modification structure tests need phi");
  const ModificationMap& phi = *mod.provenance;
  const MetricLieAlgebra& src = phi.source();
  const LieAlgebra& s = src.algebra();
  const int n = src.dim();
  if (!is_solvable(s, tol) || !is_solvable(mod.r.algebra(), tol))
    throw Error(ErrorKind::NotSolvable, "modification structure tests need solvable algebras");

  ModificationStructureReport rep;
  const auto series = derived_series(s, tol);
  const Matrix derived = series.size() > 1 ? series[1].vectors : Matrix(n, 0);
  for (Eigen::Index c = 0; c < derived.cols(); ++c)
    rep.derived_residual = std::max(rep.derived_residual, max_abs(phi.apply(derived.col(c))));
  rep.derived_in_kernel = rep.derived_residual <= tol.rank * 100;

  const Vector h = mean_curvature_vector(src);
  const Matrix ker_r = null_space(ad(mod.r.algebra(), h), tol.rank);
  const Matrix ker_s = null_space(ad(s, h), tol.rank);
  const Matrix k_r = intersect(ker_r, derived, tol.rank);
  const Matrix k_s = intersect(ker_s, derived, tol.rank);
  rep.kernel_containment = span_contains(k_s, k_r, 1e-9);

  const Matrix nil = nilradical(s, tol).vectors;
  const Matrix a = orthogonal_complement(nil, src.gram(), tol.rank);
  const Matrix adh = ad(s, h);
  const Matrix n1 = span_basis(adh, tol.rank);
  const Matrix n0 = intersect(nil, null_space(adh, tol.rank), tol.rank);
  const Matrix a_n0 = sum_of(a, n0, tol.rank);
  const DerivationBasis k = skew_derivations(src, tol);
  rep.n1_stable = true;
  rep.a_n0_stable = true;
  for (const auto& e : k.matrices) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      rep.k_on_a_residual = std::max(rep.k_on_a_residual, max_abs(e * a.col(c)));
      rep.k_commutes_residual = std::max(rep.k_commutes_residual, max_abs(commutator(e, ad(s, a.col(c)))));
    }
    if (!span_contains(n1, e * n1, 1e-9)) rep.n1_stable = false;
    if (!span_contains(a_n0, e * a_n0, 1e-9)) rep.a_n0_stable = false;
  }
  rep.k_annihilates_a = rep.k_on_a_residual < tol.comm * 100 && rep.k_commutes_residual < tol.comm * 100;
  rep.all_pass = rep.derived_in_kernel && rep.kernel_containment && rep.k_annihilates_a && rep.n1_stable && rep.a_n0_stable;
  return rep;
}

/// A maximal abelian subalgebra of k: the centraliser of a generic element.
inline std::vector<Matrix> maximal_torus(const DerivationBasis& k, std::mt19937_64& rng, double rtol) {
  const int kd = k.dim();
  if (kd == 0) return {};
  const int n = k.dim_algebra;
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix generic = Matrix::Zero(n, n);
  for (const auto& e : k.matrices) generic += normal(rng) * e;
  Matrix system(n * n, kd);
  for (int a = 0; a < kd; ++a) system.col(a) = vec(commutator(generic, k.matrices[a]));
  const Matrix ker = null_space(system, rtol);
  std::vector<Matrix> torus;
  for (Eigen::Index c = 0; c < ker.cols(); ++c) {
    Matrix t = Matrix::Zero(n, n);
    for (int a = 0; a < kd; ++a) t += ker(a, c) * k.matrices[a];
    torus.push_back(t / max_abs(t));
  }
  return torus;
}

/// Random map phi satisfying every validity condition. Images are drawn in a
/// random abelian t inside a maximal torus of k; generators of t are chosen to
/// kill random subsets of the torus weights so that they have large kernels.
/// phi is supported on the Q-complement of [s,s] + sum Im(t), which makes
/// (i), (ii) and closure hold by construction.
inline ModificationMap random_modification(const MetricLieAlgebra& source, std::mt19937_64& rng,
                                           const Tolerances& tol = {}) {
  const int n = source.dim();
  const DerivationBasis k = skew_derivations(source, tol);
  const std::vector<Matrix> torus = maximal_torus(k, rng, 1e-8);
  std::vector<Matrix> kb = k.matrices;
  if (torus.empty()) return ModificationMap(source, kb, Matrix::Zero(n, kb.size()));

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  // |imaginary weight| rows: eigenvalues of torus elements are i*mu
  Matrix weights;
  {
    const Eigen::Index r = static_cast<Eigen::Index>(torus.size());
    Matrix generic = Matrix::Zero(n, n);
    for (const auto& t : torus) generic += normal(rng) * t;
    Eigen::EigenSolver<Matrix> es(generic, true);
    const CMatrix v = es.eigenvectors();
    const CMatrix vinv = v.inverse();
    weights.resize(n, r);
    for (Eigen::Index a = 0; a < r; ++a) {
      CMatrix d = vinv * torus[a].cast<std::complex<double>>() * v;
      for (int i = 0; i < n; ++i) weights(i, a) = d(i, i).imag();
    }
  }
  const int gens = 1 + static_cast<int>(unit(rng) * std::min<size_t>(2, torus.size()));
  std::vector<Matrix> t_gens;
  for (int g = 0; g < gens; ++g) {
    // greedily kill random weights while some nonzero torus element survives
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);
    Matrix kill(0, weights.cols());
    Matrix free = Matrix::Identity(weights.cols(), weights.cols());
    for (int i : order) {
      if (weights.row(i).norm() <= 1e-9 || unit(rng) >= 0.5) continue;
      Matrix trial(kill.rows() + 1, weights.cols());
      trial << kill, weights.row(i);
      const Matrix trial_free = null_space(trial, 1e-8);
      if (trial_free.cols() == 0) continue;
      kill = trial;
      free = trial_free;
    }
    Vector c = free * Vector::NullaryExpr(free.cols(), [&]() { return normal(rng); });
    Matrix t = Matrix::Zero(n, n);
    for (Eigen::Index a = 0; a < c.size(); ++a) t += c(a) * torus[a];
    if (max_abs(t) < 1e-9) continue;
    t_gens.push_back(t / max_abs(t));
  }
  if (t_gens.empty()) return ModificationMap(source, kb, Matrix::Zero(n, kb.size()));

  const auto series = derived_series(source.algebra(), tol);
  Matrix blocked = series.size() > 1 ? series[1].vectors : Matrix(n, 0);
  for (const auto& t : t_gens) blocked = sum_of(blocked, t, tol.rank);
  const Matrix domain = orthogonal_complement(blocked, source.gram(), tol.rank);
  std::vector<Matrix> images(n, Matrix::Zero(n, n));
  if (domain.cols() > 0) {
    for (const auto& t : t_gens) {
      Vector omega = domain * Vector::NullaryExpr(domain.cols(), [&]() { return normal(rng); });
      const double norm = omega.norm();
      if (norm == 0.0) continue;
      const double size = 0.5 + 1.5 * unit(rng);
      omega *= size / norm;
      const Vector functional = source.gram() * omega;  // l(v) = <omega, v>_Q
      for (int i = 0; i < n; ++i) images[i] += functional(i) * t;
    }
  }
  return ModificationMap::from_images(source, kb, images);
}

}  // namespace rsoliton

#endif  // RSOLITON_MODIFICATION_HPP
