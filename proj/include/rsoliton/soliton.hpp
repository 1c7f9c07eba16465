#ifndef RSOLITON_SOLITON_HPP
#define RSOLITON_SOLITON_HPP

#include "rsoliton/common.hpp"
#include "rsoliton/curvature.hpp"
#include "rsoliton/lie_algebra.hpp"
#include "rsoliton/linalg.hpp"

#include <cmath>
#include <cstdint>
#include <functional>
#include <future>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace rsoliton {

/// Matrix of the linear map gl(n) -> R^k given by `f`, acting on vec(D).
inline Matrix operator_matrix(int n, const std::function<Vector(const Matrix&)>& f) {
  std::vector<Vector> cols;
  for (int c = 0; c < n * n; ++c) {
    Matrix e = Matrix::Zero(n, n);
    e(c % n, c / n) = 1.0;
    cols.push_back(f(e));
  }
  Matrix out(cols.front().size(), n * n);
  for (int c = 0; c < n * n; ++c) out.col(c) = cols[c];
  return out;
}

/// Leibniz defect D -> (D ad_i - ad_i D - ad(D e_i))_i stacked.
inline Matrix leibniz_system(const LieAlgebra& alg) {
  const int n = alg.dim();
  return operator_matrix(n, [&](const Matrix& d) {
    Vector out(n * n * n);
    for (int i = 0; i < n; ++i)
      out.segment(i * n * n, n * n) = vec(d * alg.ad_basis(i) - alg.ad_basis(i) * d - ad(alg, d.col(i)));
    return out;
  });
}

/// Basis of a space of derivations (Der(g) or the skew-symmetric part of it).
struct DerivationBasis {
  int dim_algebra = 0;
  std::vector<Matrix> matrices;

  int dim() const { return static_cast<int>(matrices.size()); }
};

inline DerivationBasis basis_from_kernel(const Matrix& system, int n, double rtol) {
  Matrix ker = span_basis(null_space(system, rtol), rtol);
  DerivationBasis b{n, {}};
  for (Eigen::Index c = 0; c < ker.cols(); ++c) b.matrices.push_back(unvec(ker.col(c), n));
  return b;
}

inline DerivationBasis derivation_algebra(const LieAlgebra& alg, const Tolerances& tol = {}) {
  require_valid(alg, tol);
  return basis_from_kernel(leibniz_system(alg), alg.dim(), tol.rank);
}

/// k = so(Q) ∩ Der(g).
inline DerivationBasis skew_derivations(const MetricLieAlgebra& m, const Tolerances& tol = {}) {
  const LieAlgebra& alg = m.algebra();
  require_valid(alg, tol);
  const int n = alg.dim();
  const Matrix& q = m.gram();
  Matrix leibniz = leibniz_system(alg);
  Matrix skew = operator_matrix(n, [&](const Matrix& d) { return vec(q * d + d.transpose() * q); });
  Matrix system(leibniz.rows() + skew.rows(), n * n);
  system << leibniz, skew;
  return basis_from_kernel(system, n, tol.rank);
}

enum class SolitonClass { flat, einstein, algebraic, semi_algebraic, none };

inline std::string_view to_string(SolitonClass c) {
  switch (c) {
    case SolitonClass::flat: return "flat";
    case SolitonClass::einstein: return "einstein";
    case SolitonClass::algebraic: return "algebraic";
    case SolitonClass::semi_algebraic: return "semi_algebraic";
    case SolitonClass::none: return "none";
  }
  return "none";
}

inline SolitonClass soliton_class_from_string(std::string_view s) {
  for (auto c : {SolitonClass::flat, SolitonClass::einstein, SolitonClass::algebraic,
                 SolitonClass::semi_algebraic, SolitonClass::none})
    if (to_string(c) == s) return c;
  throw Error(ErrorKind::SchemaError, "unknown soliton class '" + std::string(s) + "'");
}

/// True for the classes that satisfy Ric = c Id + D with D a derivation.
inline bool is_algebraic_class(SolitonClass c) {
  return c == SolitonClass::flat || c == SolitonClass::einstein || c == SolitonClass::algebraic;
}

struct StageResiduals {
  double flat = 0.0;
  double einstein = 0.0;
  double algebraic = 0.0;
  double semi_algebraic = 0.0;
};

struct SolitonVerdict {
  SolitonClass cls = SolitonClass::none;
  double c = 0.0;
  Matrix d;               // derivation of the winning stage (zero for flat/einstein)
  double residual = 0.0;  // sup-norm residual of the winning stage (semi-algebraic for none)
  StageResiduals stages;
  // semi-algebraic fit: Ric ≈ c_semi Id + S(d_semi)
  double c_semi = 0.0;
  Matrix d_semi;
  int der_dim = 0;
};

namespace detail {

/// Least-squares fit of `target` by c Id + sum y_b shape(U_b) where U_b is a
/// Frobenius-orthonormal basis of `space`, minimum-norm in (c, y).
struct AffineFit {
  double c = 0.0;
  Matrix d;  // sum y_b U_b (before applying `shape`)
  double residual_sup = 0.0;
  double residual_fro = 0.0;
};

inline Matrix orthonormal_span(const std::vector<Matrix>& mats, int n, double rtol) {
  if (mats.empty()) return Matrix(n * n, 0);
  Matrix cols(n * n, mats.size());
  for (size_t a = 0; a < mats.size(); ++a) cols.col(a) = vec(mats[a]);
  Eigen::JacobiSVD<Matrix> svd(cols, Eigen::ComputeThinU);
  const Vector s = svd.singularValues();
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > rtol * std::max(1.0, s(0))) ++r;
  return svd.matrixU().leftCols(r);
}

inline AffineFit affine_fit(const Matrix& target, const Matrix& space, bool symmetrise) {
  const Eigen::Index n = target.rows();
  Matrix design(n * n, 1 + space.cols());
  design.col(0) = vec(Matrix::Identity(n, n)) / std::sqrt(static_cast<double>(n));
  for (Eigen::Index b = 0; b < space.cols(); ++b) {
    Matrix u = unvec(space.col(b), n);
    if (symmetrise) u = (0.5 * (u + u.transpose())).eval();
    design.col(1 + b) = vec(u);
  }
  const Vector rhs = vec(target);
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(design);
  cod.setThreshold(1e-12);
  const Vector x = cod.solve(rhs);
  AffineFit fit;
  fit.c = x(0) / std::sqrt(static_cast<double>(n));
  Vector dv = space.cols() ? Vector(space * x.tail(space.cols())) : Vector(Vector::Zero(n * n));
  fit.d = unvec(dv, n);
  const Vector res = rhs - design * x;
  fit.residual_sup = res.size() ? res.cwiseAbs().maxCoeff() : 0.0;
  fit.residual_fro = res.norm();
  return fit;
}

}  // namespace detail

/// Classifies Ric as flat, Einstein, algebraic or semi-algebraic soliton, in
/// that order. All fits are done in a Q-orthonormal frame, so residuals and the
/// minimum-norm tie-break do not depend on the chosen basis.
inline SolitonVerdict classify(const MetricLieAlgebra& m, const Tolerances& tol = {},
                               const DerivationBasis* der = nullptr) {
  const int n = m.dim();
  require_valid(m.algebra(), tol);
  DerivationBasis local;
  if (der == nullptr) {
    local = derivation_algebra(m.algebra(), tol);
    der = &local;
  }
  const OrthonormalFrame frame = make_frame(m.gram());
  Matrix ric = frame.to_frame(ricci_operator(m).ric);
  ric = (0.5 * (ric + ric.transpose())).eval();

  std::vector<Matrix> der_frame;
  for (const auto& e : der->matrices) der_frame.push_back(frame.to_frame(e));
  const Matrix space = detail::orthonormal_span(der_frame, n, tol.rank);

  SolitonVerdict v;
  v.der_dim = der->dim();
  v.stages.flat = max_abs(ric);
  const double c_einstein = ric.trace() / n;
  v.stages.einstein = max_abs(ric - c_einstein * Matrix::Identity(n, n));
  const detail::AffineFit alg_fit = detail::affine_fit(ric, space, false);
  const detail::AffineFit semi_fit = detail::affine_fit(ric, space, true);
  v.stages.algebraic = alg_fit.residual_sup;
  v.stages.semi_algebraic = semi_fit.residual_sup;
  v.c_semi = semi_fit.c;
  v.d_semi = frame.from_frame(semi_fit.d);

  if (v.stages.flat < tol.soliton) {
    v.cls = SolitonClass::flat;
    v.c = 0.0;
    v.d = Matrix::Zero(n, n);
    v.residual = v.stages.flat;
  } else if (v.stages.einstein < tol.soliton) {
    v.cls = SolitonClass::einstein;
    v.c = c_einstein;
    v.d = Matrix::Zero(n, n);
    v.residual = v.stages.einstein;
  } else if (v.stages.algebraic < tol.soliton) {
    v.cls = SolitonClass::algebraic;
    v.c = alg_fit.c;
    v.d = frame.from_frame(alg_fit.d);
    v.residual = v.stages.algebraic;
  } else if (v.stages.semi_algebraic < tol.soliton) {
    v.cls = SolitonClass::semi_algebraic;
    v.c = semi_fit.c;
    v.d = v.d_semi;
    v.residual = v.stages.semi_algebraic;
  } else {
    v.cls = SolitonClass::none;
    v.c = alg_fit.c;
    v.d = frame.from_frame(alg_fit.d);
    v.residual = v.stages.semi_algebraic;
  }
  return v;
}

struct SemiAlgebraicCheck {
  bool applicable = false;  // the semi-algebraic fit succeeded
  bool holds = false;       // S(D) is a derivation
  double derivation_residual = 0.0;
};

/// On solvable algebras a semi-algebraic soliton Ric = c Id + S(D) has S(D)
/// itself a derivation. Evaluated on the semi-algebraic fit of the verdict.
inline SemiAlgebraicCheck semi_algebraic_implies_algebraic_check(const MetricLieAlgebra& m,
                                                                 const SolitonVerdict& verdict,
                                                                 const Tolerances& tol = {}) {
  if (!is_solvable(m.algebra(), tol))
    throw Error(ErrorKind::NotSolvable, "semi-algebraic check is only defined on solvable algebras");
  SemiAlgebraicCheck out;
  out.applicable = verdict.stages.semi_algebraic < tol.soliton;
  const Matrix sym = q_symmetric_part(verdict.d_semi, m.gram());
  out.derivation_residual = derivation_residual(m.algebra(), sym);
  out.holds = out.derivation_residual < tol.deriv;
  return out;
}

struct PreEinstein {
  Matrix d1;
  double trace_residual = 0.0;  // max_a |tr(D1 E_a) - tr(E_a)| over a full Der basis
  double derivation_residual = 0.0;
  std::vector<double> spectrum;
  bool used_fallback = false;
};

/// Pre-Einstein derivation of a nilpotent algebra: the derivation D1 with
/// tr(D1 E) = tr(E) for every derivation E. The system is solved on the
/// derivations that are symmetric for `gram` (identity when omitted), where the
/// trace form is positive definite; the equation is then checked on all of Der.
inline PreEinstein pre_einstein_derivation(const LieAlgebra& nil, const std::optional<Matrix>& gram = std::nullopt,
                                           const Tolerances& tol = {}) {
  const int n = nil.dim();
  require_valid(nil, tol);
  if (!is_nilpotent(nil, tol)) throw Error(ErrorKind::NotNilpotent, "pre-Einstein derivation needs a nilpotent algebra");
  const Matrix q = gram.value_or(Matrix::Identity(n, n));
  const DerivationBasis der = derivation_algebra(nil, tol);

  Matrix leibniz = leibniz_system(nil);
  Matrix sym = operator_matrix(n, [&](const Matrix& d) { return vec(q * d - d.transpose() * q); });
  Matrix system(leibniz.rows() + sym.rows(), n * n);
  system << leibniz, sym;
  const DerivationBasis symmetric = basis_from_kernel(system, n, tol.rank);

  auto solve_on = [&](const std::vector<Matrix>& span) -> Matrix {
    const int k = static_cast<int>(span.size());
    if (k == 0) return Matrix::Zero(n, n);
    Matrix g(k, k);
    Vector t(k);
    for (int a = 0; a < k; ++a) {
      t(a) = span[a].trace();
      for (int b = 0; b < k; ++b) g(a, b) = (span[a] * span[b]).trace();
    }
    Vector y = g.completeOrthogonalDecomposition().solve(t);
    Matrix d = Matrix::Zero(n, n);
    for (int a = 0; a < k; ++a) d += y(a) * span[a];
    return d;
  };
  auto residual_of = [&](const Matrix& d) {
    double r = 0.0;
    for (const auto& e : der.matrices) r = std::max(r, std::abs((d * e).trace() - e.trace()));
    return r;
  };

  PreEinstein out;
  out.d1 = solve_on(symmetric.matrices);
  out.trace_residual = residual_of(out.d1);
  if (out.trace_residual > tol.deriv * 10) {
    Matrix alt = solve_on(der.matrices);
    const double alt_res = residual_of(alt);
    if (alt_res < out.trace_residual) {
      out.d1 = alt;
      out.trace_residual = alt_res;
      out.used_fallback = true;
    }
  }
  if (out.trace_residual > 1e-8)
    throw Error(ErrorKind::SingularSystem,
                "trace equation unsolvable (residual " + std::to_string(out.trace_residual) + ")");
  out.derivation_residual = derivation_residual(nil, out.d1);
  out.spectrum = sorted_real_spectrum(out.d1);
  return out;
}

/// Orthonormal basis (columns) of span(basis) with respect to Q.
inline Matrix q_orthonormalize(const Matrix& basis, const Matrix& gram) {
  if (basis.cols() == 0) return basis;
  Matrix g = basis.transpose() * gram * basis;
  Eigen::LLT<Matrix> llt(g);
  Matrix lower = llt.matrixL();
  return lower.transpose().triangularView<Eigen::Upper>().solve<Eigen::OnTheRight>(basis);
}

struct StructureReport {
  int nilradical_dim = 0;
  Matrix nilradical;  // columns
  Matrix complement;  // Q-orthogonal complement a
  double abelian_residual = 0.0;
  bool abelian = false;
  double symmetric_residual = 0.0;
  bool ad_symmetric = false;
  std::vector<bool> complement_semisimple;
  bool derivation_applicable = false;
  double d_on_a_residual = 0.0;
  double d_on_n_residual = 0.0;
  bool derivation_shape = false;
  bool kernel_contained = false;
  Matrix image_ad_h;  // n1
  Matrix n0;          // n ∩ Ker ad H
  Vector mean_curvature;
  bool all_pass = false;
};

/// Structural checks of a solvsoliton: with n the nilradical and a = n^⊥,
/// (a) a is abelian, (b) each ad A|n is Q-symmetric, (c) D|a = 0 and
/// D|n = -c D1 - ad H|n, (d) Ker D ⊂ a + Im(ad H). The pre-Einstein derivation
/// D1 is normalised by tr(D1 E) = tr E, which pins the scale factor -c.
inline StructureReport solvsoliton_structure_check(const MetricLieAlgebra& m, const SolitonVerdict& verdict,
                                                   const Tolerances& tol = {}) {
  const LieAlgebra& alg = m.algebra();
  const Matrix& q = m.gram();
  const int n = alg.dim();
  if (!is_solvable(alg, tol)) throw Error(ErrorKind::NotSolvable, "structure check needs a solvable algebra");

  StructureReport r;
  r.nilradical = nilradical(alg, tol).vectors;
  r.nilradical_dim = static_cast<int>(r.nilradical.cols());
  r.complement = orthogonal_complement(r.nilradical, q, tol.rank);
  const Matrix nil_on = q_orthonormalize(r.nilradical, q);

  for (Eigen::Index i = 0; i < r.complement.cols(); ++i)
    for (Eigen::Index j = i + 1; j < r.complement.cols(); ++j)
      r.abelian_residual =
          std::max(r.abelian_residual, max_abs(bracket(alg, r.complement.col(i), r.complement.col(j))));
  r.abelian = r.abelian_residual < tol.comm;

  for (Eigen::Index i = 0; i < r.complement.cols(); ++i) {
    const Matrix ada = ad(alg, r.complement.col(i));
    const Matrix restricted = nil_on.transpose() * q * ada * nil_on;
    r.symmetric_residual = std::max(r.symmetric_residual, max_abs(restricted - restricted.transpose()));
    r.complement_semisimple.push_back(semisimplicity(ada, tol).semisimple);
  }
  r.ad_symmetric = r.symmetric_residual < tol.sym * scale_of(q);

  r.mean_curvature = mean_curvature_vector(m);
  const Matrix adh = ad(alg, r.mean_curvature);
  r.image_ad_h = span_basis(adh, tol.rank);
  r.n0 = intersect(r.nilradical, null_space(adh, tol.rank), tol.rank);

  r.derivation_applicable = is_algebraic_class(verdict.cls) && verdict.d.size() == n * n;
  if (r.derivation_applicable && r.nilradical_dim > 0) {
    const std::vector<std::string> names(r.nilradical_dim, "n");
    const LieAlgebra nil = restrict_to(alg, nil_on, std::vector<std::string>(names));
    const PreEinstein pe = pre_einstein_derivation(nil, Matrix::Identity(r.nilradical_dim, r.nilradical_dim), tol);
    for (Eigen::Index i = 0; i < r.complement.cols(); ++i)
      r.d_on_a_residual = std::max(r.d_on_a_residual, max_abs(verdict.d * r.complement.col(i)));
    const Matrix expected = nil_on * (-verdict.c * pe.d1) - adh * nil_on;
    r.d_on_n_residual = max_abs(verdict.d * nil_on - expected);
    const double cut = 1e-7 * std::max(1.0, max_abs(verdict.d));
    r.derivation_shape = r.d_on_a_residual < cut && r.d_on_n_residual < cut;
    const Matrix ker = null_space(verdict.d, 1e-9);
    r.kernel_contained = span_contains(sum_of(r.complement, r.image_ad_h, tol.rank), ker, 1e-9);
  } else if (r.derivation_applicable) {
    r.derivation_shape = max_abs(verdict.d) < 1e-7;
    r.kernel_contained = true;
  }
  r.all_pass = r.abelian && r.ad_symmetric && r.derivation_applicable && r.derivation_shape && r.kernel_contained;
  return r;
}

/// Scale-free objective: Frobenius distance of Ric from span{Id} + S(Der),
/// relative to |Ric|_F, in a Q-orthonormal frame.
inline double relative_soliton_residual(const MetricLieAlgebra& m, const DerivationBasis& der, double rtol) {
  const int n = m.dim();
  const OrthonormalFrame frame = make_frame(m.gram());
  Matrix ric = frame.to_frame(ricci_operator(m).ric);
  ric = (0.5 * (ric + ric.transpose())).eval();
  const double norm = ric.norm();
  if (norm < 1e-14) return 0.0;
  std::vector<Matrix> der_frame;
  for (const auto& e : der.matrices) der_frame.push_back(frame.to_frame(e));
  const Matrix space = detail::orthonormal_span(der_frame, n, rtol);
  return detail::affine_fit(ric, space, true).residual_fro / norm;
}

struct SearchResult {
  Matrix best_gram;
  double best_residual = std::numeric_limits<double>::infinity();
  int best_restart = -1;
  std::vector<double> restart_residuals;
};

struct SearchOptions {
  int restarts = 10;
  std::uint64_t seed = 0;
  int iterations = 500;
  int threads = 1;
};

namespace detail {

inline Matrix gram_from_log_cholesky(const Vector& theta, int n) {
  Matrix lower = Matrix::Zero(n, n);
  int p = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) lower(i, j) = (i == j) ? std::exp(theta(p++)) : theta(p++);
  Matrix q = lower * lower.transpose();
  return 0.5 * (q + q.transpose());
}

struct RestartOutcome {
  Matrix gram;
  double residual = std::numeric_limits<double>::infinity();
};

inline RestartOutcome descend(const LieAlgebra& alg, const DerivationBasis& der, Vector theta, int iterations,
                              double rtol) {
  const int n = alg.dim();
  auto objective = [&](const Vector& t) {
    try {
      MetricLieAlgebra m(alg, gram_from_log_cholesky(t, n));
      const double r = relative_soliton_residual(m, der, rtol);
      return r * r;
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  double f = objective(theta);
  const double h = 1e-6;
  double step = 1.0;
  for (int it = 0; it < iterations && f > 1e-28; ++it) {
    Vector grad(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      Vector tp = theta, tm = theta;
      tp(i) += h;
      tm(i) -= h;
      grad(i) = (objective(tp) - objective(tm)) / (2 * h);
    }
    const double g2 = grad.squaredNorm();
    if (!(g2 > 1e-30)) break;
    step = std::min(1.0, step * 4.0);
    bool moved = false;
    while (step > 1e-14) {
      Vector trial = theta - step * grad;
      const double ft = objective(trial);
      if (ft <= f - 1e-4 * step * g2) {
        theta = trial;
        f = ft;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  return {gram_from_log_cholesky(theta, n), std::sqrt(f)};
}

}  // namespace detail

/// Heuristic multi-start minimisation of the relative soliton residual over
/// SPD Gram matrices (log-Cholesky parameters, finite-difference gradient,
/// backtracking line search). A large best residual is evidence of
/// nonexistence, never a proof.
inline SearchResult soliton_residual_search(const LieAlgebra& alg, const SearchOptions& opt,
                                            const Tolerances& tol = {}) {
  require_valid(alg, tol);
  const int n = alg.dim();
  const DerivationBasis der = derivation_algebra(alg, tol);
  const int params = n * (n + 1) / 2;

  auto run = [&](int k) {
    std::mt19937_64 rng(opt.seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(k));
    std::normal_distribution<double> normal(0.0, 0.5);
    Vector theta(params);
    for (int p = 0; p < params; ++p) theta(p) = normal(rng);
    return detail::descend(alg, der, theta, opt.iterations, tol.rank);
  };

  std::vector<detail::RestartOutcome> outcomes(opt.restarts);
  if (opt.threads <= 1) {
    for (int k = 0; k < opt.restarts; ++k) outcomes[k] = run(k);
  } else {
    for (int start = 0; start < opt.restarts; start += opt.threads) {
      std::vector<std::future<detail::RestartOutcome>> jobs;
      for (int k = start; k < std::min(opt.restarts, start + opt.threads); ++k)
        jobs.push_back(std::async(std::launch::async, run, k));
      for (size_t j = 0; j < jobs.size(); ++j) outcomes[start + j] = jobs[j].get();
    }
  }

  SearchResult res;
  for (int k = 0; k < opt.restarts; ++k) {
    res.restart_residuals.push_back(outcomes[k].residual);
    if (outcomes[k].residual < res.best_residual) {
      res.best_residual = outcomes[k].residual;
      res.best_gram = outcomes[k].gram;
      res.best_restart = k;
    }
  }
  return res;
}

}  // namespace rsoliton

#endif  // RSOLITON_SOLITON_HPP
