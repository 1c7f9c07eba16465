#ifndef RSOLITON_CURVATURE_HPP
#define RSOLITON_CURVATURE_HPP

#include "rsoliton/common.hpp"
#include "rsoliton/lie_algebra.hpp"
#include "rsoliton/linalg.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace rsoliton {

/// Lie algebra together with the Gram matrix of a left-invariant metric at the
/// identity: <e_i, e_j> = gram(i, j).
class MetricLieAlgebra {
 public:
  MetricLieAlgebra() = default;

  MetricLieAlgebra(LieAlgebra algebra, Matrix gram, const Tolerances& tol = {})
      : algebra_(std::move(algebra)), gram_(std::move(gram)) {
    if (gram_.rows() != algebra_.dim() || gram_.cols() != algebra_.dim())
      throw Error(ErrorKind::DimensionMismatch, "Gram matrix does not match algebra dimension");
    require_spd(gram_, tol.pd);
  }

  static MetricLieAlgebra orthonormal(LieAlgebra algebra) {
    const int n = algebra.dim();
    return MetricLieAlgebra(std::move(algebra), Matrix::Identity(n, n));
  }

  const LieAlgebra& algebra() const { return algebra_; }
  const Matrix& gram() const { return gram_; }
  int dim() const { return algebra_.dim(); }

  MetricLieAlgebra with_gram(Matrix gram) const { return MetricLieAlgebra(algebra_, std::move(gram)); }

 private:
  LieAlgebra algebra_;
  Matrix gram_;
};

/// Ricci operator of a left-invariant metric and the pieces it is assembled from.
/// All operators are written in the algebra's input basis.
struct CurvatureReport {
  Matrix ric;           // (1,1) Ricci operator
  Matrix moment;        // M
  Matrix killing_op;    // B with <Bx, y> = tr(ad x ad y)
  Vector mean_curvature;  // H with <H, x> = tr ad x
  double sc = 0.0;
};

/// Adjoint matrices of the Q-orthonormal frame vectors, expressed in the frame.
inline std::vector<Matrix> frame_adjoints(const LieAlgebra& alg, const OrthonormalFrame& frame) {
  const int n = alg.dim();
  std::vector<Matrix> out(n);
  for (int i = 0; i < n; ++i) out[i] = frame.to_frame(ad(alg, frame.to_basis.col(i)));
  return out;
}

inline Vector mean_curvature_vector(const MetricLieAlgebra& m) {
  return m.gram().llt().solve(ad_traces(m.algebra()));
}

/// Ric = M - B/2 - S(ad H), computed in the Cholesky orthonormal frame.
inline CurvatureReport ricci_operator(const MetricLieAlgebra& m) {
  const int n = m.dim();
  const OrthonormalFrame frame = make_frame(m.gram());
  const std::vector<Matrix> a = frame_adjoints(m.algebra(), frame);

  Matrix moment = Matrix::Zero(n, n);
  Matrix outer = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) outer += a[i] * a[i].transpose();
  Matrix killing(n, n);
  Vector trace(n);
  for (int k = 0; k < n; ++k) {
    trace(k) = a[k].trace();
    for (int l = k; l < n; ++l) {
      moment(k, l) = moment(l, k) = -0.5 * (a[k].cwiseProduct(a[l])).sum() + 0.25 * outer(k, l);
      killing(k, l) = killing(l, k) = (a[k] * a[l]).trace();
    }
  }
  Matrix adh = Matrix::Zero(n, n);
  for (int k = 0; k < n; ++k) adh += trace(k) * a[k];
  Matrix ric = moment - 0.5 * killing - 0.5 * (adh + adh.transpose());

  CurvatureReport r;
  r.ric = frame.from_frame(ric);
  r.moment = frame.from_frame(moment);
  r.killing_op = frame.from_frame(killing);
  r.mean_curvature = frame.vector_from_frame(trace);
  r.sc = ric.trace();
  return r;
}

/// Independent path: Levi-Civita connection from the Koszul formula, full
/// curvature endomorphisms R(x,y), then the trace contraction.
inline Matrix ricci_via_koszul(const MetricLieAlgebra& m, const Tolerances& tol = {}) {
  const int n = m.dim();
  const Matrix& q = m.gram();
  require_spd(q, tol.pd);
  const LieAlgebra& alg = m.algebra();
  const Eigen::LLT<Matrix> qinv(q);

  // koszul(j, i, l)-style: nabla[i](:, j) = coordinates of nabla_{e_i} e_j
  std::vector<Matrix> nabla(n, Matrix::Zero(n, n));
  for (int i = 0; i < n; ++i) {
    Matrix lowered(n, n);  // lowered(l, j) = <nabla_{e_i} e_j, e_l>
    for (int j = 0; j < n; ++j)
      for (int l = 0; l < n; ++l) {
        const double xy_z = alg.bracket_basis(i, j).dot(q.col(l));
        const double yz_x = alg.bracket_basis(j, l).dot(q.col(i));
        const double zx_y = alg.bracket_basis(l, i).dot(q.col(j));
        lowered(l, j) = 0.5 * (xy_z - yz_x + zx_y);
      }
    nabla[i] = qinv.solve(lowered);
  }

  Matrix ric02 = Matrix::Zero(n, n);  // ric02(b, c) = ric(e_b, e_c)
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      Matrix curv = nabla[a] * nabla[b] - nabla[b] * nabla[a];
      const Vector ab = alg.bracket_basis(a, b);
      for (int k = 0; k < n; ++k)
        if (ab(k) != 0.0) curv -= ab(k) * nabla[k];
      // (R(e_a, e_b) e_c)^a summed over a
      ric02.row(b) += curv.row(a);
    }
  return qinv.solve(ric02.transpose());
}

inline double scalar_curvature(const MetricLieAlgebra& m) { return ricci_operator(m).sc; }

/// (0,2) Ricci tensor as a matrix: ric(e_i, e_j) = <Ric e_i, e_j>.
inline Matrix ricci_form(const Matrix& ric_op, const Matrix& gram) {
  Matrix r = gram * ric_op;
  return 0.5 * (r + r.transpose());
}

/// Trace pairing on symmetric bilinear forms: <v, w>_Q = tr(Q^{-1} v Q^{-1} w).
inline double trace_pairing(const Matrix& v, const Matrix& w, const Matrix& gram) {
  Eigen::LLT<Matrix> llt(gram);
  return (llt.solve(v) * llt.solve(w)).trace();
}

struct GradientCheck {
  double lhs = 0.0;  // central difference of sc along the direction
  double rhs = 0.0;  // -<ric, direction>_Q
  bool unimodular = true;
  bool asserted = true;  // identity only asserted on unimodular algebras
  bool agrees = false;
};

inline GradientCheck gradient_check(const MetricLieAlgebra& m, const Matrix& direction, const Tolerances& tol = {}) {
  const int n = m.dim();
  if (direction.rows() != n || direction.cols() != n)
    throw Error(ErrorKind::DimensionMismatch, "direction must be dim x dim");
  if (max_abs(direction - direction.transpose()) > tol.sym * scale_of(direction))
    throw Error(ErrorKind::DimensionMismatch, "direction must be symmetric");
  const double h = tol.fd_step;
  Matrix sym_dir = 0.5 * (direction + direction.transpose());
  const double plus = scalar_curvature(m.with_gram(m.gram() + h * sym_dir));
  const double minus = scalar_curvature(m.with_gram(m.gram() - h * sym_dir));
  GradientCheck g;
  g.lhs = (plus - minus) / (2.0 * h);
  g.unimodular = is_unimodular(m.algebra(), tol);
  g.asserted = g.unimodular;
  const CurvatureReport rep = ricci_operator(m);
  g.rhs = -trace_pairing(ricci_form(rep.ric, m.gram()), sym_dir, m.gram());
  g.agrees = g.unimodular && std::abs(g.lhs - g.rhs) <= tol.fd * std::max(1.0, std::abs(g.rhs));
  return g;
}

}  // namespace rsoliton

#endif  // RSOLITON_CURVATURE_HPP
