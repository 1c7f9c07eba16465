#ifndef RSOLITON_LINALG_HPP
#define RSOLITON_LINALG_HPP

// Small dense linear-algebra helpers shared by the modules: ranks, null spaces,
// subspace bookkeeping and the Cholesky orthonormal frame of a Gram matrix.

#include "rsoliton/common.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

namespace rsoliton {

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline double scale_of(const Matrix& m) { return std::max(1.0, max_abs(m)); }

inline Vector singular_values(const Matrix& m) {
  if (m.size() == 0) return Vector();
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues();
}

inline int numerical_rank(const Matrix& m, double rtol) {
  if (m.size() == 0) return 0;
  Vector s = singular_values(m);
  double cut = rtol * std::max(1.0, s(0));
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cut) ++r;
  return r;
}

/// Orthonormal basis (columns) of {x : m x = 0}.
inline Matrix null_space(const Matrix& m, double rtol) {
  const Eigen::Index n = m.cols();
  if (m.rows() == 0) return Matrix::Identity(n, n);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeFullV);
  Vector s = svd.singularValues();
  double cut = rtol * std::max(1.0, s.size() ? s(0) : 0.0);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cut) ++r;
  return svd.matrixV().rightCols(n - r);
}

/// Basis of the column span of `spanning`, returned in reduced row echelon shape
/// (pivot rows carry unit entries) so that coordinate subspaces come back as
/// plain basis vectors.
inline Matrix span_basis(const Matrix& spanning, double rtol) {
  const Eigen::Index n = spanning.rows();
  if (spanning.cols() == 0) return Matrix(n, 0);
  Matrix a = spanning.transpose();  // rows span the subspace
  const double cut = rtol * scale_of(a);
  Eigen::Index lead = 0;
  Eigen::Index row = 0;
  for (; lead < n && row < a.rows(); ++lead) {
    Eigen::Index piv;
    double best = a.col(lead).tail(a.rows() - row).cwiseAbs().maxCoeff(&piv);
    if (best <= cut) {
      a.col(lead).tail(a.rows() - row).setZero();
      continue;
    }
    piv += row;
    a.row(piv).swap(a.row(row));
    a.row(row) /= a(row, lead);
    for (Eigen::Index r = 0; r < a.rows(); ++r)
      if (r != row) a.row(r) -= a(r, lead) * a.row(row);
    ++row;
  }
  Matrix basis = a.topRows(row).transpose();
  for (Eigen::Index i = 0; i < basis.size(); ++i)
    if (std::abs(basis.data()[i]) < 1e-14) basis.data()[i] = 0.0;
  return basis;
}

inline bool span_contains(const Matrix& basis, const Matrix& vectors, double rtol) {
  if (vectors.cols() == 0) return true;
  if (basis.cols() == 0) return max_abs(vectors) <= rtol * scale_of(vectors);
  Matrix joined(basis.rows(), basis.cols() + vectors.cols());
  joined << basis, vectors;
  return numerical_rank(joined, rtol) == numerical_rank(basis, rtol);
}

/// Distance of `vectors` from span(basis), measured as the largest Euclidean
/// residual of the least-squares projection.
inline double span_residual(const Matrix& basis, const Matrix& vectors) {
  if (vectors.cols() == 0) return 0.0;
  if (basis.cols() == 0) return vectors.colwise().norm().maxCoeff();
  Matrix coef = basis.completeOrthogonalDecomposition().solve(vectors);
  return (basis * coef - vectors).colwise().norm().maxCoeff();
}

/// Basis of {v : <u, v>_Q = 0 for all u in span(basis)}.
inline Matrix orthogonal_complement(const Matrix& basis, const Matrix& gram, double rtol) {
  const Eigen::Index n = gram.rows();
  if (basis.cols() == 0) return Matrix::Identity(n, n);
  return span_basis(null_space(basis.transpose() * gram, rtol), rtol);
}

inline Matrix intersect(const Matrix& a, const Matrix& b, double rtol) {
  const Eigen::Index n = a.rows();
  if (a.cols() == 0 || b.cols() == 0) return Matrix(n, 0);
  Matrix stacked(n, a.cols() + b.cols());
  stacked << a, -b;
  Matrix ker = null_space(stacked, rtol);
  if (ker.cols() == 0) return Matrix(n, 0);
  return span_basis(a * ker.topRows(a.cols()), rtol);
}

inline Matrix sum_of(const Matrix& a, const Matrix& b, double rtol) {
  Matrix joined(a.rows(), a.cols() + b.cols());
  joined << a, b;
  return span_basis(joined, rtol);
}

/// Column-major vectorisation.
inline Vector vec(const Matrix& m) { return Eigen::Map<const Vector>(m.data(), m.size()); }

inline Matrix unvec(const Vector& v, Eigen::Index n) { return Eigen::Map<const Matrix>(v.data(), n, n); }

inline Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

/// Orthonormal frame for a Gram matrix Q = L L^T. Columns of `to_basis` are the
/// frame vectors written in the input basis (F = L^{-T}); an operator A becomes
/// F^{-1} A F in the frame.
struct OrthonormalFrame {
  Matrix to_basis;    // F
  Matrix from_basis;  // F^{-1} = L^T

  Matrix to_frame(const Matrix& op) const { return from_basis * op * to_basis; }
  Matrix from_frame(const Matrix& op) const { return to_basis * op * from_basis; }
  Vector vector_to_frame(const Vector& v) const { return from_basis * v; }
  Vector vector_from_frame(const Vector& v) const { return to_basis * v; }
};

inline double smallest_eigenvalue(const Matrix& sym) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

inline void require_spd(const Matrix& gram, double pd_tol) {
  if (gram.rows() != gram.cols())
    throw Error(ErrorKind::DimensionMismatch, "Gram matrix is not square");
  if (max_abs(gram - gram.transpose()) != 0.0)
    throw Error(ErrorKind::MetricNotPositiveDefinite, "Gram matrix is not symmetric");
  const double lo = smallest_eigenvalue(gram);
  if (!(lo > pd_tol))
    throw Error(ErrorKind::MetricNotPositiveDefinite,
                "smallest eigenvalue " + std::to_string(lo) + " is not above pd_tol");
}

inline OrthonormalFrame make_frame(const Matrix& gram) {
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorKind::MetricNotPositiveDefinite, "Cholesky factorisation failed");
  Matrix lower = llt.matrixL();
  OrthonormalFrame f;
  f.from_basis = lower.transpose();
  f.to_basis = lower.transpose().triangularView<Eigen::Upper>().solve(
      Matrix::Identity(gram.rows(), gram.cols()));
  return f;
}

/// Q-adjoint of an operator: <A x, y> = <x, A^T_Q y>.
inline Matrix q_adjoint(const Matrix& op, const Matrix& gram) {
  return gram.llt().solve(op.transpose() * gram);
}

inline Matrix q_symmetric_part(const Matrix& op, const Matrix& gram) {
  return 0.5 * (op + q_adjoint(op, gram));
}

inline std::vector<double> sorted_real_spectrum(const Matrix& op) {
  Eigen::EigenSolver<Matrix> es(op, false);
  std::vector<double> out;
  out.reserve(op.rows());
  for (Eigen::Index i = 0; i < op.rows(); ++i) out.push_back(es.eigenvalues()(i).real());
  std::sort(out.begin(), out.end());
  return out;
}

/// ||M^n|| small relative to ||M||^n. Robust against the sqrt(eps) eigenvalue
/// splitting of Jordan blocks that makes spectral-radius tests unreliable.
inline bool is_nilpotent_matrix(const Matrix& m, double tol) {
  const double s = max_abs(m);
  if (s == 0.0) return true;
  Matrix p = m / s;
  Matrix acc = Matrix::Identity(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) acc = acc * p;
  return max_abs(acc) <= tol;
}

struct SemisimpleTest {
  bool semisimple = false;
  double eigvec_condition = 0.0;
  double reconstruction_residual = 0.0;
  bool rank_test = false;
  double max_abs_real = 0.0;  // largest |Re(lambda)|
  std::vector<std::complex<double>> eigenvalues;
};

/// Diagonalisability over C. Three conditions must hold: the eigenvector matrix is
/// well conditioned, V diag(lambda) V^{-1} reproduces the input, and for every
/// eigenvalue cluster rank(A - mu I) = n - multiplicity.
inline SemisimpleTest semisimplicity(const Matrix& a, const Tolerances& tol = {}) {
  const Eigen::Index n = a.rows();
  SemisimpleTest t;
  if (n == 0) {
    t.semisimple = true;
    t.rank_test = true;
    return t;
  }
  const double s = scale_of(a);
  Eigen::EigenSolver<Matrix> es(a, true);
  const CVector lambda = es.eigenvalues();
  const CMatrix v = es.eigenvectors();
  Eigen::JacobiSVD<CMatrix> svd(v);
  const Vector sv = svd.singularValues();
  t.eigvec_condition = sv(n - 1) > 0.0 ? sv(0) / sv(n - 1) : std::numeric_limits<double>::infinity();
  if (std::isfinite(t.eigvec_condition)) {
    CMatrix recon = v * lambda.asDiagonal() * v.inverse();
    t.reconstruction_residual = (recon - a.cast<std::complex<double>>()).cwiseAbs().maxCoeff() / s;
  } else {
    t.reconstruction_residual = std::numeric_limits<double>::infinity();
  }

  // cluster eigenvalues; a defective k-block splits by about (eps * |A|)^{1/k}
  const double cluster = 1e-5 * s;
  std::vector<bool> used(n, false);
  t.rank_test = true;
  for (Eigen::Index i = 0; i < n; ++i) {
    t.eigenvalues.push_back(lambda(i));
    t.max_abs_real = std::max(t.max_abs_real, std::abs(lambda(i).real()));
    if (used[i]) continue;
    std::complex<double> mean = 0.0;
    int mult = 0;
    for (Eigen::Index j = i; j < n; ++j)
      if (!used[j] && std::abs(lambda(j) - lambda(i)) <= cluster) {
        used[j] = true;
        mean += lambda(j);
        ++mult;
      }
    mean /= static_cast<double>(mult);
    CMatrix shifted = a.cast<std::complex<double>>() - mean * CMatrix::Identity(n, n);
    Eigen::JacobiSVD<CMatrix> ssvd(shifted);
    const Vector ssv = ssvd.singularValues();
    int rank = 0;
    for (Eigen::Index k = 0; k < ssv.size(); ++k)
      if (ssv(k) > tol.eig * s) ++rank;
    if (rank != n - mult) t.rank_test = false;
  }
  t.semisimple = t.eigvec_condition < tol.semisimple_cond &&
                 t.reconstruction_residual < tol.semisimple_residual && t.rank_test;
  return t;
}

}  // namespace rsoliton

#endif  // RSOLITON_LINALG_HPP
