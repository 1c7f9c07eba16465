#ifndef RSOLITON_FLOW_HPP
#define RSOLITON_FLOW_HPP

// Homogeneous Ricci flow dQ/dt = -2 ric(Q) on Gram matrices, integrated with the
// Dormand-Prince 5(4) pair, PI step control and cubic Hermite dense output.

#include "rsoliton/common.hpp"
#include "rsoliton/curvature.hpp"
#include "rsoliton/linalg.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <vector>

namespace rsoliton {

struct StepStats {
  int accepted = 0;
  int rejected = 0;
  double max_error_estimate = 0.0;  // largest scaled error of an accepted step
  double min_step = 0.0;
  double max_step = 0.0;
};

struct FlowTrace {
  std::vector<double> times;
  std::vector<Matrix> grams;
  std::vector<double> sc_values;
  std::vector<std::vector<double>> ric_spectra;
  StepStats step_stats;
  bool blow_up = false;
  std::string blow_up_reason;
  double pd_floor = 0.0;

  size_t size() const { return times.size(); }
};

struct FlowOptions {
  double t_end = 1.0;
  double tol = 1e-9;
  int samples = 31;                 // uniformly spaced, including both ends
  std::vector<double> sample_times;  // overrides `samples` when non-empty
  int max_steps = 1000000;
};

namespace detail {

inline Matrix flow_rhs(const LieAlgebra& alg, const Matrix& q) {
  const MetricLieAlgebra m(alg, 0.5 * (q + q.transpose()), Tolerances{.pd = 0.0});
  return -2.0 * ricci_form(ricci_operator(m).ric, m.gram());
}

inline Matrix symmetrised(const Matrix& q) { return 0.5 * (q + q.transpose()); }

}  // namespace detail

/// Integrates the flow from the metric of `m` to opts.t_end (which may be
/// negative). Stops early with blow_up set when the smallest eigenvalue of Q
/// drops below pd_floor or the step size underflows; the partial trace is kept.
inline FlowTrace ricci_flow(const MetricLieAlgebra& m, const FlowOptions& opts, const Tolerances& tol = {}) {
  require_spd(m.gram(), tol.pd);
  const LieAlgebra& alg = m.algebra();
  const double t_end = opts.t_end;
  const double dir = t_end >= 0.0 ? 1.0 : -1.0;

  std::vector<double> samples = opts.sample_times;
  if (samples.empty()) {
    const int count = std::max(2, opts.samples);
    for (int i = 0; i < count; ++i) samples.push_back(t_end * static_cast<double>(i) / (count - 1));
  }
  for (size_t i = 1; i < samples.size(); ++i)
    if (!(dir * (samples[i] - samples[i - 1]) > 0.0))
      throw Error(ErrorKind::SchemaError, "sample times must be strictly monotone in the flow direction");

  FlowTrace trace;
  trace.pd_floor = 1e-10 * smallest_eigenvalue(m.gram());
  auto record = [&](double t, const Matrix& q) {
    const Matrix qs = detail::symmetrised(q);
    const MetricLieAlgebra mt(alg, qs, Tolerances{.pd = 0.0});
    const CurvatureReport rep = ricci_operator(mt);
    trace.times.push_back(t);
    trace.grams.push_back(qs);
    trace.sc_values.push_back(rep.sc);
    trace.ric_spectra.push_back(sorted_real_spectrum(rep.ric));
  };

  // Dormand-Prince 5(4) tableau
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;
  (void)c2;
  (void)c3;
  (void)c4;
  (void)c5;

  const double rtol = opts.tol;
  const double atol = opts.tol / 10.0;
  auto error_norm = [&](const Matrix& err, const Matrix& y0, const Matrix& y1) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
      const double sc = atol + rtol * std::max(std::abs(y0.data()[i]), std::abs(y1.data()[i]));
      const double r = err.data()[i] / sc;
      acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(err.size()));
  };

  double t = 0.0;
  Matrix y = m.gram();
  Matrix k1 = detail::flow_rhs(alg, y);
  size_t next = 0;
  while (next < samples.size() && samples[next] == 0.0) {
    record(0.0, y);
    ++next;
  }

  // initial step from the usual derivative-based heuristic
  const double d0 = y.norm();
  const double d1 = k1.norm();
  double h = (d1 > 1e-12 * d0) ? 0.01 * d0 / d1 : 1e-3;
  h = std::min(h, std::abs(t_end) > 0.0 ? std::abs(t_end) : 1.0);
  h = std::max(h, 1e-12) * dir;
  double err_prev = 1e-4;
  constexpr double safety = 0.9, alpha = 0.7 / 5.0, beta = 0.4 / 5.0;
  bool first_stat = true;

  int steps = 0;
  while (next < samples.size()) {
    if (++steps > opts.max_steps) {
      trace.blow_up = true;
      trace.blow_up_reason = "step limit reached";
      break;
    }
    if (dir * (t + h - t_end) > 0.0) h = t_end - t;
    if (std::abs(h) < 1e-14 * std::max(1.0, std::abs(t))) {
      trace.blow_up = true;
      trace.blow_up_reason = "step size underflow";
      break;
    }
    Matrix k2, k3, k4, k5, k6, k7, y1;
    try {
      k2 = detail::flow_rhs(alg, y + h * (a21 * k1));
      k3 = detail::flow_rhs(alg, y + h * (a31 * k1 + a32 * k2));
      k4 = detail::flow_rhs(alg, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
      k5 = detail::flow_rhs(alg, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
      k6 = detail::flow_rhs(alg, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
      y1 = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
      k7 = detail::flow_rhs(alg, y1);
    } catch (const Error&) {
      // a stage left the positive cone: treat as a failed step
      ++trace.step_stats.rejected;
      h *= 0.2;
      continue;
    }
    const Matrix err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = error_norm(err, y, y1);
    if (!(en <= 1.0)) {
      ++trace.step_stats.rejected;
      const double fac = std::isfinite(en) ? std::max(0.2, safety * std::pow(en, -alpha)) : 0.2;
      h *= fac;
      continue;
    }
    // accepted: emit dense output for samples inside (t, t + h]
    const double t1 = t + h;
    while (next < samples.size() && dir * (samples[next] - t1) <= 0.0) {
      const double s = (samples[next] - t) / h;
      // written as an increment on y so a stationary metric is reproduced exactly
      const double h10 = s * (1 - s) * (1 - s);
      const double h01 = s * s * (3 - 2 * s);
      const double h11 = s * s * (s - 1);
      const Matrix ys = y + h01 * (y1 - y) + h * (h10 * k1 + h11 * k7);
      record(samples[next], ys);
      ++next;
    }
    StepStats& st = trace.step_stats;
    ++st.accepted;
    st.max_error_estimate = std::max(st.max_error_estimate, en);
    if (first_stat) {
      st.min_step = st.max_step = std::abs(h);
      first_stat = false;
    } else {
      st.min_step = std::min(st.min_step, std::abs(h));
      st.max_step = std::max(st.max_step, std::abs(h));
    }
    t = t1;
    y = detail::symmetrised(y1);
    k1 = detail::symmetrised(k7);
    if (smallest_eigenvalue(y) < trace.pd_floor) {
      trace.blow_up = true;
      trace.blow_up_reason = "smallest eigenvalue of Q below pd_floor";
      break;
    }
    const double en_eff = std::max(en, 1e-10);
    double fac = safety * std::pow(en_eff, -alpha) * std::pow(err_prev, beta);
    fac = std::clamp(fac, 0.2, 5.0);
    err_prev = std::max(en, 1e-4);
    h *= fac;
  }
  return trace;
}

inline FlowTrace ricci_flow(const MetricLieAlgebra& m, double t_end, double tol, const Tolerances& tols = {}) {
  FlowOptions o;
  o.t_end = t_end;
  o.tol = tol;
  return ricci_flow(m, o, tols);
}

struct SelfSimilarityReport {
  double sc_defect = 0.0;        // max |sc(t)(1 - 2ct) - sc(0)|
  double spectrum_defect = 0.0;  // max elementwise |spec(t)(1 - 2ct) - spec(0)|
  bool sc_ok = false;
  bool spectrum_ok = false;
  bool passed = false;
  double tolerance = 0.0;
};

/// A soliton with constant c evolves as g_t = (1 - 2ct) * (pullback of g), so
/// scalar curvature and the Ricci spectrum scale by 1 / (1 - 2ct).
inline SelfSimilarityReport soliton_selfsimilarity_check(const FlowTrace& trace, double c, const Tolerances& tol = {}) {
  if (trace.size() < 3) throw Error(ErrorKind::TraceTooShort, "self-similarity check needs at least 3 samples");
  SelfSimilarityReport r;
  r.tolerance = tol.selfsim;
  const double sc0 = trace.sc_values.front();
  const auto& spec0 = trace.ric_spectra.front();
  for (size_t i = 0; i < trace.size(); ++i) {
    const double lambda = 1.0 - 2.0 * c * trace.times[i];
    r.sc_defect = std::max(r.sc_defect, std::abs(trace.sc_values[i] * lambda - sc0));
    for (size_t k = 0; k < spec0.size(); ++k)
      r.spectrum_defect = std::max(r.spectrum_defect, std::abs(trace.ric_spectra[i][k] * lambda - spec0[k]));
  }
  r.sc_ok = r.sc_defect <= tol.selfsim;
  r.spectrum_ok = r.spectrum_defect <= tol.selfsim;
  r.passed = r.sc_ok && r.spectrum_ok;
  return r;
}

/// CSV with columns t, sc, eig_1..eig_n (Ricci operator), q_i_j (row-major Q).
inline void write_flow_csv(std::ostream& out, const FlowTrace& trace) {
  if (trace.size() == 0) {
    out << "t,sc\n";
    return;
  }
  const Eigen::Index n = trace.grams.front().rows();
  out << "t,sc";
  for (Eigen::Index k = 0; k < n; ++k) out << ",eig_" << (k + 1);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out << ",q_" << (i + 1) << "_" << (j + 1);
  out << "\n";
  std::ostringstream row;
  row << std::setprecision(17);
  for (size_t s = 0; s < trace.size(); ++s) {
    row.str("");
    row << trace.times[s] << "," << trace.sc_values[s];
    for (double e : trace.ric_spectra[s]) row << "," << e;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) row << "," << trace.grams[s](i, j);
    out << row.str() << "\n";
  }
}

}  // namespace rsoliton

#endif  // RSOLITON_FLOW_HPP
