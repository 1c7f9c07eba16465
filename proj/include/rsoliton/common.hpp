#ifndef RSOLITON_COMMON_HPP
#define RSOLITON_COMMON_HPP

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <string_view>

namespace rsoliton {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using CVector = Eigen::VectorXcd;
using CMatrix = Eigen::MatrixXcd;

inline constexpr std::string_view kVersion = "0.3.0";

/// Failure categories raised by the library. The CLI maps these onto exit codes.
enum class ErrorKind {
  AntisymmetryViolation,
  DimensionMismatch,
  InvalidAlgebra,
  NotSolvable,
  NotNilpotent,
  NotADerivation,
  NonCommutingGenerators,
  MetricNotPositiveDefinite,
  SingularSystem,
  SourceNotSolvsoliton,
  ConditionsViolated,
  JacobiFailure,
  MissingProvenance,
  TraceTooShort,
  ParseError,
  SchemaError,
  UnknownFixture,
};

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::AntisymmetryViolation: return "AntisymmetryViolation";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::InvalidAlgebra: return "InvalidAlgebra";
    case ErrorKind::NotSolvable: return "NotSolvable";
    case ErrorKind::NotNilpotent: return "NotNilpotent";
    case ErrorKind::NotADerivation: return "NotADerivation";
    case ErrorKind::NonCommutingGenerators: return "NonCommutingGenerators";
    case ErrorKind::MetricNotPositiveDefinite: return "MetricNotPositiveDefinite";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::SourceNotSolvsoliton: return "SourceNotSolvsoliton";
    case ErrorKind::ConditionsViolated: return "ConditionsViolated";
    case ErrorKind::JacobiFailure: return "JacobiFailure";
    case ErrorKind::MissingProvenance: return "MissingProvenance";
    case ErrorKind::TraceTooShort: return "TraceTooShort";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::UnknownFixture: return "UnknownFixture";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// True for failures that indicate a broken internal contract rather than bad input.
  bool internal() const noexcept { return kind_ == ErrorKind::JacobiFailure; }

 private:
  ErrorKind kind_;
};

/// Numerical thresholds used throughout. All are user-overridable.
struct Tolerances {
  double jacobi = 1e-9;
  double rank = 1e-10;  // relative to the matrix scale
  double eig = 1e-8;
  double sym = 1e-9;
  double pd = 1e-12;
  double fd = 1e-5;
  double fd_step = 1e-5;
  double deriv = 1e-9;
  double soliton = 1e-7;
  double comm = 1e-9;
  double selfsim = 1e-6;
  double semisimple_cond = 1e8;
  double semisimple_residual = 1e-8;

  static Tolerances defaults() { return {}; }

  static Tolerances strict() {
    Tolerances t;
    t.jacobi = 1e-12;
    t.rank = 1e-12;
    t.eig = 1e-10;
    t.sym = 1e-11;
    t.deriv = 1e-11;
    t.soliton = 1e-9;
    t.comm = 1e-11;
    return t;
  }

  static Tolerances profile(std::string_view name) {
    if (name == "default") return defaults();
    if (name == "strict") return strict();
    throw Error(ErrorKind::SchemaError, "unknown tolerance profile '" + std::string(name) + "'");
  }
};

}  // namespace rsoliton

#endif  // RSOLITON_COMMON_HPP
