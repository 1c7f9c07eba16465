#ifndef RSOLITON_IO_HPP
#define RSOLITON_IO_HPP

// JSON documents for algebras (with optional metric and modification block) and
// verdict reports. Indices in documents are 0-based.

#include "rsoliton/common.hpp"
#include "rsoliton/curvature.hpp"
#include "rsoliton/fixtures.hpp"
#include "rsoliton/lie_algebra.hpp"
#include "rsoliton/modification.hpp"
#include "rsoliton/soliton.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace rsoliton {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

struct BracketRecord {
  int i = 0;
  int j = 0;
  std::map<int, double> coeffs;

  friend bool operator==(const BracketRecord&, const BracketRecord&) = default;
};

struct PhiBlock {
  std::vector<Matrix> kbasis;
  std::vector<std::vector<double>> images;  // per basis vector, coefficients over kbasis

  friend bool operator==(const PhiBlock& a, const PhiBlock& b) {
    if (a.kbasis.size() != b.kbasis.size() || a.images != b.images) return false;
    for (size_t i = 0; i < a.kbasis.size(); ++i)
      if (a.kbasis[i] != b.kbasis[i]) return false;
    return true;
  }
};

struct AlgebraDocument {
  int format_version = kFormatVersion;
  std::optional<std::string> name;
  int dim = 0;
  std::vector<std::string> basis;
  std::vector<BracketRecord> brackets;
  std::optional<Matrix> metric;
  std::optional<PhiBlock> phi;

  friend bool operator==(const AlgebraDocument& a, const AlgebraDocument& b) {
    const bool metrics = a.metric.has_value() == b.metric.has_value() && (!a.metric || *a.metric == *b.metric);
    return a.format_version == b.format_version && a.name == b.name && a.dim == b.dim && a.basis == b.basis &&
           a.brackets == b.brackets && metrics && a.phi == b.phi;
  }
};

namespace detail {

[[noreturn]] inline void schema(const std::string& field, const std::string& what) {
  throw Error(ErrorKind::SchemaError, "field '" + field + "': " + what);
}

inline const Json& require(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) schema(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

inline double number(const Json& v, const std::string& path) {
  if (!v.is_number()) schema(path, "expected a number");
  return v.get<double>();
}

inline int integer(const Json& v, const std::string& path) {
  if (!v.is_number_integer()) schema(path, "expected an integer");
  return v.get<int>();
}

inline Matrix square_matrix(const Json& v, int n, const std::string& path) {
  if (!v.is_array() || static_cast<int>(v.size()) != n) schema(path, "expected " + std::to_string(n) + " rows");
  Matrix m(n, n);
  for (int r = 0; r < n; ++r) {
    const Json& row = v[r];
    const std::string rp = path + "[" + std::to_string(r) + "]";
    if (!row.is_array() || static_cast<int>(row.size()) != n) schema(rp, "expected " + std::to_string(n) + " entries");
    for (int c = 0; c < n; ++c) m(r, c) = number(row[c], rp + "[" + std::to_string(c) + "]");
  }
  return m;
}

inline Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline Json vector_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Matrix json_matrix(const Json& v) {
  const Eigen::Index r = static_cast<Eigen::Index>(v.size());
  const Eigen::Index c = r == 0 ? 0 : static_cast<Eigen::Index>(v[0].size());
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = v[i][j].get<double>();
  return m;
}

}  // namespace detail

inline AlgebraDocument document_from_json(const Json& j) {
  using namespace detail;
  AlgebraDocument doc;
  if (!j.is_object()) schema("<root>", "expected an object");
  doc.format_version = integer(require(j, "format_version", ""), "format_version");
  if (doc.format_version != kFormatVersion)
    schema("format_version", "unsupported version " + std::to_string(doc.format_version));
  if (auto it = j.find("name"); it != j.end()) {
    if (!it->is_string()) schema("name", "expected a string");
    doc.name = it->get<std::string>();
  }
  doc.dim = integer(require(j, "dim", ""), "dim");
  if (doc.dim < 1) schema("dim", "must be positive");
  const Json& basis = require(j, "basis", "");
  if (!basis.is_array() || static_cast<int>(basis.size()) != doc.dim) schema("basis", "expected dim names");
  for (const auto& b : basis) {
    if (!b.is_string()) schema("basis", "names must be strings");
    doc.basis.push_back(b.get<std::string>());
  }
  const Json& brackets = require(j, "brackets", "");
  if (!brackets.is_array()) schema("brackets", "expected an array");
  for (size_t idx = 0; idx < brackets.size(); ++idx) {
    const std::string path = "brackets[" + std::to_string(idx) + "]";
    const Json& b = brackets[idx];
    BracketRecord rec;
    rec.i = integer(require(b, "i", path), path + ".i");
    rec.j = integer(require(b, "j", path), path + ".j");
    if (rec.i < 0 || rec.j < 0 || rec.i >= doc.dim || rec.j >= doc.dim) schema(path, "index out of range");
    if (rec.i >= rec.j) schema(path, "entries must have i < j");
    const Json& coeffs = require(b, "coeffs", path);
    if (!coeffs.is_object()) schema(path + ".coeffs", "expected an object keyed by k");
    for (const auto& [key, value] : coeffs.items()) {
      int k = -1;
      std::istringstream ks(key);
      if (!(ks >> k) || !ks.eof() || k < 0 || k >= doc.dim) schema(path + ".coeffs", "bad index '" + key + "'");
      rec.coeffs[k] = number(value, path + ".coeffs." + key);
    }
    doc.brackets.push_back(std::move(rec));
  }
  if (auto it = j.find("metric"); it != j.end() && !it->is_null()) {
    Matrix m = square_matrix(*it, doc.dim, "metric");
    if (m != m.transpose()) schema("metric", "must be symmetric");
    doc.metric = m;
  }
  if (auto it = j.find("phi"); it != j.end() && !it->is_null()) {
    PhiBlock phi;
    const Json& kb = require(*it, "kbasis", "phi");
    if (!kb.is_array()) schema("phi.kbasis", "expected an array of matrices");
    for (size_t a = 0; a < kb.size(); ++a)
      phi.kbasis.push_back(square_matrix(kb[a], doc.dim, "phi.kbasis[" + std::to_string(a) + "]"));
    const Json& images = require(*it, "images", "phi");
    if (!images.is_array() || static_cast<int>(images.size()) != doc.dim) schema("phi.images", "expected dim rows");
    for (size_t r = 0; r < images.size(); ++r) {
      const std::string path = "phi.images[" + std::to_string(r) + "]";
      if (!images[r].is_array() || images[r].size() != phi.kbasis.size())
        schema(path, "expected one coefficient per kbasis matrix");
      std::vector<double> row;
      for (size_t a = 0; a < images[r].size(); ++a) row.push_back(number(images[r][a], path));
      phi.images.push_back(std::move(row));
    }
    doc.phi = std::move(phi);
  }
  return doc;
}

inline Json document_to_json(const AlgebraDocument& doc) {
  Json j;
  j["format_version"] = doc.format_version;
  if (doc.name) j["name"] = *doc.name;
  j["dim"] = doc.dim;
  j["basis"] = doc.basis;
  Json brackets = Json::array();
  for (const auto& b : doc.brackets) {
    Json coeffs = Json::object();
    for (const auto& [k, v] : b.coeffs) coeffs[std::to_string(k)] = v;
    brackets.push_back({{"i", b.i}, {"j", b.j}, {"coeffs", coeffs}});
  }
  j["brackets"] = brackets;
  if (doc.metric) j["metric"] = detail::matrix_json(*doc.metric);
  if (doc.phi) {
    Json kb = Json::array();
    for (const auto& m : doc.phi->kbasis) kb.push_back(detail::matrix_json(m));
    j["phi"] = {{"kbasis", kb}, {"images", doc.phi->images}};
  }
  return j;
}

/// Canonical text: sorted keys, two-space indent, shortest round-trip numbers.
inline std::string emit(const AlgebraDocument& doc) { return document_to_json(doc).dump(2) + "\n"; }

inline Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    size_t line = 1, col = 1;
    for (size_t p = 0; p < std::min<size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size()); ++p) {
      if (text[p] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(ErrorKind::ParseError,
                source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

inline AlgebraDocument parse_document(const std::string& text, const std::string& source = "<input>") {
  return document_from_json(parse_json_text(text, source));
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline LieAlgebra document_algebra(const AlgebraDocument& doc) {
  std::vector<BracketEntry> entries;
  for (const auto& b : doc.brackets)
    for (const auto& [k, v] : b.coeffs) entries.push_back({b.i, b.j, k, v});
  return LieAlgebra(doc.basis, entries);
}

inline MetricLieAlgebra document_metric(const AlgebraDocument& doc, const Tolerances& tol = {}) {
  const Matrix q = doc.metric ? *doc.metric : Matrix(Matrix::Identity(doc.dim, doc.dim));
  return MetricLieAlgebra(document_algebra(doc), q, tol);
}

inline std::optional<ModificationMap> document_phi(const AlgebraDocument& doc, const MetricLieAlgebra& source) {
  if (!doc.phi) return std::nullopt;
  Matrix coeffs(doc.dim, doc.phi->kbasis.size());
  for (int i = 0; i < doc.dim; ++i)
    for (size_t a = 0; a < doc.phi->kbasis.size(); ++a) coeffs(i, a) = doc.phi->images[i][a];
  return ModificationMap(source, doc.phi->kbasis, coeffs);
}

inline AlgebraDocument make_document(const MetricLieAlgebra& m, const std::optional<ModificationMap>& phi = std::nullopt,
                                     std::optional<std::string> name = std::nullopt) {
  AlgebraDocument doc;
  doc.name = std::move(name);
  doc.dim = m.dim();
  doc.basis = m.algebra().basis_names();
  for (const auto& e : m.algebra().entries()) {
    if (doc.brackets.empty() || doc.brackets.back().i != e.i || doc.brackets.back().j != e.j)
      doc.brackets.push_back({e.i, e.j, {}});
    doc.brackets.back().coeffs[e.k] = e.value;
  }
  if (m.gram() != Matrix::Identity(m.dim(), m.dim())) doc.metric = m.gram();
  if (phi) {
    PhiBlock block;
    block.kbasis = phi->kbasis();
    for (int i = 0; i < m.dim(); ++i) {
      std::vector<double> row(phi->coeffs().cols());
      for (Eigen::Index a = 0; a < phi->coeffs().cols(); ++a) row[a] = phi->coeffs()(i, a);
      block.images.push_back(std::move(row));
    }
    doc.phi = std::move(block);
  }
  return doc;
}

inline AlgebraDocument fixture_document(const std::string& name) {
  const Fixture f = fixture(name);
  return make_document(f.metric, f.phi, f.name);
}

/// Resolves `path` as a file, then as file + ".json", then (for bare names or
/// names under a fixtures/ directory) as a catalog entry.
inline AlgebraDocument load_document(const std::string& path) {
  namespace fs = std::filesystem;
  std::error_code ec;
  for (const std::string& candidate : {path, path + ".json"})
    if (fs::is_regular_file(candidate, ec)) return parse_document(read_file(candidate), candidate);
  const fs::path p(path);
  const std::string stem = p.filename().string();
  const std::string parent = p.parent_path().filename().string();
  if (parent.empty() || parent == "fixtures") {
    try {
      return fixture_document(stem);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::UnknownFixture) throw;
    }
  }
  throw Error(ErrorKind::ParseError, "no such file or fixture: '" + path + "'");
}

/// 64-bit FNV-1a of the canonical document text, as 16 hex digits.
inline std::string digest(const AlgebraDocument& doc) {
  const std::string text = document_to_json(doc).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

inline Json tolerances_json(const Tolerances& t) {
  return {{"jacobi", t.jacobi},   {"rank", t.rank},       {"eig", t.eig},
          {"sym", t.sym},         {"pd", t.pd},           {"fd", t.fd},
          {"fd_step", t.fd_step}, {"deriv", t.deriv},     {"soliton", t.soliton},
          {"comm", t.comm},       {"selfsim", t.selfsim}, {"semisimple_cond", t.semisimple_cond},
          {"semisimple_residual", t.semisimple_residual}};
}

inline Tolerances tolerances_from_json(const Json& j) {
  Tolerances t;
  t.jacobi = j.at("jacobi").get<double>();
  t.rank = j.at("rank").get<double>();
  t.eig = j.at("eig").get<double>();
  t.sym = j.at("sym").get<double>();
  t.pd = j.at("pd").get<double>();
  t.fd = j.at("fd").get<double>();
  t.fd_step = j.at("fd_step").get<double>();
  t.deriv = j.at("deriv").get<double>();
  t.soliton = j.at("soliton").get<double>();
  t.comm = j.at("comm").get<double>();
  t.selfsim = j.at("selfsim").get<double>();
  t.semisimple_cond = j.at("semisimple_cond").get<double>();
  t.semisimple_residual = j.at("semisimple_residual").get<double>();
  return t;
}

inline Json structure_json(const StructureReport& r) {
  Json semis = Json::array();
  for (bool b : r.complement_semisimple) semis.push_back(b);
  return {{"nilradical_dim", r.nilradical_dim},
          {"nilradical", detail::matrix_json(r.nilradical)},
          {"complement", detail::matrix_json(r.complement)},
          {"abelian_residual", r.abelian_residual},
          {"abelian", r.abelian},
          {"symmetric_residual", r.symmetric_residual},
          {"ad_symmetric", r.ad_symmetric},
          {"complement_semisimple", semis},
          {"derivation_applicable", r.derivation_applicable},
          {"d_on_a_residual", r.d_on_a_residual},
          {"d_on_n_residual", r.d_on_n_residual},
          {"derivation_shape", r.derivation_shape},
          {"kernel_contained", r.kernel_contained},
          {"mean_curvature", detail::vector_json(r.mean_curvature)},
          {"all_pass", r.all_pass}};
}

inline Json criterion_json(const CriterionVerdict& v) {
  Json semis = Json::array();
  for (bool b : v.basis_semisimple) semis.push_back(b);
  Json j = {{"reductive_elements", v.reductive_elements},
            {"abelian_reductive_complement", v.abelian_reductive_complement},
            {"nilradical_dim", v.nilradical_dim},
            {"complement", detail::matrix_json(v.complement)},
            {"basis_semisimple", semis},
            {"basis_max_real", v.basis_max_real},
            {"samples_checked", v.samples_checked},
            {"complement_abelian", v.complement_abelian},
            {"hyperbolic_rank", v.hyperbolic_rank},
            {"solvsoliton", v.solvsoliton},
            {"consistent", v.consistent}};
  if (v.nil_in_kernel) {
    j["nil_in_kernel"] = *v.nil_in_kernel;
    j["nil_kernel_residual"] = v.nil_kernel_residual;
  } else {
    j["nil_in_kernel"] = nullptr;
  }
  return j;
}

/// Machine-readable classification report. Round-trips through JSON.
struct VerdictDocument {
  std::string tool_version{kVersion};
  std::string input_digest;
  std::string cls = "none";
  double c = 0.0;
  Matrix d;
  double residual = 0.0;
  StageResiduals stages;
  int der_dim = 0;
  double sc = 0.0;
  std::vector<double> ricci_spectrum;
  std::optional<bool> semi_algebraic_derivation;  // S(D) in Der when the semi-algebraic fit succeeds
  std::optional<Json> structure;
  std::optional<Json> criterion;
  Tolerances tolerances;

  friend bool operator==(const VerdictDocument& a, const VerdictDocument& b) {
    return a.tool_version == b.tool_version && a.input_digest == b.input_digest && a.cls == b.cls && a.c == b.c &&
           a.d == b.d && a.residual == b.residual && a.stages.flat == b.stages.flat &&
           a.stages.einstein == b.stages.einstein && a.stages.algebraic == b.stages.algebraic &&
           a.stages.semi_algebraic == b.stages.semi_algebraic && a.der_dim == b.der_dim && a.sc == b.sc &&
           a.ricci_spectrum == b.ricci_spectrum && a.semi_algebraic_derivation == b.semi_algebraic_derivation &&
           a.structure == b.structure && a.criterion == b.criterion &&
           tolerances_json(a.tolerances) == tolerances_json(b.tolerances);
  }
};

inline Json verdict_to_json(const VerdictDocument& v) {
  Json j = {{"tool_version", v.tool_version},
            {"input_digest", v.input_digest},
            {"class", v.cls},
            {"c", v.c},
            {"D", detail::matrix_json(v.d)},
            {"residual", v.residual},
            {"stage_residuals",
             {{"flat", v.stages.flat},
              {"einstein", v.stages.einstein},
              {"algebraic", v.stages.algebraic},
              {"semi_algebraic", v.stages.semi_algebraic}}},
            {"der_dim", v.der_dim},
            {"sc", v.sc},
            {"ricci_spectrum", v.ricci_spectrum},
            {"tolerances", tolerances_json(v.tolerances)}};
  j["semi_algebraic_derivation"] = v.semi_algebraic_derivation ? Json(*v.semi_algebraic_derivation) : Json(nullptr);
  if (v.structure) j["structure"] = *v.structure;
  if (v.criterion) j["criterion"] = *v.criterion;
  return j;
}

inline VerdictDocument verdict_from_json(const Json& j) {
  try {
    VerdictDocument v;
    v.tool_version = j.at("tool_version").get<std::string>();
    v.input_digest = j.at("input_digest").get<std::string>();
    v.cls = j.at("class").get<std::string>();
    v.c = j.at("c").get<double>();
    v.d = detail::json_matrix(j.at("D"));
    v.residual = j.at("residual").get<double>();
    const Json& s = j.at("stage_residuals");
    v.stages = {s.at("flat").get<double>(), s.at("einstein").get<double>(), s.at("algebraic").get<double>(),
                s.at("semi_algebraic").get<double>()};
    v.der_dim = j.at("der_dim").get<int>();
    v.sc = j.at("sc").get<double>();
    v.ricci_spectrum = j.at("ricci_spectrum").get<std::vector<double>>();
    v.tolerances = tolerances_from_json(j.at("tolerances"));
    if (const Json& sa = j.at("semi_algebraic_derivation"); !sa.is_null()) v.semi_algebraic_derivation = sa.get<bool>();
    if (auto it = j.find("structure"); it != j.end()) v.structure = *it;
    if (auto it = j.find("criterion"); it != j.end()) v.criterion = *it;
    return v;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::SchemaError, std::string("verdict document: ") + e.what());
  }
}

/// Builds the verdict report for a metric algebra. Solvable inputs also get
/// the solvsoliton structure check and the intrinsic criterion.
inline VerdictDocument make_verdict(const AlgebraDocument& doc, const MetricLieAlgebra& m, const Tolerances& tol) {
  VerdictDocument v;
  v.input_digest = digest(doc);
  v.tolerances = tol;
  const SolitonVerdict s = classify(m, tol);
  v.cls = std::string(to_string(s.cls));
  v.c = s.c;
  v.d = s.d;
  v.residual = s.residual;
  v.stages = s.stages;
  v.der_dim = s.der_dim;
  const CurvatureReport rep = ricci_operator(m);
  v.sc = rep.sc;
  v.ricci_spectrum = sorted_real_spectrum(rep.ric);
  if (is_solvable(m.algebra(), tol)) {
    const SemiAlgebraicCheck sa = semi_algebraic_implies_algebraic_check(m, s, tol);
    if (sa.applicable) v.semi_algebraic_derivation = sa.holds;
  }
  return v;
}

}  // namespace rsoliton

#endif  // RSOLITON_IO_HPP
