#ifndef RSOLITON_CLI_HPP
#define RSOLITON_CLI_HPP

// Command-line surface. Kept in a header so tests can drive it in-process.
// Exit codes: 0 report produced, 1 invalid input, 2 internal contract violation.

#include "rsoliton/common.hpp"
#include "rsoliton/curvature.hpp"
#include "rsoliton/fixtures.hpp"
#include "rsoliton/flow.hpp"
#include "rsoliton/io.hpp"
#include "rsoliton/lie_algebra.hpp"
#include "rsoliton/modification.hpp"
#include "rsoliton/soliton.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace rsoliton::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitInternal = 2;

namespace detail {

inline std::string fmt(double x) {
  std::ostringstream s;
  s << std::setprecision(10) << x;
  return s.str();
}

inline std::string fmt(const std::vector<double>& v) {
  std::string out = "[";
  for (size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
  return out + "]";
}

inline void print_matrix(std::ostream& out, const Matrix& m, const std::string& indent = "  ") {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    out << indent;
    for (Eigen::Index c = 0; c < m.cols(); ++c) out << std::setw(12) << fmt(m(r, c)) << (c + 1 < m.cols() ? " " : "");
    out << "\n";
  }
}

/// Reads a phi block from inline JSON or from a file holding either a bare
/// block or a full document with a "phi" field.
inline PhiBlock load_phi(const std::string& arg, int dim) {
  std::string text = arg;
  std::error_code ec;
  if (std::filesystem::is_regular_file(arg, ec)) text = read_file(arg);
  Json j = parse_json_text(text, "--phi");
  if (j.is_object() && j.contains("phi")) j = j["phi"];
  Json wrapper = {{"format_version", kFormatVersion}, {"dim", dim}, {"brackets", Json::array()}, {"phi", j}};
  Json names = Json::array();
  for (int i = 0; i < dim; ++i) names.push_back("e" + std::to_string(i));
  wrapper["basis"] = names;
  return *document_from_json(wrapper).phi;
}

}  // namespace detail

struct Context {
  bool json = false;
  std::string profile = "default";
  Tolerances tol;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
};

inline int cmd_validate(Context& ctx, const std::string& file) {
  const AlgebraDocument doc = load_document(file);
  const LieAlgebra alg = document_algebra(doc);
  const Diagnostics d = validate(alg, ctx.tol);
  bool metric_ok = true;
  std::string metric_error;
  try {
    document_metric(doc, ctx.tol);
  } catch (const Error& e) {
    metric_ok = false;
    metric_error = e.what();
  }
  if (ctx.json) {
    Json j = {{"input_digest", digest(doc)},
              {"dim", alg.dim()},
              {"antisymmetry_ok", d.antisymmetry_ok},
              {"jacobi_residual", d.jacobi_residual},
              {"valid", d.valid},
              {"solvable", d.solvable},
              {"nilpotent", d.nilpotent},
              {"unimodular", d.unimodular},
              {"derived_dims", d.derived_dims},
              {"lower_central_dims", d.lower_central_dims},
              {"metric_ok", metric_ok},
              {"tool_version", std::string(kVersion)},
              {"tolerances", tolerances_json(ctx.tol)}};
    *ctx.out << j.dump(2) << "\n";
  } else {
    *ctx.out << "dim " << alg.dim() << "\n"
             << "jacobi residual " << detail::fmt(d.jacobi_residual) << "\n"
             << "valid " << (d.valid ? "yes" : "no") << ", solvable " << (d.solvable ? "yes" : "no") << ", nilpotent "
             << (d.nilpotent ? "yes" : "no") << ", unimodular " << (d.unimodular ? "yes" : "no") << "\n"
             << "metric " << (metric_ok ? "ok" : metric_error) << "\n";
  }
  return d.valid && metric_ok ? kExitOk : kExitInput;
}

inline int cmd_curvature(Context& ctx, const std::string& file, bool oracle) {
  const AlgebraDocument doc = load_document(file);
  const MetricLieAlgebra m = document_metric(doc, ctx.tol);
  require_valid(m.algebra(), ctx.tol);
  const CurvatureReport rep = ricci_operator(m);
  const std::vector<double> spec = sorted_real_spectrum(rep.ric);
  double deviation = 0.0;
  if (oracle) deviation = max_abs(rep.ric - ricci_via_koszul(m, ctx.tol));
  if (ctx.json) {
    Json j = {{"input_digest", digest(doc)},
              {"ric", rsoliton::detail::matrix_json(rep.ric)},
              {"moment", rsoliton::detail::matrix_json(rep.moment)},
              {"killing_op", rsoliton::detail::matrix_json(rep.killing_op)},
              {"mean_curvature", rsoliton::detail::vector_json(rep.mean_curvature)},
              {"sc", rep.sc},
              {"ricci_spectrum", spec},
              {"tool_version", std::string(kVersion)},
              {"tolerances", tolerances_json(ctx.tol)}};
    if (oracle) j["oracle_deviation"] = deviation;
    *ctx.out << j.dump(2) << "\n";
  } else {
    *ctx.out << "Ricci operator:\n";
    detail::print_matrix(*ctx.out, rep.ric);
    *ctx.out << "scalar curvature " << detail::fmt(rep.sc) << "\n"
             << "Ricci spectrum " << detail::fmt(spec) << "\n";
    if (oracle) *ctx.out << "Koszul oracle deviation " << detail::fmt(deviation) << "\n";
  }
  return kExitOk;
}

inline int cmd_soliton(Context& ctx, const std::string& file, std::optional<double> tolerance) {
  const AlgebraDocument doc = load_document(file);
  Tolerances tol = ctx.tol;
  if (tolerance) tol.soliton = *tolerance;
  const MetricLieAlgebra m = document_metric(doc, tol);
  const VerdictDocument v = make_verdict(doc, m, tol);
  if (ctx.json) {
    *ctx.out << verdict_to_json(v).dump(2) << "\n";
  } else {
    *ctx.out << "class " << v.cls << "\n";
    if (v.cls != "none") *ctx.out << "c " << detail::fmt(v.c) << "\nresidual " << detail::fmt(v.residual) << "\n";
    if (v.cls == "algebraic" || v.cls == "semi_algebraic") {
      *ctx.out << "D:\n";
      detail::print_matrix(*ctx.out, v.d);
    }
    *ctx.out << "stage residuals: einstein " << detail::fmt(v.stages.einstein) << ", algebraic "
             << detail::fmt(v.stages.algebraic) << ", semi-algebraic " << detail::fmt(v.stages.semi_algebraic) << "\n"
             << "Ricci spectrum " << detail::fmt(v.ricci_spectrum) << "\n";
  }
  return kExitOk;
}

inline int cmd_structure(Context& ctx, const std::string& file) {
  const AlgebraDocument doc = load_document(file);
  const MetricLieAlgebra m = document_metric(doc, ctx.tol);
  require_valid(m.algebra(), ctx.tol);
  if (!is_solvable(m.algebra(), ctx.tol)) throw Error(ErrorKind::NotSolvable, "structure needs a solvable algebra");
  const SolitonVerdict v = classify(m, ctx.tol);
  const StructureReport s = solvsoliton_structure_check(m, v, ctx.tol);
  const CriterionVerdict c = solvsoliton_criterion(m, nullptr, ctx.tol);
  if (ctx.json) {
    Json j = {{"input_digest", digest(doc)},
              {"class", std::string(to_string(v.cls))},
              {"structure", structure_json(s)},
              {"criterion", criterion_json(c)},
              {"tool_version", std::string(kVersion)},
              {"tolerances", tolerances_json(ctx.tol)}};
    *ctx.out << j.dump(2) << "\n";
  } else {
    auto yn = [](bool b) { return b ? "yes" : "no"; };
    *ctx.out << "class " << to_string(v.cls) << "\n"
             << "nilradical dim " << s.nilradical_dim << ", complement dim " << s.complement.cols() << "\n"
             << "(a) complement abelian " << yn(s.abelian) << " (residual " << detail::fmt(s.abelian_residual) << ")\n"
             << "(b) ad A symmetric on n " << yn(s.ad_symmetric) << " (residual " << detail::fmt(s.symmetric_residual)
             << ")\n";
    if (s.derivation_applicable)
      *ctx.out << "(c) D|a = 0, D|n = D1 - ad H " << yn(s.derivation_shape) << "\n"
               << "(d) Ker D in a + Im ad H " << yn(s.kernel_contained) << "\n";
    else
      *ctx.out << "(c), (d) not applicable: no algebraic soliton derivation\n";
    *ctx.out << "complement generators semisimple:";
    for (bool b : s.complement_semisimple) *ctx.out << " " << yn(b);
    *ctx.out << "\nad of complement reductive, not purely imaginary " << yn(c.reductive_elements) << "\n"
             << "complement abelian and ad-reductive " << yn(c.abelian_reductive_complement) << "\n";
  }
  return kExitOk;
}

inline int cmd_modify(Context& ctx, const std::string& file, const std::string& phi_arg, bool criterion,
                      const std::string& out_path) {
  const AlgebraDocument doc = load_document(file);
  const MetricLieAlgebra source = document_metric(doc, ctx.tol);
  std::optional<ModificationMap> phi;
  if (!phi_arg.empty()) {
    AlgebraDocument with = doc;
    with.phi = detail::load_phi(phi_arg, doc.dim);
    phi = document_phi(with, source);
  } else {
    phi = document_phi(doc, source);
  }
  if (!phi) throw Error(ErrorKind::SchemaError, "no modification map: pass --phi or add a phi block");
  const ModifiedAlgebra mod = build_modification(*phi, ctx.tol);
  AlgebraDocument out_doc = make_document(mod.r, std::nullopt, doc.name ? std::optional(*doc.name + "_modified") : std::nullopt);
  if (!out_path.empty()) {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw Error(ErrorKind::ParseError, "cannot write '" + out_path + "'");
    f << emit(out_doc);
  }
  std::optional<CriterionVerdict> crit;
  std::optional<ModificationStructureReport> tests;
  if (criterion) {
    crit = solvsoliton_criterion(mod, ctx.tol);
    tests = modification_structure_tests(mod, ctx.tol);
  }
  if (ctx.json) {
    Json j = {{"input_digest", digest(doc)},
              {"algebra", document_to_json(out_doc)},
              {"tool_version", std::string(kVersion)},
              {"tolerances", tolerances_json(ctx.tol)}};
    if (crit) {
      j["criterion"] = criterion_json(*crit);
      j["modification_tests"] = {{"derived_in_kernel", tests->derived_in_kernel},
                                 {"derived_residual", tests->derived_residual},
                                 {"kernel_containment", tests->kernel_containment},
                                 {"k_annihilates_a", tests->k_annihilates_a},
                                 {"n1_stable", tests->n1_stable},
                                 {"a_n0_stable", tests->a_n0_stable},
                                 {"all_pass", tests->all_pass}};
    }
    *ctx.out << j.dump(2) << "\n";
  } else {
    if (out_path.empty()) *ctx.out << emit(out_doc);
    else *ctx.out << "wrote " << out_path << "\n";
    if (crit) {
      auto yn = [](bool b) { return b ? "yes" : "no"; };
      *ctx.out << "nilradical of r: dim " << crit->nilradical_dim << "\n"
               << "(ii) n(s) in Ker phi " << yn(crit->nil_in_kernel.value_or(false)) << "\n"
               << "(iii) ad n(r)^perp reductive " << yn(crit->reductive_elements) << "\n"
               << "(iv) n(r)^perp abelian, ad-reductive " << yn(crit->abelian_reductive_complement) << "\n"
               << "solvsoliton " << yn(crit->solvsoliton) << "\n"
               << "modification structure tests " << (tests->all_pass ? "pass" : "fail") << "\n";
    }
  }
  return kExitOk;
}

inline int cmd_flow(Context& ctx, const std::string& file, double t_end, double tol_value, const std::string& out_path,
                    int samples) {
  const AlgebraDocument doc = load_document(file);
  const MetricLieAlgebra m = document_metric(doc, ctx.tol);
  require_valid(m.algebra(), ctx.tol);
  FlowOptions opts;
  opts.t_end = t_end;
  opts.tol = tol_value;
  opts.samples = samples;
  const FlowTrace trace = ricci_flow(m, opts, ctx.tol);
  {
    std::ofstream f(out_path, std::ios::binary);
    if (!f) throw Error(ErrorKind::ParseError, "cannot write '" + out_path + "'");
    write_flow_csv(f, trace);
  }
  const SolitonVerdict v = classify(m, ctx.tol);
  std::optional<SelfSimilarityReport> self;
  if (is_algebraic_class(v.cls) && trace.size() >= 3) self = soliton_selfsimilarity_check(trace, v.c, ctx.tol);
  if (ctx.json) {
    Json j = {{"input_digest", digest(doc)},
              {"samples", trace.size()},
              {"blow_up", trace.blow_up},
              {"blow_up_reason", trace.blow_up_reason},
              {"accepted_steps", trace.step_stats.accepted},
              {"rejected_steps", trace.step_stats.rejected},
              {"max_error_estimate", trace.step_stats.max_error_estimate},
              {"final_time", trace.times.empty() ? 0.0 : trace.times.back()},
              {"final_sc", trace.sc_values.empty() ? 0.0 : trace.sc_values.back()},
              {"csv", out_path},
              {"tool_version", std::string(kVersion)},
              {"tolerances", tolerances_json(ctx.tol)}};
    if (self)
      j["self_similarity"] = {{"c", v.c},
                              {"sc_defect", self->sc_defect},
                              {"spectrum_defect", self->spectrum_defect},
                              {"passed", self->passed}};
    *ctx.out << j.dump(2) << "\n";
  } else {
    *ctx.out << "wrote " << trace.size() << " samples to " << out_path << "\n"
             << "steps accepted " << trace.step_stats.accepted << ", rejected " << trace.step_stats.rejected << "\n";
    if (trace.blow_up) *ctx.out << "stopped early: " << trace.blow_up_reason << "\n";
    if (self)
      *ctx.out << "self-similarity with c = " << detail::fmt(v.c) << ": sc defect " << detail::fmt(self->sc_defect)
               << ", spectrum defect " << detail::fmt(self->spectrum_defect) << (self->passed ? " (pass)" : " (fail)")
               << "\n";
  }
  return kExitOk;
}

inline int cmd_search(Context& ctx, const std::string& file, int restarts, std::uint64_t seed, int iterations,
                      int threads) {
  const AlgebraDocument doc = load_document(file);
  const LieAlgebra alg = document_algebra(doc);
  SearchOptions opt;
  opt.restarts = restarts;
  opt.seed = seed;
  opt.iterations = iterations;
  opt.threads = threads;
  const SearchResult r = soliton_residual_search(alg, opt, ctx.tol);
  if (ctx.json) {
    Json j = {{"input_digest", digest(doc)},
              {"restarts", restarts},
              {"seed", seed},
              {"iterations", iterations},
              {"best_residual", r.best_residual},
              {"best_restart", r.best_restart},
              {"best_gram", rsoliton::detail::matrix_json(r.best_gram)},
              {"restart_residuals", r.restart_residuals},
              {"note", "heuristic search; a large residual is evidence, not proof"},
              {"tool_version", std::string(kVersion)},
              {"tolerances", tolerances_json(ctx.tol)}};
    *ctx.out << j.dump(2) << "\n";
  } else {
    *ctx.out << "best relative soliton residual " << detail::fmt(r.best_residual) << " (restart " << r.best_restart
             << " of " << restarts << ")\n"
             << "heuristic search; a large residual is evidence, not proof\n";
  }
  return kExitOk;
}

inline int cmd_fixtures(Context& ctx, bool list, const std::string& dump) {
  if (list) {
    if (ctx.json) {
      *ctx.out << Json(fixtures::names()).dump(2) << "\n";
    } else {
      for (const auto& n : fixtures::names()) *ctx.out << n << "\n";
    }
    return kExitOk;
  }
  if (dump.empty()) throw Error(ErrorKind::SchemaError, "fixtures needs --list or --dump <name>");
  *ctx.out << emit(fixture_document(dump));
  return kExitOk;
}

/// Runs one command; `args` excludes the program name.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx;
  ctx.out = &out;
  ctx.err = &err;
  CLI::App app{"Ricci curvature, soliton detection and modifications of left-invariant metrics", "rsoliton"};
  app.fallthrough();
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  app.add_flag("--json", ctx.json, "Machine-readable report on stdout");
  app.add_option("--tolerance-profile", ctx.profile, "Tolerance profile")
      ->check(CLI::IsMember({"default", "strict"}));

  std::string file;
  auto* validate_cmd = app.add_subcommand("validate", "Check antisymmetry, Jacobi identity and metric");
  validate_cmd->add_option("file", file, "Algebra document or fixture name")->required();

  bool oracle = false;
  auto* curvature_cmd = app.add_subcommand("curvature", "Ricci operator and scalar curvature");
  curvature_cmd->add_option("file", file)->required();
  curvature_cmd->add_flag("--oracle", oracle, "Also compare against the Koszul-formula computation");

  std::optional<double> soliton_tol;
  auto* soliton_cmd = app.add_subcommand("soliton", "Classify the metric as a Ricci soliton");
  soliton_cmd->add_option("file", file)->required();
  soliton_cmd->add_option("--tolerance", soliton_tol, "Acceptance threshold for the soliton residual");

  auto* structure_cmd = app.add_subcommand("structure", "Solvsoliton structure report");
  structure_cmd->add_option("file", file)->required();

  std::string phi_arg, out_path;
  bool criterion = false;
  auto* modify_cmd = app.add_subcommand("modify", "Build the modification (id + phi) s");
  modify_cmd->add_option("file", file)->required();
  modify_cmd->add_option("--phi", phi_arg, "Inline JSON phi block or file (defaults to the document's own block)");
  modify_cmd->add_flag("--criterion", criterion, "Evaluate the solvsoliton criteria on the result");
  modify_cmd->add_option("--out", out_path, "Write the modified algebra document here");

  double t_end = 0.0, flow_tol = 1e-9;
  int samples = 31;
  std::string csv_path;
  auto* flow_cmd = app.add_subcommand("flow", "Integrate the Ricci flow of the metric");
  flow_cmd->add_option("file", file)->required();
  flow_cmd->add_option("--t-end", t_end, "Final time (negative for backward flow)")->required();
  flow_cmd->add_option("--tol", flow_tol, "Integrator tolerance");
  flow_cmd->add_option("--out", csv_path, "CSV trace output")->required();
  flow_cmd->add_option("--samples", samples, "Number of uniformly spaced samples")->check(CLI::Range(3, 100000));

  int restarts = 10, iterations = 500, threads = 1;
  std::uint64_t seed = 0;
  auto* search_cmd = app.add_subcommand("search", "Multi-start search for soliton metrics");
  search_cmd->add_option("file", file)->required();
  search_cmd->add_option("--restarts", restarts)->required()->check(CLI::PositiveNumber);
  search_cmd->add_option("--seed", seed)->required();
  search_cmd->add_option("--iterations", iterations)->check(CLI::PositiveNumber);
  search_cmd->add_option("--threads", threads)->check(CLI::PositiveNumber);

  bool list = false;
  std::string dump;
  auto* fixtures_cmd = app.add_subcommand("fixtures", "List or print catalog fixtures");
  auto* list_opt = fixtures_cmd->add_flag("--list", list, "List fixture names");
  auto* dump_opt = fixtures_cmd->add_option("--dump", dump, "Print a fixture document");
  list_opt->excludes(dump_opt);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    ctx.tol = Tolerances::profile(ctx.profile);
    if (*validate_cmd) return cmd_validate(ctx, file);
    if (*curvature_cmd) return cmd_curvature(ctx, file, oracle);
    if (*soliton_cmd) return cmd_soliton(ctx, file, soliton_tol);
    if (*structure_cmd) return cmd_structure(ctx, file);
    if (*modify_cmd) return cmd_modify(ctx, file, phi_arg, criterion, out_path);
    if (*flow_cmd) return cmd_flow(ctx, file, t_end, flow_tol, csv_path, samples);
    if (*search_cmd) return cmd_search(ctx, file, restarts, seed, iterations, threads);
    if (*fixtures_cmd) return cmd_fixtures(ctx, list, dump);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return e.internal() ? kExitInternal : kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitInput;
}

}  // namespace rsoliton::cli

#endif  // RSOLITON_CLI_HPP
