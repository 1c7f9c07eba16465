#include "rsoliton/cli.hpp"
#include "rsoliton/io.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace rsoliton;

namespace {

struct CliRun {
  int code = -1;
  std::string out;
  std::string err;
};

CliRun run(std::vector<std::string> args) {
  std::ostringstream out, err;
  CliRun r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("rsoliton_test_" + name);
}

const char* kH3 = R"({
  "format_version": 1,
  "dim": 3,
  "basis": ["X", "Y", "Z"],
  "brackets": [{"i": 0, "j": 1, "coeffs": {"2": 1.0}}]
})";

}  // namespace

TEST(Document, ParsesHeisenberg) {
  const AlgebraDocument doc = parse_document(kH3);
  const MetricLieAlgebra m = document_metric(doc);
  EXPECT_EQ(m.dim(), 3);
  EXPECT_EQ(m.gram(), Matrix::Identity(3, 3));
  EXPECT_EQ(m.algebra(), fixtures::h3());
}

TEST(Document, RejectsLowerTriangularEntries) {
  const std::string text = R"({"format_version": 1, "dim": 2, "basis": ["A", "N"],
    "brackets": [{"i": 1, "j": 0, "coeffs": {"1": 1.0}}]})";
  try {
    parse_document(text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::SchemaError);
    EXPECT_NE(std::string(e.what()).find("brackets[0]"), std::string::npos);
  }
}

TEST(Document, SchemaErrors) {
  auto kind_of = [](const std::string& text) {
    try {
      parse_document(text);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::InvalidAlgebra;
  };
  EXPECT_EQ(kind_of(R"({"dim": 1, "basis": ["A"], "brackets": []})"), ErrorKind::SchemaError);
  EXPECT_EQ(kind_of(R"({"format_version": 1, "dim": 2, "basis": ["A"], "brackets": []})"), ErrorKind::SchemaError);
  EXPECT_EQ(kind_of(R"({"format_version": 1, "dim": 1, "basis": ["A"], "brackets": [], "metric": [[1, 2]]})"),
            ErrorKind::SchemaError);
  EXPECT_EQ(kind_of(R"({"format_version": 1, "dim": 2, "basis": ["A", "B"], "brackets": [],
    "metric": [[1, 0.5], [0.25, 1]]})"),
            ErrorKind::SchemaError);
  EXPECT_EQ(kind_of(R"({"format_version": 1, "dim": 2, "basis": ["A", "B"],
    "brackets": [{"i": 0, "j": 1, "coeffs": {"5": 1.0}}]})"),
            ErrorKind::SchemaError);
  EXPECT_EQ(kind_of(R"({"format_version": 2, "dim": 1, "basis": ["A"], "brackets": []})"), ErrorKind::SchemaError);
}

TEST(Document, ParseErrorCarriesLine) {
  try {
    parse_document("{\n  \"dim\": 3,\n  oops\n}", "bad.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ParseError);
    EXPECT_NE(std::string(e.what()).find("bad.json:3"), std::string::npos) << e.what();
  }
}

TEST(Document, RoundTripIsIdentity) {
  for (const auto& name : fixtures::concrete_names()) {
    const AlgebraDocument doc = fixture_document(name);
    const std::string text = emit(doc);
    const AlgebraDocument back = parse_document(text);
    EXPECT_EQ(back, doc) << name;
    EXPECT_EQ(emit(back), text) << name;
    EXPECT_EQ(digest(back), digest(doc)) << name;
  }
}

TEST(Document, PreservesNumbersExactly) {
  const std::string text = R"({"format_version": 1, "dim": 2, "basis": ["A", "N"],
    "brackets": [{"i": 0, "j": 1, "coeffs": {"1": 0.1}}], "metric": [[1.0000000000000002, 0.3], [0.3, 2.0]]})";
  const AlgebraDocument doc = parse_document(text);
  EXPECT_EQ(doc.brackets[0].coeffs.at(1), 0.1);
  EXPECT_EQ((*doc.metric)(0, 0), 1.0000000000000002);
  EXPECT_EQ(parse_document(emit(doc)), doc);
}

TEST(Document, FixtureMapSurvivesSerialisation) {
  const AlgebraDocument doc = fixture_document("example_6_2");
  const AlgebraDocument back = parse_document(emit(doc));
  const MetricLieAlgebra m = document_metric(back);
  const auto phi = document_phi(back, m);
  ASSERT_TRUE(phi);
  EXPECT_LT(max_abs(phi->image(0) - fixture("example_6_2").phi->image(0)), 1e-15);
}

TEST(Fixtures, CatalogAndErrors) {
  const LieAlgebra h5 = fixture("h5").metric.algebra();
  EXPECT_DOUBLE_EQ(h5.structure(0, 1, 4), 1.0);
  EXPECT_DOUBLE_EQ(h5.structure(2, 3, 4), 1.0);
  EXPECT_EQ(h5.entries().size(), 2u);
  EXPECT_TRUE(fixture("abelian_3").metric.algebra().entries().empty());
  EXPECT_EQ(fixture("abelian_7").metric.dim(), 7);
  for (const std::string bad : {"h7", "abelian_", "abelian_x", "abelian_0"}) {
    try {
      fixture(bad);
      FAIL() << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::UnknownFixture);
    }
  }
}

TEST(Verdict, RoundTrip) {
  const AlgebraDocument doc = fixture_document("h5");
  const VerdictDocument v = make_verdict(doc, document_metric(doc), Tolerances{});
  const VerdictDocument back = verdict_from_json(Json::parse(verdict_to_json(v).dump()));
  EXPECT_EQ(back, v);
  EXPECT_EQ(back.cls, "algebraic");
  EXPECT_EQ(back.input_digest.size(), 16u);
}

TEST(Cli, ValidateEveryFixture) {
  for (const auto& name : fixtures::concrete_names()) {
    const CliRun r = run({"validate", "fixtures/" + name});
    EXPECT_EQ(r.code, 0) << name << r.err;
  }
}

TEST(Cli, SolitonOnHeisenberg) {
  const CliRun r = run({"--json", "soliton", "fixtures/h3"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["class"], "algebraic");
  EXPECT_NEAR(j["c"].get<double>(), -1.5, 1e-10);
  EXPECT_NEAR(j["D"][2][2].get<double>(), 2.0, 1e-10);
  EXPECT_EQ(j["tool_version"], std::string(kVersion));
  EXPECT_TRUE(j["tolerances"].contains("soliton"));
}

TEST(Cli, SolitonOutputIsDeterministic) {
  for (const std::string name : {"h5", "example_6_3", "sl2"}) {
    const CliRun a = run({"--json", "soliton", "fixtures/" + name});
    const CliRun b = run({"--json", "soliton", "fixtures/" + name});
    EXPECT_EQ(a.out, b.out) << name;
  }
}

TEST(Cli, ModifyThenClassify) {
  const auto out = temp_path("r62.json");
  const CliRun m = run({"modify", "fixtures/example_6_2", "--out", out.string()});
  ASSERT_EQ(m.code, 0) << m.err;
  const CliRun r = run({"--json", "soliton", out.string()});
  const CliRun s = run({"--json", "soliton", "fixtures/h5"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json jr = Json::parse(r.out), js = Json::parse(s.out);
  EXPECT_NE(jr["class"], "algebraic");
  EXPECT_EQ(js["class"], "algebraic");
  const auto a = jr["ricci_spectrum"].get<std::vector<double>>();
  const auto b = js["ricci_spectrum"].get<std::vector<double>>();
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
  std::filesystem::remove(out);
}

TEST(Cli, ModifyWithInlinePhiAndCriterion) {
  const AlgebraDocument doc = fixture_document("example_6_2");
  const std::string block = document_to_json(doc)["phi"].dump();
  const CliRun r = run({"--json", "modify", "fixtures/h5", "--phi", block, "--criterion"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["criterion"]["nilradical_dim"], 4);
  EXPECT_EQ(j["criterion"]["nil_in_kernel"], false);
  EXPECT_EQ(j["criterion"]["consistent"], true);
}

TEST(Cli, ModifyRejectsBadMap) {
  // phi on Z violates the derived-algebra condition
  AlgebraDocument doc = fixture_document("example_6_2");
  std::swap(doc.phi->images[0], doc.phi->images[4]);
  const CliRun r = run({"modify", "fixtures/h5", "--phi", document_to_json(doc)["phi"].dump()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ConditionsViolated"), std::string::npos);
}

TEST(Cli, StructureReportsNonSemisimpleComplement) {
  const auto out = temp_path("r62s.json");
  ASSERT_EQ(run({"modify", "fixtures/example_6_2", "--out", out.string()}).code, 0);
  const CliRun r = run({"--json", "structure", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["structure"]["nilradical_dim"], 4);
  EXPECT_EQ(j["structure"]["complement_semisimple"][0], false);
  std::filesystem::remove(out);
}

TEST(Cli, CurvatureWithOracle) {
  const CliRun r = run({"--json", "curvature", "fixtures/hyperbolic_plane", "--oracle"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_LT(j["oracle_deviation"].get<double>(), 1e-12);
  EXPECT_NEAR(j["sc"].get<double>(), -2.0, 1e-14);
}

TEST(Cli, FlowWritesCsv) {
  const auto csv = temp_path("flow.csv");
  const CliRun r = run({"--json", "flow", "fixtures/h3", "--t-end", "0.3", "--out", csv.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json j = Json::parse(r.out);
  EXPECT_EQ(j["samples"], 31);
  EXPECT_EQ(j["self_similarity"]["passed"], true);
  std::ifstream in(csv);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("t,sc,eig_1", 0), 0u);
  std::filesystem::remove(csv);
}

TEST(Cli, SearchSmall) {
  const CliRun r = run({"--json", "search", "fixtures/h3", "--restarts", "2", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(Json::parse(r.out)["best_residual"].get<double>(), 1e-6);
}

TEST(Cli, FixturesListAndDump) {
  const CliRun l = run({"fixtures", "--list"});
  EXPECT_EQ(l.code, 0);
  EXPECT_NE(l.out.find("example_6_3"), std::string::npos);
  const CliRun d = run({"fixtures", "--dump", "h3"});
  EXPECT_EQ(d.code, 0);
  EXPECT_EQ(parse_document(d.out), fixture_document("h3"));
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({"soliton", "fixtures/nope"}).code, 1);
  EXPECT_EQ(run({"--tolerance-profile", "loose", "soliton", "fixtures/h3"}).code, 1);
  EXPECT_EQ(run({"--tolerance-profile", "strict", "soliton", "fixtures/h3"}).code, 0);
  EXPECT_EQ(run({"structure", "fixtures/sl2"}).code, 1);
  EXPECT_EQ(run({"fixtures", "--dump", "h9"}).code, 1);
  EXPECT_EQ(run({}).code, 1);

  const auto bad = temp_path("jacobi.json");
  {
    std::ofstream f(bad);
    f << R"({"format_version": 1, "dim": 3, "basis": ["X", "Y", "Z"], "brackets": [
      {"i": 0, "j": 1, "coeffs": {"2": 1.0}}, {"i": 1, "j": 2, "coeffs": {"0": 1.0}},
      {"i": 0, "j": 2, "coeffs": {"2": -1.0}}]})";
  }
  EXPECT_EQ(run({"validate", bad.string()}).code, 1);
  EXPECT_EQ(run({"soliton", bad.string()}).code, 1);
  std::filesystem::remove(bad);
}

TEST(Cli, InstalledBinaryExitCodes) {
  const std::string exe = RSOLITON_CLI_PATH;
  const std::string quiet = " >/dev/null 2>&1";
  auto code = [&](const std::string& args) {
    const int status = std::system((exe + " " + args + quiet).c_str());
    return WEXITSTATUS(status);
  };
  EXPECT_EQ(code("validate fixtures/h3"), 0);
  EXPECT_EQ(code("soliton fixtures/unknown"), 1);
  EXPECT_EQ(code("--json soliton " + std::string(RSOLITON_SOURCE_DIR) + "/fixtures/h5.json"), 0);
}

TEST(Cli, ShippedFixtureFilesMatchCatalog) {
  for (const auto& name : fixtures::concrete_names()) {
    const std::filesystem::path p = std::filesystem::path(RSOLITON_SOURCE_DIR) / "fixtures" / (name + ".json");
    ASSERT_TRUE(std::filesystem::exists(p)) << p;
    EXPECT_EQ(parse_document(read_file(p)), fixture_document(name)) << name;
  }
}
