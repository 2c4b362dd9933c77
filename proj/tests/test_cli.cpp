#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "semiconf/cli.hpp"

using namespace semiconf;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "semiconf");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("semiconf_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  std::string write_gadget(const std::string& name, const gadgets::QFLinkage& g, MarkerSet markers = {}) {
    io::write_file(path(name), io::linkage_json(g.linkage, markers, &g).dump(2));
    return path(name);
  }

  fs::path dir_;
};

std::size_t count(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (auto p = hay.find(needle); p != std::string::npos; p = hay.find(needle, p + 1)) ++n;
  return n;
}

}  // namespace

TEST(CliParsing, Points) {
  EXPECT_EQ(cli::parse_point("2+1i"), Point(2.0, 1.0));
  EXPECT_EQ(cli::parse_point("-0.5i"), Point(0.0, -0.5));
  EXPECT_EQ(cli::parse_point("3"), Point(3.0, 0.0));
  EXPECT_THROW(cli::parse_point("z1"), Error);
  auto [v, z] = cli::parse_assignment("D=2+1i");
  EXPECT_EQ(v, VertexId("D"));
  EXPECT_EQ(z, Point(2.0, 1.0));
  EXPECT_THROW(cli::parse_assignment("=1"), Error);
}

TEST(CliParsing, Paths) {
  auto c = cli::parse_path("circle 0+1i 1");
  EXPECT_NEAR(std::abs(c.at(0.25) - Point(0.0, 2.0)), 0.0, 1e-12);
  auto s = cli::parse_path("segment 0 1+1i");
  EXPECT_EQ(s.at(0.5), Point(0.5, 0.5));
  EXPECT_THROW(cli::parse_path("circle 0"), Error);
  EXPECT_THROW(cli::parse_path("spiral 0 1"), Error);
  EXPECT_THROW(cli::parse_path("circle 0 one"), Error);
}

TEST_F(Cli, CompileThenVerifySquare) {
  auto r = run({"compile", "z1^2", "--vars", "1", "--radius", "1", "-o", path("sq.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = io::parse_json_text(io::read_file(path("sq.json")), "sq.json");
  EXPECT_TRUE(j.contains("io"));
  EXPECT_TRUE(j.contains("instantiations"));
  EXPECT_EQ(j["gadget"]["kind"], "compiled");
  auto v = run({"verify", path("sq.json"), "--expr", "z1^2", "--samples", "200", "--seed", "7", "--tol", "1e-9"});
  EXPECT_EQ(v.code, 0) << v.out << v.err;
  EXPECT_TRUE(io::parse_json_text(v.out, "report")["passed"].get<bool>());
}

TEST_F(Cli, UnachievableToleranceExitsTwo) {
  ASSERT_EQ(run({"compile", "z1^2", "-o", path("sq.json")}).code, 0);
  auto v = run({"verify", path("sq.json"), "--samples", "200", "--tol", "1e-15"});
  EXPECT_EQ(v.code, cli::kVerifyFailed);
  EXPECT_NE(v.err.find("verification failed"), std::string::npos);
}

TEST_F(Cli, RoundTripVerifyIsBitForBit) {
  auto c = compiler::compile("z1*conj(z2) + 0.5", 2, 1.0);
  io::write_file(path("c.json"), io::compiled_json(c).dump());
  auto d = io::read_document(path("c.json"));
  ASSERT_TRUE(d.qf.has_value()) << d.note;
  EXPECT_EQ(d.qf->linkage, c.qf.linkage);
  auto a = analysis::verify_quasifunctional(c.qf, c.expr, 60, 3);
  auto b = analysis::verify_quasifunctional(*d.qf, c.expr, 60, 3);
  EXPECT_EQ(io::verification_json(a).dump(), io::verification_json(b).dump());
  auto v = run({"verify", path("c.json"), "--samples", "60", "--seed", "3"});
  EXPECT_EQ(io::parse_json_text(v.out, "cli").dump(), io::parse_json_text(io::verification_json(a).dump(), "lib").dump());
}

TEST_F(Cli, CanonicalJsonRoundTrip) {
  auto g = gadgets::peaucellier(5, 4, 3);
  MarkerSet w{{"D", "E"}};
  auto text = io::linkage_json(g.linkage, w, &g).dump();
  auto d = io::document_from_json(io::parse_json_text(text, "p"));
  EXPECT_EQ(d.linkage, g.linkage);
  EXPECT_EQ(d.markers, w);
  ASSERT_TRUE(d.qf.has_value());
  EXPECT_EQ(io::document_json(d).dump(), text);
  auto j = io::parse_json_text(text, "p");
  // Vertices sorted by name; bar edges carry no kind.
  auto names = j["vertices"].get<std::vector<std::string>>();
  EXPECT_TRUE(std::is_sorted(names.begin(), names.end()));
  std::size_t kinds = 0;
  for (const auto& e : j["edges"]) kinds += e.contains("kind");
  EXPECT_GT(kinds, 0u);
  EXPECT_LT(kinds, j["edges"].size());
}

TEST_F(Cli, EditedGadgetFileIsPlainLinkage) {
  auto g = gadgets::identity_gadget();
  auto j = io::parse_json_text(io::linkage_json(g.linkage, {}, &g).dump(), "id");
  j["edges"][0]["len"] = 2.5;
  auto d = io::document_from_json(j);
  EXPECT_FALSE(d.qf.has_value());
  EXPECT_FALSE(d.note.empty());
}

TEST_F(Cli, RenderPeaucellierHasGrayStrokes) {
  auto file = write_gadget("p.json", gadgets::peaucellier(5, 4, 3), {{"D", "E"}});
  auto r = run({"render", file, "-o", path("p.svg")});
  ASSERT_EQ(r.code, 0) << r.err;
  auto svg = io::read_file(path("p.svg"));
  EXPECT_GE(count(svg, "stroke=\"#999999\""), 2u);
  EXPECT_EQ(count(svg, "<circle"), 2u);
  EXPECT_GE(count(svg, "<rect class=\"pin\""), 1u);
  EXPECT_NE(svg.find("viewBox"), std::string::npos);
}

TEST_F(Cli, RenderGivenRealization) {
  auto g = gadgets::identity_gadget();
  auto file = write_gadget("id.json", g);
  auto real = g.place({Point(0.2, 0.1)});
  io::write_file(path("r.json"), io::realization_json(real).dump());
  auto r = run({"render", file, "--realization", path("r.json")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(count(r.out, "<line"), g.linkage.edge_count());
}

TEST_F(Cli, SolvePeaucellierWithFixedInput) {
  auto file = write_gadget("p.json", gadgets::peaucellier(5, 4, 3));
  auto r = run({"solve", file, "--fix", "D=2+1i", "--seed", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = io::parse_json_text(r.out, "solve");
  EXPECT_EQ(j["status"], "converged");
  Point d = io::point_from_json(j["positions"]["D"]);
  Point e = io::point_from_json(j["positions"]["E"]);
  EXPECT_NEAR(std::abs(d - Point(2.0, 1.0)), 0.0, 1e-9);
  EXPECT_NEAR(std::abs(d) * std::abs(e), 9.0, 1e-6);
}

TEST_F(Cli, SolveRejectsUnknownVertex) {
  auto file = write_gadget("p.json", gadgets::peaucellier(5, 4, 3));
  auto r = run({"solve", file, "--fix", "Q=1"});
  EXPECT_EQ(r.code, cli::kUsage);
  EXPECT_NE(r.err.find("unknown vertex"), std::string::npos);
}

TEST_F(Cli, TraceSquaringCsv) {
  auto file = write_gadget("sq.json", gadgets::squaring(1.0));
  auto g = gadgets::squaring(1.0);
  const std::string out = g.outputs[0].name;
  auto r = run({"trace", file, "--drive", "z", "--path", "circle 0 0.5", "--steps", "64", "--markers", "z," + out});
  ASSERT_EQ(r.code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "s,z_re,z_im," + out + "_re," + out + "_im");
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    std::vector<double> v;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) v.push_back(std::stod(cell));
    ASSERT_EQ(v.size(), 5u);
    Point z(v[1], v[2]), w(v[3], v[4]);
    EXPECT_NEAR(std::abs(w - z * z), 0.0, 1e-6);
  }
  EXPECT_EQ(rows, 65);
}

TEST_F(Cli, AnalyzeFourBar) {
  Linkage l;
  l.add_edge("a", "p", 1.0).add_edge("p", "q", 2.0).add_edge("q", "b", 1.5);
  l.set_pin("a", 0.0).set_pin("b", 2.0);
  io::write_file(path("fb.json"), io::linkage_json(l, {{"p", "q"}}).dump());
  auto r = run({"analyze", path("fb.json"), "--markers", "p,q", "--samples", "40"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = io::parse_json_text(r.out, "analyze");
  EXPECT_TRUE(j["invariance"]["passed"].get<bool>());
  EXPECT_EQ(j["invariance"]["group"], "reflection");
  EXPECT_TRUE(j["compactness"]["passed"].get<bool>());
  EXPECT_GT(j["cloud"]["points"].size(), 0u);
}

TEST_F(Cli, ErrorsAreNonzero) {
  EXPECT_EQ(run({}).code, cli::kUsage);
  EXPECT_EQ(run({"compile", "z1^", "-o", path("x.json")}).code, cli::kUsage);
  EXPECT_EQ(run({"compile", "z3", "--vars", "2"}).code, cli::kUsage);
  EXPECT_EQ(run({"compile", "z1", "--radius", "-1"}).code, cli::kUsage);
  EXPECT_EQ(run({"verify", path("missing.json")}).code, cli::kUsage);
  io::write_file(path("bad.json"), "{\"vertices\": [\"A\"], \"edges\": [");
  auto r = run({"solve", path("bad.json")});
  EXPECT_EQ(r.code, cli::kUsage);
  io::write_file(path("dangling.json"), R"({"vertices":["A"],"edges":[{"u":"A","v":"B","len":1}]})");
  EXPECT_EQ(run({"solve", path("dangling.json")}).code, cli::kUsage);
  auto g = gadgets::peaucellier(5, 4, 3);
  auto file = write_gadget("p.json", g);
  EXPECT_EQ(run({"verify", file}).code, cli::kUsage);  // needs --expr
}

TEST_F(Cli, HelpExitsZero) {
  auto r = run({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("compile"), std::string::npos);
}
