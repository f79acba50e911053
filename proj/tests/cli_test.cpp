// Exercises the command-line binary end to end: output formats, exit
// codes, JSON mode, and seed reproducibility. The binary path arrives as
// the first test argument.

#include <gtest/gtest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>

#include <json.hpp>

namespace {

std::string g_binary;

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run(const std::string& args) {
  std::string cmd = g_binary + " " + args + " 2>&1";
  FILE* pipe = popen(cmd.c_str(), "r");
  EXPECT_NE(pipe, nullptr);
  std::string out;
  std::array<char, 4096> buf;
  size_t got;
  while ((got = fread(buf.data(), 1, buf.size(), pipe)) > 0) out.append(buf.data(), got);
  int status = pclose(pipe);
  return {WEXITSTATUS(status), out};
}

std::string write_mat(const std::string& name, const std::string& content) {
  std::string path = std::string(::testing::TempDir()) + name;
  std::ofstream(path) << content;
  return path;
}

TEST(Cli, SymbolOddPrime) {
  std::string d = write_mat("d.mat", "# diag(1, 6)\n2\n1 0\n0 6\n");
  RunResult r = run("symbol -p 3 " + d);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("symbol: 1^+1 3^-1"), std::string::npos);
  EXPECT_NE(r.output.find("k: 2"), std::string::npos);
}

TEST(Cli, SymbolTwoPrintsRawAndCanonical) {
  std::string ts = write_mat("ts.mat", "2\n3 0\n0 5\n");
  RunResult r = run("symbol -p 2 " + ts);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("symbol: [1^+2]_0"), std::string::npos);
  EXPECT_NE(r.output.find("canonical: [1^2]_0"), std::string::npos);
}

TEST(Cli, CanonVerifiedOutput) {
  std::string ts = write_mat("ts2.mat", "2\n3 0\n0 5\n");
  RunResult r = run("canon -p 2 -k 4 " + ts);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("canonical:\n2\n1 0\n0 7"), std::string::npos);
  EXPECT_NE(r.output.find("VERIFIED"), std::string::npos);
}

TEST(Cli, CanonDefaultPrecisionPrinted) {
  std::string one = write_mat("one.mat", "1\n1\n");
  RunResult r = run("canon -p 5 " + one);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("k: 1"), std::string::npos);
  EXPECT_NE(r.output.find("canonical:\n1\n1"), std::string::npos);
}

TEST(Cli, EquivPaperPairs) {
  std::string a = write_mat("a.mat", "2\n3 0\n0 5\n");
  std::string b = write_mat("b.mat", "2\n1 0\n0 7\n");
  RunResult r = run("equiv -p 2 -k 4 " + a + " " + b);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("EQUIVALENT"), std::string::npos);
  EXPECT_NE(r.output.find("VERIFIED"), std::string::npos);

  std::string c = write_mat("c.mat", "2\n1 0\n0 4\n");
  std::string d = write_mat("dd.mat", "2\n5 0\n0 20\n");
  r = run("equiv -p 2 -k 5 " + c + " " + d);
  EXPECT_EQ(r.exit_code, 0);
}

TEST(Cli, EquivInequivalentExitCodeOne) {
  std::string a = write_mat("ia.mat", "2\n1 0\n0 1\n");
  std::string b = write_mat("ib.mat", "2\n1 0\n0 2\n");
  RunResult r = run("equiv -p 3 " + a + " " + b);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("INEQUIVALENT"), std::string::npos);
  EXPECT_NE(r.output.find("difference:"), std::string::npos);
}

TEST(Cli, RepresentFoundAndNone) {
  std::string t = write_mat("tminus.mat", "2\n2 1\n1 2\n");
  RunResult r = run("represent -p 2 -k 3 -t 2 " + t);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("vector:"), std::string::npos);
  EXPECT_NE(r.output.find("VERIFIED"), std::string::npos);

  std::string q = write_mat("q14.mat", "2\n1 0\n0 4\n");
  r = run("represent -p 2 -k 3 -t 3 " + q);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("NONE (certified mod 8)"), std::string::npos);

  std::string e = write_mat("e11.mat", "2\n1 0\n0 1\n");
  r = run("represent -p 3 -k 2 -t 2 " + e);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("vector: 1 1"), std::string::npos);
}

TEST(Cli, ParseErrorsExitTwo) {
  std::string bad = write_mat("bad.mat", "garbled\n");
  EXPECT_EQ(run("symbol -p 3 " + bad).exit_code, 2);
  std::string empty = write_mat("empty.mat", "# nothing\n");
  EXPECT_EQ(run("symbol -p 3 " + empty).exit_code, 2);
  std::string asym = write_mat("asym.mat", "2\n1 2\n3 4\n");
  EXPECT_EQ(run("symbol -p 3 " + asym).exit_code, 2);
  EXPECT_EQ(run("symbol -p 3 /nonexistent.mat").exit_code, 2);
}

TEST(Cli, DegenerateExitThree) {
  std::string deg = write_mat("deg.mat", "2\n1 1\n1 1\n");
  EXPECT_EQ(run("canon -p 3 " + deg).exit_code, 3);
}

TEST(Cli, JsonOutput) {
  std::string ts = write_mat("tsj.mat", "2\n3 0\n0 5\n");
  RunResult r = run("canon -p 2 -k 4 --json " + ts);
  EXPECT_EQ(r.exit_code, 0);
  nlohmann::json out = nlohmann::json::parse(r.output);
  EXPECT_EQ(out["n"], 2);
  EXPECT_EQ(out["p"], 2);
  EXPECT_EQ(out["k"], 4);
  EXPECT_EQ(out["canonical"], nlohmann::json({1, 0, 0, 7}));
  EXPECT_EQ(out["witness"].size(), 4u);
}

TEST(Cli, SeededRunsAreReproducible) {
  std::string q = write_mat("rep3.mat", "3\n2 1 0\n1 5 3\n0 3 1\n");
  RunResult r1 = run("represent -p 3 -k 4 -t 7 --seed 42 " + q);
  RunResult r2 = run("represent -p 3 -k 4 -t 7 --seed 42 " + q);
  EXPECT_EQ(r1.exit_code, 0);
  EXPECT_EQ(r1.output, r2.output);
}

}  // namespace

int main(int argc, char** argv) {
  ::testing::InitGoogleTest(&argc, argv);
  if (argc < 2) {
    std::fprintf(stderr, "usage: cli_test <path-to-padiq-binary>\n");
    return 1;
  }
  g_binary = argv[1];
  return RUN_ALL_TESTS();
}
