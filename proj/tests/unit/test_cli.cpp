#include "cli.hpp"

#include "json.hpp"

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

using ocpfem::cli::kExitConfig;
using ocpfem::cli::kExitFailure;
using ocpfem::cli::kExitOk;

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "ocpfem");
  std::ostringstream out, err;
  const int code = ocpfem::cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

const std::vector<std::string> kCommonFlags{
    "--dim",   "--cells",     "--refine", "--form",    "--reg",    "--rho",       "--nested",
    "--alpha", "--beta",      "--theta",  "--tol",     "--max-iters", "--threads", "--seed",
    "--output", "--format",   "--no-time", "--precond", "--strict-deterministic"};

} // namespace

TEST(Cli, LevelsZeroIsConfigError) {
  const auto r = run({"study", "--levels", "0"});
  EXPECT_EQ(r.code, kExitConfig);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, UnknownFlagAndBadCombinations) {
  EXPECT_EQ(run({"study", "--bogus"}).code, kExitConfig);
  EXPECT_EQ(run({"study", "--form", "primal", "--reg", "l2"}).code, kExitConfig);
  EXPECT_EQ(run({"study", "--rho", "constant:-1"}).code, kExitConfig);
  EXPECT_EQ(run({"study", "--rho", "sometimes"}).code, kExitConfig);
  EXPECT_EQ(run({"study", "--dim", "5"}).code, kExitConfig);
  EXPECT_EQ(run({"bench", "--thread-list", "1,x"}).code, kExitConfig);
  EXPECT_EQ(run({}).code, kExitConfig);
}

TEST(Cli, EverySubcommandHelpListsAllFlags) {
  for (const std::string sub : {"solve", "study", "verify", "bench"}) {
    const auto r = run({sub, "--help"});
    EXPECT_EQ(r.code, kExitOk) << sub;
    for (const auto& f : kCommonFlags) EXPECT_NE(r.out.find(f), std::string::npos) << sub << " " << f;
  }
  EXPECT_NE(run({"study", "--help"}).out.find("--max-dofs"), std::string::npos);
  EXPECT_NE(run({"verify", "--help"}).out.find("--check"), std::string::npos);
  EXPECT_NE(run({"bench", "--help"}).out.find("--thread-list"), std::string::npos);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST(Cli, VerifySchurIdentity) {
  const auto r = run({"verify", "--check", "schur-identity", "--dim", "2", "--levels", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream is(r.out);
  std::string header, row;
  std::getline(is, header);
  std::getline(is, row);
  EXPECT_EQ(header, "check,rho,vectors,max_rel_deviation,threshold,pass");
  std::vector<std::string> f;
  std::stringstream rs(row);
  for (std::string c; std::getline(rs, c, ',');) f.push_back(c);
  ASSERT_EQ(f.size(), 6u);
  EXPECT_LE(std::stod(f[3]), 1e-9);
  EXPECT_EQ(f[5], "1");
}

TEST(Cli, VerifySpectral) {
  const auto r = run({"verify", "--check", "spectral", "--dim", "2", "-n", "8", "--levels", "1", "--reg", "l2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(r.out.rfind("check,free_dofs,dense,", 0), 0u);
}

TEST(Cli, StudyCsvIsByteIdenticalInStrictMode) {
  const std::vector<std::string> base{"study", "--dim", "2", "-n", "8", "--levels", "3", "--nested",
                                      "--no-time", "--strict-deterministic"};
  auto a = base, b = base;
  a.insert(a.end(), {"--threads", "1"});
  b.insert(b.end(), {"--threads", "2"});
  const auto ra = run(a), rb = run(b), rc = run(a);
  ASSERT_EQ(ra.code, kExitOk) << ra.err;
  EXPECT_EQ(ra.out, rb.out);
  EXPECT_EQ(ra.out, rc.out);
  EXPECT_EQ(ra.out.rfind("level,dofs,error,eoc,its,tol,time_s\n", 0), 0u);
}

TEST(Cli, OutputFileAndJson) {
  const auto path = (std::filesystem::temp_directory_path() / "ocpfem_cli_test.json").string();
  const auto r = run({"study", "--dim", "1", "-n", "8", "--levels", "2", "--format", "json", "-o", path, "--no-time"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_TRUE(r.out.empty());
  std::ifstream is(path);
  const auto j = nlohmann::json::parse(is);
  EXPECT_EQ(j["config"]["dim"], 1);
  EXPECT_EQ(j["config"]["levels"], 2);
  EXPECT_EQ(j["records"].size(), 2u);
  std::remove(path.c_str());
}

TEST(Cli, SolveAndSolverFailure) {
  const auto ok = run({"solve", "--dim", "2", "-n", "4", "--level", "2", "--no-time"});
  ASSERT_EQ(ok.code, kExitOk) << ok.err;
  EXPECT_EQ(ok.out.rfind("level,dofs,error,eoc,its,tol,time_s\n2,81,", 0), 0u);
  const auto bad = run({"study", "--dim", "2", "-n", "8", "--levels", "2", "--max-iters", "2"});
  EXPECT_EQ(bad.code, kExitFailure);
}

TEST(Cli, BenchReportsEveryThreadCount) {
  const auto r = run({"bench", "--dim", "2", "-n", "8", "--level", "1", "--thread-list", "1,2", "--repetitions", "1",
                      "--no-time"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream is(r.out);
  std::string l;
  std::getline(is, l);
  EXPECT_EQ(l, "threads,its,time_s,speedup,error");
  int rows = 0;
  while (std::getline(is, l)) ++rows;
  EXPECT_EQ(rows, 2);
}
