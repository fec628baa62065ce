#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "acbem_cli/cli.hpp"

namespace fs = std::filesystem;
using acbem::cli::run_cli;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::path(testing::TempDir()) / ("acbem_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string write_file(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p) << text;
  return p.string();
}

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run({}).code, acbem::cli::kExitValidation);
  EXPECT_EQ(run({"frobnicate"}).code, acbem::cli::kExitValidation);
  EXPECT_EQ(run({"patch-test", "--format", "xml"}).code, acbem::cli::kExitValidation);
  EXPECT_EQ(run({"patch-test", "--count", "0"}).code, acbem::cli::kExitValidation);
  const CliResult help = run({"--help"});
  EXPECT_EQ(help.code, acbem::cli::kExitOk);
  EXPECT_NE(help.out.find("patch-test"), std::string::npos);
}

TEST(Cli, PatchTestCsvAndJson) {
  const CliResult csv = run({"patch-test", "--K", "4", "--N", "5", "--count", "3"});
  EXPECT_EQ(csv.code, acbem::cli::kExitOk);
  EXPECT_EQ(csv.out.rfind("format_version,F1,F2,energy_residual,force_residual\n", 0), 0u);
  EXPECT_EQ(std::count(csv.out.begin(), csv.out.end(), '\n'), 4);
  EXPECT_EQ(run({"patch-test", "--K", "4", "--N", "5", "--count", "3"}).out, csv.out);
  EXPECT_NE(run({"patch-test", "--K", "4", "--N", "5", "--count", "3", "--seed", "8"}).out, csv.out);

  const CliResult js = run({"patch-test", "--K", "4", "--N", "5", "--count", "2", "--format", "json"});
  EXPECT_EQ(js.code, acbem::cli::kExitOk);
  const auto doc = nlohmann::json::parse(js.out);
  EXPECT_EQ(doc.at("kind"), "patch_test");
  EXPECT_EQ(doc.at("rows").size(), 2u);
  EXPECT_LE(doc.at("max_residual").get<double>(), 1e-10);
}

TEST(Cli, InvalidInputs) {
  const CliResult mesh = run({"solve", "--K", "8", "--N", "6"});
  EXPECT_EQ(mesh.code, acbem::cli::kExitValidation);
  EXPECT_FALSE(mesh.err.empty());
  const CliResult missing = run({"solve", "--config", "/nonexistent/cfg.toml"});
  EXPECT_EQ(missing.code, acbem::cli::kExitValidation);
  EXPECT_NE(missing.err.find("cannot open"), std::string::npos);

  const fs::path dir = scratch("badcfg");
  const CliResult bad = run({"solve", "--config", write_file(dir / "bad.toml", "[potential]\nbeta = 0.3\nbogus = 1\n")});
  EXPECT_EQ(bad.code, acbem::cli::kExitValidation);
  EXPECT_NE(bad.err.find("line 3"), std::string::npos);
  EXPECT_EQ(run({"bem-oracles", "--M", "4"}).code, acbem::cli::kExitValidation);
}

TEST(Cli, SolveWritesArtifacts) {
  const fs::path dir = scratch("solve");
  const CliResult r = run({"solve", "--K", "4", "--N", "5", "--out", dir.string()});
  EXPECT_EQ(r.code, acbem::cli::kExitOk) << r.err;
  EXPECT_TRUE(fs::exists(dir / "solve.csv"));
  EXPECT_TRUE(fs::exists(dir / "solution_K4_N5.txt"));
  const CliResult j = run({"solve", "--K", "4", "--N", "5", "--format", "json"});
  const auto doc = nlohmann::json::parse(j.out);
  EXPECT_LE(doc.at("rows")[0].at("gradient_norm").get<double>(), 1e-10);
  fs::remove_all(dir);
}

TEST(Cli, StabilityAndOracles) {
  const CliResult s = run({"stability", "--K", "4"});
  EXPECT_EQ(s.code, acbem::cli::kExitOk) << s.err;
  EXPECT_EQ(s.out.rfind("format_version,K,N,dofs,certificate", 0), 0u);
  const CliResult b = run({"bem-oracles", "--M", "64", "--format", "json"});
  EXPECT_EQ(b.code, acbem::cli::kExitOk);
  EXPECT_EQ(nlohmann::json::parse(b.out).at("rows").size(), 7u);
}

TEST(Cli, StudyExitCodes) {
  const fs::path dir = scratch("study");
  const std::string ok_cfg = write_file(dir / "ok.toml",
                                        "[study]\nK = [2, 4]\n[reference]\nR_ref = 40\nguard = false\n[output]\ndir = \"" +
                                            (dir / "ok").string() + "\"\n");
  const CliResult ok = run({"study", "--config", ok_cfg, "--plot"});
  EXPECT_EQ(ok.code, acbem::cli::kExitOk) << ok.err;
  EXPECT_NE(ok.out.find("# slope"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "ok" / "study.csv"));
  EXPECT_TRUE(fs::exists(dir / "ok" / "study.svg"));

  const std::string fail_cfg = write_file(
      dir / "fail.toml", "[study]\nK = [2, 4]\n[reference]\nR_ref = 40\nguard = false\n[solver]\nmax_iterations = 1\n");
  const CliResult fail = run({"study", "--config", fail_cfg, "--out", (dir / "fail").string()});
  EXPECT_EQ(fail.code, acbem::cli::kExitSolver);
  EXPECT_NE(fail.out.find("failed"), std::string::npos);
  fs::remove_all(dir);
}
