#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"

namespace {

struct CmdResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

CmdResult run_cli(const std::string& args, const std::string& env = "") {
  const std::string out = "cli_stdout.tmp", err = "cli_stderr.tmp";
  std::string cmd = env + " " + std::string(STOCHEXP_CLI_PATH) + " " + args +
                    " > " + out + " 2> " + err;
  int rc = std::system(cmd.c_str());
  CmdResult r;
  r.exit_code = WEXITSTATUS(rc);
  r.out = slurp(out);
  r.err = slurp(err);
  std::remove(out.c_str());
  std::remove(err.c_str());
  return r;
}

const std::string kFastRun =
    "run --model cubic_drift --paths 512 --no-timestamp";

}  // namespace

TEST_CASE("catalog lists the models") {
  CmdResult r = run_cli("catalog");
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("bessel_counterexample") != std::string::npos);
  CHECK(r.out.find("pure_jump_iid") != std::string::npos);
  CHECK(r.out.find("hitsuda_volterra") != std::string::npos);
}

TEST_CASE("run emits a well-formed report") {
  CmdResult r = run_cli(kFastRun);
  REQUIRE(r.exit_code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["config"]["model"] == "cubic_drift");
  CHECK(j["config"]["n_paths"] == 512);
  CHECK(j["config"]["master_seed"] == 20260825);  // built-in default
  CHECK(j.contains("conditions"));
  CHECK(j.contains("diagnostics"));
  CHECK(j.contains("verdict"));
  CHECK(!j.contains("runtime"));  // --no-timestamp
  CHECK(j["verdict"]["analytic"] == "pass");
  CHECK(j["conditions"]["overall"] == "pass");
}

TEST_CASE("reports are byte-identical across worker counts") {
  CmdResult r1 = run_cli(kFastRun + " --workers 1");
  CmdResult r2 = run_cli(kFastRun + " --workers 3");
  REQUIRE(r1.exit_code == 0);
  REQUIRE(r2.exit_code == 0);
  CHECK(r1.out == r2.out);
  CHECK(!r1.out.empty());
}

TEST_CASE("runtime section appears without --no-timestamp") {
  CmdResult r = run_cli("run --model cubic_drift --paths 256");
  REQUIRE(r.exit_code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j.contains("runtime"));
  CHECK(j["runtime"]["elapsed_seconds"].get<double>() > 0.0);
}

TEST_CASE("unknown model and bad usage exit with 1") {
  CmdResult r = run_cli("run --model not_a_model --paths 16");
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("unknown catalog model") != std::string::npos);

  CmdResult miss = run_cli("run --paths 16");  // --model is required
  CHECK(miss.exit_code == 1);

  CmdResult badflag = run_cli("run --model cev --frobnicate");
  CHECK(badflag.exit_code == 1);

  CmdResult badgrid = run_cli("run --model cev --dt 0.3 --paths 16");
  CHECK(badgrid.exit_code == 1);  // 0.5 not divisible by 0.3
}

TEST_CASE("check subcommand reports the certificate only") {
  CmdResult r = run_cli("check --model bessel_counterexample");
  REQUIRE(r.exit_code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["conditions"]["overall"] == "fail");
  CHECK(!j.contains("diagnostics"));
}

TEST_CASE("girsanov subcommand compares the measures") {
  CmdResult r =
      run_cli("girsanov --model cev --paths 1024 --no-timestamp");
  REQUIRE(r.exit_code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["girsanov"]["functionals"].size() == 4);
  CHECK(j["quadratic_variation"]["cont_ok"] == true);
}

TEST_CASE("config file supplies defaults, flags win") {
  {
    std::ofstream f("cli_cfg.tmp");
    f << "# test config\n";
    f << "model = cev\n";
    f << "paths = 300\n";
    f << "seed = 42\n";
  }
  CmdResult r = run_cli("run --no-timestamp --config cli_cfg.tmp");
  REQUIRE(r.exit_code == 0);
  auto j = nlohmann::json::parse(r.out);
  CHECK(j["config"]["model"] == "cev");
  CHECK(j["config"]["n_paths"] == 300);
  CHECK(j["config"]["master_seed"] == 42);

  CmdResult over =
      run_cli("run --no-timestamp --config cli_cfg.tmp --paths 200");
  auto jo = nlohmann::json::parse(over.out);
  CHECK(jo["config"]["n_paths"] == 200);   // flag beats config
  CHECK(jo["config"]["master_seed"] == 42);  // config still fills the rest
  std::remove("cli_cfg.tmp");
}

TEST_CASE("seed falls back to the environment variable") {
  CmdResult env = run_cli("run --model cev --paths 64 --no-timestamp",
                          "STOCHEXP_SEED=90210");
  auto j = nlohmann::json::parse(env.out);
  CHECK(j["config"]["master_seed"] == 90210);

  CmdResult flag = run_cli("run --model cev --paths 64 --seed 7 --no-timestamp",
                           "STOCHEXP_SEED=90210");
  auto jf = nlohmann::json::parse(flag.out);
  CHECK(jf["config"]["master_seed"] == 7);  // flag beats env
}

TEST_CASE("csv dump writes the first path") {
  CmdResult r = run_cli(
      "run --model cev --paths 64 --no-timestamp --csv-paths cli_path.tmp");
  REQUIRE(r.exit_code == 0);
  std::string csv = slurp("cli_path.tmp");
  std::remove("cli_path.tmp");
  CHECK(csv.rfind("t,x0,z,stopped\n", 0) == 0);
  // header + 501 nodes (T = 0.5 at dt = 1e-3)
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n' ? 1 : 0;
  CHECK(lines == 502);
}

TEST_CASE("out flag writes the report to a file") {
  CmdResult r = run_cli(kFastRun + " --out cli_report.tmp");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.empty());
  auto j = nlohmann::json::parse(slurp("cli_report.tmp"));
  std::remove("cli_report.tmp");
  CHECK(j["config"]["model"] == "cubic_drift");
}
