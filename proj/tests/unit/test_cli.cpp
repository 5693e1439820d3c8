#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr folded into the captured output.
Run run(const std::string& args) {
  const std::string cmd = std::string(BROWNSCENE_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("brownscene_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const auto f = dir / "run.cfg";
  std::ofstream(f) << text;
  return f;
}

std::string slurp(const fs::path& f) {
  std::ifstream in(f);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json read_json(const fs::path& f) { return json::parse(slurp(f)); }

}  // namespace

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 2);
  EXPECT_EQ(run("frobnicate").code, 2);
  EXPECT_EQ(run("simulate --workers 0").code, 2);
  const auto help = run("--help");
  EXPECT_EQ(help.code, 0);
  EXPECT_NE(help.out.find("persistence"), std::string::npos);
}

TEST(Cli, PrintConfigAppliesOverrides) {
  const auto dir = scratch("print");
  const auto cfg = write_config(dir, "family = ibm\nn_replicas = 12\n");
  const auto r = run("simulate --config " + cfg.string() + " --seed 77 --workers 3 --out /x --print-config");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("family = ibm"), std::string::npos);
  EXPECT_NE(r.out.find("master_seed = 77"), std::string::npos);
  EXPECT_NE(r.out.find("workers = 3"), std::string::npos);
  EXPECT_NE(r.out.find("out_dir = /x"), std::string::npos);
  EXPECT_NE(r.out.find("n_replicas = 12"), std::string::npos);
}

TEST(Cli, InvalidConfigExitsTwo) {
  const auto dir = scratch("invalid");
  const auto cfg = write_config(dir, "family = fbm\nhurst = 1.5\nbogus = 1\n");
  const auto r = run("persistence --config " + cfg.string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("hurst"), std::string::npos);
  EXPECT_NE(r.out.find("bogus: unknown key"), std::string::npos);
}

TEST(Cli, IoFailuresExitThree) {
  EXPECT_EQ(run("simulate --config /nonexistent/run.cfg").code, 3);
  const auto dir = scratch("io");
  std::ofstream(dir / "blocker") << "x";
  const auto cfg = write_config(dir, "n_steps = 8\nn_replicas = 1\n");
  EXPECT_EQ(run("simulate --config " + cfg.string() + " --out " + (dir / "blocker" / "sub").string()).code, 3);
}

TEST(Cli, SimulateWritesReplicaFiles) {
  const auto dir = scratch("simulate");
  const auto cfg = write_config(dir, "family = stable\ndelta = 1.5\nn_steps = 128\nn_replicas = 2\n");
  const auto out = dir / "out";
  const auto r = run("simulate --config " + cfg.string() + " --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.out;
  for (const char* f : {"path_0.csv", "path_1.csv", "local_time_1.csv", "delta_0.csv", "simulate.json"})
    EXPECT_TRUE(fs::exists(out / f)) << f;
  EXPECT_EQ(slurp(out / "path_0.csv").rfind("t,y\n0,0\n", 0), 0u);
  EXPECT_EQ(slurp(out / "delta_1.csv").rfind("t,delta,running_sup,cond_var\n", 0), 0u);
  const auto j = read_json(out / "simulate.json");
  EXPECT_EQ(j["schema_version"], 1);
  EXPECT_EQ(j["command"], "simulate");
  EXPECT_EQ(j["replicas"].size(), 2u);
  EXPECT_EQ(j["process"]["family"], "stable");
  EXPECT_DOUBLE_EQ(j["horizon"].get<double>(), 2.0);

  const auto again = dir / "again";
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --out " + again.string()).code, 0);
  EXPECT_EQ(slurp(out / "delta_1.csv"), slurp(again / "delta_1.csv"));
  const auto other = dir / "other";
  ASSERT_EQ(run("simulate --config " + cfg.string() + " --seed 2 --out " + other.string()).code, 0);
  EXPECT_NE(slurp(out / "path_0.csv"), slurp(other / "path_0.csv"));
}

TEST(Cli, PersistenceVerdictsAndDeterminism) {
  const auto dir = scratch("persistence");
  // two horizons only: the slope fit needs three points, so it is omitted and the run exits 1
  const auto cfg = write_config(dir, "dt = 0.0625\nT_grid = 1,2\nn_replicas = 200\n");
  const auto a = run("persistence --config " + cfg.string() + " --out " + (dir / "a").string());
  EXPECT_EQ(a.code, 1);
  EXPECT_NE(a.out.find("flag: slope omitted"), std::string::npos);
  const auto ja = read_json(dir / "a" / "persistence.json");
  EXPECT_EQ(ja["verdict"], "slope omitted");
  EXPECT_TRUE(ja["fitted_slope"].is_null());

  const auto cfg2 = write_config(dir, "dt = 0.0625\nT_grid = 1,2,4,8,16\nn_replicas = 300\n");
  const auto b = run("persistence --config " + cfg2.string() + " --out " + (dir / "b").string());
  ASSERT_TRUE(b.code == 0 || b.code == 1) << b.out;
  const auto c = run("persistence --config " + cfg2.string() + " --workers 2 --out " + (dir / "c").string());
  EXPECT_EQ(b.code, c.code);
  const auto jb = read_json(dir / "b" / "persistence.json");
  const auto jc = read_json(dir / "c" / "persistence.json");
  EXPECT_EQ(jb["F_hat"], jc["F_hat"]);
  EXPECT_EQ(jb["verdict"] == "pass", b.code == 0);
  EXPECT_EQ(slurp(dir / "b" / "persistence.csv"), slurp(dir / "c" / "persistence.csv"));
}

TEST(Cli, MolchanAndTailsWriteSummaries) {
  const auto dir = scratch("mt");
  const auto cfg = write_config(dir,
                                "dt = 0.0625\nT_grid = 4,16\nn_replicas = 200\nmolchan_replicas_01 = 100\n"
                                "molchan_dt_01 = 0.00390625\ntail_dt = 0.015625\n");
  const auto m = run("molchan --config " + cfg.string() + " --out " + dir.string());
  ASSERT_TRUE(m.code == 0 || m.code == 1) << m.out;
  const auto jm = read_json(dir / "molchan.json");
  EXPECT_EQ(jm["pass"].get<bool>(), m.code == 0);
  EXPECT_EQ(jm["normalized"].size(), 2u);
  EXPECT_TRUE(fs::exists(dir / "molchan.csv"));

  const auto cfg2 = write_config(dir, "n_replicas = 4000\ntail_dt = 0.015625\n");
  const auto t = run("tails --config " + cfg2.string() + " --out " + dir.string());
  ASSERT_TRUE(t.code == 0 || t.code == 1) << t.out;
  const auto jt = read_json(dir / "tails.json");
  EXPECT_EQ(jt["pass"].get<bool>(), t.code == 0);
  EXPECT_TRUE(jt.contains("v1_lower"));
  EXPECT_EQ(slurp(dir / "tails.csv").rfind("quantity,", 0), 0u);
}

TEST(Cli, ValidateReportsEveryCheck) {
  const auto dir = scratch("validate");
  const auto cfg = write_config(dir,
                                "dt = 0.0625\nT_grid = 1,2,4,8,16\nn_replicas = 200\nks_replicas = 300\n"
                                "path_checks = 100\nresidual_paths = 3\nresidual_steps = 20000\n"
                                "maximal_replicas = 500\ntail_replicas = 3000\ntail_dt = 0.015625\n"
                                "slepian_paths = 2\nslepian_sceneries = 200\n");
  const auto r = run("validate --config " + cfg.string() + " --out " + dir.string());
  ASSERT_TRUE(r.code == 0 || r.code == 1) << r.out;
  const auto j = read_json(dir / "validate.json");
  EXPECT_EQ(j["command"], "validate");
  EXPECT_EQ(j["checks"].size(), 10u);
  bool all = true;
  for (const auto& c : j["checks"]) {
    all = all && c["pass"].get<bool>();
    EXPECT_NE(r.out.find(c["name"].get<std::string>()), std::string::npos);
  }
  EXPECT_EQ(all, r.code == 0);
  EXPECT_EQ(j["pass"].get<bool>(), all);
}
