#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const std::string cli = NSPOMDP_CLI_PATH;
const std::string models_dir = NSPOMDP_MODELS_DIR;

struct Result {
  int code = -1;
  std::string out, err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("nspomdp_cli_" + std::to_string(std::random_device{}()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  Result run(const std::string& args) const {
    const auto err = path("stderr.txt");
    const std::string cmd = cli + " " + args + " 2>" + err.string();
    Result r;
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) return r;
    char buf[512];
    while (std::fgets(buf, sizeof buf, pipe)) r.out += buf;
    const int status = pclose(pipe);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err);
    return r;
  }

  static std::string model(const std::string& name) { return models_dir + "/" + name; }

 private:
  fs::path dir_;
};

}  // namespace

TEST_F(Cli, SolvePrintsBounds) {
  const auto r = run("solve --model " + model("carpark4_grid.json") + " --belief " + model("b0_carpark4.json") +
                     " --epsilon 1e-3 --trace " + path("trace.csv").string());
  ASSERT_EQ(r.code, 0) << r.err;
  double lb = 0, ub = 0, gap = 0;
  unsigned iters = 0;
  ASSERT_EQ(std::sscanf(r.out.c_str(), "lb %lf ub %lf gap %lf iters %u", &lb, &ub, &gap, &iters), 4) << r.out;
  EXPECT_NEAR(lb, 2560.0, 1e-3);
  EXPECT_NEAR(ub, 2560.0, 1e-3);
  EXPECT_LE(gap, 1e-3);
  const auto trace = slurp(path("trace.csv"));
  EXPECT_EQ(trace.rfind("iter,lb,ub,gamma_size,upsilon_size,millis\n0,", 0), 0u);
}

TEST_F(Cli, SolveResolvesBundledNames) {
  const auto r = run("solve --model carpark4_grid --belief b0_carpark4 --epsilon 1e-2");
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(Cli, SolveBudgetExitCode) {
  const auto r = run("solve --model " + model("carpark4_grid.json") + " --belief " + model("b0_carpark4.json") +
                     " --epsilon 1e-3 --max-iterations 1");
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("error: kind=budget msg="), std::string::npos) << r.err;
}

TEST_F(Cli, BoundsRoundTripAndSimulate) {
  const auto bounds = path("bounds").string();
  ASSERT_EQ(run("solve --model " + model("carpark4_grid.json") + " --belief " + model("b0_carpark4.json") +
                " --bounds-out " + bounds)
                .code,
            0);
  EXPECT_TRUE(fs::exists(path("bounds") / "bounds.txt"));
  EXPECT_TRUE(fs::exists(path("bounds") / "max.txt"));
  EXPECT_TRUE(fs::exists(path("bounds") / "alpha_0.txt"));
  auto sim = [&](const std::string& out) {
    return run("simulate --model " + model("carpark4_grid.json") + " --bounds " + bounds + " --belief " +
               model("b0_carpark4.json") + " --runs 5 --horizon 20 --seed 9 --out " + path(out).string());
  };
  const auto a = sim("a.csv");
  const auto b = sim("b.csv");
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_EQ(a.out.rfind("runs 5 mean_return ", 0), 0u) << a.out;
  EXPECT_NE(a.out.find(" compliance "), std::string::npos);

  const auto ex = run("export-values --model " + model("carpark4_grid.json") + " --bounds " + bounds + " --out " +
                      path("export").string());
  ASSERT_EQ(ex.code, 0) << ex.err;
  EXPECT_EQ(slurp(path("export") / "max.txt"), slurp(path("bounds") / "max.txt"));
}

TEST_F(Cli, BoundsForAnotherModelAreRejected) {
  const auto bounds = path("bounds").string();
  ASSERT_EQ(run("solve --model " + model("carpark4_grid.json") + " --belief " + model("b0_carpark4.json") +
                " --epsilon 1e-2 --bounds-out " + bounds)
                .code,
            0);
  const auto r = run("export-values --model " + model("carpark4_grid_obstacle.json") + " --bounds " + bounds + " --out " +
                     path("x").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error: kind=io"), std::string::npos) << r.err;
}

TEST_F(Cli, Oracle) {
  const auto r = run("oracle --model " + model("carpark4_grid.json") + " --belief " + model("b0_carpark4.json") +
                     " --horizon 10");
  ASSERT_EQ(r.code, 0) << r.err;
  double value = 0;
  ASSERT_EQ(std::sscanf(r.out.c_str(), "horizon 10 value %lf", &value), 1) << r.out;
  EXPECT_NEAR(value, 2023.129088, 1e-6);
  EXPECT_EQ(run("oracle --model " + model("carpark4_grid.json") + " --belief " + model("b0_carpark4.json") +
                " --horizon 10 --budget 2")
                .code,
            3);
}

TEST_F(Cli, PreimageCoversDomain) {
  const auto r = run("preimage --net " + model("demo_net.json") + " --domain 0,4,0,4 --out " + path("fcp.txt").string());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("coverage ok"), std::string::npos) << r.out;
  EXPECT_FALSE(slurp(path("fcp.txt")).empty());
}

TEST_F(Cli, UsageErrors) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("solve --model " + model("carpark4_grid.json")).code, 1);
  const auto r = run("frobnicate");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error: kind=usage"), std::string::npos) << r.err;
  EXPECT_EQ(run("--help").code, 0);
}

TEST_F(Cli, MissingFileIsIoError) {
  const auto r = run("solve --model " + path("nope.json").string() + " --belief " + model("b0_carpark4.json"));
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("error: kind=io"), std::string::npos) << r.err;
}

TEST_F(Cli, InvalidModelIsValidationError) {
  {
    std::ofstream bad(path("bad.json"));
    bad << R"({"locs":["1"],"pers":["p"],"actions":["a"],"domain":{"box":[[0,1],[0,1]]},"beta":1.5})";
  }
  const auto r = run("solve --model " + path("bad.json").string() + " --belief " + model("b0_carpark4.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_EQ(r.err.rfind("error: kind=", 0), 0u) << r.err;
}
