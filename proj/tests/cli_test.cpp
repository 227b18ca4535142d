#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include <eigenshift/cli.hpp>

using namespace eigenshift;
using cli::Mode;
using cli::parse_config;

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("eigenshift_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::main_entry(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST(ParseConfig, SweepExample) {
  const auto cfg = parse_config({"sweep", "--potential", "quadratic:c2=1", "--a", "-inf", "--t-range", "-1:2:31", "--N", "2001"});
  EXPECT_EQ(cfg.mode, Mode::sweep);
  EXPECT_EQ(cfg.potential, "quadratic:c0=0,c1=0,c2=1");
  EXPECT_TRUE(std::isinf(cfg.a) && cfg.a < 0);
  ASSERT_TRUE(cfg.t_range);
  EXPECT_EQ(cfg.t_range->min, -1.0);
  EXPECT_EQ(cfg.t_range->max, 2.0);
  EXPECT_EQ(cfg.t_range->count, 31u);
  EXPECT_EQ(cfg.n_interior, 2001u);
}

TEST(ParseConfig, SolveExample) {
  const auto cfg = parse_config({"solve", "--potential", "affine:c1=-1", "--a", "-inf", "--t", "2"});
  EXPECT_EQ(cfg.mode, Mode::solve);
  EXPECT_EQ(cfg.potential, "affine:c0=0,c1=-1");
  ASSERT_TRUE(cfg.t);
  EXPECT_EQ(*cfg.t, 2.0);
  EXPECT_EQ(cfg.n_interior, 4001u);
}

TEST(ParseConfig, EqualsFormAndFormats) {
  const auto cfg = parse_config({"solve", "--potential=affine", "--t=1", "--format=csv,plot", "--threads=2", "--tol-res=1e-7"});
  EXPECT_EQ(cfg.formats, (std::set<std::string>{"csv", "plot"}));
  EXPECT_EQ(cfg.threads, 2u);
  EXPECT_EQ(cfg.tol.res.value_or(0.0), 1e-7);
}

TEST(ParseConfig, UsageErrors) {
  EXPECT_THROW(parse_config({"sweep", "--t-range", "2:1:5"}), UsageError);
  EXPECT_THROW(parse_config({"sweep", "--potential", "affine", "--t-range", "0:1:3"}), UsageError);
  EXPECT_THROW(parse_config({"solve", "--potential", "affine"}), UsageError);
  EXPECT_THROW(parse_config({"solve", "--potential", "affine", "--t", "1", "--N", "8"}), UsageError);
  EXPECT_THROW(parse_config({"solve", "--potential", "affine", "--t", "1", "--bogus", "3"}), UsageError);
  EXPECT_THROW(parse_config({"solve", "--potential", "wobble:k=1", "--t", "1"}), UsageError);
  EXPECT_THROW(parse_config({"solve", "--potential", "affine", "--t", "0", "--a", "1"}), UsageError);
  EXPECT_THROW(parse_config({"fly"}), UsageError);
  EXPECT_THROW(parse_config({}), UsageError);
}

TEST(ParseConfig, UsageErrorNamesToken) {
  std::string err;
  EXPECT_EQ(run({"sweep", "--t-range", "2:1:5"}, &err), 2);
  EXPECT_NE(err.find("2:1:5"), std::string::npos);
  EXPECT_EQ(run({"solve", "--potential", "quadratic:c2=x", "--t", "1"}, &err), 2);
  EXPECT_NE(err.find("'x'"), std::string::npos);
}

TEST(ParseConfig, ConfigFileWithFlagOverride) {
  const auto dir = scratch("config");
  const auto path = dir / "run.json";
  {
    std::ofstream os(path);
    os << R"({"mode": "solve", "potential": "quadratic:c2=1", "a": "-inf", "t": 0.5, "N": 801, "format": ["json"]})";
  }
  const auto from_file = parse_config({"--config", path.string()});
  EXPECT_EQ(from_file.mode, Mode::solve);
  EXPECT_EQ(from_file.n_interior, 801u);
  EXPECT_EQ(*from_file.t, 0.5);
  EXPECT_EQ(from_file.formats, (std::set<std::string>{"json"}));
  const auto overridden = parse_config({"solve", "--config", path.string(), "--N", "1001", "--t", "1"});
  EXPECT_EQ(overridden.n_interior, 1001u);
  EXPECT_EQ(*overridden.t, 1.0);
  EXPECT_EQ(overridden.potential, "quadratic:c0=0,c1=0,c2=1");
}

TEST(ParseConfig, ConfigFileRejectsUnknownKeys) {
  const auto dir = scratch("config_bad");
  const auto path = dir / "run.json";
  {
    std::ofstream os(path);
    os << R"({"potential": "affine", "t": 1, "colour": "blue"})";
  }
  EXPECT_THROW(parse_config({"solve", "--config", path.string()}), UsageError);
  EXPECT_EQ(run({"solve", "--config", (dir / "missing.json").string()}), 2);
}

TEST(ParseConfig, OutDirFromEnvironment) {
  ::setenv("EIGENSHIFT_OUT_DIR", "/tmp/from_env", 1);
  EXPECT_EQ(parse_config({"solve", "--potential", "affine", "--t", "1"}).out_dir, fs::path("/tmp/from_env"));
  EXPECT_EQ(parse_config({"solve", "--potential", "affine", "--t", "1", "--out-dir", "x"}).out_dir, fs::path("x"));
  ::unsetenv("EIGENSHIFT_OUT_DIR");
}

TEST(Run, SolveWritesArtifacts) {
  const auto dir = scratch("solve");
  EXPECT_EQ(run({"solve", "--potential", "affine:c1=-1", "--a", "-inf", "--t", "2", "--N", "1001", "--format", "csv,json,plot",
                 "--out-dir", dir.string()}),
            0);
  const auto csv = slurp(dir / "ground_state.csv");
  EXPECT_EQ(csv.rfind("x,u\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 1003);
  const auto j = nlohmann::json::parse(slurp(dir / "ground_state.json"));
  EXPECT_NEAR(j["lambda"].get<double>(), 0.33810741, 1e-3);
  EXPECT_EQ(j["N"].get<int>(), 1001);
  EXPECT_TRUE(fs::exists(dir / "ground_state.dat"));
}

TEST(Run, SensitivityAndSweepArtifacts) {
  const auto dir = scratch("sens");
  EXPECT_EQ(run({"sensitivity", "--potential", "affine", "--t", "1", "--N", "801", "--out-dir", dir.string()}), 0);
  const auto j = nlohmann::json::parse(slurp(dir / "sensitivity.json"));
  for (const char* key : {"t", "lambda", "lambda_dot_flux", "lambda_dot_integral", "lambda_ddot", "lambda_dot_fd",
                          "lambda_ddot_fd", "t0", "orth_residual"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(slurp(dir / "u_dot.csv").rfind("x,u_dot\n", 0), 0u);

  EXPECT_EQ(run({"sweep", "--potential", "quadratic:c2=1", "--a", "-inf", "--t-range", "-1:2:11", "--N", "801",
                 "--format", "csv,json,plot", "--out-dir", dir.string()}),
            0);
  const auto sweep_csv = slurp(dir / "sweep.csv");
  EXPECT_EQ(sweep_csv.rfind("t,lambda,lambda_dot,second_diff\n", 0), 0u);
  EXPECT_EQ(std::count(sweep_csv.begin(), sweep_csv.end(), '\n'), 12);
  EXPECT_TRUE(nlohmann::json::parse(slurp(dir / "verdict.json"))["passed"].get<bool>());
  EXPECT_TRUE(fs::exists(dir / "sweep_lambda.dat"));
  EXPECT_TRUE(fs::exists(dir / "sweep_lambda_dot.dat"));
}

TEST(Run, NumericalFailureExitsOne) {
  std::string err;
  EXPECT_EQ(run({"solve", "--potential", "neg_quadratic", "--a", "-inf", "--t", "0", "--out-dir", scratch("fail").string()}, &err), 1);
  EXPECT_NE(err.find("confining"), std::string::npos);
}

TEST(Run, CoarseVerifyNotesWidenedTolerances) {
  const auto dir = scratch("verify");
  std::ostringstream out, err;
  const int code = cli::main_entry({"verify", "--N", "16", "--out-dir", dir.string()}, out, err);
  EXPECT_TRUE(code == 0 || code == 1);
  const auto report = slurp(dir / "verify_report.txt");
  EXPECT_NE(report.find("widened"), std::string::npos);
  EXPECT_NE(report.find("NOT ASSERTED"), std::string::npos);
  EXPECT_NE(report.find("hypothesis a = -inf absent"), std::string::npos);
}

TEST(Run, RepeatedRunsAreByteIdentical) {
  const auto first = scratch("det1");
  const auto second = scratch("det2");
  for (const auto& dir : {first, second}) {
    ASSERT_EQ(run({"sensitivity", "--potential", "exp_growth:amp=1,rate=1", "--t", "1", "--N", "801", "--threads", "2",
                   "--format", "csv,json,plot", "--out-dir", dir.string()}),
              0);
  }
  for (const auto& entry : fs::directory_iterator(first)) {
    EXPECT_EQ(slurp(entry.path()), slurp(second / entry.path().filename())) << entry.path().filename();
  }
}

TEST(Run, HelpExitsZero) { EXPECT_EQ(run({"--help"}), 0); }
