#include <cstdlib>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "../support/outputs.hpp"
#include "commands.hpp"
#include "config.hpp"
#include "gapx/errors.hpp"

using namespace gapx;
using namespace gapx::cli;
using gapx::testing::read_csv;
using gapx::testing::read_file;
using gapx::testing::read_summary;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = GAPX_CONFIG_DIR;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gapx_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string expect_config_error(const std::string& text) {
  try {
    parse_config(text, "inline.ini");
  } catch (const ConfigError& e) {
    return e.what();
  }
  ADD_FAILURE() << "no ConfigError for:\n" << text;
  return {};
}

int run(const std::string& cmd, const RunConfig& cfg, const fs::path& out) {
  std::ostringstream err;
  return run_command(cmd, cfg, out, err);
}

double number(const std::string& s) { return std::stod(s); }

}  // namespace

TEST(Config, RoundTrip) {
  for (const char* name : {"example1.ini", "white.ini", "minimax_d0.ini", "minimax_control.ini"}) {
    const RunConfig a = load_config(kConfigs / name);
    const RunConfig b = parse_config(serialize_config(a), "roundtrip");
    EXPECT_TRUE(equivalent(a, b)) << name;
    EXPECT_EQ(config_hash(a), config_hash(b)) << name;
    EXPECT_EQ(serialize_config(a), serialize_config(b)) << name;
  }
}

TEST(Config, HashDistinguishesConfigs) {
  const RunConfig a = load_config(kConfigs / "example1.ini");
  RunConfig b = a;
  b.model.b1 = 0.51;
  EXPECT_NE(config_hash(a), config_hash(b));
  EXPECT_FALSE(equivalent(a, b));
  EXPECT_EQ(config_hash(a).size(), 8u);
}

TEST(Config, ErrorsCarryLineNumbers) {
  const std::string unknown = expect_config_error("[model]\nkind = example1\nbogus = 3\n");
  EXPECT_NE(unknown.find("inline.ini:3"), std::string::npos) << unknown;
  EXPECT_NE(unknown.find("bogus"), std::string::npos);
  const std::string number = expect_config_error("[model]\nkind = example1\n\nb1 = 0.5x\n");
  EXPECT_NE(number.find("inline.ini:4"), std::string::npos) << number;
  const std::string grid = expect_config_error("[model]\nkind = ar1\ngrid_size = 1000\n");
  EXPECT_NE(grid.find("inline.ini:3"), std::string::npos) << grid;
  const std::string syntax = expect_config_error("[model\nkind = ar1\n");
  EXPECT_NE(syntax.find("inline.ini:1"), std::string::npos) << syntax;
}

TEST(Config, ComplexTokens) {
  EXPECT_EQ(parse_complex("(1.5,-2)"), cplx(1.5, -2.0));
  EXPECT_EQ(parse_complex("3"), cplx(3.0, 0.0));
  EXPECT_EQ(parse_complex(format_complex(cplx(0.1, 1e-300))), cplx(0.1, 1e-300));
  EXPECT_THROW(parse_complex("(1,"), std::invalid_argument);
  const std::string bad = expect_config_error("[functional]\na0 = (1,\n");
  EXPECT_NE(bad.find("inline.ini:2"), std::string::npos) << bad;
}

TEST(Config, BuildersUseTheModel) {
  const RunConfig cfg = load_config(kConfigs / "example1.ini");
  const SpectralModel m = build_model(cfg);
  EXPECT_EQ(m.dim, 2);
  EXPECT_EQ(build_pattern(cfg).points(), (std::vector<int>{-3, -2}));
  EXPECT_EQ(build_functional(cfg).a.size(), 2u);
}

TEST(ExitCodes, Mapping) {
  RunConfig cfg = load_config(kConfigs / "example1.ini");
  EXPECT_EQ(run("estimate", cfg, scratch("ok")), kOk);

  RunConfig bad_dim = cfg;
  bad_dim.model.b1 = 1.5;
  EXPECT_EQ(run("estimate", bad_dim, scratch("param")), kConfigError);

  RunConfig zero_scale = load_config(kConfigs / "white.ini");
  zero_scale.model.signal_scale = 0.0;
  EXPECT_EQ(run("estimate", zero_scale, scratch("scale")), kConfigError);

  RunConfig ill = cfg;
  ill.solver.condition_ceiling = 1.5;
  EXPECT_EQ(run("estimate", ill, scratch("ill")), kNumericalError);

  RunConfig big = load_config(kConfigs / "minimax_d0.ini");
  big.model.kind = "var1";
  big.model.dim = 3;
  big.model.signal_phi = CMatrix::Zero(3, 3);
  big.model.signal_sigma = CMatrix::Identity(3, 3);
  big.intervals.clear();
  big.a = {CVector::Ones(3)};
  EXPECT_EQ(run("minimax", big, scratch("unsupported")), kUnsupported);
  EXPECT_EQ(run("nonsense", cfg, scratch("cmd")), kConfigError);
}

TEST(Binary, ExitCodesAndOutput) {
  const fs::path out = scratch("binary");
  const std::string bin = GAPX_BINARY;
  const std::string base = bin + " estimate --out " + out.string() + " --config ";
  EXPECT_EQ(std::system((base + (kConfigs / "example1.ini").string() + " > /dev/null 2>&1").c_str()), 0);
  EXPECT_NEAR(number(read_summary(out / "result.summary").at("delta")), 15.69, 1e-6 * 15.69);
  fs::create_directories(out);
  const fs::path broken = out / "broken.ini";
  {
    std::ofstream(broken) << "[model]\nkind = nothing\n";
  }
  const int rc = std::system((base + broken.string() + " > /dev/null 2>&1").c_str());
  EXPECT_TRUE(WIFEXITED(rc));
  EXPECT_EQ(WEXITSTATUS(rc), kConfigError);
  const int missing = std::system((bin + " estimate --config /nonexistent.ini > /dev/null 2>&1").c_str());
  EXPECT_EQ(WEXITSTATUS(missing), kConfigError);
}

TEST(Estimate, ExampleOneSummary) {
  const fs::path out = scratch("estimate");
  const auto files = cmd_estimate(load_config(kConfigs / "example1.ini"), out);
  EXPECT_EQ(files.size(), 3u);
  const auto s = read_summary(out / "result.summary");
  EXPECT_NEAR(number(s.at("delta")), 15.69, 1e-6 * 15.69);
  EXPECT_EQ(s.at("variant"), "noiseless");
  EXPECT_EQ(s.at("seed"), "7");
  EXPECT_EQ(s.at("config_hash"), config_hash(load_config(kConfigs / "example1.ini")));
  EXPECT_LE(number(s.at("gap_constraint")), 1e-8);
  for (const auto& row : read_csv(out / "taps.csv")) {
    const double re = number(row.at("re"));
    const double im = number(row.at("im"));
    if (row.at("lag") == "-1") {
      EXPECT_NEAR(re, row.at("component") == "0" ? 1.11 : 0.39, 1e-9);
    } else {
      EXPECT_LT(std::hypot(re, im), 1e-8) << row.at("lag");
    }
  }
}

TEST(Estimate, WhiteSignalIsFunctionalNorm) {
  const fs::path out = scratch("white");
  cmd_estimate(load_config(kConfigs / "white.ini"), out);
  EXPECT_NEAR(number(read_summary(out / "result.summary").at("delta")), 6.0, 1e-10);
}

TEST(Estimate, RerunIsByteIdentical) {
  const RunConfig cfg = load_config(kConfigs / "example1.ini");
  const fs::path a = scratch("rerun_a");
  const fs::path b = scratch("rerun_b");
  cmd_estimate(cfg, a);
  cmd_estimate(cfg, b);
  for (const char* f : {"result.summary", "taps.csv", "h_grid.csv"}) EXPECT_EQ(read_file(a / f), read_file(b / f)) << f;
}

TEST(OracleCheck, ExampleOneConverges) {
  const fs::path out = scratch("oracle");
  cmd_oracle_check(load_config(kConfigs / "example1.ini"), out);
  const auto s = read_summary(out / "comparison.csv");
  EXPECT_EQ(s.at("converged"), "true");
  EXPECT_EQ(s.at("oracle_nonincreasing"), "true");
  const auto rows = read_csv(out / "comparison.csv");
  ASSERT_EQ(rows.size(), 5u);
  EXPECT_LE(number(rows.back().at("rel_diff")), 1e-4);
}

TEST(Simulate, ExampleOneWithinThreeStandardErrors) {
  RunConfig cfg = load_config(kConfigs / "example1.ini");
  cfg.simulation.replications = 2000;
  const fs::path a = scratch("sim_a");
  const fs::path b = scratch("sim_b");
  cmd_simulate(cfg, a);
  cmd_simulate(cfg, b);
  EXPECT_EQ(read_file(a / "mc.csv"), read_file(b / "mc.csv"));
  const auto rows = read_csv(a / "mc.csv");
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_LE(std::abs(number(rows[0].at("z_score"))), 3.0);
  EXPECT_EQ(rows[0].at("seed"), "7");
}

TEST(Simulate, ZeroFunctionalGivesZero) {
  RunConfig cfg = load_config(kConfigs / "example1.ini");
  cfg.simulation.replications = 50;
  for (auto& a : cfg.a) a.setZero();
  const fs::path out = scratch("sim_zero");
  cmd_simulate(cfg, out);
  const auto rows = read_csv(out / "mc.csv");
  EXPECT_EQ(number(rows[0].at("mse_hat")), 0.0);
  EXPECT_EQ(number(rows[0].at("delta_spectral")), 0.0);
}

TEST(Minimax, SingletonModelMatchesEstimate) {
  RunConfig cfg = load_config(kConfigs / "white.ini");
  cfg.minimax.family = "model";
  cfg.minimax.f.kind = "D0_1";
  cfg.minimax.f.level = 1.0;
  cfg.minimax.saddle_samples = 5;
  const fs::path out = scratch("singleton");
  ASSERT_EQ(run("minimax", cfg, out), kOk);
  ASSERT_EQ(run("estimate", cfg, out), kOk);
  const auto lfd = read_summary(out / "lfd.summary");
  EXPECT_NEAR(number(lfd.at("delta_star")), number(read_summary(out / "result.summary").at("delta")), 1e-10);
  EXPECT_EQ(lfd.at("saddle_pass"), "true");
}

TEST(Minimax, LeastFavorableAndNegativeControl) {
  const fs::path out = scratch("minimax");
  cmd_minimax(load_config(kConfigs / "minimax_d0.ini"), out);
  const auto lfd = read_summary(out / "lfd.summary");
  EXPECT_EQ(lfd.at("saddle_pass"), "true");
  EXPECT_EQ(lfd.at("saddle_violations"), "0");
  for (const auto& row : read_csv(out / "saddle.csv")) EXPECT_EQ(row.at("pass"), "pass");

  const fs::path ctl = scratch("control");
  cmd_minimax(load_config(kConfigs / "minimax_control.ini"), ctl);
  const auto c = read_summary(ctl / "lfd.summary");
  EXPECT_EQ(c.at("mode"), "fixed");
  EXPECT_EQ(c.at("saddle_pass"), "false");
  EXPECT_GT(std::stoi(c.at("saddle_violations")), 0);
}
