#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "afmtj/cli.hpp"

using namespace afmtj;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out, err;
};

Result run_cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  Result r;
  r.code = run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("afmtj_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

std::vector<std::string> lines(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

const std::vector<std::string> kSmallMonteCarlo = {
    "--set", "montecarlo.n_trials=20000",        "--set", "montecarlo.full_read_trials=40",
    "--set", "montecarlo.full_write_trials=4",   "--set", "montecarlo.calibration_trials=150",
    "--set", "montecarlo.validation_trials=100", "--set", "montecarlo.max_misclassification=0.05"};

}  // namespace

TEST(Cli, MissingConfigFileExitsWithTwoAndWritesNothing) {
  const fs::path dir = fresh_dir("missing");
  const auto r = run_cli({"pvt-table", "--config", "/nonexistent/config.json", "--out", dir.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("ConfigInvalid"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Cli, UnknownOverrideKeyExitsWithTwo) {
  const fs::path dir = fresh_dir("badkey");
  const auto r = run_cli({"pvt-table", "--set", "device.afmtj.spin=3", "--out", dir.string()});
  EXPECT_EQ(r.code, 2);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Cli, UnknownSubcommandExitsWithTwo) { EXPECT_EQ(run_cli({"dance"}).code, 2); }

TEST(Cli, ConfigFileIsMergedOntoDefaults) {
  const fs::path dir = fresh_dir("cfgfile");
  fs::create_directories(dir);
  const fs::path cfg = dir / "cfg.json";
  std::ofstream(cfg) << R"({"master_seed": 42})";
  const auto r = run_cli({"pvt-table", "--config", cfg.string(), "--out", (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(dir / "out" / "pvt_table.csv").find("master_seed=42"), std::string::npos);
}

TEST(Cli, PvtTableHasSixRowsAndAHeaderComment) {
  const fs::path dir = fresh_dir("pvt");
  const auto r = run_cli({"pvt-table", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto l = lines(slurp(dir / "pvt_table.csv"));
  ASSERT_EQ(l.size(), 8u);
  EXPECT_EQ(l[0].rfind("# config_hash=", 0), 0u);
  EXPECT_NE(l[0].find("master_seed=20240917"), std::string::npos);
  EXPECT_EQ(l[1], "corner,sense_amp,vdd,temp_c,t_read_ns,e_read_fJ,energy_ratio");
  EXPECT_EQ(l[2], "SS,STSA,0.81,-40,0.6,0.0505,4.11");
  EXPECT_EQ(l[6], "TT,STSA+,0.9,25,0.8,0.0128,5.73");
  const auto summary = nlohmann::json::parse(slurp(dir / "pvt_summary.json"));
  EXPECT_GE(summary["precharge"]["window_ratio"].get<double>(), 2.0);
  EXPECT_EQ(summary["header"], l[0].substr(2));
}

TEST(Cli, SweepWriteEmitsEightRowsPerDevice) {
  const fs::path dir = fresh_dir("sweep");
  const auto r = run_cli({"sweep-write", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* name : {"sweep_write_afmtj.csv", "sweep_write_mtj.csv"}) {
    const auto l = lines(slurp(dir / name));
    ASSERT_EQ(l.size(), 10u) << name;
    EXPECT_EQ(l[1], "V,latency_ps,energy_fJ");
  }
  EXPECT_TRUE(fs::exists(dir / "sweep_write_latency.svg"));
  EXPECT_TRUE(fs::exists(dir / "sweep_write_energy.svg"));
  const auto s = nlohmann::json::parse(slurp(dir / "sweep_write_summary.json"));
  EXPECT_NEAR(s["driver_energy_fJ"].get<double>(), 0.245, 1e-9);
  EXPECT_LT(s["driver_overhead_fraction"].get<double>(), 0.01);
  EXPECT_NE(s["calibration_level"], "not met");
}

TEST(Cli, WriteWaveformsUseTheMagnetizationColumn) {
  const fs::path dir = fresh_dir("wave");
  const auto r = run_cli({"waveforms", "--path", "write", "--set", "waveforms.n_trials=2", "--set",
                          "waveforms.points=121", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto l = lines(slurp(dir / "mc_transient_waveforms_write.csv"));
  EXPECT_EQ(l[1], "Time,Average_Mz");
  EXPECT_EQ(l.size(), 123u);
  EXPECT_EQ(l.back().rfind("1.2,", 0), 0u);
}

TEST(Cli, ReadWaveformsUseTheVoltageColumn) {
  const fs::path dir = fresh_dir("waveread");
  const auto r = run_cli({"waveforms", "--path", "read", "--set", "waveforms.n_trials=2", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(lines(slurp(dir / "mc_transient_waveforms_read.csv"))[1], "Time,Average_vout");
  EXPECT_TRUE(fs::exists(dir / "mc_transient_waveforms_read.svg"));
}

TEST(Cli, InvalidWaveformPathIsRejected) {
  EXPECT_EQ(run_cli({"waveforms", "--path", "sideways"}).code, 2);
}

TEST(Cli, SimulateWritesATrajectory) {
  const fs::path dir = fresh_dir("sim");
  const auto r = run_cli({"simulate", "--set", "simulate.t_end=2e-10", "--out", dir.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto l = lines(slurp(dir / "trajectory_afmtj.csv"));
  EXPECT_EQ(l[1], "time_ps,m1x,m1y,m1z,m2x,m2y,m2z,projection,R_ohm");
  EXPECT_GT(l.size(), 100u);
  EXPECT_EQ(l.back().rfind("200,", 0), 0u);
}

TEST(Cli, SimulationErrorsExitWithThreeAndNameTheError) {
  const fs::path dir = fresh_dir("calfail");
  const auto r = run_cli({"calibrate", "--set", "calibration.afmtj_tolerance=1e-9", "--set",
                          "calibration.max_evaluations=2", "--out", dir.string()});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("SimulationError: CalibrationFailed"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir));
}

TEST(Cli, OutputDirectoryFallsBackToEnvironment) {
  const fs::path dir = fresh_dir("env");
  ::setenv("AFMTJ_OUT_DIR", dir.string().c_str(), 1);
  const auto r = run_cli({"pvt-table"});
  ::unsetenv("AFMTJ_OUT_DIR");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "pvt_table.csv"));
}

TEST(Cli, MonteCarloIsIndependentOfWorkerCount) {
  const fs::path a = fresh_dir("mc1");
  const fs::path b = fresh_dir("mc3");
  auto args = kSmallMonteCarlo;
  args.insert(args.begin(), "montecarlo");
  auto args_a = args, args_b = args;
  args_a.insert(args_a.end(), {"--set", "workers=1", "--out", a.string()});
  args_b.insert(args_b.end(), {"--set", "workers=3", "--out", b.string()});
  const auto ra = run_cli(args_a);
  const auto rb = run_cli(args_b);
  ASSERT_EQ(ra.code, 0) << ra.err;
  ASSERT_EQ(rb.code, 0) << rb.err;
  const std::string sa = slurp(a / "montecarlo_summary.json");
  EXPECT_FALSE(sa.empty());
  EXPECT_EQ(sa, slurp(b / "montecarlo_summary.json"));
}
