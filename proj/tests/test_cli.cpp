#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

#include "testing.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(PWACERT_CLI_PATH) + " " + args + " 2>&1";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  size_t got;
  while ((got = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, got);
  const int st = pclose(p);
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto d = fs::temp_directory_path() / ("pwacert_cli_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST(Cli, ValidateShippedModel) {
  const auto r = run("validate " + model_path("deadzone"));
  EXPECT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("digest"), std::string::npos);
}

TEST(Cli, GainWritesCertificate) {
  const auto d = scratch("gain");
  const auto r = run("gain " + model_path("first_order") + " --out " + d.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto j = nlohmann::json::parse(slurp(d / "gain_certificate.json"));
  EXPECT_NEAR(j["eta"].get<double>(), 1.0, 1e-2);
  EXPECT_EQ(j["run_config"]["command"], "gain");
  EXPECT_EQ(j["outcome"], "feasible");
}

TEST(Cli, CertificatesAreByteIdentical) {
  const auto a = scratch("det_a"), b = scratch("det_b");
  ASSERT_EQ(run("stability " + model_path("first_order") + " --out " + a.string()).code, 0);
  ASSERT_EQ(run("stability " + model_path("first_order") + " --out " + b.string()).code, 0);
  // run_config records the output directory, so compare without it
  auto ja = nlohmann::json::parse(slurp(a / "stability_certificate.json"));
  auto jb = nlohmann::json::parse(slurp(b / "stability_certificate.json"));
  ja["run_config"].erase("out");
  jb["run_config"].erase("out");
  EXPECT_EQ(ja.dump(), jb.dump());
}

TEST(Cli, UnstableModelExitsInfeasible) {
  const auto d = scratch("unstable");
  const auto r = run("gain --combined " + model_path("unstable_first_order") + " --out " + d.string());
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("non-Hurwitz"), std::string::npos);
}

TEST(Cli, UnknownFlagIsAnError) {
  EXPECT_EQ(run("gain " + model_path("first_order") + " --no-such-flag").code, 1);
  EXPECT_EQ(run("gain /no/such/model.json").code, 1);
  EXPECT_EQ(run("--help").code, 0);
}

TEST(Cli, QuotientPrintsRatio) {
  const auto d = scratch("quotient");
  const auto r = run("quotient " + model_path("first_order") + " --T 20 --dt 0.01 --out " + d.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("energy ratio"), std::string::npos);
  EXPECT_TRUE(fs::exists(d / "quotient.json"));
}

TEST(Cli, SimulateWarnsOnDiscontinuity) {
  const auto d = scratch("sim");
  const auto r = run("simulate " + model_path("deadzone_discontinuous") + " --x0 3 --T 2 --dt 0.01 --out " +
                     d.string());
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_NE(r.out.find("warning: discontinuous vector field"), std::string::npos);
  const auto csv = slurp(d / "trajectory.csv");
  EXPECT_NE(csv.find("# warning discontinuous"), std::string::npos);
  EXPECT_NE(csv.find("t,x1,y1,region\n"), std::string::npos);
}

TEST(Cli, ContourFromCertificate) {
  const auto d = scratch("contour");
  ASSERT_EQ(run("gain " + model_path("first_order") + " --out " + d.string()).code, 0);
  const auto r = run("contour " + model_path("first_order") + " --cert " + (d / "gain_certificate.json").string() +
                     " --lo=-1 --hi=1 --res 11 --out " + d.string());
  ASSERT_EQ(r.code, 0) << r.out;
  const auto csv = slurp(d / "contour.csv");
  EXPECT_NE(csv.find("x,xtilde,S\n"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n') - std::count(csv.begin(), csv.end(), '#'), 1 + 121);
}
