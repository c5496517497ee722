#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "guidewave/io/config.hpp"
#include "guidewave/io/csv.hpp"

namespace fs = std::filesystem;
namespace io = guidewave::io;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("guidewave_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(GUIDEWAVE_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

json read_json(const fs::path& p) { return json::parse(io::read_text(p)); }

const char* small_eigen = R"([run]
command = eigen
[numerics]
eigen_nx = 256
z_samples = 9
n_max = 5
)";

}  // namespace

TEST(Cli, StraightGuideIsAdiabatic) {
  const auto dir = scratch("straight");
  io::write_text(dir / "c.ini", "[run]\ncommand = check-adiabatic\n[geometry]\nd_max = 0\n");
  ASSERT_EQ(run_cli("check-adiabatic --config " + (dir / "c.ini").string() + " --out " + (dir / "out").string()), 0);
  const auto m = read_json(dir / "out" / "manifest.json");
  EXPECT_EQ(m["summary"]["adiabaticity_ratio"].get<double>(), 0.0);
  EXPECT_TRUE(m["summary"]["adiabatic"].get<bool>());
  EXPECT_EQ(m["tool"], "guidewave");
  EXPECT_EQ(m["command"], "check-adiabatic");
  EXPECT_EQ(m["input_sha256"].get<std::string>().size(), 64u);
}

TEST(Cli, BadConfigWritesErrorJson) {
  const auto dir = scratch("bad");
  io::write_text(dir / "c.ini", "[physical]\nomega = 1e5 Hz\n");
  const int code = run_cli("thermal --config " + (dir / "c.ini").string() + " --out " + (dir / "out").string());
  EXPECT_EQ(code, 2);
  const auto e = read_json(dir / "out" / "error.json");
  EXPECT_EQ(e["status"], "error");
  EXPECT_EQ(e["code"], "config");
  EXPECT_NE(e["message"].get<std::string>().find(":2:"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "out" / "manifest.json"));
}

TEST(Cli, MissingConfigFileIsAnIoError) {
  const auto dir = scratch("missing");
  EXPECT_EQ(run_cli("eigen --config " + (dir / "nope.ini").string() + " --out " + (dir / "out").string()), 3);
  EXPECT_NE(run_cli("eigen"), 0);
}

TEST(Cli, ArtifactsAreDeterministic) {
  const auto dir = scratch("determinism");
  io::write_text(dir / "c.ini", small_eigen);
  const std::string cfg = " --config " + (dir / "c.ini").string();
  ASSERT_EQ(run_cli("eigen" + cfg + " --out " + (dir / "a").string() + " --threads 1"), 0);
  ASSERT_EQ(run_cli("eigen" + cfg + " --out " + (dir / "b").string() + " --threads 3"), 0);
  const auto ma = read_json(dir / "a" / "manifest.json"), mb = read_json(dir / "b" / "manifest.json");
  ASSERT_FALSE(ma["artifacts"].empty());
  for (const auto& name : ma["artifacts"]) {
    const std::string n = name.get<std::string>();
    EXPECT_EQ(io::read_text(dir / "a" / n), io::read_text(dir / "b" / n)) << n;
  }
  EXPECT_EQ(ma["summary"], mb["summary"]);
  EXPECT_EQ(ma["resolved_config_sha256"], mb["resolved_config_sha256"]);
  EXPECT_EQ(mb["threads"], 3);
}

TEST(Cli, ManifestReplaysTheRun) {
  const auto dir = scratch("replay");
  io::write_text(dir / "c.ini", small_eigen);
  ASSERT_EQ(run_cli("eigen --config " + (dir / "c.ini").string() + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run_cli("eigen --config " + (dir / "a" / "manifest.json").string() + " --out " + (dir / "b").string()),
            0);
  const auto ma = read_json(dir / "a" / "manifest.json"), mb = read_json(dir / "b" / "manifest.json");
  EXPECT_EQ(ma["summary"], mb["summary"]);
  EXPECT_EQ(ma["resolved_config_text"], mb["resolved_config_text"]);
  EXPECT_EQ(io::read_text(dir / "a" / "correlation.csv"), io::read_text(dir / "b" / "correlation.csv"));
  EXPECT_EQ(run_cli("thermal --config " + (dir / "a" / "manifest.json").string() + " --out " + (dir / "c").string()),
            2);
}

TEST(Cli, ShippedConfigsParse) {
  for (const auto& entry : fs::directory_iterator(GUIDEWAVE_CONFIG_DIR)) {
    if (entry.path().extension() != ".ini") continue;
    const std::string text = io::read_text(entry.path());
    const std::string command = entry.path().stem() == "thermal_minimal" ? "thermal" : "";
    EXPECT_NO_THROW(io::parse_config(text, command, entry.path().string())) << entry.path();
  }
}
