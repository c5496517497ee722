#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "guidewave/io/config.hpp"
#include "guidewave/io/csv.hpp"
#include "guidewave/io/manifest.hpp"

namespace io = guidewave::io;
using guidewave::Error;
using guidewave::ErrorCode;

namespace {

const char* minimal_thermal = R"([physical]
mass = 7.016003437 u
omega = 1e5 /s
temperature = 200 uK
source_length = 100 um
delta_l = 2 um
detection_time = 20 ms
)";

std::string config_error(const std::string& text, const std::string& command = "thermal") {
  try {
    io::parse_config(text, command, "test.ini");
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::config);
    return e.what();
  }
  ADD_FAILURE() << "config was accepted";
  return {};
}

bool contains(const std::string& s, const std::string& part) { return s.find(part) != std::string::npos; }

}  // namespace

TEST(Config, MinimalThermalConfig) {
  const auto cfg = io::parse_config(minimal_thermal, "thermal");
  EXPECT_EQ(cfg.command, "thermal");
  EXPECT_NEAR(cfg.physical.mass, 7.016003437 * 1.66053906660e-27, 1e-35);
  EXPECT_DOUBLE_EQ(cfg.physical.omega_in, 1e5);
  EXPECT_DOUBLE_EQ(cfg.physical.omega_arm, 2e5);
  EXPECT_NEAR(cfg.physical.temperature, 200e-6, 1e-18);
  EXPECT_NEAR(cfg.physical.source_length, 100e-6, 1e-18);
  EXPECT_NEAR(cfg.physical.delta_l, 2e-6, 1e-20);
  EXPECT_NEAR(cfg.physical.detection_time, 20e-3, 1e-16);
  EXPECT_TRUE(cfg.given("physical.temperature"));
  EXPECT_FALSE(cfg.given("numerics.nx"));
  EXPECT_EQ(cfg.integer("numerics.nx"), 64);
  const auto d = cfg.defaulted();
  EXPECT_NE(std::find(d.begin(), d.end(), "numerics.nx"), d.end());
}

TEST(Config, ThermalExampleValues) {
  const auto cfg = io::parse_config(R"([run]
command = thermal
[physical]
isotope = Li-7
omega = 0.1e6 /s
temperature = 200 uK
source_length = 100 um
delta_l = 2 um
device_length = 1 mm
detection_time = 20 ms
)");
  EXPECT_EQ(cfg.command, "thermal");
  EXPECT_DOUBLE_EQ(cfg.physical.omega_in, 1e5);
  EXPECT_NEAR(cfg.physical.device_length, 1e-3, 1e-18);
  EXPECT_EQ(cfg.isotope, "Li-7");
  EXPECT_NEAR(cfg.natural.length_unit, 3.00863e-7, 1e-11);
}

TEST(Config, CycleFrequencyRejectedWithLine) {
  const std::string msg = config_error("[physical]\nmass = 7 u\n\nomega = 1e5 Hz\n");
  EXPECT_TRUE(contains(msg, "test.ini:4:")) << msg;
  EXPECT_TRUE(contains(msg, "angular frequency")) << msg;
}

TEST(Config, UnknownKeysAndSections) {
  EXPECT_TRUE(contains(config_error("[physical]\ncolour = red\n"), "test.ini:2:"));
  EXPECT_TRUE(contains(config_error("[stuff]\n"), "unknown section"));
  EXPECT_TRUE(contains(config_error("[run]\ncommand = dance\n", ""), "unknown command"));
  EXPECT_TRUE(contains(config_error("nx = 3\n", "eigen"), "before any section"));
}

TEST(Config, DuplicatesAndMissingKeys) {
  const std::string dup = std::string(minimal_thermal) + "temperature = 1 uK\n";
  EXPECT_TRUE(contains(config_error(dup), "test.ini:8:"));
  const std::string sections = "[physical]\nomega = 1e5 /s\n[physical]\n";
  EXPECT_TRUE(contains(config_error(sections), "appears twice"));
  const std::string missing = "[physical]\nmass = 7 u\nomega = 1e5 /s\n";
  const std::string msg = config_error(missing);
  EXPECT_TRUE(contains(msg, "requires key 'temperature'")) << msg;
  EXPECT_TRUE(contains(msg, "test.ini:1:")) << msg;
}

TEST(Config, UnitMismatchAndMissingSuffix) {
  std::string text = minimal_thermal;
  text.replace(text.find("100 um"), 6, "100 s");
  EXPECT_TRUE(contains(config_error(text), "test.ini:5:"));
  text = minimal_thermal;
  text.replace(text.find("200 uK"), 6, "200");
  EXPECT_TRUE(contains(config_error(text), "needs a unit suffix"));
  text = minimal_thermal;
  text.replace(text.find("20 ms"), 5, "20 tau");
  EXPECT_TRUE(contains(config_error(text), "SI units"));
}

TEST(Config, NaturalKeysAcceptBareAndSiValues) {
  const auto cfg = io::parse_config("[packet]\nsigma_z = 1 um\nz0 = -30\n[numerics]\ndt = 0.02 tau\n", "eigen");
  EXPECT_NEAR(cfg.real("packet.sigma_z"), 1e-6 / cfg.natural.length_unit, 1e-12);
  EXPECT_DOUBLE_EQ(cfg.real("packet.z0"), -30.0);
  EXPECT_DOUBLE_EQ(cfg.real("numerics.dt"), 0.02);
}

TEST(Config, PacketEnergyRules) {
  const auto a = io::parse_config("[packet]\ne_kin = 8\n", "split");
  EXPECT_DOUBLE_EQ(a.real("packet.k0"), 4.0);
  EXPECT_DOUBLE_EQ(a.real("geometry.e_kin"), 8.0);
  const auto b = io::parse_config("[geometry]\nd_max = 8\n", "split");
  EXPECT_DOUBLE_EQ(b.real("packet.k0"), 10.0);
  EXPECT_DOUBLE_EQ(b.real("packet.e_kin"), 50.0);
  EXPECT_TRUE(contains(config_error("[packet]\nk0 = 3\ne_kin = 4.5\n", "split"), "not both"));
}

TEST(Config, CommandConsistency) {
  EXPECT_TRUE(contains(config_error("[run]\ncommand = eigen\n", "thermal"), "test.ini:2:"));
  try {
    io::parse_config("[numerics]\nnx = 32\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_TRUE(contains(e.what(), "no command"));
  }
}

TEST(Config, CommentsAndWhitespace) {
  const auto cfg = io::parse_config("# header\n[numerics]  ; trailing\n  nx =  128   # more\n\n", "eigen");
  EXPECT_EQ(cfg.integer("numerics.nx"), 128);
}

TEST(Config, ResolvedTextRoundTrips) {
  for (const std::string& cmd : io::commands()) {
    const std::string text = cmd == "thermal" ? std::string(minimal_thermal) : "[numerics]\ndt = 0.015\n";
    const auto a = io::parse_config(text, cmd);
    const auto b = io::parse_config(a.resolved_text());
    EXPECT_EQ(a.resolved_text(), b.resolved_text()) << cmd;
    EXPECT_EQ(b.command, cmd);
    for (const auto& k : io::registry()) {
      if (k.kind != io::Kind::real || k.section == "physical") continue;
      const double x = a.real(k.id()), y = b.real(k.id());
      EXPECT_TRUE((std::isnan(x) && std::isnan(y)) || x == y) << k.id();
    }
    EXPECT_EQ(a.physical.mass, b.physical.mass);
    EXPECT_EQ(a.physical.omega_arm, b.physical.omega_arm);
  }
}

TEST(Config, EveryRegisteredKeyHasHelp) {
  for (const auto& k : io::registry()) {
    EXPECT_FALSE(k.help.empty()) << k.id();
    EXPECT_EQ(io::find_key(k.section, k.name), &k);
  }
}

TEST(Manifest, Sha256KnownValue) {
  EXPECT_EQ(io::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(io::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Manifest, JsonRoundTrip) {
  io::RunManifest m;
  m.command = "eigen";
  m.resolved_config = "[run]\ncommand = eigen\n";
  m.input_sha256 = io::sha256_hex("x");
  m.resolved_sha256 = io::sha256_hex(m.resolved_config);
  m.threads = 3;
  m.summary["gap"] = 0.25;
  m.artifacts.push_back("a.csv");
  const auto j = m.to_json();
  EXPECT_EQ(j["tool"], "guidewave");
  const auto back = io::RunManifest::from_json(nlohmann::json::parse(j.dump()));
  EXPECT_EQ(back.command, m.command);
  EXPECT_EQ(back.resolved_config, m.resolved_config);
  EXPECT_EQ(back.threads, 3u);
  EXPECT_EQ(back.summary["gap"], 0.25);
  EXPECT_TRUE(io::is_manifest_text("  \n{\"a\": 1}"));
  EXPECT_FALSE(io::is_manifest_text("[run]\n"));
  EXPECT_THROW(io::RunManifest::from_json(nlohmann::json::object()), Error);
}

TEST(Csv, RoundTripIsExact) {
  io::CsvTable t;
  t.meta("command", "eigen").column("x", {0.1, -2.5e-300, 1.0 / 3.0}).column("y", {1e300, 0.0, -7.0});
  const auto back = io::parse_csv(t.str());
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.columns, t.columns);
  ASSERT_EQ(back.metadata.size(), 1u);
  EXPECT_EQ(back.metadata[0].second, "eigen");
  EXPECT_THROW(io::CsvTable().column("a", {1.0}).column("b", {1.0, 2.0}), Error);
}
