#pragma once

#include <openssl/evp.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <memory>
#include <string>
#include <string_view>

#include <json.hpp>

#include "guidewave/error.hpp"

namespace guidewave::io {

#ifdef GUIDEWAVE_VERSION
inline constexpr std::string_view tool_version = GUIDEWAVE_VERSION;
#else
inline constexpr std::string_view tool_version = "0.0.0";
#endif

inline std::string sha256_hex(std::string_view data) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  require(ctx != nullptr, ErrorCode::io, "cannot allocate a digest context");
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  require(EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) == 1 &&
              EVP_DigestUpdate(ctx.get(), data.data(), data.size()) == 1 &&
              EVP_DigestFinal_ex(ctx.get(), md.data(), &len) == 1,
          ErrorCode::io, "SHA-256 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

/// Everything needed to repeat a run: the resolved config, where it came from
/// and what it produced. `wall_clock_seconds` and `started_utc` are the only
/// fields that differ between repeated runs.
struct RunManifest {
  std::string command;
  std::string resolved_config;
  std::string input_sha256;
  std::string resolved_sha256;
  std::string version{tool_version};
  std::string started_utc;
  double wall_clock_seconds = 0.0;
  unsigned threads = 1;
  nlohmann::ordered_json summary = nlohmann::ordered_json::object();
  nlohmann::ordered_json artifacts = nlohmann::ordered_json::array();

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["tool"] = "guidewave";
    j["version"] = version;
    j["command"] = command;
    j["input_sha256"] = input_sha256;
    j["resolved_config_sha256"] = resolved_sha256;
    j["resolved_config_text"] = resolved_config;
    j["threads"] = threads;
    j["started_utc"] = started_utc;
    j["wall_clock_seconds"] = wall_clock_seconds;
    j["summary"] = summary;
    j["artifacts"] = artifacts;
    return j;
  }

  static RunManifest from_json(const nlohmann::json& j) {
    RunManifest m;
    try {
      m.command = j.at("command").get<std::string>();
      m.resolved_config = j.at("resolved_config_text").get<std::string>();
      m.input_sha256 = j.value("input_sha256", "");
      m.resolved_sha256 = j.value("resolved_config_sha256", "");
      m.version = j.value("version", "");
      m.started_utc = j.value("started_utc", "");
      m.wall_clock_seconds = j.value("wall_clock_seconds", 0.0);
      m.threads = j.value("threads", 1u);
      if (j.contains("summary")) m.summary = j.at("summary");
      if (j.contains("artifacts")) m.artifacts = j.at("artifacts");
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::config, std::string("malformed manifest: ") + e.what());
    }
    return m;
  }
};

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// True when the text looks like a JSON manifest rather than an INI config.
inline bool is_manifest_text(std::string_view text) {
  const auto p = text.find_first_not_of(" \t\r\n");
  return p != std::string_view::npos && text[p] == '{';
}

}  // namespace guidewave::io
