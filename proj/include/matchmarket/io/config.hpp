#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "matchmarket/error.hpp"
#include "matchmarket/return_model.hpp"

namespace matchmarket::io {

using Json = nlohmann::ordered_json;

inline Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Malformed, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::Malformed, path.string() + ": " + e.what());
  }
}

inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidParameter, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

/// Rejects keys outside `allowed`, naming the first offender.
inline void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::Malformed, where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw Error(ErrorCode::Malformed, where + ": unknown key '" + key + "'");
  }
}

template <class T>
T get_as(const Json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::Malformed, where + ": key '" + key + "' has the wrong type");
  }
}

/// {"alpha": a} or {"q": [21 values]}; a bare array is read as grid nodes.
inline ReturnModel model_from_json(const Json& j) {
  if (j.is_array()) return ReturnModel::grid(j.get<std::vector<double>>());
  check_keys(j, {"alpha", "q"}, "model");
  if (j.contains("alpha") == j.contains("q")) {
    throw Error(ErrorCode::Malformed, "model: give exactly one of 'alpha' or 'q'");
  }
  if (j.contains("alpha")) return ReturnModel::parametric(get_as<double>(j, "alpha", "model"));
  return ReturnModel::grid(get_as<std::vector<double>>(j, "q", "model"));
}

inline Json model_to_json(const ReturnModel& m) {
  if (m.kind() == ModelKind::ParametricAlpha) return Json{{"alpha", m.alpha_exponent()}};
  return Json{{"q", m.nodes()}};
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::string utc_timestamp() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

/// Provenance record of one CLI run, written after every other output.
class RunManifest {
 public:
  RunManifest(std::string command, Json effective_config, std::uint64_t seed)
      : command_(std::move(command)), config_(std::move(effective_config)), seed_(seed),
        started_(utc_timestamp()) {}

  void add_output(const std::filesystem::path& p) { outputs_.push_back(p.filename().string()); }
  const std::vector<std::string>& outputs() const { return outputs_; }
  std::string config_hash() const { return hex64(fnv1a(config_.dump())); }

  void write(const std::filesystem::path& dir) const {
    Json j;
    j["command"] = command_;
    j["config"] = config_;
    j["config_hash"] = config_hash();
    j["seed"] = seed_;
#ifdef MATCHMARKET_VERSION
    j["version"] = MATCHMARKET_VERSION;
#else
    j["version"] = "unknown";
#endif
    j["started"] = started_;
    j["finished"] = utc_timestamp();
    j["outputs"] = outputs_;
    const auto tmp = dir / "manifest.json.tmp";
    write_json(tmp, j);
    std::filesystem::rename(tmp, dir / "manifest.json");
  }

 private:
  std::string command_;
  Json config_;
  std::uint64_t seed_;
  std::string started_;
  std::vector<std::string> outputs_;
};

}  // namespace matchmarket::io
