#pragma once

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "handsoff/error.hpp"
#include "handsoff/relay.hpp"

namespace handsoff {

struct AppConfig {
  std::string bind = "127.0.0.1";
  int port = 8765;
  std::filesystem::path storage_dir = "handsoff-data";
  bool create_storage = true;
  int threads = 2;
  RelayConfig relay;
};

using Settings = std::map<std::string, std::string>;

/// `key = value` lines; '#' starts a comment line.
inline Settings parse_settings(std::string_view text) {
  Settings out;
  std::size_t start = 0;
  std::size_t lineno = 0;
  auto trim = [](std::string s) {
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
  };
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++lineno;
    auto line = trim(std::string(text.substr(start, end - start)));
    start = end + 1;
    if (line.empty() || line.front() == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::BadConfig, "line " + std::to_string(lineno) + ": expected key=value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

inline Settings load_settings_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::BadConfig, "cannot read config " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_settings(text);
}

/// HANDSOFF_GATE_DWELL_FRAMES for key gate.dwell_frames.
inline std::string env_name(const std::string& key) {
  std::string out = "HANDSOFF_";
  for (char c : key) {
    out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return out;
}

inline std::vector<std::string> known_setting_keys() {
  std::vector<std::string> keys = {"bind",
                                   "port",
                                   "storage_dir",
                                   "create_storage",
                                   "threads",
                                   "auth_token",
                                   "chunk_size",
                                   "max_payload_bytes",
                                   "sender_notifications",
                                   "voice_event_logging",
                                   "gate.confidence_threshold",
                                   "gate.dwell_frames",
                                   "gate.grace_frames"};
  for (auto g : kActiveGestures) {
    std::string name(to_string(g));
    for (auto& c : name) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    keys.push_back("classifier.threshold." + name);
    keys.push_back("classifier.two_hands." + name);
  }
  return keys;
}

/// Layers file < environment < command line. `getenv` is injectable for tests.
inline Settings merge_settings(
    const Settings& file, const Settings& cli,
    const std::function<const char*(const char*)>& getenv = [](const char* n) {
      return std::getenv(n);
    }) {
  Settings merged = file;
  for (const auto& key : known_setting_keys()) {
    if (const char* v = getenv(env_name(key).c_str())) merged[key] = v;
  }
  for (const auto& [k, v] : cli) merged[k] = v;
  return merged;
}

namespace config_detail {

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(ErrorCode::BadConfig, key + ": expected boolean, got '" + v + "'");
}

inline long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    auto n = std::stoll(v, &used);
    if (used == v.size()) return n;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::BadConfig, key + ": expected integer, got '" + v + "'");
}

inline double to_unit(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    auto d = std::stod(v, &used);
    if (used == v.size() && d >= 0.0 && d <= 1.0) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::BadConfig, key + ": expected number in [0,1], got '" + v + "'");
}

}  // namespace config_detail

/// Throws BadConfig for unknown keys and out-of-range values.
inline AppConfig app_config_from_settings(const Settings& settings) {
  using namespace config_detail;
  AppConfig c;
  for (const auto& [key, v] : settings) {
    if (key == "bind") {
      c.bind = v;
    } else if (key == "port") {
      auto p = to_int(key, v);
      if (p < 0 || p > 65535) throw Error(ErrorCode::BadConfig, "port out of range: " + v);
      c.port = static_cast<int>(p);
    } else if (key == "storage_dir") {
      c.storage_dir = v;
    } else if (key == "create_storage") {
      c.create_storage = to_bool(key, v);
    } else if (key == "threads") {
      auto t = to_int(key, v);
      if (t < 1 || t > 256) throw Error(ErrorCode::BadConfig, "threads out of range: " + v);
      c.threads = static_cast<int>(t);
    } else if (key == "auth_token") {
      if (!v.empty()) c.relay.auth_token = v;
    } else if (key == "chunk_size") {
      auto n = to_int(key, v);
      if (n < 1) throw Error(ErrorCode::BadConfig, "chunk_size must be positive");
      c.relay.chunk_size = static_cast<std::size_t>(n);
    } else if (key == "max_payload_bytes") {
      auto n = to_int(key, v);
      if (n < 1) throw Error(ErrorCode::BadConfig, "max_payload_bytes must be positive");
      c.relay.max_payload_bytes = static_cast<std::size_t>(n);
    } else if (key == "sender_notifications") {
      c.relay.sender_notifications = to_bool(key, v);
    } else if (key == "voice_event_logging") {
      c.relay.voice_event_logging = to_bool(key, v);
    } else if (key == "gate.confidence_threshold") {
      c.relay.default_gate.confidence_threshold = to_unit(key, v);
    } else if (key == "gate.dwell_frames") {
      auto n = to_int(key, v);
      if (n < 1) throw Error(ErrorCode::BadConfig, "gate.dwell_frames must be >= 1");
      c.relay.default_gate.dwell_frames = static_cast<int>(n);
    } else if (key == "gate.grace_frames") {
      auto n = to_int(key, v);
      if (n < 0) throw Error(ErrorCode::BadConfig, "gate.grace_frames must be >= 0");
      c.relay.default_gate.grace_frames = static_cast<int>(n);
    } else if (key.rfind("classifier.threshold.", 0) == 0) {
      auto g = gesture_from_string(key.substr(21));
      if (!g || *g == GestureClass::Background) throw Error(ErrorCode::BadConfig, "unknown key " + key);
      c.relay.classifier.thresholds[index_of(*g)] = to_unit(key, v);
    } else if (key.rfind("classifier.two_hands.", 0) == 0) {
      auto g = gesture_from_string(key.substr(21));
      if (!g || *g == GestureClass::Background) throw Error(ErrorCode::BadConfig, "unknown key " + key);
      c.relay.classifier.require_two_hands[index_of(*g)] = to_bool(key, v);
    } else {
      throw Error(ErrorCode::BadConfig, "unknown key " + key);
    }
  }
  return c;
}

}  // namespace handsoff
