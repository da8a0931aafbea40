#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "handsoff/accounting.hpp"
#include "handsoff/error.hpp"
#include "handsoff/util.hpp"

namespace handsoff {

/// Desk-scale persistence rooted at one directory:
///
///   blobs/<sha256>     payload bytes, content addressed
///   metadata.log       JSON lines {"key":..., "value":...}; last record per key wins
///   sessions/<id>.json finished session logs
///
/// Readers share a lock; writers to the metadata log are serialized.
class MediaStore {
 public:
  explicit MediaStore(std::filesystem::path root, bool create = true) : root_(std::move(root)) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::exists(root_, ec)) {
      if (!create) throw Error(ErrorCode::StorageFailure, "missing directory " + root_.string());
      fs::create_directories(root_, ec);
    }
    fs::create_directories(root_ / "blobs", ec);
    fs::create_directories(root_ / "sessions", ec);
    if (ec || !fs::is_directory(root_)) {
      throw Error(ErrorCode::StorageFailure, "cannot use directory " + root_.string());
    }
    replay_log();
  }

  const std::filesystem::path& root() const { return root_; }

  /// Stores bytes and returns their content address.
  std::string put_blob(std::string_view bytes) {
    const auto ref = sha256_hex(bytes);
    const auto path = root_ / "blobs" / ref;
    std::unique_lock lock(blob_mutex_);
    if (!std::filesystem::exists(path)) write_atomically(path, bytes);
    return ref;
  }

  std::optional<std::string> get_blob(const std::string& ref) const {
    if (ref.size() != 64 || ref.find_first_not_of("0123456789abcdef") != std::string::npos) {
      return std::nullopt;
    }
    std::shared_lock lock(blob_mutex_);
    std::ifstream in(root_ / "blobs" / ref, std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
  }

  void put_metadata(const std::string& key, const nlohmann::json& value) {
    std::unique_lock lock(meta_mutex_);
    std::ofstream out(root_ / "metadata.log", std::ios::app | std::ios::binary);
    out << nlohmann::json{{"key", key}, {"value", value}}.dump() << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::StorageFailure, "metadata append failed");
    metadata_[key] = value;
  }

  std::optional<nlohmann::json> get_metadata(const std::string& key) const {
    std::shared_lock lock(meta_mutex_);
    auto it = metadata_.find(key);
    if (it == metadata_.end()) return std::nullopt;
    return it->second;
  }

  void write_session_log(const SessionLog& log) {
    const auto& id = log.trial.session_id;
    if (id.empty() || id.find_first_of("/\\.") != std::string::npos) {
      throw Error(ErrorCode::StorageFailure, "unsafe session id");
    }
    write_atomically(root_ / "sessions" / (id + ".json"), to_json(log).dump(2) + "\n");
  }

  std::filesystem::path sessions_dir() const { return root_ / "sessions"; }

 private:
  void replay_log() {
    std::ifstream in(root_ / "metadata.log");
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      // A torn final line from a crash is ignored.
      auto record = nlohmann::json::parse(line, nullptr, false);
      if (record.is_discarded() || !record.contains("key")) continue;
      metadata_[record["key"].get<std::string>()] = record["value"];
    }
  }

  static void write_atomically(const std::filesystem::path& path, std::string_view bytes) {
    auto tmp = path;
    tmp += ".tmp." + fresh_id();
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      if (!out) throw Error(ErrorCode::StorageFailure, "write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::StorageFailure, "rename failed: " + ec.message());
  }

  std::filesystem::path root_;
  mutable std::shared_mutex blob_mutex_;
  mutable std::shared_mutex meta_mutex_;
  std::map<std::string, nlohmann::json> metadata_;
};

/// Reads every *.json session log under a directory, sorted by file name.
inline std::vector<SessionLog> load_session_logs(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) {
    throw Error(ErrorCode::StorageFailure, "not a directory: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<SessionLog> logs;
  for (const auto& f : files) {
    std::ifstream in(f);
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::MalformedRecord, "bad JSON in " + f.string());
    logs.push_back(session_log_from_json(j));
  }
  return logs;
}

}  // namespace handsoff
