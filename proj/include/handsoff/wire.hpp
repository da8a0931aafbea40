#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "handsoff/envelope.hpp"
#include "handsoff/error.hpp"

namespace handsoff::wire {

inline constexpr int kProtocolVersion = 1;

struct Compose {
  std::string sender_id;
  std::string recipient_id;
  std::string mime;
  std::string required_gesture;
  nlohmann::json gate_config = nlohmann::json::object();
  std::optional<ContextAxes> context;
  std::string payload_b64;
  std::optional<std::string> token;
};

struct ComposeAck {
  std::string media_id;
  // Present only on the copy delivered to a connected recipient.
  std::optional<std::string> sender_id;
  std::optional<std::string> required_gesture;
  std::optional<std::string> mime;
};

struct UnlockRequest {
  std::string media_id;
  std::string recipient_id;
};

struct LandmarkFrameMsg {
  std::string session_id;
  std::string frame;  // one trace-format record
};

struct GateStateMsg {
  std::string session_id;
  std::string phase;
  double confidence = 0.0;
  // Envelope metadata, sent on the first GateStateMsg of a session.
  std::optional<std::string> media_id;
  std::optional<std::string> required_gesture;
  std::optional<std::string> mime;
};

struct MediaChunk {
  std::string session_id;
  std::int64_t seq = 0;
  std::int64_t total = 0;
  std::string bytes_b64;
};

struct ScreenshotEventMsg {
  std::string session_id;
  std::string method;
  // Filled in by the server on acknowledgments and sender notifications.
  std::optional<std::string> gate_phase;
  std::optional<std::int64_t> timestamp_ms;
  std::optional<std::string> media_id;
};

struct SessionEnd {
  std::string session_id;
};

struct ErrorMsg {
  std::string code;
  std::string detail;
  std::optional<std::string> session_id;
};

using Message = std::variant<Compose, ComposeAck, UnlockRequest, LandmarkFrameMsg, GateStateMsg,
                             MediaChunk, ScreenshotEventMsg, SessionEnd, ErrorMsg>;

namespace detail {

template <typename T>
void put_opt(nlohmann::json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
std::optional<T> get_opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<T>();
}

inline nlohmann::json to_json(const Compose& m) {
  nlohmann::json j = {{"type", "Compose"},         {"sender_id", m.sender_id},
                      {"recipient_id", m.recipient_id}, {"mime", m.mime},
                      {"required_gesture", m.required_gesture}, {"gate_config", m.gate_config},
                      {"payload_b64", m.payload_b64}};
  if (m.context) j["context"] = handsoff::to_json(*m.context);
  put_opt(j, "token", m.token);
  return j;
}
inline nlohmann::json to_json(const ComposeAck& m) {
  nlohmann::json j = {{"type", "ComposeAck"}, {"media_id", m.media_id}};
  put_opt(j, "sender_id", m.sender_id);
  put_opt(j, "required_gesture", m.required_gesture);
  put_opt(j, "mime", m.mime);
  return j;
}
inline nlohmann::json to_json(const UnlockRequest& m) {
  return {{"type", "UnlockRequest"}, {"media_id", m.media_id}, {"recipient_id", m.recipient_id}};
}
inline nlohmann::json to_json(const LandmarkFrameMsg& m) {
  return {{"type", "LandmarkFrameMsg"}, {"session_id", m.session_id}, {"frame", m.frame}};
}
inline nlohmann::json to_json(const GateStateMsg& m) {
  nlohmann::json j = {{"type", "GateStateMsg"},
                      {"session_id", m.session_id},
                      {"phase", m.phase},
                      {"confidence", m.confidence}};
  put_opt(j, "media_id", m.media_id);
  put_opt(j, "required_gesture", m.required_gesture);
  put_opt(j, "mime", m.mime);
  return j;
}
inline nlohmann::json to_json(const MediaChunk& m) {
  return {{"type", "MediaChunk"}, {"session_id", m.session_id}, {"seq", m.seq},
          {"total", m.total},     {"bytes_b64", m.bytes_b64}};
}
inline nlohmann::json to_json(const ScreenshotEventMsg& m) {
  nlohmann::json j = {
      {"type", "ScreenshotEventMsg"}, {"session_id", m.session_id}, {"method", m.method}};
  put_opt(j, "gate_phase", m.gate_phase);
  put_opt(j, "timestamp_ms", m.timestamp_ms);
  put_opt(j, "media_id", m.media_id);
  return j;
}
inline nlohmann::json to_json(const SessionEnd& m) {
  return {{"type", "SessionEnd"}, {"session_id", m.session_id}};
}
inline nlohmann::json to_json(const ErrorMsg& m) {
  nlohmann::json j = {{"type", "ErrorMsg"}, {"code", m.code}, {"detail", m.detail}};
  put_opt(j, "session_id", m.session_id);
  return j;
}

}  // namespace detail

/// Single-line JSON record with the protocol version first.
inline std::string encode(const Message& msg) {
  nlohmann::ordered_json out;
  out["v"] = kProtocolVersion;
  const auto body = std::visit([](const auto& m) { return detail::to_json(m); }, msg);
  out["type"] = body.at("type");
  for (auto it = body.begin(); it != body.end(); ++it) {
    if (it.key() != "type") out[it.key()] = it.value();
  }
  return out.dump();
}

/// Parses one record. Throws BadMessage for bad JSON, unknown types, a wrong
/// version or missing fields.
inline Message decode(std::string_view line) {
  auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::BadMessage, "not a JSON object");
  try {
    if (j.value("v", 0) != kProtocolVersion) {
      throw Error(ErrorCode::BadMessage, "unsupported protocol version");
    }
    const auto type = j.at("type").get<std::string>();
    using detail::get_opt;
    if (type == "Compose") {
      Compose m;
      m.sender_id = j.at("sender_id").get<std::string>();
      m.recipient_id = j.at("recipient_id").get<std::string>();
      m.mime = j.at("mime").get<std::string>();
      m.required_gesture = j.at("required_gesture").get<std::string>();
      m.gate_config = j.value("gate_config", nlohmann::json::object());
      if (j.contains("context") && !j["context"].is_null()) m.context = context_from_json(j["context"]);
      m.payload_b64 = j.at("payload_b64").get<std::string>();
      m.token = get_opt<std::string>(j, "token");
      return m;
    }
    if (type == "ComposeAck") {
      return ComposeAck{j.at("media_id").get<std::string>(), get_opt<std::string>(j, "sender_id"),
                        get_opt<std::string>(j, "required_gesture"),
                        get_opt<std::string>(j, "mime")};
    }
    if (type == "UnlockRequest") {
      return UnlockRequest{j.at("media_id").get<std::string>(),
                           j.at("recipient_id").get<std::string>()};
    }
    if (type == "LandmarkFrameMsg") {
      return LandmarkFrameMsg{j.at("session_id").get<std::string>(),
                              j.at("frame").get<std::string>()};
    }
    if (type == "GateStateMsg") {
      return GateStateMsg{j.at("session_id").get<std::string>(), j.at("phase").get<std::string>(),
                          j.value("confidence", 0.0), get_opt<std::string>(j, "media_id"),
                          get_opt<std::string>(j, "required_gesture"),
                          get_opt<std::string>(j, "mime")};
    }
    if (type == "MediaChunk") {
      return MediaChunk{j.at("session_id").get<std::string>(), j.at("seq").get<std::int64_t>(),
                        j.at("total").get<std::int64_t>(), j.at("bytes_b64").get<std::string>()};
    }
    if (type == "ScreenshotEventMsg") {
      return ScreenshotEventMsg{j.at("session_id").get<std::string>(),
                                j.at("method").get<std::string>(),
                                get_opt<std::string>(j, "gate_phase"),
                                get_opt<std::int64_t>(j, "timestamp_ms"),
                                get_opt<std::string>(j, "media_id")};
    }
    if (type == "SessionEnd") return SessionEnd{j.at("session_id").get<std::string>()};
    if (type == "ErrorMsg") {
      return ErrorMsg{j.at("code").get<std::string>(), j.value("detail", std::string{}),
                      get_opt<std::string>(j, "session_id")};
    }
    throw Error(ErrorCode::BadMessage, "unknown type " + type);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadMessage, e.what());
  }
}

inline std::string_view type_name(const Message& msg) {
  static constexpr std::string_view kNames[] = {
      "Compose",    "ComposeAck",         "UnlockRequest", "LandmarkFrameMsg", "GateStateMsg",
      "MediaChunk", "ScreenshotEventMsg", "SessionEnd",    "ErrorMsg"};
  return kNames[msg.index()];
}

}  // namespace handsoff::wire
