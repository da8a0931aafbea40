#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "handsoff/error.hpp"
#include "handsoff/gate.hpp"
#include "handsoff/gesture.hpp"
#include "handsoff/store.hpp"
#include "handsoff/util.hpp"

namespace handsoff {

enum class Content { Serious, Silly };
enum class Relationship { Close, NotClose };
enum class Location { Public, Private };

struct ContextAxes {
  Content content = Content::Serious;
  Relationship relationship = Relationship::Close;
  Location location = Location::Private;

  friend bool operator==(const ContextAxes&, const ContextAxes&) = default;
};

constexpr std::string_view to_string(Content c) noexcept {
  return c == Content::Serious ? "Serious" : "Silly";
}
constexpr std::string_view to_string(Relationship r) noexcept {
  return r == Relationship::Close ? "Close" : "NotClose";
}
constexpr std::string_view to_string(Location l) noexcept {
  return l == Location::Public ? "Public" : "Private";
}

struct GestureProfile {
  GestureClass gesture = GestureClass::Wave;
  double deterrence = 0.0;
  double social_acceptability = 0.0;
};

/// Ordinal placement of the four gestures on the deterrence and
/// social-acceptability axes, fixed to numbers.
inline std::vector<GestureProfile> default_profiles() {
  return {{GestureClass::Wave, 0.40, 0.95},
          {GestureClass::Interlace, 0.70, 0.80},
          {GestureClass::Frame, 0.75, 0.45},
          {GestureClass::Binoculars, 0.85, 0.20}};
}

/// Ranks the four gestures for a sending context, best first.
///
/// Serious content or a distant relationship is protective: 0.7 deterrence +
/// 0.3 acceptability. Otherwise the weights swap. The acceptability term is the
/// profile's social acceptability, except for silly content between close
/// people viewed in private, where the odd gestures are the fun ones and the
/// term becomes 1 - acceptability.
inline std::vector<GestureClass> recommend_gesture(const ContextAxes& axes,
                                                   const std::vector<GestureProfile>& profiles) {
  static constexpr std::array<GestureClass, 4> kTieOrder = {
      GestureClass::Interlace, GestureClass::Wave, GestureClass::Frame, GestureClass::Binoculars};

  std::array<std::optional<GestureProfile>, 4> by_gesture;
  for (const auto& p : profiles) {
    if (p.gesture == GestureClass::Background) continue;
    by_gesture[index_of(p.gesture)] = p;
  }
  for (auto g : kActiveGestures) {
    if (!by_gesture[index_of(g)]) {
      throw Error(ErrorCode::MissingProfile, std::string(to_string(g)));
    }
  }

  const bool protective =
      axes.content == Content::Serious || axes.relationship == Relationship::NotClose;
  const bool playful = !protective && axes.location == Location::Private;
  const double w_det = protective ? 0.7 : 0.3;

  struct Ranked {
    GestureClass gesture;
    double score;
    std::size_t tie_rank;
  };
  std::vector<Ranked> ranked;
  for (std::size_t i = 0; i < kTieOrder.size(); ++i) {
    const auto& p = *by_gesture[index_of(kTieOrder[i])];
    const double acceptability = playful ? 1.0 - p.social_acceptability : p.social_acceptability;
    ranked.push_back({p.gesture, w_det * p.deterrence + (1.0 - w_det) * acceptability, i});
  }
  std::sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.tie_rank < b.tie_rank;
  });
  std::vector<GestureClass> out;
  for (const auto& r : ranked) out.push_back(r.gesture);
  return out;
}

struct MediaEnvelope {
  std::string media_id;
  std::string mime_type;
  std::string payload_ref;
  GestureClass required_gesture = GestureClass::Wave;
  GateConfig gate_config;
  std::optional<ContextAxes> context;
  std::string sender_id;
  std::string recipient_id;
  std::int64_t created_at = 0;

  friend bool operator==(const MediaEnvelope&, const MediaEnvelope&) = default;
};

inline nlohmann::json to_json(const GateConfig& c) {
  return {{"required_gesture", to_string(c.required_gesture)},
          {"confidence_threshold", c.confidence_threshold},
          {"dwell_frames", c.dwell_frames},
          {"grace_frames", c.grace_frames}};
}

/// Missing fields keep their defaults; `fallback` supplies them.
inline GateConfig gate_config_from_json(const nlohmann::json& j, GateConfig fallback = {}) {
  GateConfig c = fallback;
  if (j.contains("required_gesture")) {
    c.required_gesture = parse_gesture(j["required_gesture"].get<std::string>());
  }
  c.confidence_threshold = j.value("confidence_threshold", c.confidence_threshold);
  c.dwell_frames = j.value("dwell_frames", c.dwell_frames);
  c.grace_frames = j.value("grace_frames", c.grace_frames);
  return c;
}

inline nlohmann::json to_json(const ContextAxes& a) {
  return {{"content", to_string(a.content)},
          {"relationship", to_string(a.relationship)},
          {"location", to_string(a.location)}};
}

inline ContextAxes context_from_json(const nlohmann::json& j) {
  ContextAxes a;
  const auto content = j.at("content").get<std::string>();
  const auto relationship = j.at("relationship").get<std::string>();
  const auto location = j.at("location").get<std::string>();
  if (content != "Serious" && content != "Silly") throw Error(ErrorCode::BadMessage, "content");
  if (relationship != "Close" && relationship != "NotClose") {
    throw Error(ErrorCode::BadMessage, "relationship");
  }
  if (location != "Public" && location != "Private") throw Error(ErrorCode::BadMessage, "location");
  a.content = content == "Serious" ? Content::Serious : Content::Silly;
  a.relationship = relationship == "Close" ? Relationship::Close : Relationship::NotClose;
  a.location = location == "Public" ? Location::Public : Location::Private;
  return a;
}

// Payload bytes are never part of the envelope record.
inline nlohmann::json to_json(const MediaEnvelope& e) {
  nlohmann::json j = {{"media_id", e.media_id},
                      {"mime_type", e.mime_type},
                      {"payload_ref", e.payload_ref},
                      {"required_gesture", to_string(e.required_gesture)},
                      {"gate_config", to_json(e.gate_config)},
                      {"sender_id", e.sender_id},
                      {"recipient_id", e.recipient_id},
                      {"created_at", e.created_at}};
  if (e.context) j["context"] = to_json(*e.context);
  return j;
}

inline MediaEnvelope envelope_from_json(const nlohmann::json& j) {
  MediaEnvelope e;
  e.media_id = j.at("media_id").get<std::string>();
  e.mime_type = j.at("mime_type").get<std::string>();
  e.payload_ref = j.at("payload_ref").get<std::string>();
  e.required_gesture = parse_gesture(j.at("required_gesture").get<std::string>());
  e.gate_config = gate_config_from_json(j.at("gate_config"));
  e.sender_id = j.at("sender_id").get<std::string>();
  e.recipient_id = j.at("recipient_id").get<std::string>();
  e.created_at = j.at("created_at").get<std::int64_t>();
  if (j.contains("context")) e.context = context_from_json(j["context"]);
  return e;
}

/// Stores the payload and returns an envelope pointing at it under a fresh media id.
inline MediaEnvelope make_envelope(MediaStore& store, std::string sender, std::string recipient,
                                   std::string_view media, std::string mime,
                                   GestureClass required_gesture, GateConfig gate_config,
                                   std::optional<ContextAxes> context = std::nullopt) {
  if (required_gesture == GestureClass::Background) {
    throw Error(ErrorCode::InvalidGesture, "Background cannot gate media");
  }
  if (media.empty()) throw Error(ErrorCode::EmptyPayload, "media is empty");
  gate_config.required_gesture = required_gesture;
  validate(gate_config);

  MediaEnvelope e;
  e.media_id = fresh_id();
  e.mime_type = std::move(mime);
  e.payload_ref = store.put_blob(media);
  e.required_gesture = required_gesture;
  e.gate_config = gate_config;
  e.context = context;
  e.sender_id = std::move(sender);
  e.recipient_id = std::move(recipient);
  e.created_at = now_ms();
  return e;
}

}  // namespace handsoff
