#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "handsoff/accounting.hpp"
#include "handsoff/classifier.hpp"
#include "handsoff/envelope.hpp"
#include "handsoff/gate.hpp"
#include "handsoff/store.hpp"
#include "handsoff/util.hpp"
#include "handsoff/wire.hpp"

namespace handsoff {

using ConnectionId = std::uint64_t;

/// Where the relay writes outbound records. Implementations must be
/// thread-safe and must not block; the relay calls send() while holding a
/// session lock so per-session ordering is preserved.
class Outbound {
 public:
  virtual ~Outbound() = default;
  virtual void send(ConnectionId to, std::string line) = 0;
};

struct RelayConfig {
  std::size_t max_payload_bytes = 16u << 20;
  std::size_t chunk_size = 64u << 10;
  bool sender_notifications = true;
  bool voice_event_logging = true;
  std::optional<std::string> auth_token;
  ClassifierConfig classifier;
  // Fills gate_config fields a Compose leaves out.
  GateConfig default_gate;
};

/// Server side of the gated media protocol.
///
/// A recipient opens a session with UnlockRequest and streams landmark frames.
/// Every frame is classified and fed through the session's unlock gate; media
/// chunks go out only while the gate is Unlocked, one chunk per frame, and a
/// fresh unlock restarts the payload from chunk 0.
class Relay {
 public:
  Relay(RelayConfig config, MediaStore& store, Outbound& out)
      : config_(std::move(config)), store_(store), out_(out) {}

  Relay(const Relay&) = delete;
  Relay& operator=(const Relay&) = delete;

  const RelayConfig& config() const { return config_; }

  void on_message(ConnectionId from, std::string_view line) {
    wire::Message msg;
    try {
      msg = wire::decode(line);
    } catch (const Error& e) {
      reply_error(from, e, std::nullopt);
      return;
    }
    std::visit([&](auto& m) { dispatch(from, m); }, msg);
  }

  /// Ends every open session owned by the connection and forgets its bindings.
  void on_disconnect(ConnectionId conn) {
    std::vector<std::shared_ptr<Session>> owned;
    {
      std::shared_lock lock(sessions_mutex_);
      for (auto& [id, s] : sessions_) {
        if (s->owner == conn) owned.push_back(s);
      }
    }
    for (auto& s : owned) {
      std::lock_guard lock(s->mutex);
      if (s->open) close_locked(*s);
    }
    std::lock_guard lock(bindings_mutex_);
    for (auto it = bindings_.begin(); it != bindings_.end();) {
      it = it->second == conn ? bindings_.erase(it) : std::next(it);
    }
  }

  /// Trial record for a finished session. Throws SessionStillOpen or UnknownSession.
  TrialRecord export_session_log(const std::string& session_id) const {
    return session_log(session_id).trial;
  }

  SessionLog session_log(const std::string& session_id) const {
    auto s = find_session(session_id);
    if (!s) throw Error(ErrorCode::UnknownSession, session_id);
    std::lock_guard lock(s->mutex);
    if (s->open) throw Error(ErrorCode::SessionStillOpen, session_id);
    return s->log;
  }

  std::optional<GatePhase> session_phase(const std::string& session_id) const {
    auto s = find_session(session_id);
    if (!s) return std::nullopt;
    std::lock_guard lock(s->mutex);
    return s->gate.phase;
  }

 private:
  struct Session {
    std::mutex mutex;
    std::string id;
    MediaEnvelope envelope;
    std::string payload;
    ConnectionId owner = 0;
    GateState gate;
    bool open = true;
    std::int64_t frame_count = 0;
    std::optional<std::int64_t> first_ts;
    std::optional<std::int64_t> last_ts;
    std::size_t next_chunk = 0;
    SessionLog log;
  };

  void send(ConnectionId to, const wire::Message& msg) { out_.send(to, wire::encode(msg)); }

  void reply_error(ConnectionId to, const Error& e, std::optional<std::string> session_id) {
    send(to, wire::ErrorMsg{std::string(to_string(e.code())), e.detail(), std::move(session_id)});
  }

  void bind(const std::string& user, ConnectionId conn) {
    std::lock_guard lock(bindings_mutex_);
    auto [lo, hi] = bindings_.equal_range(user);
    for (auto it = lo; it != hi; ++it) {
      if (it->second == conn) return;
    }
    bindings_.emplace(user, conn);
  }

  std::vector<ConnectionId> connections_of(const std::string& user) const {
    std::lock_guard lock(bindings_mutex_);
    std::vector<ConnectionId> out;
    auto [lo, hi] = bindings_.equal_range(user);
    for (auto it = lo; it != hi; ++it) out.push_back(it->second);
    return out;
  }

  std::shared_ptr<Session> find_session(const std::string& id) const {
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(id);
    return it == sessions_.end() ? nullptr : it->second;
  }

  // Looks up an open session owned by `from`; replies UnknownSession otherwise.
  std::shared_ptr<Session> owned_session(ConnectionId from, const std::string& id) {
    auto s = find_session(id);
    if (!s || s->owner != from) {
      reply_error(from, Error(ErrorCode::UnknownSession, id), id);
      return nullptr;
    }
    return s;
  }

  void dispatch(ConnectionId from, const wire::Compose& m) {
    try {
      handle_compose(from, m);
    } catch (const Error& e) {
      reply_error(from, e, std::nullopt);
    }
  }

  void handle_compose(ConnectionId from, const wire::Compose& m) {
    if (config_.auth_token && m.token != config_.auth_token) {
      throw Error(ErrorCode::Unauthorized, "bad or missing token");
    }
    const auto gesture = gesture_from_string(m.required_gesture);
    if (!gesture || *gesture == GestureClass::Background) {
      throw Error(ErrorCode::InvalidGesture, m.required_gesture);
    }
    if (m.payload_b64.size() / 4 * 3 > config_.max_payload_bytes + 2) {
      throw Error(ErrorCode::PayloadTooLarge, "payload exceeds cap");
    }
    const auto payload = base64_decode(m.payload_b64);
    if (payload.size() > config_.max_payload_bytes) {
      throw Error(ErrorCode::PayloadTooLarge, std::to_string(payload.size()) + " bytes");
    }
    GateConfig gate;
    try {
      gate = gate_config_from_json(m.gate_config, config_.default_gate);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::BadMessage, e.what());
    }
    auto envelope = make_envelope(store_, m.sender_id, m.recipient_id, payload, m.mime, *gesture,
                                  gate, m.context);
    store_.put_metadata(envelope.media_id, to_json(envelope));

    bind(m.sender_id, from);
    send(from, wire::ComposeAck{envelope.media_id, std::nullopt, std::nullopt, std::nullopt});
    for (auto conn : connections_of(m.recipient_id)) {
      send(conn, wire::ComposeAck{envelope.media_id, m.sender_id,
                                  std::string(to_string(envelope.required_gesture)),
                                  envelope.mime_type});
    }
  }

  void dispatch(ConnectionId from, const wire::UnlockRequest& m) {
    try {
      handle_unlock(from, m);
    } catch (const Error& e) {
      reply_error(from, e, std::nullopt);
    }
  }

  void handle_unlock(ConnectionId from, const wire::UnlockRequest& m) {
    auto meta = store_.get_metadata(m.media_id);
    if (!meta) throw Error(ErrorCode::UnknownMedia, m.media_id);
    auto envelope = envelope_from_json(*meta);
    if (envelope.recipient_id != m.recipient_id) throw Error(ErrorCode::NotRecipient, m.recipient_id);
    auto payload = store_.get_blob(envelope.payload_ref);
    if (!payload) throw Error(ErrorCode::StorageFailure, "payload missing for " + m.media_id);

    bind(m.recipient_id, from);
    auto s = std::make_shared<Session>();
    s->id = fresh_id();
    s->owner = from;
    s->envelope = std::move(envelope);
    s->payload = std::move(*payload);
    s->log.trial.session_id = s->id;
    s->log.trial.gesture = s->envelope.required_gesture;
    s->log.media_id = s->envelope.media_id;

    std::lock_guard session_lock(s->mutex);
    {
      std::unique_lock lock(sessions_mutex_);
      sessions_.emplace(s->id, s);
    }
    send(from, wire::GateStateMsg{s->id, std::string(to_string(GatePhase::Locked)), 0.0,
                                  s->envelope.media_id,
                                  std::string(to_string(s->envelope.required_gesture)),
                                  s->envelope.mime_type});
  }

  void dispatch(ConnectionId from, const wire::LandmarkFrameMsg& m) {
    auto s = owned_session(from, m.session_id);
    if (!s) return;
    std::lock_guard lock(s->mutex);
    if (!s->open) {
      reply_error(from, Error(ErrorCode::UnknownSession, s->id), s->id);
      return;
    }

    LandmarkFrame frame;
    try {
      frame = parse_frame_line(m.frame);
      if (s->last_ts && frame.timestamp_ms <= *s->last_ts) {
        throw Error(ErrorCode::NonMonotonicTimestamp, std::to_string(frame.timestamp_ms));
      }
    } catch (const Error& e) {
      reply_error(from, Error(ErrorCode::MalformedFrame, e.what()), s->id);
      close_locked(*s);
      return;
    }
    if (!s->first_ts) s->first_ts = frame.timestamp_ms;
    s->last_ts = frame.timestamp_ms;

    const auto c = classify(frame, config_.classifier);
    const auto before = s->gate.phase;
    auto next = step(s->gate, c, s->envelope.gate_config, s->frame_count);
    s->gate = next.state;
    ++s->frame_count;

    if (next.event) {
      s->log.gate_events.push_back(*next.event);
      if (next.event->kind == GateEventKind::Unlocked) {
        s->next_chunk = 0;
        if (!s->log.detection_latency_ms) {
          s->log.detection_latency_ms = frame.timestamp_ms - *s->first_ts;
        }
      }
    }
    if (s->gate.phase != before) {
      send(from, wire::GateStateMsg{s->id, std::string(to_string(s->gate.phase)), c.confidence,
                                    std::nullopt, std::nullopt, std::nullopt});
    }
    if (next.reveal) emit_chunk(*s);
  }

  void emit_chunk(Session& s) {
    const std::size_t size = config_.chunk_size == 0 ? s.payload.size() : config_.chunk_size;
    const std::size_t total = (s.payload.size() + size - 1) / size;
    if (s.next_chunk >= total) return;
    const auto offset = s.next_chunk * size;
    const auto bytes = std::string_view(s.payload).substr(offset, size);
    send(s.owner, wire::MediaChunk{s.id, static_cast<std::int64_t>(s.next_chunk),
                                   static_cast<std::int64_t>(total), base64_encode(bytes)});
    ++s.next_chunk;
  }

  void dispatch(ConnectionId from, const wire::ScreenshotEventMsg& m) {
    auto s = owned_session(from, m.session_id);
    if (!s) return;
    std::lock_guard lock(s->mutex);
    if (!s->open) {
      reply_error(from, Error(ErrorCode::UnknownSession, s->id), s->id);
      return;
    }
    const auto method = capture_method_from_string(m.method);
    if (!method) {
      reply_error(from, Error(ErrorCode::BadMessage, "unknown method " + m.method), s->id);
      return;
    }
    ScreenshotEvent event{s->id, s->last_ts.value_or(0), *method, s->gate.phase};
    const bool logged = *method != CaptureMethod::VoiceAssistant || config_.voice_event_logging;
    wire::ScreenshotEventMsg ack{s->id, m.method, std::string(to_string(event.gate_phase_at_event)),
                                 event.timestamp_ms, std::nullopt};
    send(from, ack);
    if (!logged) return;
    s->log.trial.events.push_back(event);
    if (config_.sender_notifications) {
      ack.media_id = s->envelope.media_id;
      for (auto conn : connections_of(s->envelope.sender_id)) send(conn, ack);
    }
  }

  void dispatch(ConnectionId from, const wire::SessionEnd& m) {
    auto s = owned_session(from, m.session_id);
    if (!s) return;
    std::lock_guard lock(s->mutex);
    if (!s->open) {
      reply_error(from, Error(ErrorCode::UnknownSession, s->id), s->id);
      return;
    }
    close_locked(*s);
    send(from, wire::SessionEnd{s->id});
  }

  template <typename ServerOnly>
  void dispatch(ConnectionId from, const ServerOnly& m) {
    reply_error(from,
                Error(ErrorCode::BadMessage,
                      "unexpected message " + std::string(wire::type_name(wire::Message{m}))),
                std::nullopt);
  }

  void close_locked(Session& s) {
    s.open = false;
    s.payload.clear();
    s.log.trial.ended_without_attempt = s.log.trial.events.empty();
    s.log.frames = s.frame_count;
    try {
      store_.write_session_log(s.log);
    } catch (const Error& e) {
      reply_error(s.owner, e, s.id);
    }
  }

  RelayConfig config_;
  MediaStore& store_;
  Outbound& out_;

  mutable std::mutex bindings_mutex_;
  std::multimap<std::string, ConnectionId> bindings_;

  mutable std::shared_mutex sessions_mutex_;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace handsoff
