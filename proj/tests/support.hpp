// Test-only oracles, fixtures and an instrumented in-process transport.
// Nothing here calls into the code path it is used to check.
#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "handsoff/accounting.hpp"
#include "handsoff/relay.hpp"
#include "handsoff/synth.hpp"
#include "handsoff/wire.hpp"

namespace handsoff::testing {

// ---------------------------------------------------------------------------
// Gate oracle: window search over the qualify mask instead of a state machine.
// Locked: the gate opens at the end of the first run of `dwell` qualifying
// frames that starts after the last relock. Unlocked: it closes at the end of
// the first run of `grace + 1` misses that starts after the unlock frame.

struct OracleGate {
  std::vector<bool> reveal;
  std::vector<std::pair<bool, std::size_t>> events;  // (is_unlock, frame)
};

inline OracleGate oracle_gate(const std::vector<bool>& q, int dwell, int grace) {
  const std::size_t n = q.size();
  OracleGate out;
  out.reveal.assign(n, false);
  std::size_t start = 0;
  while (start < n) {
    // Unlock: earliest k with q[k-dwell+1..k] all true and k-dwell+1 >= start.
    std::optional<std::size_t> unlock;
    for (std::size_t k = start + static_cast<std::size_t>(dwell) - 1; k < n; ++k) {
      bool all = true;
      for (std::size_t j = k + 1 - static_cast<std::size_t>(dwell); j <= k; ++j) all = all && q[j];
      if (all) {
        unlock = k;
        break;
      }
    }
    if (!unlock) break;
    out.events.push_back({true, *unlock});
    // Relock: earliest m > unlock with q[m-grace..m] all false and m-grace > unlock.
    std::optional<std::size_t> relock;
    for (std::size_t m = *unlock + static_cast<std::size_t>(grace) + 1; m < n; ++m) {
      bool all_miss = true;
      for (std::size_t j = m - static_cast<std::size_t>(grace); j <= m; ++j) all_miss = all_miss && !q[j];
      if (all_miss) {
        relock = m;
        break;
      }
    }
    const std::size_t end = relock ? *relock : n;
    for (std::size_t i = *unlock; i < end; ++i) out.reveal[i] = true;
    if (!relock) break;
    out.events.push_back({false, *relock});
    start = *relock + 1;
  }
  return out;
}

/// First unlock by linear scan: end of the first all-qualifying window.
inline std::optional<std::int64_t> oracle_latency(const std::vector<std::int64_t>& timestamps,
                                                  const std::vector<bool>& q, int dwell) {
  int run = 0;
  for (std::size_t i = 0; i < q.size(); ++i) {
    run = q[i] ? run + 1 : 0;
    if (run == dwell) return timestamps[i] - timestamps.front();
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Reference confusion rows: FP, FN, and rounded precision/recall (percent)
// and F1 (hundredths).

struct ReferenceRow {
  GestureClass gesture;
  std::uint64_t fp, fn;
  int precision_pct, recall_pct, f1_hundredths;
};

inline const std::vector<ReferenceRow>& reference_rows() {
  static const std::vector<ReferenceRow> rows = {
      {GestureClass::Wave, 3, 1, 98, 99, 98},
      {GestureClass::Frame, 6, 9, 97, 95, 96},
      {GestureClass::Interlace, 32, 2, 86, 99, 92},
      {GestureClass::Binoculars, 4, 6, 97, 96, 96},
  };
  return rows;
}

// round(100 * num / den), half up, in exact integer arithmetic.
inline std::uint64_t round_pct(std::uint64_t num, std::uint64_t den) {
  return (200 * num + den) / (2 * den);
}

/// Smallest tp in [1, limit] whose exact P, R and F1 round to the reference
/// values. Brute force over integers; no floating point.
inline std::optional<std::uint64_t> reconstruct_tp(const ReferenceRow& row,
                                                   std::uint64_t limit = 1000) {
  for (std::uint64_t tp = 1; tp <= limit; ++tp) {
    if (round_pct(tp, tp + row.fp) != static_cast<std::uint64_t>(row.precision_pct)) continue;
    if (round_pct(tp, tp + row.fn) != static_cast<std::uint64_t>(row.recall_pct)) continue;
    if (round_pct(2 * tp, 2 * tp + row.fp + row.fn) != static_cast<std::uint64_t>(row.f1_hundredths)) {
      continue;
    }
    return tp;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// 52-trial fixture: 13 participants x 4 gestures. Outcome counts per gesture
// (Successful, AttemptedFailed, Skipped). Interlace carries 8 of 17 successes.

struct OutcomeSplit {
  GestureClass gesture;
  int successful, attempted_failed, skipped;
};

inline const std::vector<OutcomeSplit>& study_split() {
  static const std::vector<OutcomeSplit> split = {
      {GestureClass::Wave, 3, 4, 6},
      {GestureClass::Frame, 3, 4, 6},
      {GestureClass::Interlace, 8, 2, 3},
      {GestureClass::Binoculars, 3, 3, 7},
  };
  return split;
}

inline TrialRecord make_trial(const std::string& id, GestureClass g, TrialOutcome outcome) {
  TrialRecord r;
  r.session_id = id;
  r.gesture = g;
  switch (outcome) {
    case TrialOutcome::Successful:
      r.events.push_back({id, 4000, CaptureMethod::ButtonPress, GatePhase::Locked});
      r.events.push_back({id, 9000, CaptureMethod::ButtonPress, GatePhase::Unlocked});
      break;
    case TrialOutcome::AttemptedFailed:
      r.events.push_back({id, 5000, CaptureMethod::ButtonPress, GatePhase::Locked});
      break;
    case TrialOutcome::Skipped:
      r.ended_without_attempt = true;
      break;
  }
  return r;
}

struct ScriptedTrial {
  GestureClass gesture;
  TrialOutcome outcome;
};

inline std::vector<ScriptedTrial> study_script() {
  std::vector<ScriptedTrial> out;
  for (const auto& s : study_split()) {
    for (int i = 0; i < s.successful; ++i) out.push_back({s.gesture, TrialOutcome::Successful});
    for (int i = 0; i < s.attempted_failed; ++i) {
      out.push_back({s.gesture, TrialOutcome::AttemptedFailed});
    }
    for (int i = 0; i < s.skipped; ++i) out.push_back({s.gesture, TrialOutcome::Skipped});
  }
  return out;
}

inline std::vector<TrialRecord> study_fixture() {
  std::vector<TrialRecord> out;
  int n = 0;
  for (const auto& t : study_script()) {
    out.push_back(make_trial("trial-" + std::to_string(n++), t.gesture, t.outcome));
  }
  return out;
}

// Detection latencies in ms; mean 2780, range 1000..11000.
inline const std::vector<std::int64_t>& study_latencies() {
  static const std::vector<std::int64_t> v = {1000, 11000, 1500, 1800, 2000,
                                              2100, 2200,  2400, 1800, 2000};
  return v;
}

// ---------------------------------------------------------------------------
// In-process transport that records everything the relay sends and audits
// the no-leak property: MediaChunk bytes seen while the receiving session's
// last announced phase is Locked.

class RecordingTransport : public Outbound {
 public:
  void send(ConnectionId to, std::string line) override {
    auto msg = wire::decode(line);
    std::lock_guard lock(mutex_);
    if (auto* g = std::get_if<wire::GateStateMsg>(&msg)) {
      auto& phases = phases_[g->session_id];
      phases.push_back(g->phase);
    } else if (auto* c = std::get_if<wire::MediaChunk>(&msg)) {
      auto it = phases_.find(c->session_id);
      const bool locked = it == phases_.end() || it->second.empty() || it->second.back() != "Unlocked";
      const auto bytes = base64_decode(c->bytes_b64).size();
      if (locked) leaked_bytes_ += bytes;
      chunk_bytes_ += bytes;
    }
    inbox_[to].push_back(std::move(msg));
  }

  std::vector<wire::Message> take(ConnectionId conn) {
    std::lock_guard lock(mutex_);
    auto out = std::move(inbox_[conn]);
    inbox_[conn].clear();
    return out;
  }

  std::vector<wire::Message> peek(ConnectionId conn) const {
    std::lock_guard lock(mutex_);
    auto it = inbox_.find(conn);
    return it == inbox_.end() ? std::vector<wire::Message>{} : it->second;
  }

  std::vector<std::string> phases(const std::string& session) const {
    std::lock_guard lock(mutex_);
    auto it = phases_.find(session);
    return it == phases_.end() ? std::vector<std::string>{} : it->second;
  }

  std::uint64_t leaked_bytes() const {
    std::lock_guard lock(mutex_);
    return leaked_bytes_;
  }
  std::uint64_t chunk_bytes() const {
    std::lock_guard lock(mutex_);
    return chunk_bytes_;
  }

 private:
  mutable std::mutex mutex_;
  std::map<ConnectionId, std::vector<wire::Message>> inbox_;
  std::map<std::string, std::vector<std::string>> phases_;
  std::uint64_t leaked_bytes_ = 0;
  std::uint64_t chunk_bytes_ = 0;
};

template <typename T>
std::vector<T> of_type(const std::vector<wire::Message>& msgs) {
  std::vector<T> out;
  for (const auto& m : msgs) {
    if (auto* p = std::get_if<T>(&m)) out.push_back(*p);
  }
  return out;
}

/// Fresh, unique directory under the system temp dir; removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("handsoff-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline std::string compose_line(const std::string& sender, const std::string& recipient,
                                GestureClass g, const std::string& payload,
                                nlohmann::json gate = nlohmann::json::object()) {
  return wire::encode(wire::Compose{sender, recipient, "image/png", std::string(to_string(g)),
                                    std::move(gate), std::nullopt, base64_encode(payload),
                                    std::nullopt});
}

/// A relay over a private store and a recording transport, plus the client
/// side of the protocol as plain calls.
struct RelayHarness {
  explicit RelayHarness(RelayConfig config = {})
      : store(dir.path()), relay(std::move(config), store, out) {}

  TempDir dir;
  MediaStore store;
  RecordingTransport out;
  Relay relay;

  std::string compose(ConnectionId conn, const std::string& sender, const std::string& recipient,
                      GestureClass g, const std::string& payload,
                      nlohmann::json gate = nlohmann::json::object()) {
    relay.on_message(conn, compose_line(sender, recipient, g, payload, std::move(gate)));
    for (const auto& m : out.peek(conn)) {
      if (auto* ack = std::get_if<wire::ComposeAck>(&m); ack && !ack->sender_id) {
        auto id = ack->media_id;
        out.take(conn);
        return id;
      }
    }
    return {};
  }

  std::string unlock(ConnectionId conn, const std::string& media_id, const std::string& recipient) {
    relay.on_message(conn, wire::encode(wire::UnlockRequest{media_id, recipient}));
    const auto states = of_type<wire::GateStateMsg>(out.peek(conn));
    return states.empty() ? std::string{} : states.back().session_id;
  }

  void frame(ConnectionId conn, const std::string& session, const LandmarkFrame& f) {
    relay.on_message(conn, wire::encode(wire::LandmarkFrameMsg{session, format_frame_line(f)}));
  }

  void screenshot(ConnectionId conn, const std::string& session,
                  CaptureMethod method = CaptureMethod::ButtonPress) {
    relay.on_message(conn, wire::encode(wire::ScreenshotEventMsg{
                               session, std::string(to_string(method)), std::nullopt,
                               std::nullopt, std::nullopt}));
  }

  void end(ConnectionId conn, const std::string& session) {
    relay.on_message(conn, wire::encode(wire::SessionEnd{session}));
  }
};

/// Frame `i` of a scripted stream: pose of `g` stamped at 20 ms spacing.
inline LandmarkFrame stamped(GestureClass g, std::uint64_t seed, double jitter, std::int64_t ts) {
  auto f = synthesize_pose(g, seed, jitter);
  f.timestamp_ms = ts;
  return f;
}

/// Drives one relay session to the given outcome and returns its session id.
/// Successful trials hold the gesture until the gate opens, then capture.
/// Failed attempts capture while showing only background. Skipped trials
/// stream a few frames and end.
inline std::string play_trial(RelayHarness& h, ConnectionId sender_conn, ConnectionId recipient_conn,
                              const std::string& tag, GestureClass g, TrialOutcome outcome) {
  const auto media = h.compose(sender_conn, "sender-" + tag, "recipient-" + tag, g,
                               "media for " + tag);
  const auto session = h.unlock(recipient_conn, media, "recipient-" + tag);
  std::int64_t ts = 0;
  const auto show = [&](GestureClass pose, int n) {
    for (int i = 0; i < n; ++i, ts += 20) h.frame(recipient_conn, session, stamped(pose, static_cast<std::uint64_t>(ts), 0.0, ts));
  };
  switch (outcome) {
    case TrialOutcome::Successful:
      show(GestureClass::Background, 5);
      show(g, 10);
      h.screenshot(recipient_conn, session);
      break;
    case TrialOutcome::AttemptedFailed:
      show(GestureClass::Background, 10);
      h.screenshot(recipient_conn, session, CaptureMethod::SecondDevice);
      break;
    case TrialOutcome::Skipped:
      show(GestureClass::Background, 3);
      break;
  }
  h.end(recipient_conn, session);
  return session;
}

}  // namespace handsoff::testing
