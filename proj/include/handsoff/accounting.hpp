#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "handsoff/error.hpp"
#include "handsoff/gate.hpp"
#include "handsoff/gesture.hpp"

namespace handsoff {

enum class CaptureMethod { ButtonPress, VoiceAssistant, SecondDevice, Other };

constexpr std::string_view to_string(CaptureMethod m) noexcept {
  switch (m) {
    case CaptureMethod::ButtonPress: return "ButtonPress";
    case CaptureMethod::VoiceAssistant: return "VoiceAssistant";
    case CaptureMethod::SecondDevice: return "SecondDevice";
    case CaptureMethod::Other: return "Other";
  }
  return "Other";
}

inline std::optional<CaptureMethod> capture_method_from_string(std::string_view s) {
  for (auto m : {CaptureMethod::ButtonPress, CaptureMethod::VoiceAssistant,
                 CaptureMethod::SecondDevice, CaptureMethod::Other}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

inline std::optional<GatePhase> gate_phase_from_string(std::string_view s) {
  if (s == "Locked") return GatePhase::Locked;
  if (s == "Unlocked") return GatePhase::Unlocked;
  return std::nullopt;
}

struct ScreenshotEvent {
  std::string session_id;
  std::int64_t timestamp_ms = 0;
  CaptureMethod method = CaptureMethod::ButtonPress;
  GatePhase gate_phase_at_event = GatePhase::Locked;

  friend bool operator==(const ScreenshotEvent&, const ScreenshotEvent&) = default;
};

struct TrialRecord {
  std::string session_id;
  GestureClass gesture = GestureClass::Wave;
  std::vector<ScreenshotEvent> events;
  bool ended_without_attempt = false;

  friend bool operator==(const TrialRecord&, const TrialRecord&) = default;
};

enum class TrialOutcome { Successful, AttemptedFailed, Skipped };

inline constexpr std::array<TrialOutcome, 3> kAllOutcomes = {
    TrialOutcome::Successful, TrialOutcome::AttemptedFailed, TrialOutcome::Skipped};

constexpr std::string_view to_string(TrialOutcome o) noexcept {
  switch (o) {
    case TrialOutcome::Successful: return "Successful";
    case TrialOutcome::AttemptedFailed: return "AttemptedFailed";
    case TrialOutcome::Skipped: return "Skipped";
  }
  return "Skipped";
}

/// A capture counts as successful only if it happened while the media was
/// revealed, whatever the capture method.
inline TrialOutcome classify_trial(const TrialRecord& record) {
  const bool captured = std::any_of(record.events.begin(), record.events.end(), [](const auto& e) {
    return e.gate_phase_at_event == GatePhase::Unlocked;
  });
  if (captured) return TrialOutcome::Successful;
  if (record.ended_without_attempt) return TrialOutcome::Skipped;
  return TrialOutcome::AttemptedFailed;
}

struct DeterrenceReport {
  std::array<std::size_t, 3> counts{};  // indexed by TrialOutcome
  std::size_t total = 0;
  double deterrence_rate = 0.0;
  std::set<GestureClass> excluded;

  std::size_t count(TrialOutcome o) const { return counts[static_cast<std::size_t>(o)]; }
};

inline DeterrenceReport deterrence_report(const std::vector<TrialRecord>& records,
                                          const std::set<GestureClass>& exclude = {}) {
  DeterrenceReport report;
  report.excluded = exclude;
  for (const auto& r : records) {
    if (exclude.contains(r.gesture)) continue;
    ++report.counts[static_cast<std::size_t>(classify_trial(r))];
    ++report.total;
  }
  if (report.total == 0) {
    throw Error(ErrorCode::EmptyAfterExclusion, "no trials left to aggregate");
  }
  const auto deterred =
      report.count(TrialOutcome::AttemptedFailed) + report.count(TrialOutcome::Skipped);
  report.deterrence_rate = static_cast<double>(deterred) / static_cast<double>(report.total);
  return report;
}

struct Counts {
  std::uint64_t tp = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  friend bool operator==(const Counts&, const Counts&) = default;
};

using ConfusionCounts = std::map<GestureClass, Counts>;

struct GestureMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

using MetricsReport = std::map<GestureClass, GestureMetrics>;

inline GestureMetrics metrics(const Counts& c) {
  if (c.tp + c.fp == 0) throw Error(ErrorCode::UndefinedMetric, "tp + fp == 0");
  if (c.tp + c.fn == 0) throw Error(ErrorCode::UndefinedMetric, "tp + fn == 0");
  GestureMetrics m;
  m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  const double sum = m.precision + m.recall;
  m.f1 = sum > 0.0 ? 2.0 * m.precision * m.recall / sum : 0.0;
  return m;
}

inline MetricsReport metrics(const ConfusionCounts& counts) {
  MetricsReport report;
  for (const auto& [gesture, c] : counts) {
    try {
      report[gesture] = metrics(c);
    } catch (const Error& e) {
      throw Error(e.code(), std::string(to_string(gesture)) + ": " + e.detail());
    }
  }
  return report;
}

/// One-vs-rest counts for the active gestures from (truth, predicted) pairs.
inline ConfusionCounts tally_confusion(
    const std::vector<std::pair<GestureClass, GestureClass>>& labelled) {
  ConfusionCounts counts;
  for (auto g : kActiveGestures) counts[g] = {};
  for (const auto& [truth, predicted] : labelled) {
    if (truth == predicted) {
      if (truth != GestureClass::Background) ++counts[truth].tp;
      continue;
    }
    if (predicted != GestureClass::Background) ++counts[predicted].fp;
    if (truth != GestureClass::Background) ++counts[truth].fn;
  }
  return counts;
}

/// `gesture,tp,fp,fn` rows; blank lines and lines starting with '#' are skipped.
inline ConfusionCounts parse_counts_csv(std::string_view text) {
  ConfusionCounts counts;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::istringstream row(line);
    std::string name, tp, fp, fn;
    if (!std::getline(row, name, ',') || !std::getline(row, tp, ',') ||
        !std::getline(row, fp, ',') || !std::getline(row, fn)) {
      throw Error(ErrorCode::MalformedRecord, "counts line " + std::to_string(lineno));
    }
    if (name == "gesture") continue;  // header row
    auto g = gesture_from_string(name);
    if (!g || *g == GestureClass::Background) {
      throw Error(ErrorCode::BadGestureName, name);
    }
    try {
      counts[*g] = {std::stoull(tp), std::stoull(fp), std::stoull(fn)};
    } catch (const std::exception&) {
      throw Error(ErrorCode::MalformedRecord, "counts line " + std::to_string(lineno));
    }
  }
  return counts;
}

struct LatencySummary {
  double mean_ms = 0.0;
  std::int64_t min_ms = 0;
  std::int64_t max_ms = 0;
};

inline LatencySummary latency_summary(const std::vector<std::int64_t>& latencies) {
  if (latencies.empty()) throw Error(ErrorCode::EmptyInput, "no latencies");
  LatencySummary s;
  long double sum = 0;
  for (auto v : latencies) sum += v;
  s.mean_ms = static_cast<double>(sum / static_cast<long double>(latencies.size()));
  auto [lo, hi] = std::minmax_element(latencies.begin(), latencies.end());
  s.min_ms = *lo;
  s.max_ms = *hi;
  return s;
}

/// What the relay writes for each finished session: the trial record plus the
/// bookkeeping needed for latency reporting.
struct SessionLog {
  TrialRecord trial;
  std::string media_id;
  std::optional<std::int64_t> detection_latency_ms;
  std::vector<GateEvent> gate_events;
  std::int64_t frames = 0;
};

inline nlohmann::json to_json(const SessionLog& log) {
  nlohmann::json events = nlohmann::json::array();
  for (const auto& e : log.trial.events) {
    events.push_back({{"timestamp_ms", e.timestamp_ms},
                      {"method", to_string(e.method)},
                      {"gate_phase", to_string(e.gate_phase_at_event)}});
  }
  nlohmann::json gate = nlohmann::json::array();
  for (const auto& e : log.gate_events) {
    gate.push_back({{"kind", to_string(e.kind)}, {"frame_index", e.frame_index}});
  }
  nlohmann::json j = {{"session_id", log.trial.session_id},
                      {"media_id", log.media_id},
                      {"gesture", to_string(log.trial.gesture)},
                      {"ended_without_attempt", log.trial.ended_without_attempt},
                      {"events", events},
                      {"gate_events", gate},
                      {"frames", log.frames}};
  j["detection_latency_ms"] =
      log.detection_latency_ms ? nlohmann::json(*log.detection_latency_ms) : nlohmann::json();
  return j;
}

inline SessionLog session_log_from_json(const nlohmann::json& j) {
  try {
    SessionLog log;
    log.trial.session_id = j.at("session_id").get<std::string>();
    log.media_id = j.value("media_id", std::string{});
    log.trial.gesture = parse_gesture(j.at("gesture").get<std::string>());
    log.trial.ended_without_attempt = j.at("ended_without_attempt").get<bool>();
    for (const auto& e : j.at("events")) {
      ScreenshotEvent ev;
      ev.session_id = log.trial.session_id;
      ev.timestamp_ms = e.at("timestamp_ms").get<std::int64_t>();
      auto method = capture_method_from_string(e.at("method").get<std::string>());
      auto phase = gate_phase_from_string(e.at("gate_phase").get<std::string>());
      if (!method || !phase) throw Error(ErrorCode::MalformedRecord, "bad event");
      ev.method = *method;
      ev.gate_phase_at_event = *phase;
      log.trial.events.push_back(ev);
    }
    if (j.contains("gate_events")) {
      for (const auto& e : j.at("gate_events")) {
        const auto kind = e.at("kind").get<std::string>();
        log.gate_events.push_back(
            {kind == "Unlocked" ? GateEventKind::Unlocked : GateEventKind::Relocked,
             e.at("frame_index").get<std::int64_t>()});
      }
    }
    if (j.contains("detection_latency_ms") && !j["detection_latency_ms"].is_null()) {
      log.detection_latency_ms = j["detection_latency_ms"].get<std::int64_t>();
    }
    log.frames = j.value("frames", std::int64_t{0});
    if (log.trial.ended_without_attempt && !log.trial.events.empty()) {
      throw Error(ErrorCode::MalformedRecord, "ended_without_attempt with events");
    }
    return log;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, e.what());
  }
}

}  // namespace handsoff
