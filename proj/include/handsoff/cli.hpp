#pragma once

#include <cstdint>
#include <cstdio>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "handsoff/accounting.hpp"
#include "handsoff/classifier.hpp"
#include "handsoff/error.hpp"
#include "handsoff/gate.hpp"
#include "handsoff/landmark.hpp"
#include "handsoff/synth.hpp"

namespace handsoff::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitProtocol = 4;

inline int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadConfig:
    case ErrorCode::BadGestureName:
    case ErrorCode::InvalidGesture:
      return kExitUsage;
    case ErrorCode::StorageFailure:
    case ErrorCode::BindFailure:
      return kExitIo;
    default:
      return kExitProtocol;
  }
}

/// Frame i is synthesize_pose(gesture, seed + i, jitter) stamped at i * 1000 / fps ms.
inline Trace gen_fixtures(GestureClass gesture, std::size_t count, double jitter,
                          std::uint64_t seed, double fps = kDefaultFps) {
  Trace trace;
  trace.nominal_fps = fps;
  trace.frames.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    auto frame = synthesize_pose(gesture, seed + i, jitter);
    frame.timestamp_ms = static_cast<std::int64_t>(std::floor(static_cast<double>(i) * 1000.0 / fps));
    trace.frames.push_back(std::move(frame));
  }
  return trace;
}

struct ReplayResult {
  std::vector<Classification> classifications;
  GateRun gate;
  std::optional<std::int64_t> latency_ms;
};

inline ReplayResult replay(const Trace& trace, const GateConfig& gate,
                           const ClassifierConfig& classifier) {
  ReplayResult r;
  r.classifications = classify_trace(trace, classifier);
  r.gate = run_gate(r.classifications, gate);
  r.latency_ms = detection_latency(trace, r.classifications, gate);
  return r;
}

namespace detail {
inline std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}
}  // namespace detail

/// Tab-separated per-frame table followed by the latency line.
inline std::string format_replay(const Trace& trace, const ReplayResult& r) {
  std::ostringstream out;
  out << "frame\ttimestamp_ms\tgesture\tconfidence\thands\tphase\tevent\n";
  std::size_t next_event = 0;
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    const auto& c = r.classifications[i];
    std::string event = "-";
    if (next_event < r.gate.events.size() &&
        r.gate.events[next_event].frame_index == static_cast<std::int64_t>(i)) {
      event = std::string(to_string(r.gate.events[next_event++].kind));
    }
    out << i << '\t' << trace.frames[i].timestamp_ms << '\t' << to_string(c.gesture) << '\t'
        << detail::fixed(c.confidence, 4) << '\t' << c.hands_detected << '\t'
        << (r.gate.reveal_mask[i] ? "Unlocked" : "Locked") << '\t' << event << '\n';
  }
  if (r.latency_ms) {
    out << "latency_ms\t" << *r.latency_ms << '\n';
  } else {
    out << "latency_ms\tno unlock\n";
  }
  return out.str();
}

inline std::string format_deterrence(const DeterrenceReport& d) {
  std::ostringstream out;
  out << "outcome\tcount\tfraction\n";
  for (auto o : kAllOutcomes) {
    out << to_string(o) << '\t' << d.count(o) << '\t'
        << detail::fixed(static_cast<double>(d.count(o)) / static_cast<double>(d.total)) << '\n';
  }
  out << "total\t" << d.total << "\t1.000000\n";
  out << "deterrence_rate\t" << detail::fixed(d.deterrence_rate) << '\n';
  if (!d.excluded.empty()) {
    out << "excluded";
    for (auto g : d.excluded) out << '\t' << to_string(g);
    out << '\n';
  }
  return out.str();
}

inline std::string format_metrics(const ConfusionCounts& counts, const MetricsReport& m) {
  std::ostringstream out;
  out << "gesture\ttp\tfp\tfn\tprecision\trecall\tf1\n";
  for (const auto& [g, c] : counts) {
    const auto& row = m.at(g);
    out << to_string(g) << '\t' << c.tp << '\t' << c.fp << '\t' << c.fn << '\t'
        << detail::fixed(row.precision) << '\t' << detail::fixed(row.recall) << '\t'
        << detail::fixed(row.f1) << '\n';
  }
  return out.str();
}

/// Deterrence table, latency summary (when any session unlocked) and, given
/// confusion counts, the metrics table.
inline std::string report(const std::vector<SessionLog>& logs, const std::set<GestureClass>& exclude,
                          const std::optional<ConfusionCounts>& counts) {
  std::vector<TrialRecord> trials;
  std::vector<std::int64_t> latencies;
  for (const auto& log : logs) {
    trials.push_back(log.trial);
    if (!exclude.contains(log.trial.gesture) && log.detection_latency_ms) {
      latencies.push_back(*log.detection_latency_ms);
    }
  }
  std::ostringstream out;
  out << format_deterrence(deterrence_report(trials, exclude));
  if (!latencies.empty()) {
    const auto s = latency_summary(latencies);
    out << "\nlatency\tmean_ms\tmin_ms\tmax_ms\n";
    out << "detection\t" << detail::fixed(s.mean_ms, 1) << '\t' << s.min_ms << '\t' << s.max_ms
        << '\n';
  }
  if (counts) {
    out << '\n' << format_metrics(*counts, metrics(*counts));
  }
  return out.str();
}

}  // namespace handsoff::cli
