#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "handsoff/classifier.hpp"
#include "handsoff/error.hpp"
#include "handsoff/gesture.hpp"
#include "handsoff/landmark.hpp"

namespace handsoff {

struct GateConfig {
  GestureClass required_gesture = GestureClass::Wave;
  double confidence_threshold = 0.90;
  int dwell_frames = 3;
  int grace_frames = 5;

  friend bool operator==(const GateConfig&, const GateConfig&) = default;
};

inline void validate(const GateConfig& config) {
  if (config.required_gesture == GestureClass::Background) {
    throw Error(ErrorCode::InvalidGesture, "required gesture cannot be Background");
  }
  if (!(config.confidence_threshold >= 0.0 && config.confidence_threshold <= 1.0)) {
    throw Error(ErrorCode::BadConfig, "confidence_threshold must be in [0,1]");
  }
  if (config.dwell_frames < 1) throw Error(ErrorCode::BadConfig, "dwell_frames must be >= 1");
  if (config.grace_frames < 0) throw Error(ErrorCode::BadConfig, "grace_frames must be >= 0");
}

enum class GatePhase { Locked, Unlocked };

constexpr std::string_view to_string(GatePhase p) noexcept {
  return p == GatePhase::Locked ? "Locked" : "Unlocked";
}

struct GateState {
  GatePhase phase = GatePhase::Locked;
  int qualifying_streak = 0;
  int miss_streak = 0;

  friend bool operator==(const GateState&, const GateState&) = default;
};

enum class GateEventKind { Unlocked, Relocked };

constexpr std::string_view to_string(GateEventKind k) noexcept {
  return k == GateEventKind::Unlocked ? "Unlocked" : "Relocked";
}

struct GateEvent {
  GateEventKind kind = GateEventKind::Unlocked;
  std::int64_t frame_index = 0;

  friend bool operator==(const GateEvent&, const GateEvent&) = default;
};

struct GateStep {
  GateState state;
  bool reveal = false;
  std::optional<GateEvent> event;
};

inline bool qualifies(const Classification& c, const GateConfig& config) {
  return c.gesture == config.required_gesture && c.confidence >= config.confidence_threshold;
}

/// Advances the gate by one classified frame. `frame_index` only labels the
/// emitted event. Unlocks when the qualifying streak reaches dwell_frames and
/// relocks after grace_frames + 1 consecutive misses.
inline GateStep step(const GateState& state, const Classification& c, const GateConfig& config,
                     std::int64_t frame_index = 0) {
  GateStep out{state, false, std::nullopt};
  auto& s = out.state;
  const bool hit = qualifies(c, config);

  if (s.phase == GatePhase::Locked) {
    s.miss_streak = 0;
    s.qualifying_streak = hit ? s.qualifying_streak + 1 : 0;
    if (s.qualifying_streak >= config.dwell_frames) {
      s.phase = GatePhase::Unlocked;
      out.event = GateEvent{GateEventKind::Unlocked, frame_index};
    }
  } else if (hit) {
    s.qualifying_streak += 1;
    s.miss_streak = 0;
  } else {
    s.qualifying_streak = 0;
    s.miss_streak += 1;
    if (s.miss_streak >= config.grace_frames + 1) {
      s = GateState{};
      out.event = GateEvent{GateEventKind::Relocked, frame_index};
    }
  }
  out.reveal = s.phase == GatePhase::Unlocked;
  return out;
}

struct GateRun {
  std::vector<bool> reveal_mask;
  std::vector<GateEvent> events;
};

inline GateRun run_gate(const std::vector<Classification>& classifications,
                        const GateConfig& config) {
  GateRun run;
  run.reveal_mask.reserve(classifications.size());
  GateState state;
  for (std::size_t i = 0; i < classifications.size(); ++i) {
    auto next = step(state, classifications[i], config, static_cast<std::int64_t>(i));
    state = next.state;
    run.reveal_mask.push_back(next.reveal);
    if (next.event) run.events.push_back(*next.event);
  }
  return run;
}

/// Milliseconds from the first frame to the frame that first unlocks the gate.
inline std::optional<std::int64_t> detection_latency(const Trace& trace,
                                                     const std::vector<Classification>& classifications,
                                                     const GateConfig& config) {
  if (trace.frames.size() != classifications.size()) {
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(trace.frames.size()) + " frames vs " +
                    std::to_string(classifications.size()) + " classifications");
  }
  GateState state;
  for (std::size_t i = 0; i < classifications.size(); ++i) {
    auto next = step(state, classifications[i], config, static_cast<std::int64_t>(i));
    state = next.state;
    if (next.event && next.event->kind == GateEventKind::Unlocked) {
      return trace.frames[i].timestamp_ms - trace.frames.front().timestamp_ms;
    }
  }
  return std::nullopt;
}

}  // namespace handsoff
