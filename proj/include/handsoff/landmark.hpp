#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "handsoff/error.hpp"

namespace handsoff {

// Standard 21-point hand topology.
namespace kp {
inline constexpr std::size_t kWrist = 0;
inline constexpr std::size_t kThumbCmc = 1;
inline constexpr std::size_t kThumbMcp = 2;
inline constexpr std::size_t kThumbIp = 3;
inline constexpr std::size_t kThumbTip = 4;
inline constexpr std::size_t kIndexMcp = 5;
inline constexpr std::size_t kIndexTip = 8;
inline constexpr std::size_t kMiddleMcp = 9;
inline constexpr std::size_t kMiddleTip = 12;
inline constexpr std::size_t kRingMcp = 13;
inline constexpr std::size_t kRingTip = 16;
inline constexpr std::size_t kPinkyMcp = 17;
inline constexpr std::size_t kPinkyTip = 20;
inline constexpr std::size_t kCount = 21;

// Base joint of each finger chain (thumb starts at the CMC joint).
inline constexpr std::array<std::size_t, 5> kFingerBase = {1, 5, 9, 13, 17};
inline constexpr std::array<std::size_t, 5> kFingerTip = {4, 8, 12, 16, 20};
}  // namespace kp

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

enum class Handedness { Left, Right };

struct Hand {
  Handedness handedness = Handedness::Right;
  std::array<Keypoint, kp::kCount> keypoints{};

  friend bool operator==(const Hand&, const Hand&) = default;
};

struct LandmarkFrame {
  std::int64_t timestamp_ms = 0;
  std::vector<Hand> hands;

  friend bool operator==(const LandmarkFrame&, const LandmarkFrame&) = default;
};

inline constexpr double kDefaultFps = 30.0;

struct Trace {
  std::vector<LandmarkFrame> frames;
  double nominal_fps = kDefaultFps;

  friend bool operator==(const Trace&, const Trace&) = default;
};

inline bool valid_keypoint(const Keypoint& k) noexcept {
  return std::isfinite(k.x) && std::isfinite(k.y) && std::isfinite(k.z) &&
         k.x >= 0.0 && k.x <= 1.0 && k.y >= 0.0 && k.y <= 1.0;
}

/// Throws MalformedRecord when a frame breaks the per-frame invariants.
inline void validate_frame(const LandmarkFrame& frame) {
  if (frame.timestamp_ms < 0) {
    throw Error(ErrorCode::MalformedRecord, "negative timestamp");
  }
  if (frame.hands.size() > 2) {
    throw Error(ErrorCode::MalformedRecord, "more than two hands");
  }
  if (frame.hands.size() == 2 &&
      frame.hands[0].handedness == frame.hands[1].handedness) {
    throw Error(ErrorCode::MalformedRecord, "duplicate handedness");
  }
  for (const auto& hand : frame.hands) {
    for (const auto& k : hand.keypoints) {
      if (!valid_keypoint(k)) {
        throw Error(ErrorCode::MalformedRecord, "keypoint out of range");
      }
    }
  }
}

/// Checks every frame plus timestamp ordering and frame-rate consistency.
inline void validate_trace(const Trace& trace) {
  if (!(trace.nominal_fps > 0.0) || !std::isfinite(trace.nominal_fps)) {
    throw Error(ErrorCode::MalformedRecord, "fps must be positive");
  }
  for (std::size_t i = 0; i < trace.frames.size(); ++i) {
    validate_frame(trace.frames[i]);
    if (i > 0 && trace.frames[i].timestamp_ms <= trace.frames[i - 1].timestamp_ms) {
      throw Error(ErrorCode::NonMonotonicTimestamp,
                  "frame " + std::to_string(i) + " at " +
                      std::to_string(trace.frames[i].timestamp_ms) + " ms");
    }
  }
  if (trace.frames.size() >= 2) {
    const double span = static_cast<double>(trace.frames.back().timestamp_ms -
                                            trace.frames.front().timestamp_ms);
    const double mean_interval = span / static_cast<double>(trace.frames.size() - 1);
    const double nominal = 1000.0 / trace.nominal_fps;
    if (mean_interval < 0.5 * nominal || mean_interval > 1.5 * nominal) {
      throw Error(ErrorCode::MalformedRecord,
                  "mean frame interval inconsistent with nominal fps");
    }
  }
}

namespace detail {

inline void append_number(std::string& out, double value) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  out.append(buf.data(), end);
}

inline double parse_double(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw Error(ErrorCode::MalformedRecord, "bad number '" + std::string(text) + "'");
  }
  return value;
}

inline std::int64_t parse_int(std::string_view text) {
  std::int64_t value = 0;
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), last, value);
  if (ec != std::errc{} || ptr != last) {
    throw Error(ErrorCode::MalformedRecord, "bad integer '" + std::string(text) + "'");
  }
  return value;
}

inline std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.push_back(text.substr(start));
      return parts;
    }
    parts.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

inline Hand parse_hand(std::string_view text) {
  if (text.size() < 2 || text[1] != ':' || (text[0] != 'L' && text[0] != 'R')) {
    throw Error(ErrorCode::MalformedRecord, "hand must start with L: or R:");
  }
  Hand hand;
  hand.handedness = text[0] == 'L' ? Handedness::Left : Handedness::Right;
  auto points = split(text.substr(2), '|');
  if (points.size() != kp::kCount) {
    throw Error(ErrorCode::MalformedRecord,
                "expected 21 keypoints, got " + std::to_string(points.size()));
  }
  for (std::size_t i = 0; i < kp::kCount; ++i) {
    auto coords = split(points[i], ',');
    if (coords.size() != 3) {
      throw Error(ErrorCode::MalformedRecord, "keypoint needs x,y,z");
    }
    hand.keypoints[i] = {parse_double(coords[0]), parse_double(coords[1]),
                         parse_double(coords[2])};
  }
  return hand;
}

}  // namespace detail

/// One trace record without the trailing newline: `ts;count;L:x,y,z|...;R:...`.
inline std::string format_frame_line(const LandmarkFrame& frame) {
  std::string out = std::to_string(frame.timestamp_ms);
  out += ';';
  out += std::to_string(frame.hands.size());
  out += ';';
  for (std::size_t h = 0; h < frame.hands.size(); ++h) {
    if (h > 0) out += ';';
    const auto& hand = frame.hands[h];
    out += hand.handedness == Handedness::Left ? "L:" : "R:";
    for (std::size_t i = 0; i < kp::kCount; ++i) {
      if (i > 0) out += '|';
      const auto& k = hand.keypoints[i];
      detail::append_number(out, k.x);
      out += ',';
      detail::append_number(out, k.y);
      out += ',';
      detail::append_number(out, k.z);
    }
  }
  return out;
}

/// Parses and validates a single record. Throws MalformedRecord.
inline LandmarkFrame parse_frame_line(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  auto fields = detail::split(line, ';');
  if (fields.size() < 3) {
    throw Error(ErrorCode::MalformedRecord, "record needs timestamp;count;hands");
  }
  LandmarkFrame frame;
  frame.timestamp_ms = detail::parse_int(fields[0]);
  const auto count = detail::parse_int(fields[1]);
  if (count < 0 || count > 2) {
    throw Error(ErrorCode::MalformedRecord, "hand count must be 0..2");
  }
  if (count == 0) {
    if (fields.size() != 3 || !fields[2].empty()) {
      throw Error(ErrorCode::MalformedRecord, "hand data present with count 0");
    }
  } else {
    if (fields.size() != static_cast<std::size_t>(2 + count)) {
      throw Error(ErrorCode::MalformedRecord, "hand count does not match hand data");
    }
    for (std::size_t h = 0; h < static_cast<std::size_t>(count); ++h) {
      frame.hands.push_back(detail::parse_hand(fields[2 + h]));
    }
  }
  validate_frame(frame);
  return frame;
}

inline constexpr std::string_view kTraceMagic = "HOTRACE v1 fps=";

/// Parses a whole trace file. Empty input yields an empty trace at the default fps.
inline Trace parse_trace(std::string_view bytes) {
  Trace trace;
  if (bytes.empty()) return trace;

  auto lines = detail::split(bytes, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();

  std::string_view header = lines.front();
  if (!header.empty() && header.back() == '\r') header.remove_suffix(1);
  if (header.substr(0, kTraceMagic.size()) != kTraceMagic) {
    throw Error(ErrorCode::MalformedRecord, "missing HOTRACE v1 header");
  }
  trace.nominal_fps = detail::parse_double(header.substr(kTraceMagic.size()));

  for (std::size_t i = 1; i < lines.size(); ++i) {
    try {
      trace.frames.push_back(parse_frame_line(lines[i]));
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(i + 1) + ": " + e.detail());
    }
  }
  validate_trace(trace);
  return trace;
}

inline std::string write_trace(const Trace& trace) {
  validate_trace(trace);
  std::string out(kTraceMagic);
  detail::append_number(out, trace.nominal_fps);
  out += '\n';
  for (const auto& frame : trace.frames) {
    out += format_frame_line(frame);
    out += '\n';
  }
  return out;
}

}  // namespace handsoff
