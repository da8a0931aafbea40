#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>

#include "handsoff/gesture.hpp"
#include "handsoff/landmark.hpp"

namespace handsoff {

/// Kinematic description of one synthetic hand.
///
/// The palm lies in the image plane. `axis` is the wrist-to-knuckles direction
/// in radians (image y grows downward, so -pi/2 points up). Each finger has a
/// splay angle in the palm plane (positive toward the thumb) and three flexion
/// angles that fold the chain out of the image plane, toward the camera.
struct HandPose {
  Handedness handedness = Handedness::Right;
  double wrist_x = 0.5;
  double wrist_y = 0.7;
  double axis = -std::numbers::pi / 2;
  double scale = 0.18;  // palm length in normalized image units
  int thumb_side = -1;  // +1 or -1 along the palm's lateral direction
  std::array<double, 5> splay{0.9, 0.15, 0.0, -0.15, -0.3};
  std::array<std::array<double, 3>, 5> flex{};
  // Forces the thumb tip onto the index tip (ring shape).
  bool thumb_meets_index = false;
};

namespace synth_detail {

struct Vec3 {
  double x, y, z;
};

// Palm-frame anchors (along-axis, lateral) in palm lengths.
inline constexpr std::array<std::array<double, 2>, 5> kBase = {{
    {0.20, 0.28}, {0.95, 0.30}, {1.00, 0.08}, {0.95, -0.13}, {0.85, -0.32}}};

inline constexpr std::array<std::array<double, 3>, 5> kSegments = {{
    {0.35, 0.30, 0.25}, {0.45, 0.27, 0.22}, {0.50, 0.30, 0.23},
    {0.46, 0.28, 0.22}, {0.36, 0.22, 0.20}}};

inline constexpr std::array<double, 3> kCurled = {1.45, 1.55, 1.25};
inline constexpr std::array<double, 3> kHalfCurled = {0.8, 0.9, 0.8};

inline std::array<Vec3, kp::kCount> build(const HandPose& pose) {
  const double ax = std::cos(pose.axis), ay = std::sin(pose.axis);
  const double side = pose.thumb_side >= 0 ? 1.0 : -1.0;
  const double bx = -ay * side, by = ax * side;
  const double s = pose.scale;

  auto in_palm = [&](double u, double v) {
    return Vec3{pose.wrist_x + s * (u * ax + v * bx), pose.wrist_y + s * (u * ay + v * by), 0.0};
  };

  std::array<Vec3, kp::kCount> pts{};
  pts[kp::kWrist] = in_palm(0.0, 0.0);
  for (std::size_t f = 0; f < 5; ++f) {
    const std::size_t base = kp::kFingerBase[f];
    Vec3 p = in_palm(kBase[f][0], kBase[f][1]);
    pts[base] = p;
    const double dx = std::cos(pose.splay[f]) * ax + std::sin(pose.splay[f]) * bx;
    const double dy = std::cos(pose.splay[f]) * ay + std::sin(pose.splay[f]) * by;
    double phi = 0.0;
    for (std::size_t j = 0; j < 3; ++j) {
      phi += pose.flex[f][j];
      const double len = s * kSegments[f][j];
      p = {p.x + len * std::cos(phi) * dx, p.y + len * std::cos(phi) * dy,
           p.z - len * std::sin(phi)};
      pts[base + 1 + j] = p;
    }
  }

  if (pose.thumb_meets_index) {
    const Vec3 cmc = pts[kp::kThumbCmc];
    const Vec3 tip = pts[kp::kIndexTip];
    // Bow the thumb outward, perpendicular to the chord in the image plane.
    const double cx = tip.x - cmc.x, cy = tip.y - cmc.y;
    const double norm = std::max(std::hypot(cx, cy), 1e-9);
    const double px = -cy / norm * side * 0.12 * s, py = cx / norm * side * 0.12 * s;
    auto along = [&](double t, double bow) {
      return Vec3{cmc.x + t * (tip.x - cmc.x) + bow * px, cmc.y + t * (tip.y - cmc.y) + bow * py,
                  cmc.z + t * (tip.z - cmc.z)};
    };
    pts[kp::kThumbMcp] = along(0.40, 1.0);
    pts[kp::kThumbIp] = along(0.72, 0.6);
    pts[kp::kThumbTip] = along(1.0, 0.0);
  }
  return pts;
}

inline double quantize(double v) { return std::round(v * 1e6) / 1e6; }

inline Hand finish(const HandPose& pose, std::mt19937_64* rng, double jitter_sigma) {
  const auto pts = build(pose);
  Hand hand;
  hand.handedness = pose.handedness;
  std::normal_distribution<double> noise(0.0, jitter_sigma > 0.0 ? jitter_sigma : 1.0);
  for (std::size_t i = 0; i < kp::kCount; ++i) {
    double x = pts[i].x, y = pts[i].y, z = pts[i].z;
    if (rng != nullptr && jitter_sigma > 0.0) {
      x += noise(*rng);
      y += noise(*rng);
      z += noise(*rng);
    }
    hand.keypoints[i] = {quantize(std::clamp(x, 0.0, 1.0)), quantize(std::clamp(y, 0.0, 1.0)),
                         quantize(z)};
  }
  return hand;
}

inline HandPose open_palm(Handedness h, double x, double y, int thumb_side) {
  HandPose p;
  p.handedness = h;
  p.wrist_x = x;
  p.wrist_y = y;
  p.thumb_side = thumb_side;
  return p;
}

inline std::vector<HandPose> wave_template() {
  return {open_palm(Handedness::Left, 0.27, 0.72, +1), open_palm(Handedness::Right, 0.73, 0.72, -1)};
}

inline std::vector<HandPose> frame_template() {
  auto l_hand = [](Handedness h, double x, double y, double axis) {
    HandPose p;
    p.handedness = h;
    p.wrist_x = x;
    p.wrist_y = y;
    p.axis = axis;
    p.thumb_side = -1;
    p.splay = {std::numbers::pi / 2, 0.0, -0.05, -0.1, -0.15};
    p.flex = {{{0, 0, 0}, {0, 0, 0}, kCurled, kCurled, kCurled}};
    return p;
  };
  // Index fingers point at each other across the diagonal; thumbs point apart.
  return {l_hand(Handedness::Left, 0.20, 0.70, 0.0),
          l_hand(Handedness::Right, 0.80, 0.30, std::numbers::pi)};
}

inline std::vector<HandPose> binoculars_template() {
  auto ring_hand = [](Handedness h, double x, int thumb_side) {
    HandPose p;
    p.handedness = h;
    p.wrist_x = x;
    p.wrist_y = 0.70;
    p.scale = 0.20;
    p.thumb_side = thumb_side;
    p.flex = {{{0, 0, 0}, {0.7, 0.8, 0.7}, kCurled, kCurled, kCurled}};
    p.thumb_meets_index = true;
    return p;
  };
  return {ring_hand(Handedness::Left, 0.36, -1), ring_hand(Handedness::Right, 0.64, +1)};
}

inline std::vector<HandPose> interlace_template() {
  // Two large hands overlapping so their fingertips alternate along x.
  auto clasp_hand = [](Handedness h, double x, int thumb_side) {
    HandPose p;
    p.handedness = h;
    p.wrist_x = x;
    p.wrist_y = 0.80;
    p.scale = 0.28;
    p.thumb_side = thumb_side;
    p.splay = {0.6, 0.22, 0.07, -0.10, -0.27};
    p.flex = {{{0.2, 0.2, 0.2}, {0.3, 0.4, 0.3}, {0.3, 0.4, 0.3}, {0.3, 0.4, 0.3}, {0.3, 0.4, 0.3}}};
    return p;
  };
  return {clasp_hand(Handedness::Left, 0.485, +1), clasp_hand(Handedness::Right, 0.515, -1)};
}

inline std::vector<HandPose> background_template(std::uint64_t variant) {
  switch (variant % 4) {
    case 0:
      return {};
    case 1:
      return {open_palm(Handedness::Right, 0.5, 0.75, -1)};
    case 2: {
      auto fist = [](Handedness h, double x, int side) {
        HandPose p = open_palm(h, x, 0.7, side);
        p.flex = {{{0.9, 0.9, 0.8}, kCurled, kCurled, kCurled, kCurled}};
        return p;
      };
      return {fist(Handedness::Left, 0.22, +1), fist(Handedness::Right, 0.78, -1)};
    }
    default: {
      auto pointing = [](Handedness h, double x, int side) {
        HandPose p = open_palm(h, x, 0.72, side);
        p.flex = {{{0.9, 0.9, 0.8}, {0, 0, 0}, kCurled, kCurled, kCurled}};
        return p;
      };
      return {pointing(Handedness::Left, 0.28, +1), pointing(Handedness::Right, 0.72, -1)};
    }
  }
}

inline LandmarkFrame render(const std::vector<HandPose>& poses, std::uint64_t seed,
                            std::uint64_t stream, double jitter_sigma) {
  std::optional<std::mt19937_64> rng;
  if (jitter_sigma > 0.0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream)};
    rng.emplace(seq);
  }
  LandmarkFrame frame;
  for (const auto& pose : poses) {
    frame.hands.push_back(finish(pose, rng ? &*rng : nullptr, jitter_sigma));
  }
  return frame;
}

}  // namespace synth_detail

/// Canonical pose templates, one per gesture. Background picks one of four
/// non-gesture arrangements from the seed.
inline std::vector<HandPose> pose_template(GestureClass gesture, std::uint64_t seed = 0) {
  switch (gesture) {
    case GestureClass::Wave: return synth_detail::wave_template();
    case GestureClass::Frame: return synth_detail::frame_template();
    case GestureClass::Interlace: return synth_detail::interlace_template();
    case GestureClass::Binoculars: return synth_detail::binoculars_template();
    case GestureClass::Background: return synth_detail::background_template(seed);
  }
  return {};
}

/// Deterministic synthetic frame (timestamp 0). At zero jitter non-Background
/// gestures return their canonical template regardless of seed.
inline LandmarkFrame synthesize_pose(GestureClass gesture, std::uint64_t seed, double jitter_sigma) {
  return synth_detail::render(pose_template(gesture, seed), seed, index_of(gesture) + 1,
                              jitter_sigma);
}

/// One hand with all four fingers half flexed: what interlaced hands look
/// like when a detector merges them into a single hand.
inline LandmarkFrame synthesize_clasp_confuser(std::uint64_t seed, double jitter_sigma) {
  HandPose p = synth_detail::open_palm(Handedness::Right, 0.5, 0.75, -1);
  p.scale = 0.22;
  p.flex = {{{0.3, 0.3, 0.3}, synth_detail::kHalfCurled, synth_detail::kHalfCurled,
             synth_detail::kHalfCurled, synth_detail::kHalfCurled}};
  return synth_detail::render({p}, seed, 101, jitter_sigma);
}

}  // namespace handsoff
