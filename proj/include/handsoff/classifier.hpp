#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "handsoff/gesture.hpp"
#include "handsoff/landmark.hpp"

namespace handsoff {

struct HandFeatures {
  // Thumb, index, middle, ring, pinky. 0 = curled, 1 = straight.
  std::array<double, 5> finger_extension{};
  // 1 when thumb tip and index tip touch.
  double aperture = 0.0;
};

struct FeatureVector {
  std::size_t hand_count = 0;
  std::array<HandFeatures, 2> hands{};
  // Wrist-to-wrist distance in mean palm lengths.
  double inter_hand_distance = 0.0;
  double interleave_score = 0.0;
  double frame_corner_score = 0.0;
};

struct ClassifierConfig {
  // Indexed by GestureClass; Background entries are unused.
  std::array<double, 4> thresholds{0.5, 0.5, 0.5, 0.5};
  std::array<bool, 4> require_two_hands{true, true, false, true};

  double threshold(GestureClass g) const { return thresholds.at(index_of(g)); }
  bool two_hands(GestureClass g) const { return require_two_hands.at(index_of(g)); }
};

struct Classification {
  GestureClass gesture = GestureClass::Background;
  double confidence = 1.0;
  int hands_detected = 0;

  friend bool operator==(const Classification&, const Classification&) = default;
};

namespace detail {

inline double clamp01(double v) {
  if (!(v > 0.0)) return 0.0;
  return v > 1.0 ? 1.0 : v;
}

inline double dist2d(const Keypoint& a, const Keypoint& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

inline double dist3d(const Keypoint& a, const Keypoint& b) {
  const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline double palm_length(const Hand& hand) {
  return std::max(dist2d(hand.keypoints[kp::kWrist], hand.keypoints[kp::kMiddleMcp]), 1e-6);
}

// Cosine of the angle between two image-plane vectors; 0 when degenerate.
inline double cosine(const Keypoint& from_a, const Keypoint& to_a,
                     const Keypoint& from_b, const Keypoint& to_b) {
  const double ax = to_a.x - from_a.x, ay = to_a.y - from_a.y;
  const double bx = to_b.x - from_b.x, by = to_b.y - from_b.y;
  const double na = std::hypot(ax, ay), nb = std::hypot(bx, by);
  if (na < 1e-9 || nb < 1e-9) return 0.0;
  return std::clamp((ax * bx + ay * by) / (na * nb), -1.0, 1.0);
}

inline HandFeatures hand_features(const Hand& hand) {
  HandFeatures f;
  const auto& k = hand.keypoints;
  for (std::size_t finger = 0; finger < 5; ++finger) {
    const std::size_t base = kp::kFingerBase[finger];
    const std::size_t tip = kp::kFingerTip[finger];
    double path = 0.0;
    for (std::size_t j = base; j < tip; ++j) path += dist3d(k[j], k[j + 1]);
    const double ratio = path > 1e-9 ? dist3d(k[base], k[tip]) / path : 0.0;
    f.finger_extension[finger] = clamp01((ratio - 0.45) / 0.5);
  }
  const double gap = dist2d(k[kp::kThumbTip], k[kp::kIndexTip]) / palm_length(hand);
  f.aperture = clamp01((0.6 - gap) / 0.45);
  return f;
}

// Fraction of adjacent fingertips (sorted by x) that belong to different hands.
inline double interleave(const Hand& a, const Hand& b) {
  std::array<std::pair<double, int>, 8> tips{};
  for (std::size_t f = 1; f < 5; ++f) {
    tips[f - 1] = {a.keypoints[kp::kFingerTip[f]].x, 0};
    tips[f + 3] = {b.keypoints[kp::kFingerTip[f]].x, 1};
  }
  std::sort(tips.begin(), tips.end());
  int alternations = 0;
  for (std::size_t i = 1; i < tips.size(); ++i) {
    if (tips[i].second != tips[i - 1].second) ++alternations;
  }
  return alternations / 7.0;
}

inline double corner(const Hand& h) {
  const auto& k = h.keypoints;
  const double c = cosine(k[kp::kThumbMcp], k[kp::kThumbTip], k[kp::kIndexMcp], k[kp::kIndexTip]);
  return clamp01((0.85 - std::abs(c)) / 0.7);
}

inline double frame_corners(const Hand& a, const Hand& b) {
  const auto& ka = a.keypoints;
  const auto& kb = b.keypoints;
  const double index_opposition =
      clamp01(-cosine(ka[kp::kIndexMcp], ka[kp::kIndexTip], kb[kp::kIndexMcp], kb[kp::kIndexTip]));
  const double thumb_opposition =
      clamp01(-cosine(ka[kp::kThumbMcp], ka[kp::kThumbTip], kb[kp::kThumbMcp], kb[kp::kThumbTip]));
  return std::min({corner(a), corner(b), index_opposition, thumb_opposition});
}

inline double mean(const double* first, const double* last) {
  double sum = 0.0;
  for (auto* p = first; p != last; ++p) sum += *p;
  return sum / static_cast<double>(last - first);
}

inline double openness(const HandFeatures& h) {
  return mean(h.finger_extension.data(), h.finger_extension.data() + 5);
}

// Middle, ring and pinky folded.
inline double curl3(const HandFeatures& h) {
  return 1.0 - mean(h.finger_extension.data() + 2, h.finger_extension.data() + 5);
}

// Triangular peak at 0.62: the half-flexed look of clasped fingers.
inline double clasp(const HandFeatures& h) {
  double score = 1.0;
  for (std::size_t f = 1; f < 5; ++f) {
    score = std::min(score, clamp01(1.0 - std::abs(h.finger_extension[f] - 0.62) / 0.3));
  }
  return score;
}

}  // namespace detail

inline FeatureVector extract_features(const LandmarkFrame& frame) {
  FeatureVector fv;
  fv.hand_count = std::min<std::size_t>(frame.hands.size(), 2);
  for (std::size_t h = 0; h < fv.hand_count; ++h) {
    fv.hands[h] = detail::hand_features(frame.hands[h]);
  }
  if (fv.hand_count == 2) {
    const auto& a = frame.hands[0];
    const auto& b = frame.hands[1];
    const double palm = 0.5 * (detail::palm_length(a) + detail::palm_length(b));
    fv.inter_hand_distance =
        detail::dist2d(a.keypoints[kp::kWrist], b.keypoints[kp::kWrist]) / palm;
    fv.interleave_score = detail::interleave(a, b);
    fv.frame_corner_score = detail::frame_corners(a, b);
  }
  return fv;
}

/// Piecewise-linear map from a raw rule score to a reported confidence.
inline double calibrate(double raw) {
  raw = detail::clamp01(raw);
  if (raw <= 0.5) return raw;
  if (raw <= 0.8) return 0.5 + (raw - 0.5) * (0.45 / 0.3);
  return 0.95 + (raw - 0.8) * (0.05 / 0.2);
}

/// Raw [0,1] score of each active gesture's geometric rule, indexed by GestureClass.
/// Two-hand requirements from the config are applied here.
inline std::array<double, 4> rule_scores(const FeatureVector& fv, const ClassifierConfig& config) {
  using detail::clamp01;
  // Rules are fuzzy conjunctions: the weakest saturating factor decides.
  const auto ramp = [](double v, double lo, double hi) { return clamp01((v - lo) / (hi - lo)); };
  std::array<double, 4> raw{};
  if (fv.hand_count == 2) {
    const auto& a = fv.hands[0];
    const auto& b = fv.hands[1];
    const double d = fv.inter_hand_distance;

    const double separation = clamp01((d - 1.3) / 0.8);
    raw[index_of(GestureClass::Wave)] =
        std::min({ramp(std::min(detail::openness(a), detail::openness(b)), 0.4, 0.85),
                  separation, 1.0 - std::max(a.aperture, b.aperture)});

    const auto l_shape = [](const HandFeatures& h) {
      return std::min(h.finger_extension[0], h.finger_extension[1]);
    };
    const double curled = std::min(detail::curl3(a), detail::curl3(b));
    raw[index_of(GestureClass::Frame)] =
        std::min({ramp(fv.frame_corner_score, 0.2, 0.7),
                  ramp(std::min(l_shape(a), l_shape(b)), 0.3, 0.75), ramp(curled, 0.3, 0.75)});

    const double closeness = clamp01((2.0 - d) / 0.8);
    raw[index_of(GestureClass::Interlace)] =
        std::min(ramp(fv.interleave_score, 0.3, 0.8), closeness);

    const double adjacency = clamp01((2.2 - d) / 0.8);
    raw[index_of(GestureClass::Binoculars)] = std::min(
        {ramp(std::min(a.aperture, b.aperture), 0.2, 0.6),
         ramp(std::min(a.finger_extension[1], b.finger_extension[1]), 0.05, 0.3),
         ramp(curled, 0.3, 0.75), adjacency});
  } else if (fv.hand_count == 1) {
    // Clasped hands often register as one hand.
    raw[index_of(GestureClass::Interlace)] = detail::clasp(fv.hands[0]);
  }
  for (auto g : kActiveGestures) {
    if (config.two_hands(g) && fv.hand_count < 2) raw[index_of(g)] = 0.0;
  }
  return raw;
}

inline Classification classify(const LandmarkFrame& frame, const ClassifierConfig& config) {
  // Most specific geometry first; breaks exact ties.
  static constexpr std::array<GestureClass, 4> kPriority = {
      GestureClass::Interlace, GestureClass::Binoculars, GestureClass::Frame,
      GestureClass::Wave};

  const auto fv = extract_features(frame);
  const auto raw = rule_scores(fv, config);

  Classification out;
  out.hands_detected = static_cast<int>(fv.hand_count);
  double best = -1.0;
  double max_score = 0.0;
  for (auto g : kPriority) {
    const double confidence = calibrate(raw[index_of(g)]);
    max_score = std::max(max_score, confidence);
    if (confidence > config.threshold(g) && confidence > best) {
      best = confidence;
      out.gesture = g;
      out.confidence = confidence;
    }
  }
  if (best < 0.0) {
    out.gesture = GestureClass::Background;
    out.confidence = 1.0 - max_score;
  }
  return out;
}

inline std::vector<Classification> classify_trace(const Trace& trace,
                                                  const ClassifierConfig& config) {
  std::vector<Classification> out;
  out.reserve(trace.frames.size());
  for (const auto& frame : trace.frames) out.push_back(classify(frame, config));
  return out;
}

}  // namespace handsoff
