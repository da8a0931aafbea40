#pragma once

#include <array>
#include <optional>
#include <string_view>

#include "handsoff/error.hpp"

namespace handsoff {

enum class GestureClass { Wave, Frame, Interlace, Binoculars, Background };

inline constexpr std::array<GestureClass, 5> kAllGestures = {
    GestureClass::Wave, GestureClass::Frame, GestureClass::Interlace,
    GestureClass::Binoculars, GestureClass::Background};

// Every gesture except the rejection class.
inline constexpr std::array<GestureClass, 4> kActiveGestures = {
    GestureClass::Wave, GestureClass::Frame, GestureClass::Interlace,
    GestureClass::Binoculars};

constexpr std::size_t index_of(GestureClass g) noexcept {
  return static_cast<std::size_t>(g);
}

constexpr std::string_view to_string(GestureClass g) noexcept {
  switch (g) {
    case GestureClass::Wave: return "Wave";
    case GestureClass::Frame: return "Frame";
    case GestureClass::Interlace: return "Interlace";
    case GestureClass::Binoculars: return "Binoculars";
    case GestureClass::Background: return "Background";
  }
  return "Background";
}

/// Case-insensitive lookup; accepts "wave", "Wave", "WAVE".
inline std::optional<GestureClass> gesture_from_string(std::string_view name) {
  auto iequals = [](std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      auto lower = [](char c) {
        return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
      };
      if (lower(a[i]) != lower(b[i])) return false;
    }
    return true;
  };
  for (auto g : kAllGestures) {
    if (iequals(name, to_string(g))) return g;
  }
  return std::nullopt;
}

inline GestureClass parse_gesture(std::string_view name) {
  if (auto g = gesture_from_string(name)) return *g;
  throw Error(ErrorCode::BadGestureName, std::string(name));
}

}  // namespace handsoff
