#include <algorithm>
#include <set>

#include <gtest/gtest.h>

#include "handsoff/envelope.hpp"
#include "support.hpp"

using namespace handsoff;
using handsoff::testing::TempDir;

namespace {

std::vector<ContextAxes> all_axes() {
  std::vector<ContextAxes> out;
  for (auto c : {Content::Serious, Content::Silly}) {
    for (auto r : {Relationship::Close, Relationship::NotClose}) {
      for (auto l : {Location::Public, Location::Private}) out.push_back({c, r, l});
    }
  }
  return out;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::BadMessage;
}

}  // namespace

TEST(Recommend, SeriousStrangerPublicPrefersInterlace) {
  const auto r = recommend_gesture({Content::Serious, Relationship::NotClose, Location::Public},
                                   default_profiles());
  EXPECT_EQ(r.front(), GestureClass::Interlace);
}

TEST(Recommend, SillyClosePrivatePrefersBinoculars) {
  const auto r = recommend_gesture({Content::Silly, Relationship::Close, Location::Private},
                                   default_profiles());
  EXPECT_EQ(r.front(), GestureClass::Binoculars);
}

TEST(Recommend, SeriousContentAlwaysInterlace) {
  for (const auto& axes : all_axes()) {
    if (axes.content != Content::Serious) continue;
    EXPECT_EQ(recommend_gesture(axes, default_profiles()).front(), GestureClass::Interlace);
  }
}

TEST(Recommend, SillyClosePublicPrefersAcceptable) {
  const auto r = recommend_gesture({Content::Silly, Relationship::Close, Location::Public},
                                   default_profiles());
  EXPECT_EQ(r.front(), GestureClass::Wave);
}

TEST(Recommend, AlwaysAPermutation) {
  for (const auto& axes : all_axes()) {
    auto r = recommend_gesture(axes, default_profiles());
    ASSERT_EQ(r.size(), 4u);
    std::sort(r.begin(), r.end());
    EXPECT_EQ(r, std::vector<GestureClass>(kActiveGestures.begin(), kActiveGestures.end()));
  }
}

TEST(Recommend, EqualProfilesUseFixedTieOrder) {
  std::vector<GestureProfile> equal;
  for (auto g : kActiveGestures) equal.push_back({g, 0.5, 0.5});
  const std::vector<GestureClass> expected = {GestureClass::Interlace, GestureClass::Wave,
                                              GestureClass::Frame, GestureClass::Binoculars};
  for (const auto& axes : all_axes()) EXPECT_EQ(recommend_gesture(axes, equal), expected);
}

TEST(Recommend, ProfileOrderDoesNotMatter) {
  auto profiles = default_profiles();
  std::reverse(profiles.begin(), profiles.end());
  for (const auto& axes : all_axes()) {
    EXPECT_EQ(recommend_gesture(axes, profiles), recommend_gesture(axes, default_profiles()));
  }
}

TEST(Recommend, RaisingDeterrenceNeverDemotesInProtectiveContext) {
  const ContextAxes axes{Content::Serious, Relationship::NotClose, Location::Public};
  for (auto g : kActiveGestures) {
    auto profiles = default_profiles();
    const auto before = recommend_gesture(axes, profiles);
    for (auto& p : profiles) {
      if (p.gesture == g) p.deterrence = std::min(1.0, p.deterrence + 0.2);
    }
    const auto after = recommend_gesture(axes, profiles);
    const auto pos = [&](const std::vector<GestureClass>& v) {
      return std::find(v.begin(), v.end(), g) - v.begin();
    };
    EXPECT_LE(pos(after), pos(before)) << to_string(g);
  }
}

TEST(Recommend, MissingProfile) {
  auto profiles = default_profiles();
  profiles.pop_back();
  EXPECT_EQ(code_of([&] { recommend_gesture({}, profiles); }), ErrorCode::MissingProfile);
}

TEST(Envelope, ValidInputs) {
  TempDir dir;
  MediaStore store(dir.path());
  const std::string media = "\x89PNG fake bytes";
  GateConfig gate;
  const ContextAxes ctx{Content::Silly, Relationship::Close, Location::Private};
  const auto e = make_envelope(store, "alice", "bob", media, "image/png", GestureClass::Frame, gate, ctx);
  EXPECT_EQ(e.sender_id, "alice");
  EXPECT_EQ(e.recipient_id, "bob");
  EXPECT_EQ(e.mime_type, "image/png");
  EXPECT_EQ(e.required_gesture, GestureClass::Frame);
  EXPECT_EQ(e.gate_config.required_gesture, GestureClass::Frame);
  EXPECT_EQ(e.context, ctx);
  EXPECT_EQ(store.get_blob(e.payload_ref), media);
  EXPECT_GT(e.created_at, 0);
}

TEST(Envelope, BackgroundGestureRejected) {
  TempDir dir;
  MediaStore store(dir.path());
  EXPECT_EQ(code_of([&] {
              make_envelope(store, "a", "b", "x", "image/png", GestureClass::Background, {});
            }),
            ErrorCode::InvalidGesture);
}

TEST(Envelope, EmptyPayloadRejected) {
  TempDir dir;
  MediaStore store(dir.path());
  EXPECT_EQ(code_of([&] { make_envelope(store, "a", "b", "", "image/png", GestureClass::Wave, {}); }),
            ErrorCode::EmptyPayload);
}

TEST(Envelope, BadGateConfigRejected) {
  TempDir dir;
  MediaStore store(dir.path());
  GateConfig gate;
  gate.dwell_frames = 0;
  EXPECT_EQ(code_of([&] { make_envelope(store, "a", "b", "x", "image/png", GestureClass::Wave, gate); }),
            ErrorCode::BadConfig);
}

TEST(Envelope, MediaIdsAreUnique) {
  TempDir dir;
  MediaStore store(dir.path());
  std::set<std::string> ids;
  for (int i = 0; i < 10000; ++i) {
    ids.insert(make_envelope(store, "a", "b", "same", "image/png", GestureClass::Wave, {}).media_id);
  }
  EXPECT_EQ(ids.size(), 10000u);
}

TEST(Envelope, JsonRoundTrip) {
  TempDir dir;
  MediaStore store(dir.path());
  GateConfig gate;
  gate.confidence_threshold = 0.8;
  gate.dwell_frames = 4;
  gate.grace_frames = 2;
  auto e = make_envelope(store, "a", "b", "bytes", "video/mp4", GestureClass::Binoculars, gate,
                         ContextAxes{Content::Serious, Relationship::NotClose, Location::Public});
  EXPECT_EQ(envelope_from_json(to_json(e)), e);
  e.context.reset();
  EXPECT_EQ(envelope_from_json(to_json(e)), e);
}

TEST(Envelope, GateConfigJsonFillsFromFallback) {
  GateConfig fallback;
  fallback.dwell_frames = 7;
  const auto g = gate_config_from_json(nlohmann::json{{"confidence_threshold", 0.75}}, fallback);
  EXPECT_DOUBLE_EQ(g.confidence_threshold, 0.75);
  EXPECT_EQ(g.dwell_frames, 7);
  EXPECT_EQ(g.grace_frames, fallback.grace_frames);
}
