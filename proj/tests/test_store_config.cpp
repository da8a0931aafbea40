#include <fstream>
#include <thread>

#include <gtest/gtest.h>

#include "handsoff/config.hpp"
#include "handsoff/store.hpp"
#include "support.hpp"

using namespace handsoff;
namespace ht = handsoff::testing;
namespace fs = std::filesystem;

TEST(Store, BlobsAreContentAddressed) {
  ht::TempDir dir;
  MediaStore store(dir.path());
  const auto ref = store.put_blob("payload");
  EXPECT_EQ(ref, sha256_hex("payload"));
  EXPECT_EQ(store.put_blob("payload"), ref);
  EXPECT_EQ(store.get_blob(ref), "payload");
  EXPECT_EQ(store.get_blob(std::string(64, '0')), std::nullopt);
  EXPECT_EQ(store.get_blob("../etc/passwd"), std::nullopt);
}

TEST(Store, MetadataSurvivesReopen) {
  ht::TempDir dir;
  {
    MediaStore store(dir.path());
    store.put_metadata("m1", {{"a", 1}});
    store.put_metadata("m1", {{"a", 2}});
    store.put_metadata("m2", {{"b", true}});
  }
  // A torn trailing record is ignored.
  std::ofstream(dir.path() / "metadata.log", std::ios::app) << "{\"key\":\"m3\",\"val";
  MediaStore reopened(dir.path());
  EXPECT_EQ(reopened.get_metadata("m1"), (nlohmann::json{{"a", 2}}));
  EXPECT_EQ(reopened.get_metadata("m2"), (nlohmann::json{{"b", true}}));
  EXPECT_EQ(reopened.get_metadata("m3"), std::nullopt);
}

TEST(Store, MissingDirectory) {
  ht::TempDir dir;
  const auto root = dir.path() / "nested" / "data";
  EXPECT_THROW(MediaStore(root, false), Error);
  EXPECT_FALSE(fs::exists(root));
  MediaStore store(root, true);
  EXPECT_TRUE(fs::is_directory(root / "blobs"));
  EXPECT_TRUE(fs::is_directory(store.sessions_dir()));
}

TEST(Store, SessionLogsLoadSorted) {
  ht::TempDir dir;
  MediaStore store(dir.path());
  for (const char* id : {"b", "a", "c"}) {
    SessionLog log;
    log.trial = ht::make_trial(id, GestureClass::Frame, TrialOutcome::AttemptedFailed);
    store.write_session_log(log);
  }
  std::ofstream(store.sessions_dir() / "notes.txt") << "ignored";
  const auto logs = load_session_logs(store.sessions_dir());
  ASSERT_EQ(logs.size(), 3u);
  EXPECT_EQ(logs[0].trial.session_id, "a");
  EXPECT_EQ(logs[2].trial.session_id, "c");
  EXPECT_EQ(classify_trial(logs[1].trial), TrialOutcome::AttemptedFailed);
  EXPECT_THROW(load_session_logs(dir.path() / "nope"), Error);
}

TEST(Store, UnsafeSessionIdRejected) {
  ht::TempDir dir;
  MediaStore store(dir.path());
  SessionLog log;
  log.trial.session_id = "../escape";
  EXPECT_THROW(store.write_session_log(log), Error);
}

TEST(Store, ConcurrentWriters) {
  ht::TempDir dir;
  MediaStore store(dir.path());
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&store, t] {
      for (int i = 0; i < 100; ++i) {
        const auto key = std::to_string(t) + "-" + std::to_string(i);
        store.put_metadata(key, {{"i", i}});
        store.put_blob("blob " + std::to_string(i % 10));
      }
    });
  }
  for (auto& th : threads) th.join();
  MediaStore reopened(dir.path());
  for (int t = 0; t < 4; ++t) {
    for (int i = 0; i < 100; ++i) {
      ASSERT_EQ(reopened.get_metadata(std::to_string(t) + "-" + std::to_string(i)),
                (nlohmann::json{{"i", i}}));
    }
  }
}

TEST(Config, ParseSettings) {
  const auto s = parse_settings("# comment\n port = 9000 \n\ngate.dwell_frames=4\n");
  EXPECT_EQ(s.at("port"), "9000");
  EXPECT_EQ(s.at("gate.dwell_frames"), "4");
  EXPECT_THROW(parse_settings("no equals sign"), Error);
}

TEST(Config, PrecedenceCliOverEnvOverFile) {
  const Settings file = {{"port", "1000"}, {"threads", "3"}, {"bind", "0.0.0.0"}};
  const Settings cli = {{"port", "3000"}};
  const auto env = [](const char* name) -> const char* {
    const std::string n = name;
    if (n == "HANDSOFF_PORT") return "2000";
    if (n == "HANDSOFF_THREADS") return "5";
    if (n == "HANDSOFF_GATE_DWELL_FRAMES") return "6";
    return nullptr;
  };
  const auto merged = merge_settings(file, cli, env);
  EXPECT_EQ(merged.at("port"), "3000");
  EXPECT_EQ(merged.at("threads"), "5");
  EXPECT_EQ(merged.at("bind"), "0.0.0.0");
  const auto c = app_config_from_settings(merged);
  EXPECT_EQ(c.port, 3000);
  EXPECT_EQ(c.threads, 5);
  EXPECT_EQ(c.relay.default_gate.dwell_frames, 6);
}

TEST(Config, EnvNames) {
  EXPECT_EQ(env_name("gate.dwell_frames"), "HANDSOFF_GATE_DWELL_FRAMES");
  EXPECT_EQ(env_name("classifier.threshold.wave"), "HANDSOFF_CLASSIFIER_THRESHOLD_WAVE");
}

TEST(Config, Defaults) {
  const auto c = app_config_from_settings({});
  EXPECT_EQ(c.port, 8765);
  EXPECT_DOUBLE_EQ(c.relay.default_gate.confidence_threshold, 0.90);
  EXPECT_TRUE(c.relay.sender_notifications);
  EXPECT_FALSE(c.relay.auth_token);
}

TEST(Config, AllKeys) {
  const auto c = app_config_from_settings({{"auth_token", "t"},
                                           {"chunk_size", "128"},
                                           {"max_payload_bytes", "4096"},
                                           {"sender_notifications", "off"},
                                           {"voice_event_logging", "false"},
                                           {"gate.confidence_threshold", "0.8"},
                                           {"gate.grace_frames", "0"},
                                           {"classifier.threshold.frame", "0.6"},
                                           {"classifier.two_hands.interlace", "true"},
                                           {"create_storage", "no"},
                                           {"storage_dir", "/tmp/x"}});
  EXPECT_EQ(c.relay.auth_token, "t");
  EXPECT_EQ(c.relay.chunk_size, 128u);
  EXPECT_EQ(c.relay.max_payload_bytes, 4096u);
  EXPECT_FALSE(c.relay.sender_notifications);
  EXPECT_FALSE(c.relay.voice_event_logging);
  EXPECT_DOUBLE_EQ(c.relay.default_gate.confidence_threshold, 0.8);
  EXPECT_EQ(c.relay.default_gate.grace_frames, 0);
  EXPECT_DOUBLE_EQ(c.relay.classifier.threshold(GestureClass::Frame), 0.6);
  EXPECT_TRUE(c.relay.classifier.two_hands(GestureClass::Interlace));
  EXPECT_FALSE(c.create_storage);
  EXPECT_EQ(c.storage_dir, "/tmp/x");
}

TEST(Config, BadValues) {
  for (const Settings& bad : std::vector<Settings>{{{"port", "70000"}},
                                                   {{"port", "-1"}},
                                                   {{"port", "80x"}},
                                                   {{"threads", "0"}},
                                                   {{"gate.confidence_threshold", "1.5"}},
                                                   {{"gate.dwell_frames", "0"}},
                                                   {{"sender_notifications", "maybe"}},
                                                   {{"classifier.threshold.background", "0.5"}},
                                                   {{"colour", "blue"}}}) {
    try {
      app_config_from_settings(bad);
      ADD_FAILURE() << bad.begin()->first;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::BadConfig);
    }
  }
}
