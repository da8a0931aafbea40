#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <boost/asio/signal_set.hpp>

#include "handsoff/cli.hpp"
#include "handsoff/config.hpp"
#include "handsoff/ws_server.hpp"

namespace fs = std::filesystem;
using namespace handsoff;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::StorageFailure, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
  if (!out) throw Error(ErrorCode::StorageFailure, "cannot write " + path.string());
}

int serve(const AppConfig& config) {
  MediaStore store(config.storage_dir, config.create_storage);

  net::io_context ioc(config.threads);
  boost::system::error_code ec;
  auto address = net::ip::make_address(config.bind, ec);
  if (ec) throw Error(ErrorCode::BadConfig, "bad bind address " + config.bind);

  WsServer server(ioc, tcp::endpoint(address, static_cast<unsigned short>(config.port)),
                  config.relay, store);
  server.start();

  net::signal_set signals(ioc, SIGINT, SIGTERM);
  signals.async_wait([&](const boost::system::error_code&, int) {
    server.stop();
    ioc.stop();
  });

  std::cout << "listening on ws://" << config.bind << ":" << server.port() << std::endl;

  std::vector<std::thread> pool;
  for (int i = 1; i < config.threads; ++i) pool.emplace_back([&ioc] { ioc.run(); });
  ioc.run();
  for (auto& t : pool) t.join();
  return cli::kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gesture-gated ephemeral media relay"};
  app.require_subcommand(1);

  // serve
  auto* serve_cmd = app.add_subcommand("serve", "Run the relay server");
  std::string config_path;
  std::string bind;
  int port = -1;
  std::string storage_dir;
  bool create_storage = false;
  int threads = 0;
  std::vector<std::string> overrides;
  serve_cmd->add_option("--config", config_path, "key=value configuration file");
  serve_cmd->add_option("--bind", bind, "Listen address");
  serve_cmd->add_option("--port", port, "Listen port (0 picks a free port)");
  serve_cmd->add_option("--storage-dir", storage_dir, "Storage directory");
  serve_cmd->add_flag("--create-storage", create_storage, "Create the storage directory if missing");
  serve_cmd->add_option("--threads", threads, "I/O threads");
  serve_cmd->add_option("--set", overrides, "Override any setting as key=value")->take_all();

  // gen-fixtures
  auto* gen_cmd = app.add_subcommand("gen-fixtures", "Write a synthetic landmark trace");
  std::string gen_gesture;
  std::size_t gen_count = 0;
  double gen_jitter = 0.0;
  std::uint64_t gen_seed = 0;
  double gen_fps = kDefaultFps;
  std::string gen_out;
  gen_cmd->add_option("--gesture", gen_gesture, "Wave|Frame|Interlace|Binoculars|Background")->required();
  gen_cmd->add_option("--count", gen_count, "Number of frames")->required();
  gen_cmd->add_option("--jitter", gen_jitter, "Keypoint noise sigma")->check(CLI::NonNegativeNumber);
  gen_cmd->add_option("--seed", gen_seed, "Base seed");
  gen_cmd->add_option("--fps", gen_fps, "Nominal frame rate")->check(CLI::PositiveNumber);
  gen_cmd->add_option("--out", gen_out, "Output trace path")->required();

  // replay
  auto* replay_cmd = app.add_subcommand("replay", "Classify a trace and run the unlock gate over it");
  std::string replay_trace;
  std::string replay_gesture;
  GateConfig replay_gate;
  std::string replay_config;
  replay_cmd->add_option("trace", replay_trace, "Trace file")->required();
  replay_cmd->add_option("--gesture", replay_gesture, "Required gesture")->required();
  replay_cmd->add_option("--threshold", replay_gate.confidence_threshold, "Confidence threshold")
      ->check(CLI::Range(0.0, 1.0));
  replay_cmd->add_option("--dwell", replay_gate.dwell_frames, "Dwell frames")->check(CLI::PositiveNumber);
  replay_cmd->add_option("--grace", replay_gate.grace_frames, "Grace frames")
      ->check(CLI::NonNegativeNumber);
  replay_cmd->add_option("--config", replay_config, "Configuration file for classifier settings");

  // report
  auto* report_cmd = app.add_subcommand("report", "Deterrence and metrics tables from session logs");
  std::string report_logs;
  std::vector<std::string> report_exclude;
  std::string report_counts;
  report_cmd->add_option("logs", report_logs, "Directory of session logs")->required();
  report_cmd->add_option("--exclude", report_exclude, "Gestures to leave out");
  report_cmd->add_option("--counts", report_counts, "CSV of gesture,tp,fp,fn");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::kExitOk : cli::kExitUsage;
  }

  try {
    if (*serve_cmd) {
      Settings cli_settings;
      if (!bind.empty()) cli_settings["bind"] = bind;
      if (port != -1) cli_settings["port"] = std::to_string(port);
      if (!storage_dir.empty()) cli_settings["storage_dir"] = storage_dir;
      if (create_storage) cli_settings["create_storage"] = "true";
      if (threads != 0) cli_settings["threads"] = std::to_string(threads);
      for (const auto& kv : overrides) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::BadConfig, "--set expects key=value");
        cli_settings[kv.substr(0, eq)] = kv.substr(eq + 1);
      }
      const Settings file = config_path.empty() ? Settings{} : load_settings_file(config_path);
      return serve(app_config_from_settings(merge_settings(file, cli_settings)));
    }
    if (*gen_cmd) {
      const auto trace =
          cli::gen_fixtures(parse_gesture(gen_gesture), gen_count, gen_jitter, gen_seed, gen_fps);
      write_file(gen_out, write_trace(trace));
      return cli::kExitOk;
    }
    if (*replay_cmd) {
      replay_gate.required_gesture = parse_gesture(replay_gesture);
      validate(replay_gate);
      ClassifierConfig classifier;
      if (!replay_config.empty()) {
        classifier = app_config_from_settings(load_settings_file(replay_config)).relay.classifier;
      }
      const auto trace = parse_trace(read_file(replay_trace));
      std::cout << cli::format_replay(trace, cli::replay(trace, replay_gate, classifier));
      return cli::kExitOk;
    }
    if (*report_cmd) {
      std::set<GestureClass> exclude;
      for (const auto& name : report_exclude) exclude.insert(parse_gesture(name));
      std::optional<ConfusionCounts> counts;
      if (!report_counts.empty()) counts = parse_counts_csv(read_file(report_counts));
      std::cout << cli::report(load_session_logs(report_logs), exclude, counts);
      return cli::kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "handsoff: " << e.what() << "\n";
    return cli::exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "handsoff: " << e.what() << "\n";
    return cli::kExitIo;
  }
  return cli::kExitUsage;
}
