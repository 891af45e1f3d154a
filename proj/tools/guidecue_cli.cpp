// guidecue: command-line front end for fixture generation, session
// analysis, reports, haptic tracks, practice scoring and the replay server.

#include <csignal>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "guidecue/guidecue.hpp"
#include "guidecue/replay/server.hpp"

namespace gc = guidecue;

namespace {

enum Exit : int { kOk = 0, kValidation = 1, kBadArgs = 2, kIo = 3, kInternal = 4 };

int exit_code_for(gc::ErrorCode code) {
  switch (code) {
    case gc::ErrorCode::InvalidArgument:
    case gc::ErrorCode::InvalidRate:
      return kBadArgs;
    case gc::ErrorCode::IoFailure:
    case gc::ErrorCode::MissingManifest:
      return kIo;
    case gc::ErrorCode::MalformedRecord:
    case gc::ErrorCode::NonMonotonicFrameIndex:
    case gc::ErrorCode::DimensionMismatch:
    case gc::ErrorCode::NoMarkerEver:
    case gc::ErrorCode::OverlappingEpochs:
    case gc::ErrorCode::DegenerateMarker:
      return kValidation;
    default:
      return kInternal;
  }
}

void error_line(const std::string& code, const std::string& detail, std::optional<std::size_t> line, int exit) {
  nlohmann::json j = {{"error", code}, {"detail", detail}, {"exit_code", exit}};
  if (line) j["line"] = *line;
  std::cerr << j.dump() << std::endl;
}

struct ConfigOptions {
  std::string file;
  std::vector<std::string> overrides;

  void attach(CLI::App* app) {
    app->add_option("--config", file, "Pipeline config file (JSON)")->check(CLI::ExistingFile);
    app->add_option("--set", overrides, "Override a config value, e.g. --set segmentation.min_length_frames=8");
  }

  gc::PipelineConfig load() const {
    gc::PipelineConfig cfg;
    if (!file.empty()) cfg = gc::load_config(file);
    for (const auto& o : overrides) cfg = gc::apply_override(cfg, o);
    gc::validate_config(cfg);
    return cfg;
  }
};

gc::SessionAnalysis analyze_dir(const std::string& dir, const gc::PipelineConfig& cfg) {
  return gc::analyze(gc::load_session(dir, cfg.session), cfg.analysis);
}

int cmd_gen(const std::string& spec_path, const std::string& preset, std::uint64_t seed, double noise,
            const std::string& out) {
  gc::FixtureSpec spec;
  if (!spec_path.empty()) {
    spec = gc::load_fixture_spec(spec_path);
  } else if (!preset.empty()) {
    spec = gc::preset_spec(preset, seed, noise);
  } else {
    throw gc::Error(gc::ErrorCode::InvalidArgument, "gen needs --spec or --preset");
  }
  const gc::Session s = gc::generate(spec);
  gc::save_session(s, out);
  std::cout << "session: " << s.manifest.session_id << "\nframes: " << s.manifest.frame_count
            << "\nplanted_epochs: " << s.annotations->size() << "\nplanted_triggers: " << spec.planted_triggers.size()
            << '\n';
  return kOk;
}

int cmd_validate(const std::string& dir) {
  const auto diags = gc::check_session_dir(dir);
  for (const gc::Diagnostic& d : diags) {
    std::cout << (d.line ? "line " + std::to_string(d.line) : std::string("file")) << ": " << gc::to_string(d.code);
    if (!d.field.empty()) std::cout << " [" << d.field << ']';
    std::cout << ' ' << d.message << '\n';
  }
  if (diags.empty()) {
    std::cout << "ok\n";
    return kOk;
  }
  std::cout << diags.size() << " violation(s)\n";
  const auto& first = diags.front();
  const int code = exit_code_for(first.code) == kIo ? kIo : kValidation;
  error_line(std::string(gc::to_string(first.code)), first.message,
             first.line ? std::optional<std::size_t>(first.line) : std::nullopt, code);
  return code;
}

int cmd_analyze(const std::string& dir, const gc::PipelineConfig& cfg) {
  const auto a = analyze_dir(dir, cfg);
  gc::write_analysis(a, dir);
  std::cout << "epochs: " << a.epochs.size() << "\ntriggers: " << a.triggers.size() << "\nrest_level_deg: "
            << a.rest_level_deg << '\n';
  return kOk;
}

int cmd_report(const std::string& dir, const gc::PipelineConfig& cfg) {
  const gc::Session s = gc::load_session(dir, cfg.session);
  const auto a = gc::analyze(s, cfg.analysis);
  const auto r = gc::session_report(a, s.manifest.dataset_name);
  gc::write_report(r, dir);
  std::cout << gc::render_report_text(r);
  return kOk;
}

int cmd_haptics(const std::string& dir, const gc::PipelineConfig& cfg) {
  const auto a = analyze_dir(dir, cfg);
  gc::write_haptics(a, dir);
  std::size_t left = 0;
  for (const auto& h : a.haptic_track) left += h.hand == gc::Hand::Left;
  std::cout << "haptic_events: " << a.haptic_track.size() << "\nright: " << a.haptic_track.size() - left
            << "\nleft: " << left << "\nv_min: " << a.haptic_calibration.v_min
            << "\nv_max: " << a.haptic_calibration.v_max << '\n';
  return kOk;
}

int cmd_score(const std::string& dir, const std::string& practice, const gc::PipelineConfig& cfg) {
  const auto a = analyze_dir(dir, cfg);
  const auto poses = gc::read_practice_poses(practice);
  const auto scores = gc::score_session(a, poses, cfg.scoring);
  gc::write_jsonl(std::filesystem::path(dir) / gc::kScoresFile, scores, gc::score_to_json);
  std::size_t matched = 0;
  double sum = 0.0;
  for (const auto& s : scores) {
    matched += s.timing_offset_ms.has_value();
    sum += s.composite;
  }
  std::cout << "expert_epochs: " << scores.size() << "\nmatched: " << matched
            << "\nmean_composite: " << (scores.empty() ? 0.0 : sum / static_cast<double>(scores.size())) << '\n';
  return kOk;
}

int cmd_serve(const std::vector<std::string>& dirs, const std::string& addr, int threads,
              const gc::PipelineConfig& cfg) {
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw gc::Error(gc::ErrorCode::InvalidArgument, "--addr must be HOST:PORT");
  boost::system::error_code ec;
  const auto host = boost::asio::ip::make_address(addr.substr(0, colon), ec);
  if (ec) throw gc::Error(gc::ErrorCode::InvalidArgument, "bad host in --addr: " + addr);
  unsigned long port = 0;
  try {
    port = std::stoul(addr.substr(colon + 1));
  } catch (const std::exception&) {
    port = 70000;
  }
  if (port > 65535) throw gc::Error(gc::ErrorCode::InvalidArgument, "bad port in --addr: " + addr);

  auto store = std::make_shared<gc::replay::SessionStore>(cfg);
  for (const auto& d : dirs) store->load(d);

  boost::asio::io_context ioc;
  gc::replay::ReplayServer server(ioc, {host, static_cast<unsigned short>(port)}, store);
  server.start();
  std::cout << "listening on " << host.to_string() << ':' << server.port() << " with " << store->ids().size()
            << " session(s):";
  for (const auto& id : store->ids()) std::cout << ' ' << id;
  std::cout << std::endl;

  boost::asio::signal_set signals(ioc, SIGINT, SIGTERM);
  signals.async_wait([&](const boost::system::error_code&, int) {
    server.stop();
    ioc.stop();
  });
  std::vector<std::thread> pool;
  for (int i = 1; i < threads; ++i) pool.emplace_back([&] { ioc.run(); });
  ioc.run();
  for (auto& t : pool) t.join();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Guide-dog command training: fixtures, analysis, haptics, scoring and replay"};
  app.require_subcommand(1);

  std::string dir;
  ConfigOptions config;

  auto* gen = app.add_subcommand("gen", "Generate a synthetic session with planted ground truth");
  std::string spec_path, preset, out;
  std::uint64_t seed = 1;
  double noise = 0.0;
  auto* spec_opt = gen->add_option("--spec", spec_path, "Fixture spec file (JSON)")->check(CLI::ExistingFile);
  gen->add_option("--preset", preset, "Built-in layout: Hybrid1|Hybrid2|Room1|Room2")->excludes(spec_opt);
  gen->add_option("--seed", seed, "Seed for --preset");
  gen->add_option("--noise", noise, "Angular noise sigma in degrees for --preset");
  gen->add_option("--out", out, "Output session directory")->required();

  auto* validate = app.add_subcommand("validate", "Check a session directory");
  validate->add_option("dir", dir, "Session directory")->required();

  auto* analyze = app.add_subcommand("analyze", "Write angles.jsonl, epochs.jsonl and triggers.jsonl");
  analyze->add_option("dir", dir, "Session directory")->required();
  config.attach(analyze);

  auto* report = app.add_subcommand("report", "Write report.json and print the report");
  report->add_option("dir", dir, "Session directory")->required();
  config.attach(report);

  auto* haptics = app.add_subcommand("haptics", "Write haptics.jsonl");
  haptics->add_option("dir", dir, "Session directory")->required();
  config.attach(haptics);

  auto* score = app.add_subcommand("score", "Score a recorded practice stream; writes scores.jsonl");
  std::string practice;
  score->add_option("dir", dir, "Expert session directory")->required();
  score->add_option("--practice", practice, "Practice poses (JSON lines)")->required()->check(CLI::ExistingFile);
  config.attach(score);

  auto* show_config = app.add_subcommand("config", "Print the effective pipeline config");
  config.attach(show_config);

  auto* serve = app.add_subcommand("serve", "Run the WebSocket replay service");
  std::vector<std::string> sessions;
  std::string addr = "127.0.0.1:8765";
  int threads = 2;
  serve->add_option("--sessions", sessions, "Session directories, or directories of sessions")->required();
  serve->add_option("--addr", addr, "HOST:PORT to listen on");
  serve->add_option("--threads", threads, "I/O threads")->check(CLI::Range(1, 64));
  config.attach(serve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    error_line("BadArguments", e.what(), std::nullopt, kBadArgs);
    return kBadArgs;
  }

  try {
    if (*gen) return cmd_gen(spec_path, preset, seed, noise, out);
    if (*validate) return cmd_validate(dir);
    if (*analyze) return cmd_analyze(dir, config.load());
    if (*report) return cmd_report(dir, config.load());
    if (*haptics) return cmd_haptics(dir, config.load());
    if (*score) return cmd_score(dir, practice, config.load());
    if (*show_config) {
      std::cout << gc::config_to_json(config.load()).dump(2) << '\n';
      return kOk;
    }
    if (*serve) return cmd_serve(sessions, addr, threads, config.load());
  } catch (const gc::Error& e) {
    const int code = exit_code_for(e.code());
    error_line(std::string(gc::to_string(e.code())), e.detail(), e.line(), code);
    return code;
  } catch (const std::filesystem::filesystem_error& e) {
    error_line("IoFailure", e.what(), std::nullopt, kIo);
    return kIo;
  } catch (const std::exception& e) {
    error_line("Internal", e.what(), std::nullopt, kInternal);
    return kInternal;
  }
  return kInternal;
}
