#pragma once

// Transport-free replay state machine. The server owns one controller per
// connection and feeds it client messages and timer ticks; everything the
// controller returns is sent to that client in order.

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "guidecue/config.hpp"
#include "guidecue/cue_engine.hpp"
#include "guidecue/pipeline.hpp"
#include "guidecue/practice.hpp"
#include "guidecue/replay/protocol.hpp"
#include "guidecue/session.hpp"

namespace guidecue::replay {

/// A loaded session with its analysis and cue engine. Immutable once built.
struct SessionEntry {
  SessionEntry(Session s, const PipelineConfig& cfg)
      : session(std::move(s)), analysis(analyze(session, cfg.analysis)), cues(session, analysis, cfg.cues) {}
  SessionEntry(const SessionEntry&) = delete;
  SessionEntry& operator=(const SessionEntry&) = delete;

  const Session session;
  const SessionAnalysis analysis;
  const CueEngine cues;
};

/// Read-only after loading; shared by every connection.
class SessionStore {
 public:
  explicit SessionStore(PipelineConfig cfg = {}) : cfg_(std::move(cfg)) {}

  const PipelineConfig& config() const { return cfg_; }

  void add(Session s) {
    auto entry = std::make_shared<const SessionEntry>(std::move(s), cfg_);
    entries_[entry->session.manifest.session_id] = std::move(entry);
  }

  /// Loads `path` as a session directory, or every session directory
  /// directly inside it.
  void load(const std::filesystem::path& path) {
    if (std::filesystem::exists(path / "manifest.json")) {
      add(load_session(path, cfg_.session));
      return;
    }
    if (!std::filesystem::is_directory(path)) throw Error(ErrorCode::IoFailure, "not a directory: " + path.string());
    std::vector<std::filesystem::path> dirs;
    for (const auto& d : std::filesystem::directory_iterator(path)) {
      if (d.is_directory() && std::filesystem::exists(d.path() / "manifest.json")) dirs.push_back(d.path());
    }
    if (dirs.empty()) throw Error(ErrorCode::MissingManifest, "no session directories under " + path.string());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) add(load_session(d, cfg_.session));
  }

  std::shared_ptr<const SessionEntry> find(const std::string& id) const {
    const auto it = entries_.find(id);
    return it == entries_.end() ? nullptr : it->second;
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& [id, _] : entries_) out.push_back(id);
    return out;
  }

  bool empty() const { return entries_.empty(); }

 private:
  PipelineConfig cfg_;
  std::map<std::string, std::shared_ptr<const SessionEntry>> entries_;
};

struct ControllerConfig {
  /// A practice pose stays on screen for this many frames around its own frame.
  FrameIndex practice_display_frames{30};
};

class ReplayController {
 public:
  explicit ReplayController(std::shared_ptr<const SessionStore> store, ControllerConfig cfg = {})
      : store_(std::move(store)), cfg_(cfg) {}

  bool subscribed() const { return entry_ != nullptr; }
  FrameIndex cursor() const { return cursor_; }
  Mode mode() const { return mode_; }
  double rate() const { return rate_; }
  std::size_t dropped_poses() const { return annotator_ ? annotator_->dropped_count() : 0; }

  /// Wall-clock seconds between ticks; 0 while paused or unsubscribed.
  double tick_interval_s() const {
    if (!entry_ || rate_ == 0.0) return 0.0;
    return 1.0 / (entry_->session.manifest.fps * rate_);
  }

  std::vector<std::string> handle_text(std::string_view text) {
    try {
      return handle(parse_client_message(text));
    } catch (const Error& e) {
      return {encode_error(e.code(), e.detail())};
    }
  }

  std::vector<std::string> handle(const ClientMessage& msg) {
    std::vector<std::string> out;
    std::visit([&](const auto& m) { on(m, out); }, msg);
    return out;
  }

  /// Advances one frame. Reaching the last frame pauses playback and
  /// settles the practice stream.
  std::vector<std::string> tick() {
    std::vector<std::string> out;
    if (!entry_ || rate_ == 0.0) return out;
    const FrameIndex last = entry_->session.manifest.frame_count - 1;
    if (cursor_ < last) {
      ++cursor_;
      out.push_back(frame_message(cursor_));
    }
    if (cursor_ >= last) {
      rate_ = 0.0;
      if (annotator_) emit_scores(annotator_->finish(), out);
    }
    return out;
  }

  /// Frame payload for `frame` under the current mode.
  std::string frame_message(FrameIndex frame) const {
    const Session& s = entry_->session;
    nlohmann::json keypoints = nlohmann::json::object();
    if (const FrameRecord* r = s.find(frame)) keypoints = keypoint_groups_to_json(*r, mode_ != Mode::D_Evaluation);
    const PracticePose* practice = nullptr;
    if (practice_ && std::abs(practice_->frame_index - frame) <= cfg_.practice_display_frames) practice = &*practice_;
    std::vector<HapticEvent> haptics;
    for (const HapticEvent& h : entry_->analysis.haptic_track) {
      if (h.start_frame > frame) break;
      if (h.end_frame() >= frame) haptics.push_back(h);
    }
    return encode_frame(frame, keypoints, entry_->cues.build(frame, mode_, practice), haptics);
  }

 private:
  void on(const Subscribe& m, std::vector<std::string>& out) {
    auto entry = store_->find(m.session_id);
    if (!entry) {
      out.push_back(encode_error(ErrorCode::UnknownSession, "no session '" + m.session_id + "'"));
      return;
    }
    annotator_.reset();
    entry_ = std::move(entry);
    mode_ = m.mode;
    cursor_ = 0;
    rate_ = 1.0;
    practice_.reset();
    annotator_.emplace(entry_->analysis, store_->config().scoring);
    out.push_back(encode_hello(entry_->session.manifest));
    out.push_back(frame_message(cursor_));
  }

  void on(const SetMode& m, std::vector<std::string>& out) {
    if (!require_subscribed(out)) return;
    mode_ = m.mode;
  }

  void on(const Seek& m, std::vector<std::string>& out) {
    if (!require_subscribed(out)) return;
    if (m.frame < 0 || m.frame >= entry_->session.manifest.frame_count) {
      out.push_back(encode_error(ErrorCode::SeekOutOfRange,
                                 "frame " + std::to_string(m.frame) + " outside [0, " +
                                     std::to_string(entry_->session.manifest.frame_count) + ")"));
      return;
    }
    cursor_ = m.frame;
    out.push_back(encode_seek_ack(cursor_));
    out.push_back(frame_message(cursor_));
  }

  void on(const SetRate& m, std::vector<std::string>& out) {
    if (!require_subscribed(out)) return;
    if (!rate_allowed(m.rate)) {
      out.push_back(encode_error(ErrorCode::InvalidRate, "rate must be one of 0, 0.25, 0.5, 1, 2"));
      return;
    }
    rate_ = m.rate;
  }

  void on(const PracticePoseMsg& m, std::vector<std::string>& out) {
    if (!require_subscribed(out)) return;
    PracticePose pose = m.pose;
    if (rate_ == 0.0) pose.frame_index = cursor_;
    const auto u = annotator_->push(pose);
    if (u.dropped) {
      out.push_back(encode_error(ErrorCode::OutOfOrderPose,
                                 "pose seq " + std::to_string(pose.received_seq) + " for frame " +
                                     std::to_string(pose.frame_index) + " dropped"));
      return;
    }
    practice_ = pose;
    emit_scores(u, out);
  }

  bool require_subscribed(std::vector<std::string>& out) const {
    if (entry_) return true;
    out.push_back(encode_error(ErrorCode::NotSubscribed, "subscribe first"));
    return false;
  }

  static void emit_scores(const LiveAnnotator::Update& u, std::vector<std::string>& out) {
    for (const PracticeScore& s : u.scores) out.push_back(encode_score(s));
  }

  std::shared_ptr<const SessionStore> store_;
  ControllerConfig cfg_;
  std::shared_ptr<const SessionEntry> entry_;
  std::optional<LiveAnnotator> annotator_;
  std::optional<PracticePose> practice_;
  Mode mode_{Mode::A_Both};
  FrameIndex cursor_{0};
  double rate_{1.0};
};

}  // namespace guidecue::replay
