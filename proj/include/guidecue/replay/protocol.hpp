#pragma once

// Replay wire protocol: one JSON object per text message.
//
// client -> server
//   {"type":"subscribe","session_id":S,"mode":"A|B|C|D"}
//   {"type":"set_mode","mode":M}
//   {"type":"seek","frame":N}
//   {"type":"set_rate","rate":R}
//   {"type":"practice_pose","frame":N,"seq":K,"right_arm":[[x,y,c]x3]}
// server -> client
//   {"type":"hello","manifest":{...}}
//   {"type":"frame","frame":N,"keypoints":{...},"overlays":[...],"haptics":[...]}
//   {"type":"score", <PracticeScore fields>}
//   {"type":"error","code":C,"detail":D}
//   {"type":"seek_ack","frame":N}   precedes the first frame after a seek

#include <array>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "guidecue/cue_engine.hpp"
#include "guidecue/derived_io.hpp"
#include "guidecue/error.hpp"
#include "guidecue/haptics.hpp"
#include "guidecue/practice.hpp"
#include "guidecue/session.hpp"

namespace guidecue::replay {

inline constexpr std::array<double, 5> kAllowedRates{0.0, 0.25, 0.5, 1.0, 2.0};

inline bool rate_allowed(double r) {
  for (double a : kAllowedRates)
    if (r == a) return true;
  return false;
}

struct Subscribe {
  std::string session_id;
  Mode mode{Mode::A_Both};
};
struct SetMode {
  Mode mode{Mode::A_Both};
};
struct Seek {
  FrameIndex frame{0};
};
struct SetRate {
  double rate{1.0};
};
struct PracticePoseMsg {
  PracticePose pose;
};

using ClientMessage = std::variant<Subscribe, SetMode, Seek, SetRate, PracticePoseMsg>;

inline nlohmann::json overlay_to_json(const OverlaySpec& o) {
  nlohmann::json coords = nlohmann::json::array();
  for (Vec2 p : o.coords) coords.push_back({p.x, p.y});
  nlohmann::json j = {{"kind", std::string(to_string(o.kind))}, {"coords", coords}, {"style_tag", o.style_tag}};
  if (o.text) j["text"] = *o.text;
  if (o.kind == OverlayKind::AngleArc) {
    j["radius"] = o.radius;
    j["from_deg"] = o.from_deg;
    j["to_deg"] = o.to_deg;
    j["reference_deg"] = o.reference_deg;
  }
  return j;
}

inline OverlaySpec overlay_from_json(const nlohmann::json& j) {
  OverlaySpec o;
  o.kind = overlay_kind_from_string(j.at("kind").get<std::string>());
  for (const auto& p : j.at("coords")) o.coords.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  o.style_tag = j.at("style_tag").get<std::string>();
  if (j.contains("text")) o.text = j.at("text").get<std::string>();
  o.radius = j.value("radius", 0.0);
  o.from_deg = j.value("from_deg", 0.0);
  o.to_deg = j.value("to_deg", 0.0);
  o.reference_deg = j.value("reference_deg", 0.0);
  return o;
}

namespace detail {

inline Mode parse_mode(const nlohmann::json& j) {
  if (!j.is_string()) throw Error(ErrorCode::MalformedMessage, "mode must be a string");
  const auto m = mode_from_letter(j.get<std::string>());
  if (!m) throw Error(ErrorCode::MalformedMessage, "mode must be one of A|B|C|D");
  return *m;
}

inline FrameIndex parse_frame(const nlohmann::json& j) {
  if (!j.is_number_integer()) throw Error(ErrorCode::MalformedMessage, "frame must be an integer");
  return j.get<FrameIndex>();
}

}  // namespace detail

/// Parses a client message; any shape problem raises MalformedMessage.
inline ClientMessage parse_client_message(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedMessage, std::string("not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) {
    throw Error(ErrorCode::MalformedMessage, "message needs a string \"type\"");
  }
  const auto type = j.at("type").get<std::string>();
  try {
    if (type == "subscribe") {
      if (!j.contains("session_id") || !j.at("session_id").is_string()) {
        throw Error(ErrorCode::MalformedMessage, "subscribe needs a string session_id");
      }
      Subscribe s{j.at("session_id").get<std::string>()};
      if (j.contains("mode")) s.mode = detail::parse_mode(j.at("mode"));
      return s;
    }
    if (type == "set_mode") return SetMode{detail::parse_mode(j.at("mode"))};
    if (type == "seek") return Seek{detail::parse_frame(j.at("frame"))};
    if (type == "set_rate") {
      if (!j.at("rate").is_number()) throw Error(ErrorCode::MalformedMessage, "rate must be a number");
      return SetRate{j.at("rate").get<double>()};
    }
    if (type == "practice_pose") {
      PracticePoseMsg m;
      m.pose.frame_index = detail::parse_frame(j.at("frame"));
      if (!j.at("seq").is_number_integer()) throw Error(ErrorCode::MalformedMessage, "seq must be an integer");
      m.pose.received_seq = j.at("seq").get<std::int64_t>();
      m.pose.right_arm = arm_from_json(j.at("right_arm"), ArmSide::Right);
      return m;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedMessage, type + ": " + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::MalformedMessage) throw;
    throw Error(ErrorCode::MalformedMessage, type + ": " + e.detail());
  }
  throw Error(ErrorCode::MalformedMessage, "unknown message type '" + type + "'");
}

inline std::string encode_client(const ClientMessage& m) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        nlohmann::json j;
        if constexpr (std::is_same_v<T, Subscribe>) {
          j = {{"type", "subscribe"}, {"session_id", v.session_id}, {"mode", std::string(mode_letter(v.mode))}};
        } else if constexpr (std::is_same_v<T, SetMode>) {
          j = {{"type", "set_mode"}, {"mode", std::string(mode_letter(v.mode))}};
        } else if constexpr (std::is_same_v<T, Seek>) {
          j = {{"type", "seek"}, {"frame", v.frame}};
        } else if constexpr (std::is_same_v<T, SetRate>) {
          j = {{"type", "set_rate"}, {"rate", v.rate}};
        } else {
          j = {{"type", "practice_pose"},
               {"frame", v.pose.frame_index},
               {"seq", v.pose.received_seq},
               {"right_arm", arm_to_json(v.pose.right_arm)}};
        }
        return j.dump();
      },
      m);
}

inline std::string encode_hello(const SessionManifest& m) {
  return nlohmann::json{{"type", "hello"}, {"manifest", manifest_to_json(m)}}.dump();
}

inline std::string encode_frame(FrameIndex frame, const nlohmann::json& keypoints,
                                const std::vector<OverlaySpec>& overlays, const std::vector<HapticEvent>& haptics) {
  nlohmann::json ov = nlohmann::json::array();
  for (const OverlaySpec& o : overlays) ov.push_back(overlay_to_json(o));
  nlohmann::json hp = nlohmann::json::array();
  for (const HapticEvent& h : haptics) hp.push_back(haptic_to_json(h));
  return nlohmann::json{{"type", "frame"}, {"frame", frame}, {"keypoints", keypoints}, {"overlays", ov}, {"haptics", hp}}
      .dump();
}

inline std::string encode_score(const PracticeScore& s) {
  nlohmann::json j = score_to_json(s);
  j["type"] = "score";
  return j.dump();
}

inline std::string encode_error(ErrorCode code, const std::string& detail) {
  return nlohmann::json{{"type", "error"}, {"code", std::string(to_string(code))}, {"detail", detail}}.dump();
}

inline std::string encode_seek_ack(FrameIndex frame) {
  return nlohmann::json{{"type", "seek_ack"}, {"frame", frame}}.dump();
}

}  // namespace guidecue::replay
