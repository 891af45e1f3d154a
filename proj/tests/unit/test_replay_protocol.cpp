#include <gtest/gtest.h>

#include "guidecue/guidecue.hpp"
#include "support/test_util.hpp"

using namespace guidecue;
using namespace guidecue::replay;
using nlohmann::json;

namespace {

ErrorCode parse_error(std::string_view text) {
  try {
    parse_client_message(text);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "parsed: " << text;
  return ErrorCode::InvalidArgument;
}

std::shared_ptr<const SessionStore> store_with(std::initializer_list<FixtureSpec> specs) {
  auto store = std::make_shared<SessionStore>();
  for (const FixtureSpec& s : specs) store->add(generate(s));
  return store;
}

FixtureSpec spec_named(const std::string& id, int epochs = 4) {
  FixtureSpec s = testutil::random_spec(5, epochs);
  s.session_id = id;
  return s;
}

json only(const std::vector<std::string>& out) {
  EXPECT_EQ(out.size(), 1u);
  return out.empty() ? json() : json::parse(out[0]);
}

std::string error_code(const std::vector<std::string>& out) {
  const json j = only(out);
  EXPECT_EQ(j.value("type", ""), "error");
  return j.value("code", "");
}

}  // namespace

TEST(Protocol, ClientMessagesRoundTrip) {
  const std::vector<ClientMessage> msgs{
      Subscribe{"s1", Mode::C_DogOnly}, SetMode{Mode::D_Evaluation}, Seek{42}, SetRate{0.25},
      PracticePoseMsg{{17, ArmKeypoints::right({500, 300, 1}, {470, 330, 1}, {400, 400, 1}), 9}}};
  for (const ClientMessage& m : msgs) {
    const ClientMessage back = parse_client_message(encode_client(m));
    ASSERT_EQ(back.index(), m.index());
    EXPECT_EQ(encode_client(back), encode_client(m));
  }
  const auto p = std::get<PracticePoseMsg>(parse_client_message(encode_client(msgs[4])));
  EXPECT_EQ(p.pose, std::get<PracticePoseMsg>(msgs[4]).pose);
}

TEST(Protocol, SubscribeModeDefaultsToA) {
  const auto s = std::get<Subscribe>(parse_client_message(R"({"type":"subscribe","session_id":"x"})"));
  EXPECT_EQ(s.mode, Mode::A_Both);
}

TEST(Protocol, MalformedMessages) {
  for (const char* text : {"not json", "[]", R"({"kind":"seek"})", R"({"type":"warp"})",
                           R"({"type":"subscribe"})", R"({"type":"subscribe","session_id":3})",
                           R"({"type":"set_mode","mode":"E"})", R"({"type":"seek","frame":"10"})",
                           R"({"type":"seek","frame":1.5})", R"({"type":"set_rate","rate":"fast"})",
                           R"({"type":"practice_pose","frame":1,"seq":1,"right_arm":[[1,2,0.9]]})",
                           R"({"type":"practice_pose","frame":1,"right_arm":[[1,2,1],[1,2,1],[1,2,1]]})"}) {
    EXPECT_EQ(parse_error(text), ErrorCode::MalformedMessage) << text;
  }
}

TEST(Protocol, ServerMessageShapes) {
  SessionManifest m;
  m.session_id = "s";
  const json hello = json::parse(encode_hello(m));
  EXPECT_EQ(hello.at("type"), "hello");
  EXPECT_EQ(hello.at("manifest").at("session_id"), "s");

  const OverlaySpec arc{OverlayKind::AngleArc, {{10, 20}}, "command-range", std::nullopt, 60, 110, 130, -5};
  const OverlaySpec label{OverlayKind::Label, {{1, 2}}, "command-category", std::string("MovementControl")};
  const json frame = json::parse(encode_frame(7, json::object(), {arc, label}, {{Hand::Left, 5, 4, 120.0, 0.5}}));
  EXPECT_EQ(frame.at("type"), "frame");
  EXPECT_EQ(frame.at("frame"), 7);
  ASSERT_EQ(frame.at("overlays").size(), 2u);
  EXPECT_EQ(overlay_from_json(frame.at("overlays")[0]), arc);
  EXPECT_EQ(overlay_from_json(frame.at("overlays")[1]), label);
  EXPECT_EQ(haptic_from_json(frame.at("haptics")[0]), (HapticEvent{Hand::Left, 5, 4, 120.0, 0.5}));

  const json err = json::parse(encode_error(ErrorCode::SeekOutOfRange, "too far"));
  EXPECT_EQ(err.at("code"), "SeekOutOfRange");
  EXPECT_EQ(err.at("detail"), "too far");
  EXPECT_EQ(json::parse(encode_seek_ack(3)).at("frame"), 3);

  PracticeScore s{2, 33.3, 1.0, 2.0, 3.0, true, 0.9};
  json score = json::parse(encode_score(s));
  EXPECT_EQ(score.at("type"), "score");
  score.erase("type");
  EXPECT_EQ(score_from_json(score), s);
}

TEST(Controller, RequiresSubscription) {
  ReplayController c(store_with({spec_named("s1")}));
  EXPECT_EQ(error_code(c.handle(Seek{3})), "NotSubscribed");
  EXPECT_EQ(error_code(c.handle(SetMode{Mode::B_CommandOnly})), "NotSubscribed");
  EXPECT_EQ(error_code(c.handle(SetRate{1.0})), "NotSubscribed");
  EXPECT_EQ(error_code(c.handle_text(R"({"type":"practice_pose","frame":0,"seq":0,"right_arm":[[5,5,1],[6,6,1],[7,7,1]]})")),
            "NotSubscribed");
  EXPECT_TRUE(c.tick().empty());
  EXPECT_EQ(c.tick_interval_s(), 0.0);
  EXPECT_EQ(error_code(c.handle_text("{")), "MalformedMessage");
}

TEST(Controller, SubscribeSendsHelloThenFirstFrame) {
  ReplayController c(store_with({spec_named("s1"), spec_named("s2")}));
  EXPECT_EQ(error_code(c.handle(Subscribe{"nope"})), "UnknownSession");
  const auto out = c.handle(Subscribe{"s2", Mode::B_CommandOnly});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(json::parse(out[0]).at("type"), "hello");
  EXPECT_EQ(json::parse(out[0]).at("manifest").at("session_id"), "s2");
  EXPECT_EQ(json::parse(out[1]).at("frame"), 0);
  EXPECT_TRUE(c.subscribed());
  EXPECT_EQ(c.mode(), Mode::B_CommandOnly);
  EXPECT_NEAR(c.tick_interval_s(), 1.0 / 30.0, 1e-12);
}

TEST(Controller, TicksAdvanceAndStopAtEnd) {
  const FixtureSpec spec = spec_named("s1", 2);
  ReplayController c(store_with({spec}));
  c.handle(Subscribe{"s1"});
  FrameIndex last = 0;
  for (int i = 0; i < spec.frame_count + 5; ++i) {
    for (const std::string& m : c.tick()) {
      const json j = json::parse(m);
      if (j.at("type") != "frame") continue;
      EXPECT_EQ(j.at("frame").get<FrameIndex>(), last + 1);
      last = j.at("frame");
    }
  }
  EXPECT_EQ(last, spec.frame_count - 1);
  EXPECT_EQ(c.rate(), 0.0);
  EXPECT_TRUE(c.tick().empty());
}

TEST(Controller, SeekAndRate) {
  const FixtureSpec spec = spec_named("s1");
  ReplayController c(store_with({spec}));
  c.handle(Subscribe{"s1"});
  const auto out = c.handle(Seek{50});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(json::parse(out[0]).at("type"), "seek_ack");
  EXPECT_EQ(json::parse(out[1]).at("frame"), 50);
  EXPECT_EQ(json::parse(c.tick().at(0)).at("frame"), 51);
  EXPECT_EQ(error_code(c.handle(Seek{spec.frame_count})), "SeekOutOfRange");
  EXPECT_EQ(error_code(c.handle(Seek{-1})), "SeekOutOfRange");
  EXPECT_EQ(c.cursor(), 51);

  EXPECT_EQ(error_code(c.handle(SetRate{3.0})), "InvalidRate");
  EXPECT_TRUE(c.handle(SetRate{2.0}).empty());
  EXPECT_NEAR(c.tick_interval_s(), 1.0 / 60.0, 1e-12);
  EXPECT_TRUE(c.handle(SetRate{0.0}).empty());
  EXPECT_TRUE(c.tick().empty());
  EXPECT_EQ(c.cursor(), 51);
}

TEST(Controller, ModeDHidesExpertArmAndLabels) {
  const FixtureSpec spec = spec_named("s1");
  ReplayController c(store_with({spec}));
  c.handle(Subscribe{"s1", Mode::A_Both});
  const FrameIndex peak = spec.planted_epochs[0].peak;
  json a = json::parse(c.handle(Seek{peak}).at(1));
  EXPECT_TRUE(a.at("keypoints").contains("right_arm"));
  bool has_label = false;
  for (const auto& o : a.at("overlays")) has_label |= o.at("kind") == "Label";
  EXPECT_TRUE(has_label);

  c.handle(SetMode{Mode::D_Evaluation});
  const json d = json::parse(c.frame_message(peak));
  EXPECT_FALSE(d.at("keypoints").contains("right_arm"));
  EXPECT_TRUE(d.at("keypoints").contains("dog"));
  for (const auto& o : d.at("overlays")) {
    EXPECT_NE(o.at("kind"), "Label");
    EXPECT_NE(o.at("kind"), "AngleArc");
  }
}

TEST(Controller, FramesCarryActiveHaptics) {
  const FixtureSpec spec = spec_named("s1");
  ReplayController c(store_with({spec}));
  c.handle(Subscribe{"s1"});
  const json j = json::parse(c.frame_message(spec.planted_epochs[0].peak));
  ASSERT_FALSE(j.at("haptics").empty());
  for (const auto& h : j.at("haptics")) {
    const HapticEvent e = haptic_from_json(h);
    EXPECT_LE(e.start_frame, spec.planted_epochs[0].peak);
    EXPECT_GE(e.end_frame(), spec.planted_epochs[0].peak);
  }
  EXPECT_TRUE(json::parse(c.frame_message(0)).at("haptics").empty());
}

TEST(Controller, PracticeStreamProducesScores) {
  const FixtureSpec spec = spec_named("s1", 3);
  const Session session = generate(spec);
  ReplayController c(store_with({spec}));
  c.handle(Subscribe{"s1"});
  std::vector<json> scores;
  std::int64_t seq = 0;
  for (const FrameRecord& r : session.frames) {
    for (const std::string& m : c.handle(PracticePoseMsg{{r.frame_index, *r.right_arm, seq++}})) {
      const json j = json::parse(m);
      ASSERT_EQ(j.at("type"), "score") << m;
      scores.push_back(j);
    }
    for (const std::string& m : c.tick()) {
      const json j = json::parse(m);
      if (j.at("type") == "score") scores.push_back(j);
    }
  }
  ASSERT_EQ(scores.size(), 3u);
  for (const json& s : scores) EXPECT_NEAR(s.at("composite").get<double>(), 1.0, 1e-9);

  EXPECT_EQ(error_code(c.handle(PracticePoseMsg{{5, *session.frames[5].right_arm, 0}})), "OutOfOrderPose");
  EXPECT_EQ(c.dropped_poses(), 1u);
}

TEST(Controller, PausedPoseIsTaggedWithCursor) {
  const FixtureSpec spec = spec_named("s1");
  ReplayController c(store_with({spec}));
  c.handle(Subscribe{"s1"});
  c.handle(Seek{100});
  c.handle(SetRate{0.0});
  const auto arm = ArmKeypoints::right({610, 20, 1}, {600, 30, 1}, {590, 40, 1});
  EXPECT_TRUE(c.handle(PracticePoseMsg{{3, arm, 0}}).empty());
  const json frame = json::parse(c.frame_message(100));
  bool practice = false;
  for (const auto& o : frame.at("overlays")) practice |= o.at("style_tag") == "practice-pose";
  EXPECT_TRUE(practice);
  const json far = json::parse(c.frame_message(3));
  for (const auto& o : far.at("overlays")) EXPECT_NE(o.at("style_tag"), "practice-pose");
}

TEST(SessionStore, LoadsDirectoryOfSessions) {
  testutil::TempDir dir;
  save_session(generate(spec_named("b")), dir / "b");
  save_session(generate(spec_named("a")), dir / "a");
  SessionStore store;
  store.load(dir.path());
  EXPECT_EQ(store.ids(), (std::vector<std::string>{"a", "b"}));
  ASSERT_TRUE(store.find("a"));
  EXPECT_FALSE(store.find("c"));

  SessionStore single;
  single.load(dir / "a");
  EXPECT_EQ(single.ids(), std::vector<std::string>{"a"});

  testutil::TempDir empty;
  EXPECT_THROW(SessionStore().load(empty.path()), Error);
}
