#include <random>

#include <gtest/gtest.h>

#include "guidecue/guidecue.hpp"
#include "support/test_util.hpp"

using namespace guidecue;
using testutil::kp;

namespace {

CommandEpoch epoch_at(FrameIndex peak, double yaw = 120.0) {
  CommandEpoch e;
  e.start_frame = peak - 10;
  e.peak_frame = peak;
  e.end_frame = peak + 10;
  e.peak_angles = {yaw, 40.0};
  e.peak_velocity_deg_s = 100.0;
  e.category = classify_command(yaw);
  return e;
}

/// The session's own right arm as a practice stream, optionally delayed.
std::vector<PracticePose> mimic(const Session& s, FrameIndex delay = 0) {
  std::vector<PracticePose> out;
  std::int64_t seq = 0;
  for (const FrameRecord& r : s.frames) {
    if (!r.right_arm || r.frame_index + delay >= s.manifest.frame_count) continue;
    out.push_back({r.frame_index + delay, *r.right_arm, seq++});
  }
  return out;
}

}  // namespace

TEST(MatchEpochs, IdenticalShiftedAndEmpty) {
  const std::vector<CommandEpoch> expert{epoch_at(100), epoch_at(200), epoch_at(300)};
  for (const EpochMatch& m : match_epochs(expert, expert)) EXPECT_EQ(m.practice, m.expert);

  std::vector<CommandEpoch> shifted;
  for (const CommandEpoch& e : expert) shifted.push_back(epoch_at(e.peak_frame + 10));
  for (const EpochMatch& m : match_epochs(expert, shifted)) EXPECT_EQ(m.practice, m.expert);

  for (const EpochMatch& m : match_epochs(expert, {})) EXPECT_FALSE(m.practice);
}

TEST(MatchEpochs, WindowAndGreedyNearest) {
  const std::vector<CommandEpoch> expert{epoch_at(100), epoch_at(120)};
  const auto m = match_epochs(expert, {epoch_at(112)});
  EXPECT_FALSE(m[0].practice);
  EXPECT_EQ(m[1].practice, std::optional<std::size_t>(0));

  EXPECT_TRUE(match_epochs({epoch_at(100)}, {epoch_at(145)})[0].practice);
  EXPECT_FALSE(match_epochs({epoch_at(100)}, {epoch_at(146)})[0].practice);

  const auto tie = match_epochs(expert, {epoch_at(110)});
  EXPECT_EQ(tie[0].practice, std::optional<std::size_t>(0));
  EXPECT_FALSE(tie[1].practice);
}

TEST(CompositeScore, YawOnlyExample) {
  EXPECT_NEAR(composite_score(15.0, 0.0, 0.0, 0.0, ScoreWeights{}, 30.0, 30.0, 1000.0, 200.0), 0.8, 1e-12);
}

TEST(CompositeScore, PerfectAndClamped) {
  EXPECT_EQ(composite_score(0, 0, 0, 0, ScoreWeights{}, 30, 30, 1000, 200), 1.0);
  EXPECT_EQ(composite_score(300, 300, 9000, 9000, ScoreWeights{}, 30, 30, 1000, 200), 0.0);
}

TEST(CompositeScore, BoundedAndMonotone) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> err(0.0, 40.0), bump(0.0, 10.0);
  const ScoreWeights w;
  for (int i = 0; i < 2000; ++i) {
    double e[4] = {err(rng), err(rng), err(rng) * 30.0, err(rng) * 5.0};
    const double base = composite_score(e[0], e[1], e[2], e[3], w, 30, 30, 1000, 200);
    EXPECT_GE(base, 0.0);
    EXPECT_LE(base, 1.0);
    for (int k = 0; k < 4; ++k) {
      double f[4] = {e[0], e[1], e[2], e[3]};
      f[k] += bump(rng);
      EXPECT_LE(composite_score(f[0], f[1], f[2], f[3], w, 30, 30, 1000, 200), base);
    }
  }
}

TEST(ScoreWeights, MustSumToOne) {
  EXPECT_NO_THROW(ScoreWeights{}.validate());
  EXPECT_THROW((ScoreWeights{0.5, 0.5, 0.5, 0.0}.validate()), Error);
  EXPECT_THROW((ScoreWeights{1.2, -0.2, 0.0, 0.0}.validate()), Error);
}

TEST(ScorePractice, MissAndErrors) {
  const CommandEpoch expert = epoch_at(100, 120.0);
  const PracticeScore miss = score_practice(4, expert, nullptr, 30.0, 200.0);
  EXPECT_EQ(miss.epoch_id, 4);
  EXPECT_EQ(miss.composite, 0.0);
  EXPECT_FALSE(miss.category_match);
  EXPECT_FALSE(miss.yaw_error_deg);

  CommandEpoch p = epoch_at(106, 135.0);
  p.peak_velocity_deg_s = -140.0;
  const PracticeScore s = score_practice(0, expert, &p, 30.0, 200.0);
  EXPECT_NEAR(*s.timing_offset_ms, 200.0, 1e-9);
  EXPECT_DOUBLE_EQ(*s.yaw_error_deg, 15.0);
  EXPECT_DOUBLE_EQ(*s.pitch_error_deg, 0.0);
  EXPECT_DOUBLE_EQ(*s.velocity_error_deg_s, 40.0);
  EXPECT_FALSE(s.category_match);
  EXPECT_NEAR(s.composite, 1.0 - 0.2 - 0.04 - 0.04, 1e-12);
}

TEST(ScoreSession, PerfectMimicScoresOne) {
  const Session s = generate(testutil::random_spec(2, 6));
  const SessionAnalysis a = analyze(s);
  const auto scores = score_session(a, mimic(s));
  ASSERT_EQ(scores.size(), a.epochs.size());
  for (const PracticeScore& p : scores) {
    EXPECT_DOUBLE_EQ(p.composite, 1.0);
    EXPECT_TRUE(p.category_match);
  }
}

TEST(ScoreSession, DelayedMimicReportsTimingOffset) {
  const Session s = generate(testutil::random_spec(2, 6));
  const SessionAnalysis a = analyze(s);
  const auto scores = score_session(a, mimic(s, 10));
  for (const PracticeScore& p : scores) {
    ASSERT_TRUE(p.timing_offset_ms);
    EXPECT_NEAR(*p.timing_offset_ms, 10.0 / 30.0 * 1000.0, 1e-9);
    EXPECT_NEAR(*p.yaw_error_deg, 0.0, 1e-9);
    EXPECT_NEAR(p.composite, 1.0 - 0.2 / 3.0, 1e-9);
  }
}

TEST(ScoreSession, NoPracticeIsAllMisses) {
  const Session s = generate(testutil::random_spec(2, 6));
  const SessionAnalysis a = analyze(s);
  for (const PracticeScore& p : score_session(a, {})) EXPECT_EQ(p.composite, 0.0);
}

TEST(LiveAnnotator, SinglePoseYieldsOverlay) {
  const Session s = generate(testutil::one_epoch_spec());
  const SessionAnalysis a = analyze(s);
  LiveAnnotator live(a);
  const auto arm = ArmKeypoints::right(kp(500, 300), kp(470, 330), kp(400, 400));
  const auto u = live.push({10, arm, 1});
  EXPECT_FALSE(u.dropped);
  ASSERT_TRUE(u.overlay);
  EXPECT_EQ(u.overlay->style_tag, style::kPracticePose);
  EXPECT_EQ(u.overlay->coords, (std::vector<Vec2>{{400, 400}, {470, 330}, {500, 300}}));
  EXPECT_TRUE(u.finalized.empty());
}

TEST(LiveAnnotator, DropsStaleAndOutOfRange) {
  const Session s = generate(testutil::one_epoch_spec());
  const SessionAnalysis a = analyze(s);
  LiveAnnotator live(a);
  const auto arm = ArmKeypoints::right(kp(500, 300), kp(470, 330), kp(400, 400));
  EXPECT_FALSE(live.push({10, arm, 5}).dropped);
  EXPECT_TRUE(live.push({11, arm, 5}).dropped);
  EXPECT_TRUE(live.push({12, arm, 3}).dropped);
  EXPECT_TRUE(live.push({500, arm, 9}).dropped);
  EXPECT_FALSE(live.push({11, arm, 10}).dropped);
  EXPECT_EQ(live.dropped_count(), 3u);
}

TEST(LiveAnnotator, MatchesBatchOnStreamedFixtures) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Session s = generate(testutil::random_spec(seed, 8, 1.0));
    const SessionAnalysis a = analyze(s);
    const auto poses = mimic(s);
    LiveAnnotator live(a);
    std::size_t scored = 0;
    for (const PracticePose& p : poses) scored += live.push(p).scores.size();
    scored += live.finish().scores.size();
    const PracticeEpochs batch = practice_epochs_batch(a, poses);
    ASSERT_EQ(live.epochs().size(), batch.epochs.size()) << "seed " << seed;
    for (std::size_t i = 0; i < batch.epochs.size(); ++i) {
      EXPECT_NEAR(live.epochs()[i].peak_frame, batch.epochs[i].peak_frame, 2);
      EXPECT_EQ(live.epochs()[i].start_frame, batch.epochs[i].start_frame);
      EXPECT_EQ(live.epochs()[i].end_frame, batch.epochs[i].end_frame);
    }
    EXPECT_EQ(scored, a.epochs.size());
  }
}

TEST(LiveAnnotator, EpochFinalizedSoonAfterRetraction) {
  const Session s = generate(testutil::one_epoch_spec());
  const SessionAnalysis a = analyze(s);
  ASSERT_EQ(a.epochs.size(), 1u);
  LiveAnnotator live(a);
  std::optional<FrameIndex> finalized_at;
  for (const PracticePose& p : mimic(s)) {
    const auto u = live.push(p);
    if (!u.finalized.empty() && !finalized_at) {
      finalized_at = p.frame_index;
      ASSERT_EQ(u.scores.size(), 1u);
      EXPECT_NEAR(u.scores[0].composite, 1.0, 1e-9);
    }
  }
  ASSERT_TRUE(finalized_at);
  EXPECT_LE(*finalized_at, a.epochs[0].end_frame + 1 + 2 + 1);
}

TEST(LiveAnnotator, BackwardSeekStartsNewTake) {
  const Session s = generate(testutil::one_epoch_spec());
  const SessionAnalysis a = analyze(s);
  LiveAnnotator live(a);
  const auto poses = mimic(s);
  std::int64_t seq = 0;
  for (const PracticePose& p : poses) live.push({p.frame_index, p.right_arm, seq++});
  for (const PracticePose& p : poses) live.push({p.frame_index, p.right_arm, seq++});
  live.finish();
  EXPECT_EQ(live.epochs().size(), 2u);
  EXPECT_EQ(live.epochs()[0].peak_frame, live.epochs()[1].peak_frame);
}
