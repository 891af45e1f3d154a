#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <gtest/gtest.h>

#include "guidecue/guidecue.hpp"
#include "support/test_util.hpp"

using namespace guidecue;
using testutil::TempDir;

namespace {

struct Result {
  int exit{-1};
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Result run(const std::string& args) {
  TempDir tmp("guidecue-cli");
  const std::string cmd = std::string(GUIDECUE_CLI_PATH) + " " + args + " 2>" + (tmp / "err").string();
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.exit = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = slurp(tmp / "err");
  return r;
}

nlohmann::json error_json(const Result& r) {
  const auto nl = r.err.find('\n');
  return nlohmann::json::parse(r.err.substr(0, nl));
}

const std::string kFixtures = GUIDECUE_FIXTURES_DIR;

}  // namespace

TEST(Cli, GenThenReportHybrid1) {
  TempDir dir;
  const auto session = (dir / "h1").string();
  const Result gen = run("gen --preset Hybrid1 --out " + session);
  ASSERT_EQ(gen.exit, 0) << gen.err;
  EXPECT_NE(gen.out.find("planted_epochs: 37"), std::string::npos);

  const Result report = run("report " + session);
  ASSERT_EQ(report.exit, 0) << report.err;
  EXPECT_NE(report.out.find("command_count: 37"), std::string::npos);
  EXPECT_EQ(read_report(session).command_count, 37);
}

TEST(Cli, SpecFileAnalyzeAndHaptics) {
  TempDir dir;
  const auto session = (dir / "two").string();
  ASSERT_EQ(run("gen --spec " + kFixtures + "/two_commands.json --out " + session).exit, 0);
  EXPECT_EQ(run("validate " + session).exit, 0);

  const Result analyze = run("analyze " + session);
  ASSERT_EQ(analyze.exit, 0) << analyze.err;
  EXPECT_NE(analyze.out.find("epochs: 2"), std::string::npos);
  EXPECT_NE(analyze.out.find("triggers: 1"), std::string::npos);
  const auto epochs = read_jsonl(dir / "two" / kEpochsFile, epoch_from_json);
  ASSERT_EQ(epochs.size(), 2u);
  EXPECT_EQ(epochs[0].peak_frame, 112);
  EXPECT_EQ(epochs[1].peak_frame, 184);

  const Result haptics = run("haptics " + session);
  ASSERT_EQ(haptics.exit, 0) << haptics.err;
  EXPECT_NE(haptics.out.find("left: 1"), std::string::npos);
  EXPECT_FALSE(read_jsonl(dir / "two" / kHapticsFile, haptic_from_json).empty());
}

TEST(Cli, ScorePracticeFile) {
  TempDir dir;
  const auto session = (dir / "two").string();
  ASSERT_EQ(run("gen --spec " + kFixtures + "/two_commands.json --out " + session).exit, 0);
  const Session s = load_session(session);
  std::ofstream poses(dir / "poses.jsonl");
  std::int64_t seq = 0;
  for (const FrameRecord& r : s.frames) poses << practice_pose_to_json({r.frame_index, *r.right_arm, seq++}).dump() << '\n';
  poses.close();
  const Result score = run("score " + session + " --practice " + (dir / "poses.jsonl").string());
  ASSERT_EQ(score.exit, 0) << score.err;
  EXPECT_NE(score.out.find("matched: 2"), std::string::npos);
  const auto scores = read_jsonl(dir / "two" / kScoresFile, score_from_json);
  ASSERT_EQ(scores.size(), 2u);
  EXPECT_NEAR(scores[0].composite, 1.0, 1e-9);
}

TEST(Cli, CorruptedLineReportsLineNumber) {
  TempDir dir;
  const auto session = (dir / "bad").string();
  ASSERT_EQ(run("gen --spec " + kFixtures + "/two_commands.json --out " + session).exit, 0);
  std::stringstream lines(slurp(dir / "bad" / "keypoints.jsonl"));
  std::string text, line;
  for (int i = 1; std::getline(lines, line); ++i) text += (i == 57 ? std::string("{\"frame_index\": oops") : line) + "\n";
  std::ofstream(dir / "bad" / "keypoints.jsonl") << text;

  const Result analyze = run("analyze " + session);
  EXPECT_EQ(analyze.exit, 1);
  const auto err = error_json(analyze);
  EXPECT_EQ(err.at("error"), "MalformedRecord");
  EXPECT_EQ(err.at("line"), 57);

  const Result validate = run("validate " + session);
  EXPECT_EQ(validate.exit, 1);
  EXPECT_NE(validate.out.find("line 57"), std::string::npos);
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  const Result missing = run("analyze " + (dir / "nothing").string());
  EXPECT_EQ(missing.exit, 3);
  EXPECT_EQ(error_json(missing).at("error"), "MissingManifest");

  EXPECT_EQ(run("frobnicate").exit, 2);
  EXPECT_EQ(run("gen --out " + (dir / "x").string()).exit, 2);
  EXPECT_EQ(run("gen --preset Nowhere --out " + (dir / "x").string()).exit, 2);
  EXPECT_EQ(run("config --set segmentation.nope=1").exit, 2);
  EXPECT_EQ(error_json(run("config --set scoring.weights.yaw=0.9")).at("error"), "InvalidArgument");
  EXPECT_EQ(run("--help").exit, 0);
}

TEST(Cli, ConfigPrintsEffectiveValues) {
  const Result r = run("config --config " + kFixtures + "/config.example.json --set triggers.sustain_frames=7");
  ASSERT_EQ(r.exit, 0) << r.err;
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j.at("triggers").at("sustain_frames"), 7);
}
