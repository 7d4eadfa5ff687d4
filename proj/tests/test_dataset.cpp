#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "test_util.hpp"
#include "thermoact/dataset.hpp"
#include "thermoact/error.hpp"

using namespace thermoact;
using testutil::code_of;
using testutil::TempDir;
namespace fs = std::filesystem;

namespace {

EpisodeMeta meta(const std::string& id, Condition c = Condition::kRgbt) {
  EpisodeMeta m;
  m.id = id;
  m.task_id = 2;
  m.condition = c;
  m.seed = 17;
  return m;
}

FrameRecord frame(std::size_t i, const std::string& prompt, double done = 0.0) {
  FrameRecord f;
  f.t = static_cast<double>(i) / kRecordHz;
  f.state = {0.01 * i, -0.3, 0.7, 1.1, 0.0, 1e-7 * i, 1.0};
  f.action = {0.01 * i + 0.005, -0.3, 0.7, 1.1, 0.0, 0.0, 0.0, done};
  f.prompt = prompt;
  return f;
}

struct Pngs {
  std::vector<std::uint8_t> external = encode_png(RgbImage(256, 256, {20, 10, 40}));
  std::vector<std::uint8_t> wrist = encode_png(RgbImage(640, 480, {128, 128, 128}));
};

const Pngs& pngs() {
  static const Pngs p;
  return p;
}

/// Records `n` frames; the prompt switches halfway and the last frame of each half is done.
Episode record(const fs::path& root, const std::string& id, std::size_t n) {
  EpisodeRecorder rec(root, meta(id));
  for (std::size_t i = 0; i < n; ++i) {
    const bool first_half = i < n / 2;
    const bool last_of_half = i + 1 == n / 2 || i + 1 == n;
    rec.append_encoded(frame(i, first_half ? "pick up [coke] from [floor]" : "place [coke] on the [plate]",
                             last_of_half ? 1.0 : 0.0),
                       pngs().external, pngs().wrist);
  }
  return rec.finalize();
}

}  // namespace

TEST(Recorder, WritesLayoutAndMetaAtOpen) {
  TempDir dir;
  EpisodeRecorder rec(dir.path(), meta("a"));
  EXPECT_EQ(rec.dir(), dir.path() / "episode_a");
  EXPECT_TRUE(fs::is_regular_file(rec.dir() / "meta.json"));
  EXPECT_TRUE(fs::is_regular_file(rec.dir() / "frames.csv"));
  EXPECT_TRUE(fs::is_directory(rec.dir() / "frames"));
  const auto m = nlohmann::json::parse(std::ifstream(rec.dir() / "meta.json"));
  EXPECT_EQ(m["finalized"], false);
  EXPECT_EQ(code_of([&] { EpisodeRecorder again(dir.path(), meta("a")); }), ErrorCode::kIo);
  EXPECT_EQ(code_of([&] { EpisodeRecorder noid(dir.path(), meta("")); }), ErrorCode::kInvalidInput);
}

TEST(Recorder, EmptyFinalizeIsStateError) {
  TempDir dir;
  EpisodeRecorder rec(dir.path(), meta("e"));
  try {
    rec.finalize();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kState);
    EXPECT_EQ(e.message(), "empty episode");
  }
  EXPECT_EQ(code_of([&] { rec.set_last_done(1.0); }), ErrorCode::kState);
}

TEST(Recorder, DurationFromFrameCount) {
  TempDir dir;
  const Episode e = record(dir.path(), "d", 150);
  EXPECT_NEAR(e.duration(), 149.0 / 15.0, 1e-12);
  EXPECT_NEAR(e.duration(), 9.933, 0.001);
  Episode one;
  one.frames.push_back(frame(0, "x"));
  EXPECT_EQ(one.duration(), 0.0);
}

TEST(Recorder, RejectsBadFramesAndKeepsPrefix) {
  TempDir dir;
  EpisodeRecorder rec(dir.path(), meta("b"));
  rec.append_encoded(frame(0, "p"), pngs().external, pngs().wrist);
  FrameRecord short_state = frame(1, "p");
  short_state.state.pop_back();
  EXPECT_EQ(code_of([&] { rec.append_encoded(short_state, pngs().external, pngs().wrist); }),
            ErrorCode::kDimension);
  FrameRecord long_action = frame(1, "p");
  long_action.action.push_back(0.0);
  EXPECT_EQ(code_of([&] { rec.append_encoded(long_action, pngs().external, pngs().wrist); }),
            ErrorCode::kDimension);
  FrameRecord stale = frame(0, "p");
  EXPECT_EQ(code_of([&] { rec.append_encoded(stale, pngs().external, pngs().wrist); }), ErrorCode::kInvalidInput);
  EXPECT_EQ(rec.size(), 1u);
  rec.append_encoded(frame(1, "p"), pngs().external, pngs().wrist);
  EXPECT_EQ(read_episode(rec.dir()).frames.size(), 2u);
}

TEST(Recorder, ImagesAreEncodedAndReferenced) {
  TempDir dir;
  EpisodeRecorder rec(dir.path(), meta("img"));
  const RgbImage ext(256, 256, {1, 2, 3});
  const RgbImage wrist(640, 480, {4, 5, 6});
  rec.append(frame(0, "p"), ext, wrist);
  const FrameRecord& f = rec.episode().frames[0];
  EXPECT_EQ(decode_png_rgb(read_file(rec.dir() / f.external_image)), ext);
  EXPECT_EQ(decode_png_rgb(read_file(rec.dir() / f.wrist_image)), wrist);
  EXPECT_NE(f.external_image, f.wrist_image);
}

TEST(Recorder, SetLastDoneRewritesRow) {
  TempDir dir;
  EpisodeRecorder rec(dir.path(), meta("s"));
  rec.append_encoded(frame(0, "p"), pngs().external, pngs().wrist);
  rec.append_encoded(frame(1, "p"), pngs().external, pngs().wrist);
  rec.set_last_done(1.0);
  rec.append_encoded(frame(2, "q"), pngs().external, pngs().wrist);
  const Episode e = rec.finalize();
  const Episode back = read_episode(rec.dir());
  EXPECT_EQ(back.frames[1].action.back(), 1.0);
  EXPECT_EQ(back.frames[0].action.back(), 0.0);
  EXPECT_EQ(back, e);
}

TEST(ReadEpisode, RoundTripIsExact) {
  TempDir dir;
  const Episode written = record(dir.path(), "rt", 40);
  const Episode back = read_episode(written.dir);
  EXPECT_EQ(back, written);
  EXPECT_EQ(back.meta, meta("rt"));
  EXPECT_TRUE(back.finalized);
  ASSERT_EQ(back.spans.size(), 2u);
  EXPECT_EQ(back.spans[0], (SubtaskSpan{"pick up [coke] from [floor]", 0, 19}));
  EXPECT_EQ(back.spans[1], (SubtaskSpan{"place [coke] on the [plate]", 20, 39}));
}

TEST(ReadEpisode, PromptsWithCommasAndQuotesSurvive) {
  TempDir dir;
  EpisodeRecorder rec(dir.path(), meta("q"));
  rec.append_encoded(frame(0, "say \"hi\", then stop"), pngs().external, pngs().wrist);
  rec.finalize();
  EXPECT_EQ(read_episode(rec.dir()).frames[0].prompt, "say \"hi\", then stop");
}

TEST(ReadEpisode, UnfinalizedPrefixIsReadable) {
  TempDir dir;
  EpisodeRecorder rec(dir.path(), meta("crash"));
  for (std::size_t i = 0; i < 5; ++i) rec.append_encoded(frame(i, "p"), pngs().external, pngs().wrist);
  const Episode e = read_episode(rec.dir());
  EXPECT_FALSE(e.finalized);
  EXPECT_EQ(e.frames.size(), 5u);
  EXPECT_TRUE(e.spans.empty());
}

TEST(ReadEpisode, TruncatedCsvNamesRow) {
  TempDir dir;
  const Episode e = record(dir.path(), "t", 6);
  const fs::path csv = e.dir / "frames.csv";
  fs::resize_file(csv, fs::file_size(csv) - 7);
  try {
    read_episode(e.dir);
    FAIL();
  } catch (const Error& ex) {
    EXPECT_EQ(ex.code(), ErrorCode::kFormat);
    EXPECT_NE(std::string(ex.what()).find("row 7"), std::string::npos) << ex.what();
  }
}

TEST(ReadEpisode, MissingPiecesAreReported) {
  TempDir dir;
  {
    EpisodeRecorder rec(dir.path(), meta("m"));
  }
  try {
    read_episode(dir.path() / "episode_m");
    FAIL();
  } catch (const Error& ex) {
    EXPECT_EQ(ex.code(), ErrorCode::kState);
    EXPECT_NE(std::string(ex.what()).find("no frames"), std::string::npos);
  }
  EXPECT_EQ(code_of([&] { read_episode(dir.path() / "episode_none"); }), ErrorCode::kIo);

  const Episode e = record(dir.path(), "dangling", 4);
  fs::remove(e.dir / e.frames[2].wrist_image);
  EXPECT_EQ(code_of([&] { read_episode(e.dir); }), ErrorCode::kIo);
}

TEST(ValidateEpisode, CleanEpisodeHasNoViolations) {
  TempDir dir;
  const Episode e = record(dir.path(), "v", 30);
  EXPECT_TRUE(validate_episode(read_episode(e.dir)).empty());
}

TEST(ValidateEpisode, FlagsGapsDoneAndImages) {
  TempDir dir;
  Episode e = read_episode(record(dir.path(), "g", 10).dir);
  e.frames[5].t += 0.2;
  for (std::size_t i = 6; i < e.frames.size(); ++i) e.frames[i].t += 0.2;
  e.frames[3].action.back() = 0.5;
  const auto v = validate_episode(e);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_NE(v[0].find("frame 3"), std::string::npos);
  EXPECT_NE(v[1].find("frame 5"), std::string::npos);

  Episode rgb = read_episode(record(dir.path(), "r", 3).dir);
  rgb.meta.condition = Condition::kRgbRgb;
  EXPECT_EQ(validate_episode(rgb).size(), 3u);

  Episode spans = read_episode(record(dir.path(), "s", 4).dir);
  spans.spans.pop_back();
  EXPECT_EQ(validate_episode(spans), std::vector<std::string>{"spans do not cover all frames"});
}

TEST(ComputeSpans, DoneAndPromptBoundaries) {
  std::vector<FrameRecord> f = {frame(0, "a"), frame(1, "a", 1.0), frame(2, "a"), frame(3, "b"), frame(4, "b")};
  EXPECT_EQ(compute_spans(f), (std::vector<SubtaskSpan>{{"a", 0, 1}, {"a", 2, 2}, {"b", 3, 4}}));
  EXPECT_TRUE(compute_spans({}).empty());
}

TEST(Summarize, CorpusArithmetic) {
  const DatasetStats s = summarize(800, {{"pick up [overheated battery]", 14767}, {"other", 49343 - 14767}});
  EXPECT_EQ(s.frames, 49343u);
  EXPECT_GE(s.duration_min(), 54.8);
  EXPECT_LE(s.duration_min(), 55.0);
  EXPECT_NEAR(s.duration_s, 49343.0 / 15.0, 1e-9);
  const double share = s.prompt_share("pick up [overheated battery]");
  EXPECT_GE(share, 29.9);
  EXPECT_LE(share, 30.0);
  EXPECT_EQ(s.prompt_share("missing"), 0.0);
  EXPECT_DOUBLE_EQ(summarize(1, {{"p", 15}}).duration_s, 1.0);
  EXPECT_EQ(s.to_json()["frames"], 49343);
}

TEST(DatasetStats, ReadsEpisodesUnderRoot) {
  TempDir dir;
  EXPECT_EQ(code_of([&] { dataset_stats(dir.path()); }), ErrorCode::kState);
  record(dir.path(), "1", 20);
  record(dir.path(), "2", 10);
  fs::create_directories(dir.path() / "notes");
  EXPECT_EQ(list_episodes(dir.path()).size(), 2u);
  const DatasetStats s = dataset_stats(dir.path());
  EXPECT_EQ(s.episodes, 2u);
  EXPECT_EQ(s.frames, 30u);
  EXPECT_DOUBLE_EQ(s.duration_s, 2.0);
  EXPECT_EQ(s.prompt_frames.at("pick up [coke] from [floor]"), 15u);
}
