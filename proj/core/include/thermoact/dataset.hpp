#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermoact/control.hpp"
#include "thermoact/image.hpp"

namespace thermoact {

inline constexpr double kRecordHz = 15.0;

/// One synchronized 15 Hz sample. Image fields hold file names relative to
/// the episode directory.
struct FrameRecord {
  double t = 0.0;
  std::vector<double> state;   // 6 joints + gripper
  std::vector<double> action;  // 6 targets, gripper, done
  std::string prompt;
  std::string external_image;
  std::string wrist_image;

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

struct SubtaskSpan {
  std::string subtask;
  std::size_t first = 0;
  std::size_t last = 0;

  friend bool operator==(const SubtaskSpan&, const SubtaskSpan&) = default;
};

struct EpisodeMeta {
  std::string id;
  int task_id = 0;
  Condition condition = Condition::kRgbt;
  std::uint64_t seed = 0;
  nlohmann::json extra = nlohmann::json::object();

  friend bool operator==(const EpisodeMeta&, const EpisodeMeta&) = default;
};

struct Episode {
  EpisodeMeta meta;
  std::vector<FrameRecord> frames;
  std::vector<SubtaskSpan> spans;  // empty until finalized
  bool finalized = false;
  /// Where the episode was read from or written to; not part of equality.
  std::filesystem::path dir;

  double duration() const;
  friend bool operator==(const Episode& a, const Episode& b) {
    return a.meta == b.meta && a.frames == b.frames && a.spans == b.spans && a.finalized == b.finalized;
  }
};

/// Streams frames into `<root>/episode_<id>/`. meta.json is written at open
/// (finalized=false) so a crash leaves a readable prefix; finalize adds the
/// span index.
class EpisodeRecorder {
 public:
  /// Throws kIo if the directory exists already or cannot be created.
  EpisodeRecorder(const std::filesystem::path& root, EpisodeMeta meta);
  EpisodeRecorder(const EpisodeRecorder&) = delete;
  EpisodeRecorder& operator=(const EpisodeRecorder&) = delete;

  /// Writes both images and appends the row; fills the image refs. Throws
  /// kDimension for wrong vector sizes and kInvalidInput for a timestamp
  /// that does not increase. A failed append leaves prior frames intact.
  void append(FrameRecord frame, const RgbImage& external, const RgbImage& wrist);
  /// Same, with images already PNG-encoded.
  void append_encoded(FrameRecord frame, const std::vector<std::uint8_t>& external_png,
                      const std::vector<std::uint8_t>& wrist_png);
  /// Rewrites the done flag of the newest frame. Throws kState without frames.
  void set_last_done(double done);

  /// Replaces meta.extra; written out at finalize.
  void set_extra(nlohmann::json extra) { episode_.meta.extra = std::move(extra); }

  /// Computes spans, rewrites meta.json and syncs to disk. Throws kState
  /// ("empty episode") when nothing was appended.
  Episode finalize();

  std::size_t size() const noexcept { return episode_.frames.size(); }
  bool finalized() const noexcept { return episode_.finalized; }
  const std::filesystem::path& dir() const noexcept { return episode_.dir; }
  const Episode& episode() const noexcept { return episode_; }

 private:
  void write_meta() const;
  void write_row(const FrameRecord& frame);

  Episode episode_;
  std::uintmax_t last_row_offset_ = 0;
};

/// Spans from done flags and prompt changes: a new span starts after a frame
/// with done=1 and wherever the prompt changes.
std::vector<SubtaskSpan> compute_spans(const std::vector<FrameRecord>& frames);

/// Throws kIo (missing file, dangling image), kFormat (bad CSV) or kState
/// ("no frames").
Episode read_episode(const std::filesystem::path& dir);

/// Human-readable violations; empty when the episode is clean. Image
/// dimensions are checked when `episode.dir` is set.
std::vector<std::string> validate_episode(const Episode& episode);

struct DatasetStats {
  std::size_t episodes = 0;
  std::size_t frames = 0;
  double duration_s = 0.0;
  std::map<std::string, std::size_t> prompt_frames;

  double duration_min() const { return duration_s / 60.0; }
  /// Percentage of all frames carrying `prompt`.
  double prompt_share(const std::string& prompt) const;
  nlohmann::json to_json() const;
};

/// Pure accounting: duration = frames / 15 Hz.
DatasetStats summarize(std::size_t episodes, const std::map<std::string, std::size_t>& prompt_frames);

/// Reads every `episode_*` directory under `root`. Throws kState for an empty root.
DatasetStats dataset_stats(const std::filesystem::path& root);

/// Episode directories under `root`, sorted.
std::vector<std::filesystem::path> list_episodes(const std::filesystem::path& root);

}  // namespace thermoact
