#include "thermoact/dataset.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "thermoact/error.hpp"

namespace thermoact {
namespace fs = std::filesystem;
namespace {

constexpr std::size_t kStateSize = 7;
constexpr std::size_t kActionSize = 8;
constexpr std::size_t kColumns = 1 + kStateSize + kActionSize + 3;

std::string header_line() {
  std::string h = "t";
  for (std::size_t i = 0; i < kStateSize; ++i) h += ",s" + std::to_string(i);
  for (std::size_t i = 0; i < kActionSize; ++i) h += ",a" + std::to_string(i);
  return h + ",prompt,external_image,wrist_image";
}

std::string number(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string quote(const std::string& field) {
  if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

// RFC 4180 rows; `lines` receives the 1-based line each row starts on.
std::vector<std::vector<std::string>> parse_csv(const std::string& text, std::vector<std::size_t>& lines,
                                                bool& truncated) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  std::size_t line = 1;
  std::size_t row_line = 1;
  truncated = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      lines.push_back(row_line);
      any = false;
      row_line = ++line;
    } else {
      field += c;
      any = true;
    }
  }
  if (any || quoted) {
    // Last line has no terminator: a write was cut short.
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
    lines.push_back(row_line);
    truncated = true;
  }
  return rows;
}

double parse_number(const std::string& s, std::size_t line, const char* column) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kFormat, "frames.csv row " + std::to_string(line) + ": bad number in " +
                                        column + ": '" + s + "'");
  }
  return v;
}

void sync_path(const fs::path& p) {
  const int fd = ::open(p.c_str(), O_RDONLY);
  if (fd < 0) return;
  ::fsync(fd);
  ::close(fd);
}

void write_text(const fs::path& p, const std::string& text) {
  // Write-then-rename so a reader never sees a half-written file.
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
    out << text;
    if (!out.flush()) throw Error(ErrorCode::kIo, "cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, p, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "missing " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json meta_json(const Episode& e) {
  nlohmann::json spans = nlohmann::json::array();
  for (const auto& s : e.spans) {
    spans.push_back({{"subtask", s.subtask}, {"first", s.first}, {"last", s.last}});
  }
  return {
      {"id", e.meta.id},
      {"task_id", e.meta.task_id},
      {"condition", to_string(e.meta.condition)},
      {"seed", e.meta.seed},
      {"fps", kRecordHz},
      {"finalized", e.finalized},
      {"frames", e.frames.size()},
      {"duration_s", e.duration()},
      {"subtask_spans", std::move(spans)},
      {"extra", e.meta.extra},
  };
}

std::string frame_file(const char* prefix, std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frames/%s_%06zu.png", prefix, index);
  return buf;
}

}  // namespace

double Episode::duration() const {
  return frames.size() < 2 ? 0.0 : static_cast<double>(frames.size() - 1) / kRecordHz;
}

EpisodeRecorder::EpisodeRecorder(const fs::path& root, EpisodeMeta meta) {
  if (meta.id.empty()) throw Error(ErrorCode::kInvalidInput, "episode id is empty");
  episode_.meta = std::move(meta);
  episode_.dir = root / ("episode_" + episode_.meta.id);
  std::error_code ec;
  if (fs::exists(episode_.dir, ec)) {
    throw Error(ErrorCode::kIo, episode_.dir.string() + " already exists");
  }
  fs::create_directories(episode_.dir / "frames", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + episode_.dir.string() + ": " + ec.message());
  write_meta();
  std::ofstream csv(episode_.dir / "frames.csv", std::ios::binary | std::ios::trunc);
  csv << header_line() << "\n";
  if (!csv.flush()) throw Error(ErrorCode::kIo, "cannot write frames.csv");
}

void EpisodeRecorder::write_meta() const { write_text(episode_.dir / "meta.json", meta_json(episode_).dump(2) + "\n"); }

void EpisodeRecorder::write_row(const FrameRecord& f) {
  std::string row = number(f.t);
  for (double v : f.state) row += "," + number(v);
  for (double v : f.action) row += "," + number(v);
  row += "," + quote(f.prompt) + "," + quote(f.external_image) + "," + quote(f.wrist_image) + "\n";
  const fs::path path = episode_.dir / "frames.csv";
  std::error_code ec;
  last_row_offset_ = fs::file_size(path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot stat frames.csv: " + ec.message());
  std::ofstream csv(path, std::ios::binary | std::ios::app);
  csv << row;
  if (!csv.flush()) throw Error(ErrorCode::kIo, "cannot append to frames.csv");
}

void EpisodeRecorder::append(FrameRecord frame, const RgbImage& external, const RgbImage& wrist) {
  append_encoded(std::move(frame), encode_png(external), encode_png(wrist));
}

void EpisodeRecorder::append_encoded(FrameRecord frame, const std::vector<std::uint8_t>& external_png,
                                     const std::vector<std::uint8_t>& wrist_png) {
  if (episode_.finalized) throw Error(ErrorCode::kState, "episode already finalized");
  if (frame.state.size() != kStateSize) {
    throw Error(ErrorCode::kDimension, "state has " + std::to_string(frame.state.size()) +
                                           " values, expected 7");
  }
  if (frame.action.size() != kActionSize) {
    throw Error(ErrorCode::kDimension, "action has " + std::to_string(frame.action.size()) +
                                           " values, expected 8");
  }
  if (!std::isfinite(frame.t) || (!episode_.frames.empty() && frame.t <= episode_.frames.back().t)) {
    throw Error(ErrorCode::kInvalidInput, "frame timestamps must increase");
  }
  const std::size_t index = episode_.frames.size();
  frame.external_image = frame_file("ext", index);
  frame.wrist_image = frame_file("wrist", index);
  write_file(episode_.dir / frame.external_image, external_png);
  write_file(episode_.dir / frame.wrist_image, wrist_png);
  write_row(frame);
  episode_.frames.push_back(std::move(frame));
}

void EpisodeRecorder::set_last_done(double done) {
  if (episode_.frames.empty()) throw Error(ErrorCode::kState, "no frame to mark");
  if (episode_.finalized) throw Error(ErrorCode::kState, "episode already finalized");
  FrameRecord& last = episode_.frames.back();
  last.action[kActionSize - 1] = done;
  std::error_code ec;
  fs::resize_file(episode_.dir / "frames.csv", last_row_offset_, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rewrite frames.csv: " + ec.message());
  write_row(last);
}

std::vector<SubtaskSpan> compute_spans(const std::vector<FrameRecord>& frames) {
  std::vector<SubtaskSpan> spans;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const bool boundary = i == 0 || frames[i].prompt != frames[i - 1].prompt ||
                          frames[i - 1].action.back() >= 0.5;
    if (boundary) spans.push_back({frames[i].prompt, i, i});
    spans.back().last = i;
  }
  return spans;
}

Episode EpisodeRecorder::finalize() {
  if (episode_.finalized) return episode_;
  if (episode_.frames.empty()) throw Error(ErrorCode::kState, "empty episode");
  episode_.spans = compute_spans(episode_.frames);
  episode_.finalized = true;
  write_meta();
  sync_path(episode_.dir / "frames.csv");
  sync_path(episode_.dir / "meta.json");
  sync_path(episode_.dir);
  return episode_;
}

Episode read_episode(const fs::path& dir) {
  Episode e;
  e.dir = dir;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text(dir / "meta.json"));
    e.meta.id = meta.at("id").get<std::string>();
    e.meta.task_id = meta.at("task_id").get<int>();
    const auto condition = parse_condition(meta.at("condition").get<std::string>());
    if (!condition) throw Error(ErrorCode::kFormat, "meta.json: unknown condition");
    e.meta.condition = *condition;
    e.meta.seed = meta.at("seed").get<std::uint64_t>();
    e.meta.extra = meta.value("extra", nlohmann::json::object());
    e.finalized = meta.value("finalized", false);
    if (e.finalized) {
      for (const auto& s : meta.at("subtask_spans")) {
        e.spans.push_back({s.at("subtask").get<std::string>(), s.at("first").get<std::size_t>(),
                           s.at("last").get<std::size_t>()});
      }
    }
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kFormat, dir.string() + "/meta.json: " + ex.what());
  }

  const fs::path csv_path = dir / "frames.csv";
  std::error_code ec;
  if (!fs::exists(csv_path, ec)) throw Error(ErrorCode::kState, dir.string() + ": no frames");
  std::vector<std::size_t> lines;
  bool truncated = false;
  const auto rows = parse_csv(read_text(csv_path), lines, truncated);
  if (rows.empty() || rows.size() == 1) throw Error(ErrorCode::kState, dir.string() + ": no frames");
  std::string header;
  for (std::size_t i = 0; i < rows[0].size(); ++i) header += (i ? "," : "") + rows[0][i];
  if (header != header_line()) throw Error(ErrorCode::kFormat, "frames.csv: unexpected header");

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != kColumns || (truncated && r + 1 == rows.size())) {
      throw Error(ErrorCode::kFormat, "frames.csv row " + std::to_string(lines[r]) + ": expected " +
                                          std::to_string(kColumns) + " complete columns, got " +
                                          std::to_string(row.size()));
    }
    FrameRecord f;
    f.t = parse_number(row[0], lines[r], "t");
    for (std::size_t i = 0; i < kStateSize; ++i) f.state.push_back(parse_number(row[1 + i], lines[r], "state"));
    for (std::size_t i = 0; i < kActionSize; ++i) {
      f.action.push_back(parse_number(row[1 + kStateSize + i], lines[r], "action"));
    }
    f.prompt = row[kColumns - 3];
    f.external_image = row[kColumns - 2];
    f.wrist_image = row[kColumns - 1];
    for (const auto* ref : {&f.external_image, &f.wrist_image}) {
      if (!fs::is_regular_file(dir / *ref, ec)) {
        throw Error(ErrorCode::kIo, "frames.csv row " + std::to_string(lines[r]) +
                                        ": dangling image ref '" + *ref + "'");
      }
    }
    e.frames.push_back(std::move(f));
  }
  return e;
}

std::vector<std::string> validate_episode(const Episode& e) {
  std::vector<std::string> out;
  if (e.frames.empty()) out.push_back("episode has no frames");
  const double period = 1.0 / kRecordHz;
  for (std::size_t i = 0; i < e.frames.size(); ++i) {
    const FrameRecord& f = e.frames[i];
    const std::string at = "frame " + std::to_string(i) + ": ";
    if (f.state.size() != kStateSize) out.push_back(at + "state has " + std::to_string(f.state.size()) + " values");
    if (f.action.size() != kActionSize) {
      out.push_back(at + "action has " + std::to_string(f.action.size()) + " values");
      continue;
    }
    const double done = f.action.back();
    if (done != 0.0 && done != 1.0) out.push_back(at + "done flag " + number(done) + " is not binary");
    if (f.action[6] < 0.0 || f.action[6] > 1.0) out.push_back(at + "gripper target outside [0, 1]");
    if (i > 0) {
      const double dt = f.t - e.frames[i - 1].t;
      if (dt <= 0.0) {
        out.push_back(at + "timestamp does not increase");
      } else if (std::abs(dt - period) > 0.2 * period) {
        out.push_back(at + "interval " + number(dt) + " s outside 1/15 s +-20%");
      }
    }
  }
  if (e.finalized) {
    std::size_t next = 0;
    for (const auto& s : e.spans) {
      if (s.first != next || s.last < s.first) {
        out.push_back("span '" + s.subtask + "' does not continue the partition at frame " + std::to_string(next));
        break;
      }
      next = s.last + 1;
    }
    if (next != e.frames.size()) out.push_back("spans do not cover all frames");
  }

  if (!e.dir.empty()) {
    const ImageSize ext_expected = e.meta.condition == Condition::kRgbRgb ? ImageSize{640, 480}
                                                                          : ImageSize{256, 256};
    const ImageSize wrist_expected{640, 480};
    for (std::size_t i = 0; i < e.frames.size(); ++i) {
      const auto check = [&](const std::string& ref, ImageSize expected) {
        try {
          const ImageSize got = png_dimensions(read_file(e.dir / ref));
          if (!(got == expected)) {
            out.push_back("frame " + std::to_string(i) + ": " + ref + " is " + std::to_string(got.width) + "x" +
                          std::to_string(got.height) + ", expected " + std::to_string(expected.width) + "x" +
                          std::to_string(expected.height));
          }
        } catch (const Error& ex) {
          out.push_back("frame " + std::to_string(i) + ": " + ref + ": " + ex.what());
        }
      };
      check(e.frames[i].external_image, ext_expected);
      check(e.frames[i].wrist_image, wrist_expected);
    }
  }
  return out;
}

double DatasetStats::prompt_share(const std::string& prompt) const {
  const auto it = prompt_frames.find(prompt);
  if (frames == 0 || it == prompt_frames.end()) return 0.0;
  return 100.0 * static_cast<double>(it->second) / static_cast<double>(frames);
}

nlohmann::json DatasetStats::to_json() const {
  nlohmann::json prompts = nlohmann::json::object();
  for (const auto& [p, n] : prompt_frames) prompts[p] = {{"frames", n}, {"share_percent", prompt_share(p)}};
  return {{"episodes", episodes},
          {"frames", frames},
          {"duration_s", duration_s},
          {"duration_min", duration_min()},
          {"prompts", std::move(prompts)}};
}

DatasetStats summarize(std::size_t episodes, const std::map<std::string, std::size_t>& prompt_frames) {
  DatasetStats s;
  s.episodes = episodes;
  s.prompt_frames = prompt_frames;
  for (const auto& [p, n] : prompt_frames) s.frames += n;
  s.duration_s = static_cast<double>(s.frames) / kRecordHz;
  return s;
}

std::vector<fs::path> list_episodes(const fs::path& root) {
  std::vector<fs::path> out;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(root, ec)) {
    if (entry.is_directory() && entry.path().filename().string().rfind("episode_", 0) == 0) {
      out.push_back(entry.path());
    }
  }
  if (ec) throw Error(ErrorCode::kIo, "cannot list " + root.string() + ": " + ec.message());
  std::sort(out.begin(), out.end());
  return out;
}

DatasetStats dataset_stats(const fs::path& root) {
  const auto dirs = list_episodes(root);
  if (dirs.empty()) throw Error(ErrorCode::kState, root.string() + " holds no episodes");
  std::map<std::string, std::size_t> prompts;
  for (const auto& d : dirs) {
    for (const auto& f : read_episode(d).frames) ++prompts[f.prompt];
  }
  return summarize(dirs.size(), prompts);
}

}  // namespace thermoact
