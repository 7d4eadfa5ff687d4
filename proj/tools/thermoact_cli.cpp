#include <atomic>
#include <chrono>
#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "thermoact/dataset.hpp"
#include "thermoact/error.hpp"
#include "thermoact/gateway.hpp"
#include "thermoact/orchestrator.hpp"
#include "thermoact/planner.hpp"
#include "thermoact/thermal.hpp"

namespace fs = std::filesystem;
using namespace thermoact;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitPlanning = 3;

std::atomic<bool> g_interrupted{false};

void on_signal(int) { g_interrupted = true; }

Condition condition_arg(const std::string& text) {
  const auto c = parse_condition(text);
  if (!c) throw Error(ErrorCode::kConfig, "unknown condition '" + text + "'");
  return *c;
}

PlanningFunction planner_arg(const std::string& backend, const std::string& endpoint,
                             const std::string& config_path) {
  PlannerConfig config;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw Error(ErrorCode::kConfig, "cannot open planner config " + config_path);
    const auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::kConfig, "planner config is not a JSON object");
    config = PlannerConfig::from_json(j);
  }
  if (!backend.empty()) config.backend = backend;
  if (!endpoint.empty()) config.endpoint = endpoint;
  return select_backend(config);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

int convert_thermal(const std::string& in, const std::string& out, double lo, double hi) {
  const ThermalFrame frame = decode_raw(read_file(in));
  const RgbImage color = thermal_to_pseudocolor(frame, TempRange{lo, hi});
  write_file(out, encode_png(color));
  std::cout << nlohmann::json{{"in", in}, {"out", out}, {"width", color.width()}, {"height", color.height()}}.dump()
            << "\n";
  return 0;
}

struct RunArgs {
  int task = 1;
  std::string condition = "rgbt";
  int trials = 10;
  std::uint64_t seed = 0;
  std::string planner;
  std::string endpoint;
  std::string planner_config;
  std::string record;
  std::string report;
  int budget = kDefaultBudget;
  double flat_drift = kDefaultFlatDrift;
};

int run(const RunArgs& a) {
  const Condition condition = condition_arg(a.condition);
  TrialOptions options;
  options.planner = planner_arg(a.planner, a.endpoint, a.planner_config);
  options.budget = a.budget;
  options.flat_drift_sigma = a.flat_drift;

  std::vector<TrialResult> trials;
  for (int i = 0; i < a.trials; ++i) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(i);
    if (a.record.empty()) {
      trials.push_back(run_trial(a.task, condition, seed, options));
      continue;
    }
    EpisodeMeta meta;
    meta.id = "t" + std::to_string(a.task) + "_s" + std::to_string(seed) + "_" + std::string(to_string(condition));
    meta.task_id = a.task;
    meta.condition = condition;
    meta.seed = seed;
    EpisodeRecorder recorder(a.record, meta);
    TrialOptions recorded = options;
    recorded.recorder = &recorder;
    trials.push_back(run_trial(a.task, condition, seed, recorded));
    recorder.set_extra({{"trial", trials.back().to_json()}});
    if (recorder.size() > 0) recorder.finalize();
  }

  const SuccessTable table = tabulate(a.task, condition, trials);
  const Report report = render_report({table});
  std::cout << report.markdown;
  if (!a.report.empty()) {
    write_text(a.report, report.markdown);
    fs::path csv = a.report;
    csv.replace_extension(".csv");
    write_text(csv, report.csv);
  }
  for (const auto& t : trials) {
    if (!t.planning_error.empty()) {
      std::cerr << "planning failed for seed " << t.seed << ": " << t.planning_error << "\n";
      return kExitPlanning;
    }
  }
  return 0;
}

int demo(int task, int count, std::uint64_t seed, const std::string& out, const std::string& condition_text) {
  const Condition condition = condition_arg(condition_text);
  fs::create_directories(out);
  std::size_t frames = 0;
  int successes = 0;
  for (int i = 0; i < count; ++i) {
    const Episode ep = record_demonstration(task, seed + static_cast<std::uint64_t>(i), out, condition);
    frames += ep.frames.size();
    if (ep.meta.extra.contains("trial") && ep.meta.extra["trial"].value("end_to_end", false)) ++successes;
  }
  std::cout << nlohmann::json{{"episodes", count}, {"frames", frames}, {"successful", successes}, {"out", out}}.dump()
            << "\n";
  return 0;
}

int dataset_stats_cmd(const std::string& root) {
  std::cout << dataset_stats(root).to_json().dump(2) << "\n";
  return 0;
}

int dataset_validate_cmd(const std::string& root) {
  nlohmann::json report = nlohmann::json::array();
  bool clean = true;
  for (const auto& dir : list_episodes(root)) {
    nlohmann::json entry = {{"episode", dir.filename().string()}};
    try {
      const auto violations = validate_episode(read_episode(dir));
      entry["violations"] = violations;
      clean = clean && violations.empty();
    } catch (const Error& e) {
      entry["violations"] = {e.what()};
      clean = false;
    }
    report.push_back(std::move(entry));
  }
  std::cout << nlohmann::json{{"ok", clean}, {"episodes", report}}.dump(2) << "\n";
  return clean ? 0 : kExitFailure;
}

int serve(const std::string& bind, unsigned short port, int task, std::uint64_t seed, const std::string& record) {
  GatewayConfig config;
  config.task_id = task;
  config.seed = seed;
  config.record_root = record;
  if (!record.empty()) fs::create_directories(record);
  GatewayServer server(config);
  server.start(bind, port);
  std::cout << "gateway listening on " << bind << ":" << server.port() << std::endl;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(100));
  server.stop();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermal-aware manipulation toolkit"};
  app.require_subcommand(1);

  std::string in, out;
  double lo = 20.0, hi = 35.0;
  auto* convert = app.add_subcommand("convert-thermal", "Raw 16-bit thermal PNG to pseudocolor PNG");
  convert->add_option("in", in, "Raw thermal PNG")->required();
  convert->add_option("out", out, "Output pseudocolor PNG")->required();
  convert->add_option("--lo", lo, "Display window low, deg C");
  convert->add_option("--hi", hi, "Display window high, deg C");

  RunArgs run_args;
  auto* run_cmd = app.add_subcommand("run", "Run trials and print the success table");
  run_cmd->add_option("--task", run_args.task)->check(CLI::Range(1, kNumTasks));
  run_cmd->add_option("--condition", run_args.condition, "rgbt | rgb-rgb | flat");
  run_cmd->add_option("--trials", run_args.trials)->check(CLI::PositiveNumber);
  run_cmd->add_option("--seed", run_args.seed, "First seed");
  run_cmd->add_option("--planner", run_args.planner, "mock | remote");
  run_cmd->add_option("--endpoint", run_args.endpoint, "Remote planner URL");
  run_cmd->add_option("--planner-config", run_args.planner_config, "JSON planner config");
  run_cmd->add_option("--record", run_args.record, "Record each trial as an episode under DIR");
  run_cmd->add_option("--report", run_args.report, "Write markdown (and .csv) report");
  run_cmd->add_option("--budget", run_args.budget, "Control steps per sub-task")->check(CLI::PositiveNumber);
  run_cmd->add_option("--flat-drift", run_args.flat_drift, "FLAT joint drift, rad per control step")
      ->check(CLI::NonNegativeNumber);

  int demo_task = 1, demo_count = 50;
  std::uint64_t demo_seed = 0;
  std::string demo_out, demo_condition = "rgbt";
  auto* demo_cmd = app.add_subcommand("demo", "Record scripted demonstrations");
  demo_cmd->add_option("--task", demo_task)->check(CLI::Range(1, kNumTasks));
  demo_cmd->add_option("--count", demo_count)->check(CLI::PositiveNumber);
  demo_cmd->add_option("--seed", demo_seed, "First seed");
  demo_cmd->add_option("--condition", demo_condition);
  demo_cmd->add_option("--out", demo_out)->required();

  std::string dataset_root;
  auto* dataset = app.add_subcommand("dataset", "Inspect recorded episodes");
  dataset->require_subcommand(1);
  auto* stats = dataset->add_subcommand("stats", "Frame, duration and prompt statistics");
  stats->add_option("root", dataset_root)->required();
  auto* validate = dataset->add_subcommand("validate", "Check every episode");
  validate->add_option("root", dataset_root)->required();

  std::string bind = "127.0.0.1", serve_record;
  unsigned short port = 8080;
  int serve_task = 1;
  std::uint64_t serve_seed = 42;
  auto* serve_cmd = app.add_subcommand("serve", "Start the teleoperation gateway");
  serve_cmd->add_option("--bind", bind);
  serve_cmd->add_option("--port", port);
  serve_cmd->add_option("--task", serve_task)->check(CLI::Range(1, kNumTasks));
  serve_cmd->add_option("--seed", serve_seed);
  serve_cmd->add_option("--record", serve_record, "Episode directory for teleop recordings");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*convert) return convert_thermal(in, out, lo, hi);
    if (*run_cmd) return run(run_args);
    if (*demo_cmd) return demo(demo_task, demo_count, demo_seed, demo_out, demo_condition);
    if (*stats) return dataset_stats_cmd(dataset_root);
    if (*validate) return dataset_validate_cmd(dataset_root);
    if (*serve_cmd) return serve(bind, port, serve_task, serve_seed, serve_record);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::kConfig:
      case ErrorCode::kInvalidInput:
        return kExitConfig;
      case ErrorCode::kPlanning:
      case ErrorCode::kPlannerOutput:
        return kExitPlanning;
      default:
        return kExitFailure;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return 0;
}
