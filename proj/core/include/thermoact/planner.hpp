#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "thermoact/image.hpp"
#include "thermoact/plan.hpp"
#include "thermoact/scene.hpp"

namespace thermoact {

/// The four-part instruction sheet given to a planning model.
struct GuidelinePrompt {
  std::string role;
  std::string environment;
  std::string output_format;
  std::string output_example;

  /// Throws kInvalidInput if any section is empty.
  void validate() const;
  /// Sections under ROLE / ENVIRONMENT / OUTPUT FORMAT / OUTPUT EXAMPLE headers.
  std::string render() const;
};

/// Deterministic assembly. Throws kInvalidInput for an empty vocabulary.
GuidelinePrompt build_guideline_prompt(std::string_view task_context,
                                       const std::vector<std::string>& subtask_vocabulary =
                                           default_subtask_vocabulary());

struct PlannerRequest {
  std::string user_instruction;
  RgbImage external_pseudocolor;  // 256x256
  RgbImage wrist_rgb;             // 640x480
  GuidelinePrompt guideline;

  void validate() const;
  nlohmann::json to_json() const;
};

/// Which of the five task instructions `instruction` is, or nullopt.
std::optional<int> match_task_instruction(std::string_view instruction);

// Decision thresholds over ground-truth temperatures, deg C.
inline constexpr double kWarmCupMin = 26.0;
inline constexpr double kColdCokeMax = 19.0;
inline constexpr double kOverheatMargin = 10.0;
inline constexpr double kHazardMin = 45.0;

/// Rule-based planner reading true temperatures. Pure in (scene, instruction).
/// Throws kPlanning for an unknown instruction or a scene without a valid
/// target (e.g. "no warm cup").
Plan mock_plan(const Scene& scene, std::string_view user_instruction);

/// Sends the request to a chat-completion style endpoint (see
/// docs/remote_planner.md) and parses the reply, retrying once with a
/// correction note. Throws kNetwork/kTimeout, or PlannerOutputError after the
/// retry also fails.
Plan remote_plan(const PlannerRequest& request, const std::string& endpoint, double timeout_s,
                 const std::string& api_key = {});

struct PlannerConfig {
  std::string backend = "mock";  // "mock" | "remote"
  std::string endpoint;
  double timeout_s = 30.0;
  /// Environment variable holding a bearer token for the remote service.
  std::string api_key_env = "THERMOACT_API_KEY";

  /// Reads keys backend, endpoint, timeout_s, api_key_env.
  static PlannerConfig from_json(const nlohmann::json& j);
};

using PlanningFunction = std::function<Plan(const Scene&, std::string_view instruction)>;

/// Throws kConfig for an unknown backend or a remote backend without endpoint.
PlanningFunction select_backend(const PlannerConfig& config);

}  // namespace thermoact
