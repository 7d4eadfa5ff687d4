#include "thermoact/planner.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "thermoact/error.hpp"
#include "thermoact/policy.hpp"

namespace thermoact {
namespace {

std::string squash(std::string_view s) {
  std::string out;
  bool gap = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      gap = !out.empty();
      continue;
    }
    if (gap) out.push_back(' ');
    gap = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  while (!out.empty() && (out.back() == '.' || out.back() == '!')) out.pop_back();
  return out;
}

std::string celsius(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f C", t);
  return buf;
}

const SceneObject* extreme(const Scene& scene, ObjectClass cls, bool hottest) {
  const SceneObject* best = nullptr;
  for (const auto& o : scene.objects()) {
    if (o.cls != cls) continue;
    if (best == nullptr || (hottest ? o.temperature > best->temperature
                                    : o.temperature < best->temperature)) {
      best = &o;
    }
  }
  return best;
}

Plan make_plan(std::string analysis, std::initializer_list<std::string_view> lines) {
  Plan plan;
  plan.analysis = std::move(analysis);
  for (const auto line : lines) plan.subtasks.push_back(parse_subtask(line));
  return plan;
}

constexpr std::string_view kExample =
    "ANALYSIS:\n"
    "Three cups stand on the table. The middle cup is orange-yellow in the thermal view while the\n"
    "others match the background, so it holds the warm water. The apple lies on the fruit plate.\n"
    "PLAN:\n"
    "1. pick up [warm water] from [floor]\n"
    "2. place [warm water] to the [right side] of [empty plate]\n"
    "3. pick up [an apple] from [fruit plate]\n"
    "4. place [an apple] on the [empty plate]\n";

}  // namespace

void GuidelinePrompt::validate() const {
  if (role.empty() || environment.empty() || output_format.empty() || output_example.empty()) {
    throw Error(ErrorCode::kInvalidInput, "guideline prompt has an empty section");
  }
}

std::string GuidelinePrompt::render() const {
  validate();
  return "ROLE:\n" + role + "\n\nENVIRONMENT:\n" + environment + "\n\nOUTPUT FORMAT:\n" +
         output_format + "\n\nOUTPUT EXAMPLE:\n" + output_example;
}

GuidelinePrompt build_guideline_prompt(std::string_view task_context,
                                       const std::vector<std::string>& subtask_vocabulary) {
  if (subtask_vocabulary.empty()) {
    throw Error(ErrorCode::kInvalidInput, "sub-task vocabulary is empty");
  }
  GuidelinePrompt p;
  p.role =
      "You are the task planner of a tabletop robot arm with a parallel gripper. You read the "
      "user's request and the camera images, decide which objects are meant, and break the "
      "request into short commands that a low-level controller executes one at a time.";

  p.environment =
      "You receive two images. The first is a thermal camera view of the table rendered with "
      "the INFERNO palette over 20 to 35 C: dark purple = cold, bright yellow-white = hot. "
      "Objects at room temperature (about 21.5 C) blend into the background. The second image "
      "is an RGB view from the wrist camera. Use the thermal view to tell apart objects that "
      "look identical, such as a warm cup of water among cold ones or an overheated battery.";
  if (!task_context.empty()) p.environment += "\n" + std::string(task_context);

  p.output_format =
      "Reply with plain text in exactly this layout:\n"
      "ANALYSIS:\n<a few sentences on what you see and which objects you chose>\n"
      "PLAN:\n1. <command>\n2. <command>\n...\n"
      "Each command must use one of these forms, with object names in square brackets:\n";
  for (const auto& v : subtask_vocabulary) p.output_format += "  " + v + "\n";
  p.output_format += "Number the commands from 1 without gaps. Do not add other text.";

  p.output_example = std::string(kExample);
  return p;
}

void PlannerRequest::validate() const {
  guideline.validate();
  if (external_pseudocolor.width() != kPseudocolorSize ||
      external_pseudocolor.height() != kPseudocolorSize) {
    throw Error(ErrorCode::kDimension, "external image must be 256x256");
  }
  if (wrist_rgb.width() != 640 || wrist_rgb.height() != 480) {
    throw Error(ErrorCode::kDimension, "wrist image must be 640x480");
  }
}

nlohmann::json PlannerRequest::to_json() const {
  validate();
  const std::string prompt = guideline.render();
  return {
      {"sections",
       {{"role", guideline.role},
        {"environment", guideline.environment},
        {"output_format", guideline.output_format},
        {"output_example", guideline.output_example}}},
      {"prompt", prompt},
      {"user_instruction", user_instruction},
      {"images",
       {{"external_pseudocolor", base64_encode(encode_png(external_pseudocolor))},
        {"wrist_rgb", base64_encode(encode_png(wrist_rgb))}}},
      {"messages",
       nlohmann::json::array({{{"role", "system"}, {"content", prompt}},
                              {{"role", "user"}, {"content", user_instruction}}})},
  };
}

std::optional<int> match_task_instruction(std::string_view instruction) {
  const std::string wanted = squash(instruction);
  for (int task = 1; task <= kNumTasks; ++task) {
    if (squash(task_instruction(task)) == wanted) return task;
  }
  return std::nullopt;
}

Plan mock_plan(const Scene& scene, std::string_view user_instruction) {
  const auto task = match_task_instruction(user_instruction);
  if (!task) {
    throw Error(ErrorCode::kPlanning, "unrecognized instruction '" + std::string(user_instruction) + "'");
  }
  switch (*task) {
    case 1: {
      const SceneObject* cup = extreme(scene, ObjectClass::kCup, true);
      if (cup == nullptr || cup->temperature < kWarmCupMin) {
        throw Error(ErrorCode::kPlanning, "no warm cup");
      }
      return make_plan(cup->id + " is the warmest cup at " + celsius(cup->temperature) +
                           "; it holds the warm water. The apple is on the fruit plate.",
                       {"pick up [warm water] from [floor]",
                        "place [warm water] to the [right side] of [empty plate]",
                        "pick up [an apple] from [fruit plate]",
                        "place [an apple] on the [empty plate]"});
    }
    case 2: {
      const SceneObject* coke = extreme(scene, ObjectClass::kCokeCan, false);
      if (coke == nullptr) throw Error(ErrorCode::kPlanning, "no coke in the scene");
      if (coke->temperature <= kColdCokeMax) {
        return make_plan(coke->id + " is already cold at " + celsius(coke->temperature) +
                             "; deliver it directly.",
                         {"pick up [coke] from [floor]",
                          "place [coke] to the [right side] of [empty plate]"});
      }
      return make_plan("No coke is colder than " + celsius(kColdCokeMax) +
                           " (coldest " + coke->id + " at " + celsius(coke->temperature) +
                           "); serve it with ice from the ice maker.",
                       {"pick up [coke] from [floor]",
                        "place [coke] to the [right side] of [empty plate]",
                        "press [the button] on [ice maker]",
                        "pick up [ice cup] from [ice maker]",
                        "place [ice cup] to the [right side] of [empty plate]"});
    }
    case 3: {
      std::string payload;
      for (const auto& o : scene.objects()) {
        if (o.cls == ObjectClass::kScoop) payload = o.contents;
      }
      if (payload.empty()) throw Error(ErrorCode::kPlanning, "no loaded scoop");
      const std::string cup = payload == "tea_bag" ? "the hot water cup" : "the coke cup";
      return make_plan("The scoop holds " + display_name(*parse_object_class(payload)) +
                           ", which belongs in " + cup + ".",
                       {"pick up [the scoop] from [floor]",
                        "pour [scoop] into the [coke/hot water]"});
    }
    case 4: {
      const SceneObject* battery = extreme(scene, ObjectClass::kBattery, true);
      if (battery == nullptr || battery->temperature < scene.ambient() + kOverheatMargin) {
        throw Error(ErrorCode::kPlanning, "no overheated battery");
      }
      return make_plan(battery->id + " reads " + celsius(battery->temperature) +
                           " on the moving belt.",
                       {"pick up [overheated battery]"});
    }
    case 5: {
      const SceneObject* hazard = nullptr;
      for (const auto& o : scene.objects()) {
        const bool appliance = o.cls == ObjectClass::kStraightener || o.cls == ObjectClass::kIceMaker;
        if (appliance && o.powered && o.temperature >= kHazardMin) {
          hazard = &o;
          break;
        }
      }
      if (hazard != nullptr) {
        Plan plan = make_plan(hazard->label + " is on and hot at " + celsius(hazard->temperature) +
                                  "; switch it off before tidying the wire.",
                              {"pick up [unplugged wire] from [floor]",
                               "place [unplugged wire] to [power strip]"});
        plan.subtasks.insert(plan.subtasks.begin(), SubTask::turn_off(hazard->label));
        return plan;
      }
      return make_plan("Nothing near the power strip is hot; tidy the wire.",
                       {"pick up [unplugged wire] from [floor]",
                        "place [unplugged wire] to [power strip]"});
    }
    default: break;
  }
  throw Error(ErrorCode::kPlanning, "unrecognized instruction");
}

PlannerConfig PlannerConfig::from_json(const nlohmann::json& j) {
  PlannerConfig c;
  try {
    c.backend = j.value("backend", c.backend);
    c.endpoint = j.value("endpoint", c.endpoint);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("planner config: ") + e.what());
  }
  return c;
}

PlanningFunction select_backend(const PlannerConfig& config) {
  if (config.backend == "mock") {
    return [](const Scene& scene, std::string_view instruction) { return mock_plan(scene, instruction); };
  }
  if (config.backend != "remote") {
    throw Error(ErrorCode::kConfig, "unknown planner backend '" + config.backend + "'");
  }
  if (config.endpoint.empty()) throw Error(ErrorCode::kConfig, "remote planner needs an endpoint");
  if (!(config.timeout_s > 0.0)) throw Error(ErrorCode::kConfig, "planner timeout must be positive");
  std::string key;
  if (const char* v = std::getenv(config.api_key_env.c_str())) key = v;
  return [endpoint = config.endpoint, timeout = config.timeout_s, key](
             const Scene& scene, std::string_view instruction) {
    PlannerRequest request;
    request.user_instruction = std::string(instruction);
    // The planner always gets the thermal view, whatever the executor sees.
    request.external_pseudocolor =
        thermal_to_pseudocolor(render_thermal(scene, scene.camera(CameraKind::kExternal, true)));
    request.wrist_rgb = render_rgb(scene, scene.camera(CameraKind::kWrist, false));
    request.guideline = build_guideline_prompt({});
    return remote_plan(request, endpoint, timeout, key);
  };
}

}  // namespace thermoact
