#include "thermoact/scene.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "thermoact/error.hpp"

namespace thermoact {
namespace {

struct ClassInfo {
  ObjectClass cls;
  std::string_view name;
  bool graspable;
};

constexpr ClassInfo kClasses[] = {
    {ObjectClass::kCup, "cup", true},
    {ObjectClass::kCokeCan, "coke_can", true},
    {ObjectClass::kApple, "apple", true},
    {ObjectClass::kFruitOther, "fruit_other", true},
    {ObjectClass::kPlate, "plate", false},
    {ObjectClass::kBattery, "battery", true},
    {ObjectClass::kStraightener, "straightener", false},
    {ObjectClass::kWire, "wire", true},
    {ObjectClass::kPowerStrip, "power_strip", false},
    {ObjectClass::kIceMaker, "ice_maker", false},
    {ObjectClass::kIceCup, "ice_cup", true},
    {ObjectClass::kScoop, "scoop", true},
    {ObjectClass::kTeaBag, "tea_bag", true},
    {ObjectClass::kLemon, "lemon", true},
    {ObjectClass::kButton, "button", false},
};

const ClassInfo& info(ObjectClass c) {
  for (const auto& ci : kClasses) {
    if (ci.cls == c) return ci;
  }
  return kClasses[0];
}

nlohmann::json from_vec(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

bool is_container(ObjectClass c) { return c == ObjectClass::kCup || c == ObjectClass::kIceCup; }

}  // namespace

std::string_view to_string(ObjectClass c) { return info(c).name; }

std::string display_name(ObjectClass c) {
  std::string s(info(c).name);
  std::replace(s.begin(), s.end(), '_', ' ');
  if (c == ObjectClass::kStraightener) return "hair straightener";
  if (c == ObjectClass::kFruitOther) return "fruit";
  return s;
}

std::optional<ObjectClass> parse_object_class(std::string_view text) {
  std::string s(text);
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char ch) { return ch == ' ' ? '_' : std::tolower(ch); });
  for (const auto& ci : kClasses) {
    if (ci.name == s) return ci.cls;
  }
  return std::nullopt;
}

bool is_graspable(ObjectClass c) { return info(c).graspable; }

Shape Shape::sphere(double radius) { return {Kind::kSphere, {radius, 0.0, 0.0}}; }
Shape Shape::box(double hx, double hy, double hz) { return {Kind::kBox, {hx, hy, hz}}; }
Shape Shape::cylinder(double radius, double half_height) {
  return {Kind::kCylinder, {radius, 0.0, half_height}};
}

double Shape::half_height() const {
  switch (kind) {
    case Kind::kSphere: return dims.x();
    case Kind::kBox:
    case Kind::kCylinder: return dims.z();
  }
  return 0.0;
}

double Shape::bounding_radius() const {
  switch (kind) {
    case Kind::kSphere: return dims.x();
    case Kind::kBox: return dims.norm();
    case Kind::kCylinder: return std::hypot(dims.x(), dims.z());
  }
  return 0.0;
}

double Shape::footprint_radius() const {
  switch (kind) {
    case Kind::kSphere:
    case Kind::kCylinder: return dims.x();
    case Kind::kBox: return std::hypot(dims.x(), dims.y());
  }
  return 0.0;
}

std::optional<Eigen::Vector3d> SceneObject::interaction_point() const {
  if (!interaction_offset) return std::nullopt;
  return position + Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()) * *interaction_offset;
}

CameraModel CameraModel::look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target,
                                 int width, int height, double hfov_deg) {
  const Eigen::Vector3d forward = (target - eye).normalized();
  Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
  if (std::abs(forward.dot(up)) > 0.999) up = Eigen::Vector3d::UnitY();
  const Eigen::Vector3d right = forward.cross(up).normalized();
  const Eigen::Vector3d down = forward.cross(right);
  CameraModel cam;
  cam.position = eye;
  cam.orientation.col(0) = right;
  cam.orientation.col(1) = down;
  cam.orientation.col(2) = forward;
  cam.hfov_deg = hfov_deg;
  cam.width = width;
  cam.height = height;
  return cam;
}

double CameraModel::focal_px() const {
  return 0.5 * width / std::tan(0.5 * hfov_deg * M_PI / 180.0);
}

Eigen::Vector3d CameraModel::ray_direction(double px, double py) const {
  const double f = focal_px();
  const Eigen::Vector3d local((px - 0.5 * width) / f, (py - 0.5 * height) / f, 1.0);
  return (orientation * local).normalized();
}

Scene::Scene(int task_id, std::uint64_t seed, const SceneConfig& config)
    : task_id_(task_id), seed_(seed), ambient_(config.ambient),
      noise_sigma_(config.sensor_noise_sigma) {}

std::array<double, 7> Scene::state() const {
  std::array<double, 7> s{};
  std::copy(joints_.q.begin(), joints_.q.end(), s.begin());
  s[6] = gripper_;
  return s;
}

Eigen::Vector3d Scene::tool_point() const { return forward_kinematics(arm(), joints_); }
Eigen::Isometry3d Scene::tool_pose() const { return forward_pose(arm(), joints_); }

const SceneObject* Scene::find(std::string_view id) const {
  for (const auto& o : objects_) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

SceneObject* Scene::find_mutable(std::string_view id) {
  for (auto& o : objects_) {
    if (o.id == id) return &o;
  }
  return nullptr;
}

const SceneObject* Scene::attached_object() const {
  for (const auto& o : objects_) {
    if (o.attached()) return &o;
  }
  return nullptr;
}

SceneObject& Scene::add_object(SceneObject object) {
  if (object.id.empty() || find(object.id) != nullptr) {
    throw Error(ErrorCode::kInvalidInput, "object id empty or duplicate: '" + object.id + "'");
  }
  if (!std::isfinite(object.temperature)) {
    throw Error(ErrorCode::kInvalidInput, "object temperature must be finite");
  }
  if (object.attached() && attached_object() != nullptr) {
    throw Error(ErrorCode::kState, "at most one object may be attached");
  }
  objects_.push_back(std::move(object));
  return objects_.back();
}

void Scene::set_joints(const JointVector& q) {
  if (!arm().within_limits(q)) {
    throw Error(ErrorCode::kDomain, "joint vector outside limits");
  }
  joints_ = q;
  joint_targets_ = q;
  if (const SceneObject* a = attached_object()) {
    SceneObject* held = find_mutable(a->id);
    held->position = tool_point() + *held->grasp_offset;
  }
}

void Scene::set_gripper(double aperture) {
  if (!(aperture >= 0.0 && aperture <= 1.0)) {
    throw Error(ErrorCode::kInvalidInput, "gripper aperture must lie in [0, 1]");
  }
  gripper_ = aperture;
  gripper_target_ = aperture;
}

CameraModel Scene::camera(CameraKind kind, bool thermal) const {
  if (kind == CameraKind::kExternal) {
    const Eigen::Vector3d eye(0.38, -0.50, 1.00);
    const Eigen::Vector3d target(0.38, 0.0, 0.0);
    return thermal ? CameraModel::look_at(eye, target, kThermalWidth, kThermalHeight)
                   : CameraModel::look_at(eye, target, 640, 480);
  }
  // Wrist camera: 5 cm behind the tool point, looking along the approach axis.
  const Eigen::Isometry3d pose = tool_pose();
  CameraModel cam;
  cam.position = pose * Eigen::Vector3d(0.0, 0.0, -0.05);
  cam.orientation = pose.linear();
  cam.width = 640;
  cam.height = 480;
  return cam;
}

double Scene::support_height(const Eigen::Vector3d& at, std::string_view except_id) const {
  double z = 0.0;
  for (const auto& o : objects_) {
    if (o.cls != ObjectClass::kPlate || o.id == except_id) continue;
    const double d = std::hypot(at.x() - o.position.x(), at.y() - o.position.y());
    if (d <= o.shape.footprint_radius()) z = std::max(z, o.top_z());
  }
  return z;
}

void Scene::release_attached() {
  for (auto& o : objects_) {
    if (!o.attached()) continue;
    o.grasp_offset.reset();
    o.position.z() = support_height(o.position, o.id) + o.shape.half_height();
  }
}

void Scene::spawn_ice_cup(const SceneObject& maker) {
  SceneObject cup;
  cup.id = "ice_cup_" + std::to_string(++spawn_counter_);
  cup.cls = ObjectClass::kIceCup;
  cup.label = "ice cup";
  cup.shape = Shape::cylinder(0.035, 0.05);
  cup.position = maker.position + Eigen::Vector3d(0.0, -0.15, 0.0);
  cup.position.z() = cup.shape.half_height();
  cup.temperature = kIceCupTemp;
  cup.interaction_offset = Eigen::Vector3d(0.0, 0.0, 0.05 + 0.06);
  objects_.push_back(std::move(cup));
}

void Scene::apply_interaction(InteractionKind kind, SceneObject& target) {
  switch (kind) {
    case InteractionKind::kPressButton: {
      SceneObject* appliance = &target;
      if (target.cls == ObjectClass::kButton) appliance = find_mutable(target.parent);
      if (appliance == nullptr || appliance->cls != ObjectClass::kIceMaker) {
        throw Error(ErrorCode::kRange, "'" + target.id + "' does not operate an ice maker");
      }
      ++appliance->event_count;
      const SceneObject maker = *appliance;  // spawning may reallocate objects_
      spawn_ice_cup(maker);
      return;
    }
    case InteractionKind::kTogglePower: {
      if (target.cls != ObjectClass::kStraightener && target.cls != ObjectClass::kIceMaker) {
        throw Error(ErrorCode::kRange, "'" + target.id + "' has no power switch");
      }
      target.powered = !target.powered;
      ++target.event_count;
      return;
    }
    case InteractionKind::kPour: {
      SceneObject* held = find_mutable(attached_object() ? attached_object()->id : "");
      if (held == nullptr || held->cls != ObjectClass::kScoop) {
        throw Error(ErrorCode::kRange, "pour requires a held scoop");
      }
      if (!is_container(target.cls)) {
        throw Error(ErrorCode::kRange, "'" + target.id + "' is not a container");
      }
      target.contents = held->contents;
      held->contents.clear();
      ++target.event_count;
      return;
    }
  }
}

void Scene::interact(InteractionKind kind, std::string_view target_id) {
  SceneObject* target = find_mutable(target_id);
  if (target == nullptr) {
    throw Error(ErrorCode::kInvalidInput, "unknown object '" + std::string(target_id) + "'");
  }
  if (kind == InteractionKind::kPour && attached_object() == nullptr) {
    throw Error(ErrorCode::kRange, "pour with nothing grasped");
  }
  const Eigen::Vector3d point = target->interaction_point().value_or(target->position);
  if ((tool_point() - point).norm() > kInteractRadius) {
    throw Error(ErrorCode::kRange, "tool not within reach of '" + target->id + "'");
  }
  const std::string id = target->id;
  apply_interaction(kind, *target);
  // The tool already sits on the press point; do not fire again on the next step.
  if ((kind == InteractionKind::kPressButton || kind == InteractionKind::kTogglePower) &&
      std::find(pressed_.begin(), pressed_.end(), id) == pressed_.end()) {
    pressed_.push_back(id);
  }
}

void Scene::step(double dt, const Action& command) {
  if (!(dt > 0.0 && dt <= 0.1)) {
    throw Error(ErrorCode::kInvalidInput, "dt must lie in (0, 0.1]");
  }
  command.validate(arm());

  joint_targets_ = command.joint_targets;
  gripper_target_ = command.gripper;

  const double max_dq = arm().max_joint_speed() * dt;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    joints_[i] += std::clamp(joint_targets_[i] - joints_[i], -max_dq, max_dq);
  }
  const double previous_aperture = gripper_;
  gripper_ += std::clamp(gripper_target_ - gripper_, -kGripperRate * dt, kGripperRate * dt);

  const Eigen::Vector3d tool = tool_point();
  for (auto& o : objects_) {
    if (o.attached()) o.position = tool + *o.grasp_offset;
  }

  if (gripper_ > kReleaseOpen) release_attached();

  if (previous_aperture >= kGraspClose && gripper_ < kGraspClose && attached_object() == nullptr) {
    SceneObject* best = nullptr;
    double best_d = kGraspRadius;
    for (auto& o : objects_) {
      if (!is_graspable(o.cls)) continue;
      const double d = (o.position - tool).norm();
      if (d <= best_d) {
        best = &o;
        best_d = d;
      }
    }
    if (best != nullptr) best->grasp_offset = best->position - tool;
  }

  for (auto& o : objects_) {
    if (!o.attached()) o.position += o.velocity * dt;
    const double setpoint = o.powered ? o.heat_setpoint : ambient_;
    o.temperature = setpoint + (o.temperature - setpoint) * std::exp(-dt / o.tau);
  }

  // Edge-triggered press points.
  std::vector<std::string> inside;
  std::vector<std::pair<InteractionKind, std::string>> fired;
  for (const auto& o : objects_) {
    if (o.cls != ObjectClass::kButton && o.cls != ObjectClass::kStraightener) continue;
    const auto point = o.interaction_point();
    if (!point || (tool - *point).norm() >= kPressRadius) continue;
    inside.push_back(o.id);
    if (std::find(pressed_.begin(), pressed_.end(), o.id) == pressed_.end()) {
      fired.emplace_back(o.cls == ObjectClass::kButton ? InteractionKind::kPressButton
                                                       : InteractionKind::kTogglePower,
                         o.id);
    }
  }
  pressed_ = std::move(inside);
  for (const auto& [kind, id] : fired) apply_interaction(kind, *find_mutable(id));

  // Pour: a held scoop with a payload dwelling over a container's pour point.
  const SceneObject* held = attached_object();
  std::string over;
  if (held != nullptr && held->cls == ObjectClass::kScoop && !held->contents.empty()) {
    for (const auto& o : objects_) {
      if (!is_container(o.cls)) continue;
      const auto point = o.interaction_point();
      if (point && (tool - *point).norm() < kInteractRadius) {
        over = o.id;
        break;
      }
    }
  }
  if (over.empty()) {
    pour_target_.clear();
    pour_dwell_ = 0.0;
  } else {
    pour_dwell_ = over == pour_target_ ? pour_dwell_ + dt : dt;
    pour_target_ = over;
    if (pour_dwell_ >= kPourDwell - 1e-9) {
      apply_interaction(InteractionKind::kPour, *find_mutable(over));
      pour_target_.clear();
      pour_dwell_ = 0.0;
    }
  }

  clock_ += dt;
  ++step_count_;
}

std::vector<std::string> Scene::vocabulary() const {
  std::set<std::string> words = {"floor", "table"};
  for (const auto& o : objects_) {
    words.insert(o.id);
    if (!o.label.empty()) words.insert(o.label);
    words.insert(display_name(o.cls));
    if (o.cls == ObjectClass::kIceMaker) words.insert("ice cup");
    if (!o.velocity.isZero()) words.insert("conveyor belt");
    if (o.cls == ObjectClass::kScoop && !o.contents.empty()) {
      words.insert(display_name(*parse_object_class(o.contents)));
    }
  }
  return {words.begin(), words.end()};
}

nlohmann::json Scene::to_json() const {
  nlohmann::json objects = nlohmann::json::array();
  for (const auto& o : objects_) {
    nlohmann::json j = {
        {"id", o.id},
        {"class", to_string(o.cls)},
        {"label", o.label},
        {"shape", {{"kind", o.shape.kind == Shape::Kind::kSphere ? "sphere"
                            : o.shape.kind == Shape::Kind::kBox  ? "box"
                                                                 : "cylinder"},
                   {"dims", from_vec(o.shape.dims)}}},
        {"position", from_vec(o.position)},
        {"yaw", o.yaw},
        {"temperature", o.temperature},
        {"tau", o.tau},
        {"powered", o.powered},
        {"heat_setpoint", o.heat_setpoint},
        {"velocity", from_vec(o.velocity)},
        {"attached", o.attached()},
        {"contents", o.contents},
        {"event_count", o.event_count},
    };
    if (o.grasp_offset) j["grasp_offset"] = from_vec(*o.grasp_offset);
    if (o.interaction_offset) j["interaction_offset"] = from_vec(*o.interaction_offset);
    if (!o.parent.empty()) j["parent"] = o.parent;
    objects.push_back(std::move(j));
  }
  return {
      {"task_id", task_id_},
      {"seed", seed_},
      {"ambient", ambient_},
      {"sensor_noise_sigma", noise_sigma_},
      {"clock", clock_},
      {"step_count", step_count_},
      {"arm",
       {{"joints", joints_.q},
        {"joint_targets", joint_targets_.q},
        {"gripper", gripper_},
        {"gripper_target", gripper_target_}}},
      {"objects", std::move(objects)},
  };
}

}  // namespace thermoact
