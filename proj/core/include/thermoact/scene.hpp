#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "thermoact/control.hpp"
#include "thermoact/image.hpp"
#include "thermoact/kinematics.hpp"
#include "thermoact/thermal.hpp"

namespace thermoact {

enum class ObjectClass {
  kCup,
  kCokeCan,
  kApple,
  kFruitOther,
  kPlate,
  kBattery,
  kStraightener,
  kWire,
  kPowerStrip,
  kIceMaker,
  kIceCup,
  kScoop,
  kTeaBag,
  kLemon,
  kButton,
};

/// snake_case identifier, e.g. "coke_can".
std::string_view to_string(ObjectClass c);
/// Words as an operator would say them, e.g. "coke can".
std::string display_name(ObjectClass c);
std::optional<ObjectClass> parse_object_class(std::string_view text);
bool is_graspable(ObjectClass c);

struct Shape {
  enum class Kind { kSphere, kBox, kCylinder };
  Kind kind = Kind::kSphere;
  /// Sphere: (radius, -, -). Box: half extents. Cylinder: (radius, -, half height).
  Eigen::Vector3d dims = Eigen::Vector3d::Zero();

  static Shape sphere(double radius);
  static Shape box(double hx, double hy, double hz);
  static Shape cylinder(double radius, double half_height);

  double half_height() const;
  /// Radius of the smallest enclosing sphere.
  double bounding_radius() const;
  /// Horizontal footprint radius.
  double footprint_radius() const;
};

struct SceneObject {
  std::string id;
  ObjectClass cls = ObjectClass::kCup;
  /// What the object looks like to an RGB observer ("water", "coke", ...).
  std::string label;
  Shape shape;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double yaw = 0.0;
  double temperature = 21.5;
  double tau = 600.0;
  bool powered = false;
  /// Heater target while powered.
  double heat_setpoint = 21.5;
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  /// Offset from the tool point while held.
  std::optional<Eigen::Vector3d> grasp_offset;
  /// Press point or pour point relative to `position`, if the object has one.
  std::optional<Eigen::Vector3d> interaction_offset;
  /// Buttons: id of the appliance they operate.
  std::string parent;
  /// Scoop payload ("tea_bag", "lemon") or what a container received by pouring.
  std::string contents;
  /// Appliance activations (button presses, power toggles).
  int event_count = 0;

  bool attached() const noexcept { return grasp_offset.has_value(); }
  std::optional<Eigen::Vector3d> interaction_point() const;
  double top_z() const { return position.z() + shape.half_height(); }
};

/// Pinhole camera; orientation columns are the camera's right, down and
/// forward axes in world coordinates.
struct CameraModel {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();
  double hfov_deg = 60.0;
  int width = kThermalWidth;
  int height = kThermalHeight;

  static CameraModel look_at(const Eigen::Vector3d& eye, const Eigen::Vector3d& target, int width,
                             int height, double hfov_deg = 60.0);
  double focal_px() const;
  Eigen::Vector3d ray_direction(double px, double py) const;
};

enum class CameraKind { kExternal, kWrist };

struct SceneConfig {
  double ambient = 21.5;
  /// Thermal render noise, deg C; zero disables noise.
  double sensor_noise_sigma = 0.3;
};

class Scene {
 public:
  Scene() = default;
  Scene(int task_id, std::uint64_t seed, const SceneConfig& config = {});

  int task_id() const noexcept { return task_id_; }
  std::uint64_t seed() const noexcept { return seed_; }
  double ambient() const noexcept { return ambient_; }
  double clock() const noexcept { return clock_; }
  std::uint64_t step_count() const noexcept { return step_count_; }
  double sensor_noise_sigma() const noexcept { return noise_sigma_; }
  void set_sensor_noise_sigma(double sigma) { noise_sigma_ = sigma; }

  const ArmModel& arm() const noexcept { return ArmModel::standard(); }
  const JointVector& joints() const noexcept { return joints_; }
  const JointVector& joint_targets() const noexcept { return joint_targets_; }
  double gripper() const noexcept { return gripper_; }
  double gripper_target() const noexcept { return gripper_target_; }
  /// Six joint angles followed by the gripper aperture.
  std::array<double, 7> state() const;
  Eigen::Vector3d tool_point() const;
  Eigen::Isometry3d tool_pose() const;

  const std::vector<SceneObject>& objects() const noexcept { return objects_; }
  const SceneObject* find(std::string_view id) const;
  SceneObject* find_mutable(std::string_view id);
  const SceneObject* attached_object() const;
  SceneObject& add_object(SceneObject object);

  /// Direct state setters for scenario construction and teleop.
  void set_joints(const JointVector& q);
  void set_gripper(double aperture);

  CameraModel camera(CameraKind kind, bool thermal) const;

  /// Advance by dt under `command`. Throws (scene unchanged) on invalid input.
  void step(double dt, const Action& command);

  enum class InteractionKind { kPressButton, kTogglePower, kPour };
  /// Throws kRange (scene unchanged) when the tool is not within reach of the
  /// target's interaction point or the interaction does not apply.
  void interact(InteractionKind kind, std::string_view target_id);

  /// Names an observer could use for objects and places in this scene,
  /// including products the scene can create.
  std::vector<std::string> vocabulary() const;

  nlohmann::json to_json() const;

  static constexpr double kGraspRadius = 0.03;
  static constexpr double kGraspClose = 0.3;
  static constexpr double kReleaseOpen = 0.7;
  static constexpr double kGripperRate = 2.5;
  static constexpr double kPressRadius = 0.02;
  static constexpr double kInteractRadius = 0.04;
  static constexpr double kPourDwell = 1.0;
  static constexpr double kIceCupTemp = 2.0;

 private:
  void release_attached();
  double support_height(const Eigen::Vector3d& at, std::string_view except_id) const;
  void spawn_ice_cup(const SceneObject& maker);
  void apply_interaction(InteractionKind kind, SceneObject& target);

  int task_id_ = 0;
  std::uint64_t seed_ = 0;
  double ambient_ = 21.5;
  double noise_sigma_ = 0.3;
  double clock_ = 0.0;
  std::uint64_t step_count_ = 0;
  JointVector joints_{};
  JointVector joint_targets_{};
  double gripper_ = 1.0;
  double gripper_target_ = 1.0;
  std::vector<SceneObject> objects_;
  std::vector<std::string> pressed_;  // press points the tool is currently inside
  std::string pour_target_;
  double pour_dwell_ = 0.0;
  int spawn_counter_ = 0;
};

/// The five scenario layouts, deterministic in `seed`.
Scene scene_from_task(int task_id, std::uint64_t seed, const SceneConfig& config = {});

/// Canonical user instruction for each task.
std::string_view task_instruction(int task_id);
std::string_view task_title(int task_id);
inline constexpr int kNumTasks = 5;

/// Nearest-surface temperature per pixel, else ambient, plus seeded noise.
ThermalFrame render_thermal(const Scene& scene, const CameraModel& camera);
/// Flat per-class colors, distance shaded, gray background.
RgbImage render_rgb(const Scene& scene, const CameraModel& camera);
Rgb class_color(ObjectClass c);
inline constexpr Rgb kBackgroundColor{128, 128, 128};

/// Nearest hit along a ray; returns the object index and distance.
struct RayHit {
  std::size_t index = 0;
  double distance = 0.0;
};
std::optional<RayHit> cast_ray(const Scene& scene, const Eigen::Vector3d& origin,
                               const Eigen::Vector3d& direction);

}  // namespace thermoact
