#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "thermoact/error.hpp"
#include "thermoact/scene.hpp"

namespace thermoact {
namespace {

struct Region {
  double x0, x1, y0, y1;
};

// Horizontal reach band around the base where the arm works comfortably.
constexpr double kMinRadius = 0.22;
constexpr double kMaxRadius = 0.52;
constexpr double kClearance = 0.03;

// Thrown when earlier placements leave no room; the whole layout is redrawn.
struct Crowded {};

class Layout {
 public:
  Layout(int task_id, std::uint64_t seed, int restart)
      : rng_(seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(task_id) * 1000003ull +
             static_cast<std::uint64_t>(restart) * 0xD1B54A32D192ED03ull) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  int pick(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

  /// Rejection-samples a free spot in `region` for a footprint of `radius`.
  Eigen::Vector2d place(const Region& region, double radius) {
    for (int attempt = 0; attempt < 2000; ++attempt) {
      const Eigen::Vector2d p(uniform(region.x0, region.x1), uniform(region.y0, region.y1));
      const double r = p.norm();
      if (r < kMinRadius || r > kMaxRadius) continue;
      bool free = true;
      for (const auto& [q, qr] : taken_) {
        if ((p - q).norm() < radius + qr + kClearance) {
          free = false;
          break;
        }
      }
      if (!free) continue;
      taken_.emplace_back(p, radius);
      return p;
    }
    throw Crowded{};
  }

  void reserve(const Eigen::Vector2d& p, double radius) { taken_.emplace_back(p, radius); }

 private:
  std::mt19937_64 rng_;
  std::vector<std::pair<Eigen::Vector2d, double>> taken_;
};

SceneObject make(std::string id, ObjectClass cls, std::string label, Shape shape,
                 const Eigen::Vector2d& xy, double ambient, double yaw = 0.0) {
  SceneObject o;
  o.id = std::move(id);
  o.cls = cls;
  o.label = std::move(label);
  o.shape = shape;
  o.position = {xy.x(), xy.y(), shape.half_height()};
  o.yaw = yaw;
  o.temperature = ambient;
  o.heat_setpoint = ambient;
  return o;
}

SceneObject make_cup(std::string id, std::string label, const Eigen::Vector2d& xy, double temp,
                     double ambient) {
  SceneObject cup = make(std::move(id), ObjectClass::kCup, std::move(label),
                         Shape::cylinder(0.035, 0.05), xy, ambient);
  cup.temperature = temp;
  cup.interaction_offset = Eigen::Vector3d(0.0, 0.0, 0.05 + 0.06);
  return cup;
}

Scene plate_scene(Layout& layout, Scene scene, const Region& empty_region) {
  const Shape plate = Shape::cylinder(0.09, 0.008);
  const Eigen::Vector2d at = layout.place(empty_region, plate.footprint_radius());
  // Keep the drop zone to the plate's right free.
  layout.reserve(at + Eigen::Vector2d(0.12, 0.0), 0.05);
  SceneObject p = make("plate_empty", ObjectClass::kPlate, "empty plate", plate, at, scene.ambient());
  scene.add_object(std::move(p));
  return scene;
}

Scene task1(Layout& layout, std::uint64_t seed, const SceneConfig& config) {
  Scene scene(1, seed, config);
  const double amb = scene.ambient();
  scene = plate_scene(layout, std::move(scene), {0.24, 0.32, 0.06, 0.22});

  const Shape plate = Shape::cylinder(0.09, 0.008);
  const Eigen::Vector2d fruit_at = layout.place({0.30, 0.46, -0.02, 0.34}, plate.footprint_radius());
  scene.add_object(make("plate_fruit", ObjectClass::kPlate, "fruit plate", plate, fruit_at, amb));
  const double spin = layout.uniform(0.0, 2.0 * M_PI);
  const int apple_slot = layout.pick(3);
  const char* others[] = {"orange", "peach"};
  int other = 0;
  for (int k = 0; k < 3; ++k) {
    const double a = spin + k * 2.0 * M_PI / 3.0;
    const Eigen::Vector2d xy = fruit_at + 0.05 * Eigen::Vector2d(std::cos(a), std::sin(a));
    SceneObject fruit = k == apple_slot
                            ? make("apple_1", ObjectClass::kApple, "apple", Shape::sphere(0.03), xy, amb)
                            : make("fruit_" + std::to_string(other + 1), ObjectClass::kFruitOther,
                                   others[other], Shape::sphere(0.03), xy, amb);
    if (k != apple_slot) ++other;
    fruit.position.z() = 0.016 + fruit.shape.half_height();
    scene.add_object(std::move(fruit));
  }

  const int warm = layout.pick(3);
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector2d xy = layout.place({0.24, 0.48, -0.36, -0.06}, 0.035);
    const double temp = k == warm ? layout.uniform(28.0, 32.0) : amb;
    scene.add_object(make_cup("cup_" + std::to_string(k + 1), "water", xy, temp, amb));
  }
  return scene;
}

Scene task2(Layout& layout, std::uint64_t seed, const SceneConfig& config) {
  Scene scene(2, seed, config);
  const double amb = scene.ambient();

  // Ice maker with its button on top; cups are dispensed 15 cm toward -y.
  const Shape maker_shape = Shape::box(0.07, 0.07, 0.10);
  const Eigen::Vector2d maker_at = layout.place({0.30, 0.38, 0.28, 0.33}, 0.10);
  layout.reserve(maker_at + Eigen::Vector2d(0.0, -0.15), 0.05);
  SceneObject maker = make("ice_maker_1", ObjectClass::kIceMaker, "ice maker", maker_shape, maker_at, amb);
  maker.interaction_offset = Eigen::Vector3d(-0.04, 0.0, 0.10 + 0.016);
  SceneObject button = make("button_1", ObjectClass::kButton, "button", Shape::box(0.015, 0.015, 0.008),
                            maker_at + Eigen::Vector2d(-0.04, 0.0), amb);
  button.position.z() = 0.20 + 0.008;
  button.interaction_offset = Eigen::Vector3d(0.0, 0.0, 0.008);
  button.parent = maker.id;
  scene.add_object(std::move(maker));
  scene.add_object(std::move(button));

  scene = plate_scene(layout, std::move(scene), {0.24, 0.28, -0.02, 0.04});

  const bool cold_branch = seed % 2 == 0;
  const int cold = layout.pick(3);
  for (int k = 0; k < 3; ++k) {
    const Eigen::Vector2d xy = layout.place({0.26, 0.48, -0.36, -0.14}, 0.033);
    SceneObject can = make("coke_" + std::to_string(k + 1), ObjectClass::kCokeCan, "coke",
                           Shape::cylinder(0.033, 0.06), xy, amb);
    if (cold_branch && k == cold) can.temperature = layout.uniform(15.0, 18.0);
    scene.add_object(std::move(can));
  }
  return scene;
}

Scene task3(Layout& layout, std::uint64_t seed, const SceneConfig& config) {
  Scene scene(3, seed, config);
  const double amb = scene.ambient();
  const Eigen::Vector2d scoop_at = layout.place({0.28, 0.45, -0.32, -0.10}, 0.063);
  SceneObject scoop = make("scoop_1", ObjectClass::kScoop, "scoop", Shape::box(0.06, 0.02, 0.015),
                           scoop_at, amb, layout.uniform(-0.5, 0.5));
  scoop.contents = seed % 2 == 0 ? "tea_bag" : "lemon";
  scene.add_object(std::move(scoop));

  const Eigen::Vector2d water_at = layout.place({0.28, 0.46, 0.05, 0.32}, 0.035);
  scene.add_object(make_cup("cup_water", "water", water_at, layout.uniform(45.0, 55.0), amb));
  const Eigen::Vector2d coke_at = layout.place({0.28, 0.46, 0.05, 0.32}, 0.035);
  scene.add_object(make_cup("cup_coke", "coke", coke_at, amb, amb));
  return scene;
}

Scene task4(Layout& layout, std::uint64_t seed, const SceneConfig& config) {
  Scene scene(4, seed, config);
  const double amb = scene.ambient();
  const double x = layout.uniform(0.36, 0.42);
  const double y0 = layout.uniform(-0.34, -0.28);
  const int hot = layout.pick(3);
  for (int k = 0; k < 3; ++k) {
    SceneObject b = make("battery_" + std::to_string(k + 1), ObjectClass::kBattery, "battery",
                         Shape::box(0.025, 0.012, 0.012), {x, y0 + 0.09 * k}, amb);
    b.velocity = Eigen::Vector3d(0.0, 0.02, 0.0);
    if (k == hot) b.temperature = 55.0;
    scene.add_object(std::move(b));
  }
  return scene;
}

Scene task5(Layout& layout, std::uint64_t seed, const SceneConfig& config) {
  Scene scene(5, seed, config);
  const double amb = scene.ambient();
  const Eigen::Vector2d strip_at = layout.place({0.30, 0.40, 0.14, 0.28}, 0.105);
  scene.add_object(make("power_strip_1", ObjectClass::kPowerStrip, "power strip",
                        Shape::box(0.10, 0.03, 0.02), strip_at, amb, layout.uniform(-0.3, 0.3)));

  const Eigen::Vector2d iron_at = layout.place({0.28, 0.44, -0.32, -0.14}, 0.115);
  SceneObject iron = make("straightener_1", ObjectClass::kStraightener, "hair straightener",
                          Shape::box(0.11, 0.025, 0.02), iron_at, amb, layout.uniform(-0.4, 0.4));
  iron.powered = true;
  iron.temperature = 70.0;
  iron.heat_setpoint = 70.0;
  iron.interaction_offset = Eigen::Vector3d(0.06, 0.0, 0.02);
  scene.add_object(std::move(iron));

  const Eigen::Vector2d wire_at = layout.place({0.26, 0.46, -0.08, 0.06}, 0.07);
  scene.add_object(make("wire_1", ObjectClass::kWire, "unplugged wire",
                        Shape::box(0.07, 0.006, 0.006), wire_at, amb, layout.uniform(-0.6, 0.6)));
  return scene;
}

}  // namespace

Scene scene_from_task(int task_id, std::uint64_t seed, const SceneConfig& config) {
  if (task_id < 1 || task_id > 5) {
    throw Error(ErrorCode::kInvalidInput, "unknown task id " + std::to_string(task_id));
  }
  for (int restart = 0; restart < 64; ++restart) {
    Layout layout(task_id, seed, restart);
    try {
      switch (task_id) {
        case 1: return task1(layout, seed, config);
        case 2: return task2(layout, seed, config);
        case 3: return task3(layout, seed, config);
        case 4: return task4(layout, seed, config);
        default: return task5(layout, seed, config);
      }
    } catch (const Crowded&) {
    }
  }
  throw Error(ErrorCode::kState, "scene layout could not place every object");
}

std::string_view task_instruction(int task_id) {
  switch (task_id) {
    case 1: return "Please bring me warm water and an apple";
    case 2: return "Give me a cold Coke";
    case 3: return "Select the appropriate cup for each object";
    case 4: return "Pick up overheated battery from conveyor belt";
    case 5: return "Organize the space near the power strip";
    default: throw Error(ErrorCode::kInvalidInput, "unknown task id " + std::to_string(task_id));
  }
}

std::string_view task_title(int task_id) {
  switch (task_id) {
    case 1: return "Bring warm water and an apple";
    case 2: return "Give me a cold Coke";
    case 3: return "Select the Appropriate Cup for Each Object";
    case 4: return "Pick up overheated battery from conveyor belt";
    case 5: return "Organize space near power strip";
    default: throw Error(ErrorCode::kInvalidInput, "unknown task id " + std::to_string(task_id));
  }
}

}  // namespace thermoact
