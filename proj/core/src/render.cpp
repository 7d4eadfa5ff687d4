#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <random>

#include "thermoact/scene.hpp"

namespace thermoact {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double hit_sphere(const Eigen::Vector3d& center, double radius, const Eigen::Vector3d& o,
                  const Eigen::Vector3d& d) {
  const Eigen::Vector3d oc = o - center;
  const double b = oc.dot(d);
  const double c = oc.squaredNorm() - radius * radius;
  const double disc = b * b - c;
  if (disc < 0.0) return kInf;
  const double s = std::sqrt(disc);
  if (-b - s > 1e-9) return -b - s;
  if (-b + s > 1e-9) return -b + s;
  return kInf;
}

// Slab test in the box's yawed frame.
double hit_box(const SceneObject& obj, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  const Eigen::Matrix3d inv = Eigen::AngleAxisd(-obj.yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Eigen::Vector3d lo = inv * (o - obj.position);
  const Eigen::Vector3d ld = inv * d;
  double t0 = -kInf;
  double t1 = kInf;
  for (int i = 0; i < 3; ++i) {
    const double h = obj.shape.dims[i];
    if (std::abs(ld[i]) < 1e-12) {
      if (std::abs(lo[i]) > h) return kInf;
      continue;
    }
    double a = (-h - lo[i]) / ld[i];
    double b = (h - lo[i]) / ld[i];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
    if (t0 > t1) return kInf;
  }
  if (t0 > 1e-9) return t0;
  if (t1 > 1e-9) return t1;
  return kInf;
}

// Upright cylinder: side wall plus the two caps.
double hit_cylinder(const SceneObject& obj, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  const double r = obj.shape.dims.x();
  const double h = obj.shape.dims.z();
  const Eigen::Vector3d p = o - obj.position;
  double best = kInf;
  const double a = d.x() * d.x() + d.y() * d.y();
  if (a > 1e-12) {
    const double b = p.x() * d.x() + p.y() * d.y();
    const double c = p.x() * p.x() + p.y() * p.y() - r * r;
    const double disc = b * b - a * c;
    if (disc >= 0.0) {
      const double s = std::sqrt(disc);
      for (const double t : {(-b - s) / a, (-b + s) / a}) {
        if (t > 1e-9 && std::abs(p.z() + t * d.z()) <= h) {
          best = std::min(best, t);
          break;
        }
      }
    }
  }
  if (std::abs(d.z()) > 1e-12) {
    for (const double cap : {h, -h}) {
      const double t = (cap - p.z()) / d.z();
      if (t <= 1e-9 || t >= best) continue;
      const double x = p.x() + t * d.x();
      const double y = p.y() + t * d.y();
      if (x * x + y * y <= r * r) best = t;
    }
  }
  return best;
}

double intersect(const SceneObject& obj, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  if (hit_sphere(obj.position, obj.shape.bounding_radius(), o, d) == kInf &&
      (o - obj.position).norm() > obj.shape.bounding_radius()) {
    return kInf;
  }
  switch (obj.shape.kind) {
    case Shape::Kind::kSphere: return hit_sphere(obj.position, obj.shape.dims.x(), o, d);
    case Shape::Kind::kBox: return hit_box(obj, o, d);
    case Shape::Kind::kCylinder: return hit_cylinder(obj, o, d);
  }
  return kInf;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
  return h;
}

std::uint64_t bits(double v) {
  std::uint64_t out = 0;
  std::memcpy(&out, &v, sizeof out);
  return out;
}

}  // namespace

std::optional<RayHit> cast_ray(const Scene& scene, const Eigen::Vector3d& origin,
                               const Eigen::Vector3d& direction) {
  std::optional<RayHit> best;
  const auto& objects = scene.objects();
  for (std::size_t i = 0; i < objects.size(); ++i) {
    const double t = intersect(objects[i], origin, direction);
    if (t == kInf) continue;
    if (!best || t < best->distance) best = RayHit{i, t};
  }
  return best;
}

Rgb class_color(ObjectClass c) {
  switch (c) {
    case ObjectClass::kCup: return {235, 235, 240};
    case ObjectClass::kCokeCan: return {200, 20, 30};
    case ObjectClass::kApple: return {170, 30, 25};
    case ObjectClass::kFruitOther: return {240, 150, 30};
    case ObjectClass::kPlate: return {250, 250, 250};
    case ObjectClass::kBattery: return {40, 40, 45};
    case ObjectClass::kStraightener: return {90, 60, 120};
    case ObjectClass::kWire: return {20, 20, 20};
    case ObjectClass::kPowerStrip: return {220, 220, 210};
    case ObjectClass::kIceMaker: return {60, 110, 170};
    case ObjectClass::kIceCup: return {200, 230, 250};
    case ObjectClass::kScoop: return {170, 170, 175};
    case ObjectClass::kTeaBag: return {150, 110, 60};
    case ObjectClass::kLemon: return {245, 225, 40};
    case ObjectClass::kButton: return {230, 60, 60};
  }
  return kBackgroundColor;
}

ThermalFrame render_thermal(const Scene& scene, const CameraModel& camera) {
  ThermalFrame frame;
  frame.width = camera.width;
  frame.height = camera.height;
  frame.timestamp = scene.clock();
  frame.temps.assign(static_cast<std::size_t>(camera.width) * camera.height, scene.ambient());

  // Noise is a pure function of seed, step and viewpoint so renders are repeatable.
  std::uint64_t key = mix(scene.seed(), scene.step_count());
  for (int i = 0; i < 3; ++i) key = mix(key, bits(camera.position[i]));
  std::mt19937_64 rng(key);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double sigma = scene.sensor_noise_sigma();

  const auto& objects = scene.objects();
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const auto hit = cast_ray(scene, camera.position, camera.ray_direction(x + 0.5, y + 0.5));
      double t = hit ? objects[hit->index].temperature : scene.ambient();
      if (sigma > 0.0) t += sigma * noise(rng);
      frame.temps[static_cast<std::size_t>(y) * camera.width + x] = t;
    }
  }
  return frame;
}

RgbImage render_rgb(const Scene& scene, const CameraModel& camera) {
  RgbImage image(camera.width, camera.height, kBackgroundColor);
  const auto& objects = scene.objects();
  for (int y = 0; y < camera.height; ++y) {
    for (int x = 0; x < camera.width; ++x) {
      const auto hit = cast_ray(scene, camera.position, camera.ray_direction(x + 0.5, y + 0.5));
      if (!hit) continue;
      const Rgb base = class_color(objects[hit->index].cls);
      const double shade = std::clamp(1.15 - 0.25 * hit->distance, 0.5, 1.0);
      auto scale = [shade](std::uint8_t v) {
        return static_cast<std::uint8_t>(std::lround(v * shade));
      };
      image.set(x, y, {scale(base.r), scale(base.g), scale(base.b)});
    }
  }
  return image;
}

}  // namespace thermoact
