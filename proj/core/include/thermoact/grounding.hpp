#pragma once

#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "thermoact/scene.hpp"

namespace thermoact {

/// A slot text split into an optional thermal adjective and a noun phrase.
struct ObjectQuery {
  enum class Thermal { kNone, kHot, kCold };
  Thermal thermal = Thermal::kNone;
  std::string noun;
};

/// Lowercases, drops leading articles and peels one thermal adjective
/// ("warm", "hot", "overheated", "cold", ...).
ObjectQuery parse_query(std::string_view slot_text);

/// Picks one alternative of a slash-separated slot ("coke/hot water") by the
/// payload of the scoop in the scene: tea goes to hot water, lemon to coke.
/// Single-alternative text is returned unchanged.
std::string select_alternative(const Scene& scene, std::string_view slot_text);

/// Ids of objects whose label or class name matches the noun phrase.
std::vector<std::string> matching_objects(const Scene& scene, std::string_view noun);

/// Objects equally good for `slot_text` under the observer's modality. When
/// `thermal_visible` is false every object reads as ambient, so thermal
/// adjectives cannot discriminate. Temperatures within kTieBand are ties.
/// Throws kResolution when nothing matches.
std::vector<std::string> tie_set(const Scene& scene, std::string_view slot_text, bool thermal_visible);

/// One member of tie_set, uniformly at random when there is a tie.
std::string resolve_object(const Scene& scene, std::string_view slot_text, bool thermal_visible,
                           std::mt19937_64& rng);

inline constexpr double kTieBand = 0.5;

}  // namespace thermoact
