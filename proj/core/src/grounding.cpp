#include "thermoact/grounding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "thermoact/error.hpp"

namespace thermoact {
namespace {

std::string normalize(std::string_view text) {
  std::string out;
  bool gap = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      gap = !out.empty();
      continue;
    }
    if (gap) out.push_back(' ');
    gap = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  for (std::string_view article : {"the ", "an ", "a "}) {
    if (out.rfind(article, 0) == 0) {
      out.erase(0, article.size());
      break;
    }
  }
  return out;
}

std::vector<std::string> split_alternatives(std::string_view text) {
  std::vector<std::string> out;
  while (true) {
    const std::size_t slash = text.find('/');
    out.push_back(normalize(text.substr(0, slash)));
    if (slash == std::string_view::npos) return out;
    text.remove_prefix(slash + 1);
  }
}

constexpr std::string_view kHotWords[] = {"warm", "hot", "heated", "overheated", "active"};
constexpr std::string_view kColdWords[] = {"cold", "cool", "chilled"};

}  // namespace

ObjectQuery parse_query(std::string_view slot_text) {
  ObjectQuery query;
  query.noun = normalize(slot_text);
  const std::size_t space = query.noun.find(' ');
  if (space == std::string::npos) return query;
  const std::string_view first = std::string_view(query.noun).substr(0, space);
  const auto in = [&](const auto& words) {
    return std::find(std::begin(words), std::end(words), first) != std::end(words);
  };
  if (in(kHotWords)) {
    query.thermal = ObjectQuery::Thermal::kHot;
  } else if (in(kColdWords)) {
    query.thermal = ObjectQuery::Thermal::kCold;
  } else {
    return query;
  }
  query.noun.erase(0, space + 1);
  return query;
}

std::string select_alternative(const Scene& scene, std::string_view slot_text) {
  const auto alternatives = split_alternatives(slot_text);
  if (alternatives.size() == 1) return alternatives.front();

  std::string payload;
  if (const SceneObject* held = scene.attached_object(); held && !held->contents.empty()) {
    payload = held->contents;
  } else {
    for (const auto& o : scene.objects()) {
      if (o.cls == ObjectClass::kScoop && !o.contents.empty()) payload = o.contents;
    }
  }
  std::string_view wanted;
  if (payload == "tea_bag") wanted = "water";
  if (payload == "lemon") wanted = "coke";
  for (const auto& alt : alternatives) {
    if (!wanted.empty() && alt.find(wanted) != std::string::npos) return alt;
  }
  throw Error(ErrorCode::kResolution,
              "cannot choose between alternatives in '" + std::string(slot_text) + "'");
}

std::vector<std::string> matching_objects(const Scene& scene, std::string_view noun) {
  const std::string n = normalize(noun);
  std::vector<std::string> exact;
  std::vector<std::string> partial;
  for (const auto& o : scene.objects()) {
    const std::string label = normalize(o.label);
    if (label == n || display_name(o.cls) == n) {
      exact.push_back(o.id);
    } else if (!n.empty() && label.find(n) != std::string::npos) {
      partial.push_back(o.id);
    }
  }
  return exact.empty() ? partial : exact;
}

std::vector<std::string> tie_set(const Scene& scene, std::string_view slot_text, bool thermal_visible) {
  const ObjectQuery query = parse_query(select_alternative(scene, slot_text));
  const std::vector<std::string> ids = matching_objects(scene, query.noun);
  if (ids.empty()) {
    throw Error(ErrorCode::kResolution, "no object matches '" + std::string(slot_text) + "'");
  }
  const auto observed = [&](const std::string& id) {
    return thermal_visible ? scene.find(id)->temperature : scene.ambient();
  };
  // Without an adjective, the thermally most distinct object is the referent.
  const auto score = [&](const std::string& id) {
    const double t = observed(id);
    switch (query.thermal) {
      case ObjectQuery::Thermal::kHot: return t;
      case ObjectQuery::Thermal::kCold: return -t;
      case ObjectQuery::Thermal::kNone: return std::abs(t - scene.ambient());
    }
    return 0.0;
  };
  double best = -1e300;
  for (const auto& id : ids) best = std::max(best, score(id));
  std::vector<std::string> ties;
  for (const auto& id : ids) {
    if (score(id) >= best - kTieBand) ties.push_back(id);
  }
  return ties;
}

std::string resolve_object(const Scene& scene, std::string_view slot_text, bool thermal_visible,
                           std::mt19937_64& rng) {
  const auto ties = tie_set(scene, slot_text, thermal_visible);
  if (ties.size() == 1) return ties.front();
  std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
  return ties[pick(rng)];
}

}  // namespace thermoact
