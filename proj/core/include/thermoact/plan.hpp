#pragma once

#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace thermoact {

enum class Verb { kPickUp, kPlace, kPress, kPour, kTurnOff };
/// How a placed object relates to its reference.
enum class Relation { kOn, kRightSide, kTo };

std::string_view to_string(Verb v);
std::string_view to_string(Relation r);

/// One bracketed command, e.g. `pick up [coke] from [floor]`.
///
/// `object` is the first bracket. `target` is the source (pick up, optional),
/// the reference (place), the appliance (press) or the destination (pour);
/// it is empty for turn off.
struct SubTask {
  Verb verb = Verb::kPickUp;
  std::string object;
  std::string target;
  Relation relation = Relation::kOn;

  static SubTask pick_up(std::string object, std::string source = {});
  static SubTask place(std::string object, Relation relation, std::string reference);
  static SubTask press(std::string object, std::string appliance);
  static SubTask pour(std::string object, std::string destination);
  static SubTask turn_off(std::string object);

  /// Named slots in bracket order, e.g. {("object","coke"),("source","floor")}.
  std::vector<std::pair<std::string, std::string>> slots() const;

  /// Throws kInvalidInput on empty or bracketed slot text, or a slot the verb
  /// does not take.
  void validate() const;

  friend bool operator==(const SubTask&, const SubTask&) = default;
};

/// Throws ParseError carrying the byte offset of the problem.
SubTask parse_subtask(std::string_view text);
/// Canonical text; parse_subtask(format_subtask(t)) == t.
std::string format_subtask(const SubTask& t);

struct Plan {
  std::string analysis;
  std::vector<SubTask> subtasks;

  friend bool operator==(const Plan&, const Plan&) = default;
};

/// Reads the `ANALYSIS:` / `PLAN:` document. Errors name the offending line.
Plan parse_plan_document(std::string_view doc);
std::string format_plan_document(const Plan& plan);

/// Warnings for slot texts that match nothing in `vocabulary`. Matching is
/// a case-insensitive substring test in either direction, per alternative of
/// a slash-separated slot.
std::vector<std::string> validate_plan(const Plan& plan, const std::set<std::string>& vocabulary);

/// The six command forms offered to a planner.
std::vector<std::string> default_subtask_vocabulary();

}  // namespace thermoact
