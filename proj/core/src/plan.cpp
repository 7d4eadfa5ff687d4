#include "thermoact/plan.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include "thermoact/error.hpp"

namespace thermoact {
namespace {

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

// Lowercase with runs of whitespace collapsed to one space.
std::string squash(std::string_view s) {
  std::string out;
  bool gap = false;
  for (char c : trim(s)) {
    if (is_space(c)) {
      gap = true;
      continue;
    }
    if (gap) out.push_back(' ');
    gap = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

struct Arg {
  std::string text;
  std::size_t offset;  // of the opening bracket
};

struct Scan {
  std::vector<Arg> args;
  std::vector<std::string> glue;  // glue[i] precedes args[i]; glue.back() trails
  std::vector<std::size_t> glue_offset;
};

Scan scan_arguments(std::string_view text, std::size_t pos) {
  Scan scan;
  std::size_t glue_start = pos;
  while (true) {
    const std::size_t open = text.find_first_of("[]", pos);
    if (open == std::string_view::npos) {
      scan.glue.push_back(squash(text.substr(glue_start)));
      scan.glue_offset.push_back(glue_start);
      return scan;
    }
    if (text[open] == ']') throw ParseError(open, "unbalanced ']'");
    scan.glue.push_back(squash(text.substr(glue_start, open - glue_start)));
    scan.glue_offset.push_back(glue_start);
    const std::size_t close = text.find_first_of("[]", open + 1);
    if (close == std::string_view::npos || text[close] == '[') {
      throw ParseError(open, "unbalanced '['");
    }
    const std::string_view inner = trim(text.substr(open + 1, close - open - 1));
    if (inner.empty()) throw ParseError(open, "empty argument");
    scan.args.push_back({std::string(inner), open});
    pos = close + 1;
    glue_start = pos;
  }
}

[[noreturn]] void arity_error(const Scan& scan, std::string_view text, std::string_view verb) {
  // Point at the first connective that does not fit, else at the end.
  for (std::size_t i = 1; i < scan.glue.size(); ++i) {
    if (!scan.glue[i].empty() || i < scan.args.size()) {
      throw ParseError(i < scan.args.size() ? scan.args[i].offset : scan.glue_offset[i],
                       "arguments do not fit '" + std::string(verb) + "'");
    }
  }
  throw ParseError(text.size(), "arguments do not fit '" + std::string(verb) + "'");
}

void check_slot(std::string_view role, const std::string& text) {
  if (text.empty()) throw Error(ErrorCode::kInvalidInput, std::string(role) + " slot is empty");
  if (text.find_first_of("[]") != std::string::npos) {
    throw Error(ErrorCode::kInvalidInput, std::string(role) + " slot contains a bracket");
  }
  if (trim(text).size() != text.size()) {
    throw Error(ErrorCode::kInvalidInput, std::string(role) + " slot has surrounding whitespace");
  }
  if (text.find_first_of("\r\n") != std::string::npos) {
    throw Error(ErrorCode::kInvalidInput, std::string(role) + " slot spans lines");
  }
}

std::string_view target_role(Verb v) {
  switch (v) {
    case Verb::kPickUp: return "source";
    case Verb::kPlace: return "reference";
    case Verb::kPress: return "appliance";
    case Verb::kPour: return "destination";
    case Verb::kTurnOff: return "";
  }
  return "";
}

}  // namespace

std::string_view to_string(Verb v) {
  switch (v) {
    case Verb::kPickUp: return "pick_up";
    case Verb::kPlace: return "place";
    case Verb::kPress: return "press";
    case Verb::kPour: return "pour";
    case Verb::kTurnOff: return "turn_off";
  }
  return "?";
}

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::kOn: return "on";
    case Relation::kRightSide: return "right_side";
    case Relation::kTo: return "to";
  }
  return "?";
}

SubTask SubTask::pick_up(std::string object, std::string source) {
  SubTask t{Verb::kPickUp, std::move(object), std::move(source), Relation::kOn};
  t.validate();
  return t;
}

SubTask SubTask::place(std::string object, Relation relation, std::string reference) {
  SubTask t{Verb::kPlace, std::move(object), std::move(reference), relation};
  t.validate();
  return t;
}

SubTask SubTask::press(std::string object, std::string appliance) {
  SubTask t{Verb::kPress, std::move(object), std::move(appliance), Relation::kOn};
  t.validate();
  return t;
}

SubTask SubTask::pour(std::string object, std::string destination) {
  SubTask t{Verb::kPour, std::move(object), std::move(destination), Relation::kOn};
  t.validate();
  return t;
}

SubTask SubTask::turn_off(std::string object) {
  SubTask t{Verb::kTurnOff, std::move(object), {}, Relation::kOn};
  t.validate();
  return t;
}

std::vector<std::pair<std::string, std::string>> SubTask::slots() const {
  std::vector<std::pair<std::string, std::string>> out = {{"object", object}};
  if (verb == Verb::kPlace) out.emplace_back("relation", std::string(to_string(relation)));
  if (!target.empty()) out.emplace_back(std::string(target_role(verb)), target);
  return out;
}

void SubTask::validate() const {
  check_slot("object", object);
  switch (verb) {
    case Verb::kPickUp:
      if (!target.empty()) check_slot("source", target);
      break;
    case Verb::kTurnOff:
      if (!target.empty()) throw Error(ErrorCode::kInvalidInput, "turn off takes one slot");
      break;
    default: check_slot(target_role(verb), target); break;
  }
  if (verb != Verb::kPlace && relation != Relation::kOn) {
    throw Error(ErrorCode::kInvalidInput, "only place takes a relation");
  }
}

SubTask parse_subtask(std::string_view text) {
  const std::size_t first_bracket = text.find_first_of("[]");
  const std::string_view head =
      text.substr(0, first_bracket == std::string_view::npos ? text.size() : first_bracket);
  std::size_t verb_offset = 0;
  while (verb_offset < head.size() && is_space(head[verb_offset])) ++verb_offset;

  if (first_bracket != std::string_view::npos && text[first_bracket] == ']') {
    throw ParseError(first_bracket, "unmatched ']'");
  }
  const std::string verb_text = squash(head);
  Verb verb;
  if (verb_text == "pick up") {
    verb = Verb::kPickUp;
  } else if (verb_text == "place") {
    verb = Verb::kPlace;
  } else if (verb_text == "press") {
    verb = Verb::kPress;
  } else if (verb_text == "pour") {
    verb = Verb::kPour;
  } else if (verb_text == "turn off") {
    verb = Verb::kTurnOff;
  } else if (verb_text.empty()) {
    throw ParseError(verb_offset, "missing verb");
  } else {
    throw ParseError(verb_offset, "unknown verb '" + verb_text + "'");
  }
  if (first_bracket == std::string_view::npos) {
    throw ParseError(text.size(), "missing bracketed argument");
  }

  const Scan scan = scan_arguments(text, first_bracket);
  const auto& a = scan.args;
  const auto& g = scan.glue;  // g[0] is the empty text between verb and first '['
  const auto fits = [&](std::size_t n, std::initializer_list<std::string_view> connectives) {
    if (a.size() != n) return false;
    std::size_t i = 1;
    for (const auto c : connectives) {
      if (g[i++] != c) return false;
    }
    return g.back().empty();
  };

  SubTask t;
  t.verb = verb;
  t.object = a.empty() ? std::string() : a[0].text;
  switch (verb) {
    case Verb::kPickUp:
      if (fits(1, {})) break;
      if (fits(2, {"from"})) {
        t.target = a[1].text;
        break;
      }
      arity_error(scan, text, "pick up [X] from [Y]");
    case Verb::kPlace:
      if (fits(2, {"on the"})) {
        t.target = a[1].text;
        t.relation = Relation::kOn;
        break;
      }
      if (fits(2, {"to"})) {
        t.target = a[1].text;
        t.relation = Relation::kTo;
        break;
      }
      if (fits(3, {"to the", "of"})) {
        if (squash(a[1].text) != "right side") {
          throw ParseError(a[1].offset, "unknown relation '" + a[1].text + "'");
        }
        t.target = a[2].text;
        t.relation = Relation::kRightSide;
        break;
      }
      arity_error(scan, text, "place [X] on the [Z]");
    case Verb::kPress:
      if (fits(2, {"on"})) {
        t.target = a[1].text;
        break;
      }
      arity_error(scan, text, "press [X] on [Y]");
    case Verb::kPour:
      if (fits(2, {"into the"})) {
        t.target = a[1].text;
        break;
      }
      arity_error(scan, text, "pour [X] into the [Y]");
    case Verb::kTurnOff:
      if (fits(1, {})) break;
      arity_error(scan, text, "turn off [X]");
  }
  return t;
}

std::string format_subtask(const SubTask& t) {
  t.validate();
  switch (t.verb) {
    case Verb::kPickUp:
      return t.target.empty() ? "pick up [" + t.object + "]"
                              : "pick up [" + t.object + "] from [" + t.target + "]";
    case Verb::kPlace:
      switch (t.relation) {
        case Relation::kOn: return "place [" + t.object + "] on the [" + t.target + "]";
        case Relation::kRightSide:
          return "place [" + t.object + "] to the [right side] of [" + t.target + "]";
        case Relation::kTo: return "place [" + t.object + "] to [" + t.target + "]";
      }
      break;
    case Verb::kPress: return "press [" + t.object + "] on [" + t.target + "]";
    case Verb::kPour: return "pour [" + t.object + "] into the [" + t.target + "]";
    case Verb::kTurnOff: return "turn off [" + t.object + "]";
  }
  return {};
}

namespace {

// Header keyword of a line with markdown decoration removed, plus any text
// after the colon.
std::pair<std::string, std::string_view> header_of(std::string_view line) {
  std::string_view s = trim(line);
  while (!s.empty() && (s.front() == '#' || s.front() == '*' || s.front() == '_')) s.remove_prefix(1);
  const std::size_t colon = s.find(':');
  if (colon == std::string_view::npos) return {};
  std::string key = squash(s.substr(0, colon));
  if (key != "analysis" && key != "plan") return {};
  std::string_view rest = s.substr(colon + 1);
  while (!rest.empty() && (rest.front() == '*' || rest.front() == '_')) rest.remove_prefix(1);
  return {key, trim(rest)};
}

}  // namespace

Plan parse_plan_document(std::string_view doc) {
  struct Line {
    std::string_view text;
    std::size_t offset;
    std::size_t number;
  };
  std::vector<Line> lines;
  for (std::size_t pos = 0, number = 1; pos <= doc.size(); ++number) {
    std::size_t end = doc.find('\n', pos);
    if (end == std::string_view::npos) end = doc.size();
    std::string_view text = doc.substr(pos, end - pos);
    if (!text.empty() && text.back() == '\r') text.remove_suffix(1);
    lines.push_back({text, pos, number});
    pos = end + 1;
  }

  enum class Section { kPreamble, kAnalysis, kPlan } section = Section::kPreamble;
  Plan plan;
  std::vector<std::string_view> analysis;
  int expected = 1;
  for (const Line& line : lines) {
    const std::string_view body = trim(line.text);
    if (body.rfind("```", 0) == 0) continue;
    const auto [key, rest] = header_of(body);
    if (key == "analysis" && section == Section::kPreamble) {
      section = Section::kAnalysis;
      if (!rest.empty()) analysis.push_back(rest);
      continue;
    }
    if (key == "plan" && section != Section::kPlan) {
      section = Section::kPlan;
      if (!rest.empty()) {
        throw ParseError(line.offset, "line " + std::to_string(line.number) +
                                          ": sub-tasks must start on the line after PLAN:");
      }
      continue;
    }
    if (section == Section::kAnalysis) {
      analysis.push_back(line.text);
      continue;
    }
    if (section != Section::kPlan || body.empty()) continue;

    std::size_t digits = 0;
    while (digits < body.size() && std::isdigit(static_cast<unsigned char>(body[digits]))) ++digits;
    const std::size_t body_offset = line.offset + static_cast<std::size_t>(body.data() - line.text.data());
    if (digits == 0 || digits >= body.size() || body[digits] != '.') {
      throw ParseError(body_offset, "line " + std::to_string(line.number) +
                                        ": expected a numbered sub-task like '1. ...'");
    }
    int number = 0;
    std::from_chars(body.data(), body.data() + digits, number);
    if (number != expected) {
      throw ParseError(body_offset, "gap at line " + std::to_string(line.number) + ": expected " +
                                        std::to_string(expected) + ", found " +
                                        std::to_string(number));
    }
    ++expected;
    std::string_view command = trim(body.substr(digits + 1));
    while (!command.empty() && (command.front() == '`' || command.front() == '*')) command.remove_prefix(1);
    while (!command.empty() && (command.back() == '`' || command.back() == '*')) command.remove_suffix(1);
    const std::size_t command_offset = line.offset + static_cast<std::size_t>(command.data() - line.text.data());
    try {
      plan.subtasks.push_back(parse_subtask(command));
    } catch (const ParseError& e) {
      throw ParseError(command_offset + e.offset(),
                       "line " + std::to_string(line.number) + ": " + e.message());
    }
  }
  if (section != Section::kPlan) throw ParseError(doc.size(), "missing PLAN: section");
  if (plan.subtasks.empty()) throw ParseError(doc.size(), "PLAN: section has no sub-tasks");

  // Drop blank lines and trailing spaces but keep the interior layout.
  while (!analysis.empty() && trim(analysis.back()).empty()) analysis.pop_back();
  std::size_t first = 0;
  while (first < analysis.size() && trim(analysis[first]).empty()) ++first;
  for (std::size_t i = first; i < analysis.size(); ++i) {
    std::string_view line = analysis[i];
    while (!line.empty() && is_space(line.back())) line.remove_suffix(1);
    if (i == first) line = trim(line);
    if (i > first) plan.analysis += '\n';
    plan.analysis += line;
  }
  return plan;
}

std::string format_plan_document(const Plan& plan) {
  if (plan.subtasks.empty()) throw Error(ErrorCode::kInvalidInput, "plan has no sub-tasks");
  std::string out = "ANALYSIS:\n";
  if (!plan.analysis.empty()) out += plan.analysis + "\n";
  out += "PLAN:\n";
  for (std::size_t i = 0; i < plan.subtasks.size(); ++i) {
    out += std::to_string(i + 1) + ". " + format_subtask(plan.subtasks[i]) + "\n";
  }
  return out;
}

std::vector<std::string> validate_plan(const Plan& plan, const std::set<std::string>& vocabulary) {
  std::vector<std::string> words;
  for (const auto& w : vocabulary) {
    if (!w.empty()) words.push_back(squash(w));
  }
  const auto matches = [&](const std::string& alternative) {
    return std::any_of(words.begin(), words.end(), [&](const std::string& w) {
      return alternative.find(w) != std::string::npos || w.find(alternative) != std::string::npos;
    });
  };
  std::vector<std::string> warnings;
  for (std::size_t i = 0; i < plan.subtasks.size(); ++i) {
    for (const auto& [role, text] : plan.subtasks[i].slots()) {
      if (role == "relation") continue;
      std::string_view rest = text;
      while (true) {
        const std::size_t slash = rest.find('/');
        std::string alt = squash(rest.substr(0, slash));
        for (std::string_view article : {"the ", "an ", "a "}) {
          if (alt.rfind(article, 0) == 0) {
            alt.erase(0, article.size());
            break;
          }
        }
        if (!alt.empty() && !matches(alt)) {
          warnings.push_back("sub-task " + std::to_string(i + 1) + ": " + role + " '" + alt +
                             "' matches nothing in the scene");
        }
        if (slash == std::string_view::npos) break;
        rest.remove_prefix(slash + 1);
      }
    }
  }
  return warnings;
}

std::vector<std::string> default_subtask_vocabulary() {
  return {
      "pick up [object] from [source]",
      "place [object] on the [reference]",
      "place [object] to the [right side] of [reference]",
      "press [button] on [appliance]",
      "pour [object] into the [container]",
      "turn off [appliance]",
  };
}

}  // namespace thermoact
