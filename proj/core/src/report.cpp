#include <algorithm>
#include <cstdio>
#include <map>

#include "thermoact/error.hpp"
#include "thermoact/orchestrator.hpp"

namespace thermoact {
namespace {

constexpr Condition kColumns[] = {Condition::kFlat, Condition::kRgbRgb, Condition::kRgbt};

std::string fixed1(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Report render_report(const std::vector<SuccessTable>& tables) {
  if (tables.empty()) throw Error(ErrorCode::kInvalidInput, "no tables to report");

  std::vector<int> tasks;
  for (const auto& t : tables) {
    if (std::find(tasks.begin(), tasks.end(), t.task_id) == tasks.end()) tasks.push_back(t.task_id);
  }
  std::sort(tasks.begin(), tasks.end());

  const auto find_table = [&](int task, Condition c) -> const SuccessTable* {
    for (const auto& t : tables) {
      if (t.task_id == task && t.condition == c) return &t;
    }
    return nullptr;
  };

  Report report;
  report.markdown = "| Task | Sub-task | FLAT | RGB_RGB | RGBT |\n|---|---|---|---|---|\n";
  report.csv = "task,subtask,condition,successes,attempts,rate\n";
  std::map<Condition, std::vector<double>> task_means;

  for (int task : tasks) {
    // Row order: the longest plan seen for this task, then any extras.
    std::vector<std::string> order;
    for (Condition c : kColumns) {
      if (const SuccessTable* t = find_table(task, c)) {
        for (const auto& r : t->rows) {
          if (std::find(order.begin(), order.end(), r.subtask) == order.end()) order.push_back(r.subtask);
        }
      }
    }
    bool first = true;
    for (const auto& subtask : order) {
      report.markdown += "| " + (first ? std::to_string(task) + ". " + std::string(task_title(task)) : "") +
                         " | " + subtask + " |";
      first = false;
      for (Condition c : kColumns) {
        const SuccessTable* t = find_table(task, c);
        const TableRow* row = nullptr;
        if (t != nullptr) {
          for (const auto& r : t->rows) {
            if (r.subtask == subtask) row = &r;
          }
        }
        report.markdown += " " + (row ? fixed1(row->rate()) : std::string("-")) + " |";
        if (row) {
          report.csv += std::to_string(task) + "," + csv_field(subtask) + "," +
                        std::string(to_string(c)) + "," + std::to_string(row->successes) + "," +
                        std::to_string(row->attempts) + "," + fixed1(row->rate()) + "\n";
        }
      }
      report.markdown += "\n";
    }
    report.markdown += "| | **Task " + std::to_string(task) + " average** |";
    for (Condition c : kColumns) {
      const SuccessTable* t = find_table(task, c);
      if (t == nullptr || t->rows.empty()) {
        report.markdown += " - |";
        continue;
      }
      const MeanSd avg = t->task_average();
      task_means[c].push_back(avg.mean);
      report.markdown += " " + fixed1(avg.mean) + " ± " + fixed1(avg.sd) + " |";
    }
    report.markdown += "\n| | end-to-end |";
    for (Condition c : kColumns) {
      const SuccessTable* t = find_table(task, c);
      report.markdown += " " + (t ? fixed1(t->end_to_end_rate()) : std::string("-")) + " |";
    }
    report.markdown += "\n";
  }

  report.markdown += "| | **Overall average** |";
  for (Condition c : kColumns) {
    const auto it = task_means.find(c);
    if (it == task_means.end()) {
      report.markdown += " - |";
      continue;
    }
    const MeanSd avg = aggregate(it->second);
    report.markdown += " " + fixed1(avg.mean) + " ± " + fixed1(avg.sd) + " |";
  }
  report.markdown += "\n";
  return report;
}

}  // namespace thermoact
