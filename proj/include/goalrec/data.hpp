#pragma once

// Human data: problem-solving episodes and Likert responses, read from
// comma-separated files with a header row. Times are integer milliseconds.
//
//   solve data:  participant_id,map_id,goal,step_index,action,think_time_ms,outcome
//   responses:   participant_id,instance_id,level
//
// `action` is U/D/L/R, or X for the step on which the participant declared the
// goal unsolvable. `outcome` is Solved, DeclaredUnsolvable or BudgetExhausted
// (an abandoned episode) and must agree across the rows of one episode.

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "goalrec/domain.hpp"
#include "goalrec/planner.hpp"

namespace goalrec {

struct SolveRecord {
  std::string participant_id;
  std::string map_id;
  Goal goal = Goal::A;
  std::size_t step_index = 0;
  std::optional<Action> action;  // nullopt: declared unsolvable
  long think_time_ms = 0;
  Outcome outcome = Outcome::Solved;

  friend bool operator==(const SolveRecord&, const SolveRecord&) = default;
};

struct SolveDataset {
  std::vector<SolveRecord> records;
};

struct ResponseRecord {
  std::string participant_id;
  std::string instance_id;
  int level = 1;

  friend bool operator==(const ResponseRecord&, const ResponseRecord&) = default;
};

struct ResponseDataset {
  std::vector<ResponseRecord> records;
};

// All rows of one participant solving one (map, goal), in step order.
struct HumanEpisode {
  std::string participant_id;
  std::vector<SolveRecord> steps;
  Outcome outcome = Outcome::Solved;

  double total_seconds() const {
    long ms = 0;
    for (const auto& s : steps) ms += s.think_time_ms;
    return static_cast<double>(ms) / 1000.0;
  }
};

inline std::vector<HumanEpisode> episodes_for(const SolveDataset& data, std::string_view map_id, Goal goal) {
  std::map<std::string, HumanEpisode> by_participant;
  for (const auto& r : data.records) {
    if (r.map_id != map_id || r.goal != goal) continue;
    auto& ep = by_participant[r.participant_id];
    ep.participant_id = r.participant_id;
    ep.outcome = r.outcome;
    ep.steps.push_back(r);
  }
  std::vector<HumanEpisode> out;
  for (auto& [id, ep] : by_participant) {
    std::sort(ep.steps.begin(), ep.steps.end(),
              [](const SolveRecord& a, const SolveRecord& b) { return a.step_index < b.step_index; });
    out.push_back(std::move(ep));
  }
  return out;
}

inline bool has_records(const SolveDataset& data, std::string_view map_id) {
  return std::any_of(data.records.begin(), data.records.end(),
                     [&](const SolveRecord& r) { return r.map_id == map_id; });
}

namespace detail {

struct CsvField {
  std::string_view text;
  std::size_t column = 1;  // 1-based character column where the field starts
};

[[noreturn]] inline void parse_fail(std::size_t line, std::size_t column, const std::string& what) {
  throw Error(ErrorKind::ParseError,
              "line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what);
}

inline std::vector<CsvField> split_csv(std::string_view line) {
  std::vector<CsvField> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const std::size_t end = comma == std::string_view::npos ? line.size() : comma;
    fields.push_back({trim(line.substr(start, end - start)), start + 1});
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename Int>
Int parse_int(const CsvField& f, std::size_t line, const char* name) {
  Int value{};
  auto [ptr, ec] = std::from_chars(f.text.data(), f.text.data() + f.text.size(), value);
  if (ec != std::errc() || ptr != f.text.data() + f.text.size() || f.text.empty()) {
    parse_fail(line, f.column, std::string(name) + " is not an integer: '" + std::string(f.text) + "'");
  }
  return value;
}

// Calls `row(fields, line_number)` for every data row after checking the header.
template <typename Row>
void read_csv(std::string_view text, const std::vector<std::string_view>& header, Row&& row) {
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t line = 0;
  bool seen_header = false;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (trim(raw).empty()) continue;
    auto fields = split_csv(raw);
    if (!seen_header) {
      if (fields.size() != header.size()) parse_fail(line, 1, "header must have " + std::to_string(header.size()) + " columns");
      for (std::size_t i = 0; i < header.size(); ++i) {
        if (fields[i].text != header[i]) {
          parse_fail(line, fields[i].column, "expected column '" + std::string(header[i]) + "'");
        }
      }
      seen_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      parse_fail(line, 1, "expected " + std::to_string(header.size()) + " fields, got " + std::to_string(fields.size()));
    }
    for (const auto& f : fields) {
      if (f.text.empty()) parse_fail(line, f.column, "empty field");
    }
    row(fields, line);
  }
  if (!seen_header) parse_fail(line + 1, 1, "missing header row");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::optional<Outcome> outcome_from_string(std::string_view s) {
  if (s == "Solved") return Outcome::Solved;
  if (s == "DeclaredUnsolvable") return Outcome::DeclaredUnsolvable;
  if (s == "BudgetExhausted") return Outcome::BudgetExhausted;
  return std::nullopt;
}

}  // namespace detail

inline SolveDataset parse_solve_data(std::string_view text) {
  using namespace detail;
  SolveDataset data;
  // (participant, map, goal) -> (next expected step, outcome, line of first row)
  std::map<std::tuple<std::string, std::string, Goal>, std::pair<std::size_t, Outcome>> progress;
  read_csv(text,
           {"participant_id", "map_id", "goal", "step_index", "action", "think_time_ms", "outcome"},
           [&](const std::vector<CsvField>& f, std::size_t line) {
             SolveRecord r;
             r.participant_id = std::string(f[0].text);
             r.map_id = std::string(f[1].text);
             auto goal = goal_from_string(f[2].text);
             if (!goal) parse_fail(line, f[2].column, "goal must be A or B");
             r.goal = *goal;
             r.step_index = parse_int<std::size_t>(f[3], line, "step_index");
             if (f[4].text != "X") {
               auto a = f[4].text.size() == 1 ? action_from_char(f[4].text[0]) : std::nullopt;
               if (!a) parse_fail(line, f[4].column, "action must be U, D, L, R or X");
               r.action = *a;
             }
             if (!f[5].text.empty() && f[5].text[0] == '-') parse_fail(line, f[5].column, "negative think time");
             r.think_time_ms = parse_int<long>(f[5], line, "think_time_ms");
             auto outcome = outcome_from_string(f[6].text);
             if (!outcome) parse_fail(line, f[6].column, "unknown outcome '" + std::string(f[6].text) + "'");
             r.outcome = *outcome;

             auto key = std::make_tuple(r.participant_id, r.map_id, r.goal);
             auto it = progress.find(key);
             const std::size_t expected = it == progress.end() ? 0 : it->second.first;
             if (r.step_index != expected) {
               parse_fail(line, f[3].column, "step_index " + std::to_string(r.step_index) + " breaks contiguity, expected " +
                                                 std::to_string(expected));
             }
             if (it != progress.end() && it->second.second != r.outcome) {
               parse_fail(line, f[6].column, "outcome differs from earlier rows of this episode");
             }
             progress[key] = {expected + 1, r.outcome};
             data.records.push_back(std::move(r));
           });
  return data;
}

inline ResponseDataset parse_responses(std::string_view text) {
  using namespace detail;
  ResponseDataset data;
  read_csv(text, {"participant_id", "instance_id", "level"}, [&](const std::vector<CsvField>& f, std::size_t line) {
    ResponseRecord r;
    r.participant_id = std::string(f[0].text);
    r.instance_id = std::string(f[1].text);
    r.level = parse_int<int>(f[2], line, "level");
    if (r.level < 1 || r.level > 6) parse_fail(line, f[2].column, "level must be in 1..6");
    data.records.push_back(std::move(r));
  });
  return data;
}

inline SolveDataset load_solve_data(const std::string& path) { return parse_solve_data(detail::read_file(path)); }
inline ResponseDataset load_responses(const std::string& path) { return parse_responses(detail::read_file(path)); }

inline std::string to_csv(const SolveDataset& data) {
  std::ostringstream out;
  out << "participant_id,map_id,goal,step_index,action,think_time_ms,outcome\n";
  for (const auto& r : data.records) {
    out << r.participant_id << ',' << r.map_id << ',' << to_char(r.goal) << ',' << r.step_index << ','
        << (r.action ? to_char(*r.action) : 'X') << ',' << r.think_time_ms << ',' << to_string(r.outcome) << '\n';
  }
  return out.str();
}

inline std::string to_csv(const ResponseDataset& data) {
  std::ostringstream out;
  out << "participant_id,instance_id,level\n";
  for (const auto& r : data.records) out << r.participant_id << ',' << r.instance_id << ',' << r.level << '\n';
  return out.str();
}

}  // namespace goalrec
