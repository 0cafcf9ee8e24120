#pragma once

// Instance suites, Likert handling, the prior x likelihood model grid and its
// scoring against responses, plus synthetic data generators used to exercise
// the pipeline when no human data is at hand.

#include <atomic>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "goalrec/recognizer.hpp"

namespace goalrec {

// ---------------------------------------------------------------------------
// Suites

// Key-step think time of an observation instance: a literal duration, or the
// simulated mean key-step time of the faster ("short") or slower ("long")
// goal, or the average of the two ("mean").
enum class ThinkKind { Millis, Short, Long, Mean };

struct ThinkSpec {
  ThinkKind kind = ThinkKind::Mean;
  long ms = 0;
};

struct SuiteInstance {
  std::string id;
  std::string map_id;
  InstanceType type = InstanceType::Prior;
  std::optional<std::string> pair_id;
  std::string variant;
  std::optional<Action> key_action;
  ThinkSpec think;
  std::vector<Action> replay;  // filler only

  bool scored() const { return type != InstanceType::Filler; }
};

struct InstanceSuite {
  std::map<std::string, GridMap> maps;  // by map id
  std::vector<SuiteInstance> instances;
  long forced_think_ms = 400;

  const GridMap& map_of(const SuiteInstance& inst) const { return maps.at(inst.map_id); }
  const SuiteInstance* find(std::string_view id) const {
    for (const auto& i : instances) {
      if (i.id == id) return &i;
    }
    return nullptr;
  }
};

namespace detail {

inline std::pair<std::size_t, std::size_t> line_col(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline GridMap load_map_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::DanglingReference, "map file not found: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  GridMap map = parse_map(ss.str());
  if (map.meta.id.empty()) map.meta.id = path.stem().string();
  return map;
}

inline std::string manifest_string(const nlohmann::json& obj, const char* key, const std::string& where,
                                   bool required = true) {
  if (!obj.contains(key)) {
    if (required) throw Error(ErrorKind::ParseError, where + ": missing field '" + key + "'");
    return {};
  }
  if (!obj[key].is_string()) throw Error(ErrorKind::ParseError, where + ": field '" + key + "' must be a string");
  return obj[key].get<std::string>();
}

}  // namespace detail

inline InstanceSuite parse_suite(std::string_view manifest, const std::filesystem::path& base_dir) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(manifest);
  } catch (const nlohmann::json::parse_error& e) {
    auto [line, col] = detail::line_col(manifest, e.byte > 0 ? e.byte - 1 : 0);
    throw Error(ErrorKind::ParseError,
                "line " + std::to_string(line) + ", column " + std::to_string(col) + ": invalid manifest");
  }
  if (!doc.is_object() || !doc.contains("instances") || !doc["instances"].is_array()) {
    throw Error(ErrorKind::ParseError, "manifest must be an object with an 'instances' array");
  }
  InstanceSuite suite;
  if (doc.contains("forced_think_ms")) {
    if (!doc["forced_think_ms"].is_number_integer() || doc["forced_think_ms"].get<long>() < 0) {
      throw Error(ErrorKind::ParseError, "forced_think_ms must be a non-negative integer");
    }
    suite.forced_think_ms = doc["forced_think_ms"].get<long>();
  }

  std::map<std::string, std::string> map_file_of_id;
  std::set<std::string> ids;
  std::size_t index = 0;
  for (const auto& item : doc["instances"]) {
    const std::string where = "instance " + std::to_string(index++);
    if (!item.is_object()) throw Error(ErrorKind::ParseError, where + ": must be an object");
    SuiteInstance inst;
    inst.id = detail::manifest_string(item, "id", where);
    if (!ids.insert(inst.id).second) throw Error(ErrorKind::ParseError, where + ": duplicate id " + inst.id);
    const std::string file = detail::manifest_string(item, "map", where);
    GridMap map = detail::load_map_file(base_dir / file);
    inst.map_id = map.meta.id;
    auto known = map_file_of_id.find(inst.map_id);
    if (known != map_file_of_id.end() && known->second != file) {
      throw Error(ErrorKind::ParseError, where + ": map id " + inst.map_id + " used by two files");
    }
    map_file_of_id[inst.map_id] = file;
    suite.maps.emplace(inst.map_id, map);

    auto type = instance_type_from_string(detail::manifest_string(item, "type", where));
    if (!type) throw Error(ErrorKind::ParseError, where + ": unknown type");
    inst.type = *type;
    inst.variant = detail::manifest_string(item, "variant", where, false);
    if (item.contains("pair_id")) inst.pair_id = detail::manifest_string(item, "pair_id", where);

    const bool observed = inst.type == InstanceType::Action || inst.type == InstanceType::EasyGoal ||
                          inst.type == InstanceType::CompetingPath;
    if (observed) {
      const std::string key = detail::manifest_string(item, "key_action", where);
      auto a = key.size() == 1 ? action_from_char(key[0]) : std::nullopt;
      if (!a) throw Error(ErrorKind::ParseError, where + ": key_action must be one of U, D, L, R");
      inst.key_action = *a;
      if (!inst.pair_id) throw Error(ErrorKind::ParseError, where + ": observation instance needs pair_id");
      if (!item.contains("think")) throw Error(ErrorKind::ParseError, where + ": missing field 'think'");
      const auto& t = item["think"];
      if (t.is_number_integer() && t.get<long>() >= 0) {
        inst.think = {ThinkKind::Millis, t.get<long>()};
      } else if (t == "short") {
        inst.think.kind = ThinkKind::Short;
      } else if (t == "long") {
        inst.think.kind = ThinkKind::Long;
      } else if (t == "mean") {
        inst.think.kind = ThinkKind::Mean;
      } else {
        throw Error(ErrorKind::ParseError, where + ": think must be milliseconds or short/long/mean");
      }
      std::vector<Action> obs = map.meta.forced_moves;
      obs.push_back(*inst.key_action);
      execute(map, map.start(), obs);
    } else if (item.contains("key_action")) {
      throw Error(ErrorKind::ParseError, where + ": key_action only applies to observation instances");
    }
    if (inst.type == InstanceType::Filler) {
      inst.replay = actions_from_string(detail::manifest_string(item, "replay", where, false));
      execute(map, map.start(), inst.replay);
    }
    suite.instances.push_back(std::move(inst));
  }

  for (const auto& inst : suite.instances) {
    if (!inst.pair_id) continue;
    const SuiteInstance* partner = suite.find(*inst.pair_id);
    if (!partner) throw Error(ErrorKind::DanglingReference, inst.id + ": pair_id " + *inst.pair_id + " does not resolve");
    if (partner->map_id != inst.map_id) {
      throw Error(ErrorKind::DanglingReference, inst.id + ": paired instance " + partner->id + " uses another map");
    }
  }
  return suite;
}

// A manifest file, a directory holding suite.json, or a bare directory of map
// files (one instance per map, typed by its header).
inline InstanceSuite load_suite(const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (fs::is_regular_file(path)) return parse_suite(detail::read_file(path.string()), path.parent_path());
  if (!fs::is_directory(path)) throw Error(ErrorKind::ParseError, "no suite at " + path.string());
  if (fs::exists(path / "suite.json")) return parse_suite(detail::read_file((path / "suite.json").string()), path);

  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(path)) {
    if (e.is_regular_file() && e.path().extension() == ".map") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  InstanceSuite suite;
  for (const auto& f : files) {
    GridMap map = detail::load_map_file(f);
    SuiteInstance inst;
    inst.id = map.meta.id;
    inst.map_id = map.meta.id;
    inst.type = map.meta.instance_type;
    inst.pair_id = map.meta.pair_id;
    if (!suite.maps.emplace(map.meta.id, map).second) {
      throw Error(ErrorKind::ParseError, "duplicate map id " + map.meta.id + " in " + f.string());
    }
    suite.instances.push_back(std::move(inst));
  }
  if (suite.instances.empty()) throw Error(ErrorKind::EmptyInput, "no map files under " + path.string());
  return suite;
}

// ---------------------------------------------------------------------------
// Observations of an instance

struct StimulusConfig {
  PlannerConfig planner;
  std::size_t n_sims = 100;
  TimingScale scale;
};

inline long think_ms_for(const InstanceSuite& suite, const SuiteInstance& inst, const StimulusConfig& stim,
                         BatchCache& cache) {
  if (inst.think.kind == ThinkKind::Millis) return inst.think.ms;
  const GridMap& map = suite.map_of(inst);
  const double a = cache.get(map, Goal::A, stim.planner, stim.n_sims)->key_step_iterations.mean;
  const double b = cache.get(map, Goal::B, stim.planner, stim.n_sims)->key_step_iterations.mean;
  double iterations = 0.5 * (a + b);
  if (inst.think.kind == ThinkKind::Short) iterations = std::min(a, b);
  if (inst.think.kind == ThinkKind::Long) iterations = std::max(a, b);
  return std::lround(stim.scale.to_seconds(iterations) * 1000.0);
}

// Forced moves at the suite's fixed think time, then the key action; fillers
// replay their recorded moves; prior instances observe nothing.
inline ObservationSequence instance_observations(const InstanceSuite& suite, const SuiteInstance& inst,
                                                 const StimulusConfig& stim, BatchCache& cache) {
  ObservationSequence obs;
  const double forced = static_cast<double>(suite.forced_think_ms) / 1000.0;
  if (inst.type == InstanceType::Filler) {
    for (Action a : inst.replay) obs.push_back({a, forced});
    return obs;
  }
  if (!inst.key_action) return obs;
  for (Action a : suite.map_of(inst).meta.forced_moves) obs.push_back({a, forced});
  obs.push_back({*inst.key_action, static_cast<double>(think_ms_for(suite, inst, stim, cache)) / 1000.0});
  return obs;
}

// ---------------------------------------------------------------------------
// Likert responses and scoring

inline double likert_to_prob(int level) {
  if (level < 1 || level > 6) throw Error(ErrorKind::InvalidLevel, "Likert level must be 1..6, got " + std::to_string(level));
  return static_cast<double>(level - 1) / 5.0;
}

// Integer sum over an integer denominator, so the result is the correctly
// rounded mean (e.g. exactly 0.76 for 19/25).
inline double mean_response(const std::vector<int>& levels) {
  if (levels.empty()) throw Error(ErrorKind::EmptyInput, "no responses");
  long steps = 0;
  for (int level : levels) {
    likert_to_prob(level);
    steps += level - 1;
  }
  return static_cast<double>(steps) / (5.0 * static_cast<double>(levels.size()));
}

inline double response_log_likelihood(double p_human, double q) {
  double s = 0.0;
  if (p_human > 0.0) s += p_human * std::log(q);
  if (p_human < 1.0) s += (1.0 - p_human) * std::log(1.0 - q);
  return s;
}

inline double score_model(const std::map<std::string, double>& predictions, const ResponseDataset& responses) {
  double total = 0.0;
  for (const auto& r : responses.records) {
    auto it = predictions.find(r.instance_id);
    if (it == predictions.end()) throw Error(ErrorKind::CoverageGap, "no prediction for instance " + r.instance_id);
    total += response_log_likelihood(likert_to_prob(r.level), it->second);
  }
  return total;
}

inline double pearson_r(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw Error(ErrorKind::DegenerateInput, "pearson_r needs two equal-length series of at least 2 values");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error(ErrorKind::DegenerateInput, "zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline void validate_responses(const InstanceSuite& suite, const ResponseDataset& responses) {
  for (const auto& r : responses.records) {
    if (!suite.find(r.instance_id)) {
      throw Error(ErrorKind::DanglingReference, "response for unknown instance " + r.instance_id);
    }
  }
}

inline void validate_solve_data(const InstanceSuite& suite, const SolveDataset& data) {
  for (const auto& r : data.records) {
    if (!suite.maps.contains(r.map_id)) throw Error(ErrorKind::DanglingReference, "solve record for unknown map " + r.map_id);
  }
}

// ---------------------------------------------------------------------------
// Model grid

struct CellReport {
  ModelConfig config;
  std::optional<double> total;
  std::optional<double> offset;
  std::optional<std::string> error;
  std::map<std::string, double> predictions;  // instance id -> P(goal A)
};

struct GridReport {
  std::string baseline;
  std::size_t response_count = 0;
  TimingScale scale;
  std::vector<std::string> instance_ids;
  std::vector<CellReport> cells;

  const CellReport* cell(std::string_view name) const {
    for (const auto& c : cells) {
      if (c.config.name() == name) return &c;
    }
    return nullptr;
  }
};

struct GridOptions {
  StimulusConfig stimulus;
  unsigned jobs = 0;
  // With solve data present, replace every cell's timing scale (and the
  // stimulus scale) by one calibrated from the data.
  bool calibrate = true;
};

inline std::vector<ModelConfig> standard_grid(const ModelConfig& base = {}) {
  std::vector<ModelConfig> grid;
  for (auto p : kAllPriorKinds) {
    for (auto l : kAllLikelihoodKinds) {
      ModelConfig c = base;
      c.prior = p;
      c.likelihood = l;
      grid.push_back(c);
    }
  }
  return grid;
}

namespace detail {

template <typename F>
void parallel_for(std::size_t n, unsigned jobs, F&& body) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, n));
  if (jobs <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> workers;
  for (unsigned w = 0; w < jobs; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) body(i);
    });
  }
}

}  // namespace detail

inline TimingScale calibrate_on_suite(const InstanceSuite& suite, const SolveDataset& data, const StimulusConfig& stim,
                                      BatchCache& cache) {
  BatchSet batches;
  for (const auto& [id, map] : suite.maps) {
    for (Goal g : kBothGoals) {
      if (episodes_for(data, id, g).empty()) continue;
      batches[{id, g}] = cache.get(map, g, stim.planner, stim.n_sims);
    }
  }
  return calibrate_scale(data, batches);
}

inline GridReport run_grid(const InstanceSuite& suite, const SolveDataset* solve_data,
                           const ResponseDataset& responses, const std::vector<ModelConfig>& grid,
                           GridOptions options = {}, BatchCache* shared_cache = nullptr) {
  if (grid.empty()) throw Error(ErrorKind::EmptyInput, "empty model grid");
  for (const auto& c : grid) c.validate();
  validate_responses(suite, responses);
  if (solve_data) validate_solve_data(suite, *solve_data);

  BatchCache local(options.jobs);
  BatchCache& cache = shared_cache ? *shared_cache : local;

  GridReport report;
  report.scale = options.stimulus.scale;
  if (solve_data && options.calibrate) {
    try {
      report.scale = calibrate_on_suite(suite, *solve_data, options.stimulus, cache);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::EmptyOverlap) throw;
    }
  }
  options.stimulus.scale = report.scale;

  std::vector<const SuiteInstance*> scored;
  for (const auto& inst : suite.instances) {
    if (inst.scored()) {
      scored.push_back(&inst);
      report.instance_ids.push_back(inst.id);
    }
  }
  std::vector<ObservationSequence> observations(scored.size());
  for (std::size_t i = 0; i < scored.size(); ++i) {
    observations[i] = instance_observations(suite, *scored[i], options.stimulus, cache);
  }

  ResponseDataset kept;
  for (const auto& r : responses.records) {
    if (suite.find(r.instance_id)->scored()) kept.records.push_back(r);
  }
  report.response_count = kept.records.size();

  for (const auto& c : grid) {
    CellReport cell;
    cell.config = c;
    if (solve_data && options.calibrate) cell.config.scale = report.scale;
    report.cells.push_back(std::move(cell));
  }

  // One task per (cell, instance); results land in fixed slots so the report
  // does not depend on scheduling.
  const std::size_t n_inst = scored.size();
  std::vector<double> values(report.cells.size() * n_inst, 0.0);
  std::vector<std::optional<std::string>> errors(values.size());
  const RecognitionContext ctx{solve_data, &cache};
  detail::parallel_for(values.size(), options.jobs, [&](std::size_t task) {
    const std::size_t ci = task / n_inst;
    const std::size_t ii = task % n_inst;
    try {
      const GridMap& map = suite.map_of(*scored[ii]);
      values[task] = recognize(map, observations[ii], report.cells[ci].config, ctx).final_posterior.p_a;
    } catch (const Error& e) {
      errors[task] = e.what();
    }
  });

  for (std::size_t ci = 0; ci < report.cells.size(); ++ci) {
    auto& cell = report.cells[ci];
    for (std::size_t ii = 0; ii < n_inst; ++ii) {
      const std::size_t task = ci * n_inst + ii;
      if (errors[task]) {
        if (!cell.error) cell.error = *errors[task];
        continue;
      }
      cell.predictions[scored[ii]->id] = values[task];
    }
    if (!cell.error) cell.total = score_model(cell.predictions, kept);
  }

  const CellReport* base = report.cell("uniform+offline");
  if (!base || !base->total) base = report.cells.front().total ? &report.cells.front() : nullptr;
  if (base) {
    report.baseline = base->config.name();
    const double ref = *base->total;
    for (auto& cell : report.cells) {
      if (cell.total) cell.offset = *cell.total - ref;
    }
  }
  return report;
}

// 1 + number of cells scoring strictly higher; cells without a score rank last.
inline std::size_t rank_of(const GridReport& report, std::string_view name) {
  const CellReport* target = report.cell(name);
  if (!target || !target->total) return report.cells.size();
  std::size_t rank = 1;
  for (const auto& c : report.cells) {
    if (c.total && *c.total > *target->total) ++rank;
  }
  return rank;
}

// ---------------------------------------------------------------------------
// Synthetic data

inline std::string participant_name(std::size_t i) {
  std::string digits = std::to_string(i + 1);
  return "p" + std::string(digits.size() < 3 ? 3 - digits.size() : 0, '0') + digits;
}

// Each participant answers every predicted instance with a Likert level drawn
// from the two levels bracketing q, so the expected mapped response equals q.
inline ResponseDataset synthesize_responses(const std::map<std::string, double>& predictions,
                                            std::size_t participants, std::uint64_t seed) {
  Rng rng(seed);
  ResponseDataset out;
  for (std::size_t p = 0; p < participants; ++p) {
    for (const auto& [id, q] : predictions) {
      const double x = std::clamp(q, 0.0, 1.0) * 5.0;
      const int lower = std::min(4, static_cast<int>(std::floor(x)));
      const double frac = x - lower;
      const int level = 1 + lower + (rng.uniform() < frac ? 1 : 0);
      out.records.push_back({participant_name(p), id, level});
    }
  }
  return out;
}

// Goal distance of every reachable state, by backward search over the
// reachable state graph. -1 where the goal cannot be reached.
inline std::vector<int> goal_distances(const GridMap& map, Goal goal) {
  const std::size_t n = map.cell_count();
  std::vector<std::vector<std::uint32_t>> preds(n * n);
  std::vector<bool> seen(n * n, false);
  std::vector<std::uint32_t> order{encode(map, map.start())};
  seen[order[0]] = true;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const WorldState s = decode(map, order[i]);
    for (Action a : kAllActions) {
      auto next = try_apply(map, s, a);
      if (!next) continue;
      const auto c = encode(map, *next);
      preds[c].push_back(order[i]);
      if (!seen[c]) {
        seen[c] = true;
        order.push_back(c);
      }
    }
  }
  std::vector<int> dist(n * n, -1);
  std::deque<std::uint32_t> queue;
  for (auto c : order) {
    if (is_goal(map, decode(map, c), goal)) {
      dist[c] = 0;
      queue.push_back(c);
    }
  }
  while (!queue.empty()) {
    const auto c = queue.front();
    queue.pop_front();
    for (auto p : preds[c]) {
      if (dist[p] < 0) {
        dist[p] = dist[c] + 1;
        queue.push_back(p);
      }
    }
  }
  return dist;
}

// Stand-in human solvers: mostly optimal, occasionally wandering, slower to
// think when far from the goal; they give up quickly on unsolvable goals.
inline SolveDataset synthesize_solve_data(const InstanceSuite& suite, std::size_t participants, std::uint64_t seed) {
  Rng rng(seed);
  SolveDataset out;
  constexpr std::size_t kMaxSteps = 60;
  for (const auto& [id, map] : suite.maps) {
    for (Goal g : kBothGoals) {
      const auto dist = goal_distances(map, g);
      const bool solvable = dist[encode(map, map.start())] >= 0;
      for (std::size_t p = 0; p < participants; ++p) {
        std::vector<SolveRecord> rows;
        WorldState s = map.start();
        auto push = [&](std::optional<Action> a, long ms) {
          rows.push_back({participant_name(p), id, g, rows.size(), a, ms, Outcome::Solved});
        };
        for (Action a : map.meta.forced_moves) {
          push(a, 300 + static_cast<long>(rng.below(200)));
          s = apply(map, s, a);
        }
        Outcome outcome = Outcome::BudgetExhausted;
        if (!solvable) {
          const std::size_t wander = 2 + rng.below(5);
          for (std::size_t k = 0; k < wander; ++k) {
            auto legal = legal_actions(map, s);
            Action a = legal[rng.below(legal.size())];
            push(a, 400 + static_cast<long>(rng.below(600)));
            s = apply(map, s, a);
          }
          push(std::nullopt, 2500 + static_cast<long>(rng.below(2500)));
          outcome = Outcome::DeclaredUnsolvable;
        } else {
          while (rows.size() < kMaxSteps) {
            const int d = dist[encode(map, s)];
            if (d == 0) {
              outcome = Outcome::Solved;
              break;
            }
            std::vector<Action> best, alive;
            for (Action a : legal_actions(map, s)) {
              const int nd = dist[encode(map, apply(map, s, a))];
              if (nd >= 0) alive.push_back(a);
              if (nd >= 0 && nd < d) best.push_back(a);
            }
            const bool greedy = rng.uniform() < 0.85 || alive.empty();
            const auto& pool = greedy ? best : alive;
            const Action a = pool[rng.below(pool.size())];
            const long base = rows.size() == map.meta.key_step_index ? 600 + 120L * d : 250;
            push(a, base + static_cast<long>(rng.below(static_cast<std::size_t>(base / 2 + 1))));
            s = apply(map, s, a);
          }
          if (dist[encode(map, s)] == 0) outcome = Outcome::Solved;
        }
        for (auto& r : rows) r.outcome = outcome;
        out.records.insert(out.records.end(), rows.begin(), rows.end());
      }
    }
  }
  return out;
}

}  // namespace goalrec
