// Command-line front end: solve, plan, simulate, recognize, grid, synth, serve.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "goalrec/goalrec.hpp"
#include "goalrec/service.hpp"

namespace {

using namespace goalrec;

struct Options {
  std::string map_path;
  std::string suite_path;
  std::string goal;
  std::string prior = "uniform";
  std::string likelihood = "offline";
  std::string obs_path;
  std::string solve_path;
  std::string responses_path;
  std::string out;
  std::string format = "text";
  std::size_t sims = 100;
  std::uint64_t seed = 0;
  double beta = 1.0;
  double smoothing = kDefaultSmoothing;
  double seconds_per_iteration = TimingScale{}.seconds_per_iteration;
  int o = 5;
  int c = 26;
  unsigned jobs = 0;
  int port = 8080;
  std::string host = "127.0.0.1";
  std::size_t participants = 50;
  PlannerConfig planner;
  bool no_calibrate = false;
};

bool doc(const Options& o) { return o.format == "doc"; }

GridMap read_map(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open map " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  GridMap m = parse_map(ss.str());
  if (m.meta.id.empty()) m.meta.id = std::filesystem::path(path).stem().string();
  return m;
}

std::vector<Goal> goals_of(const Options& o) {
  if (o.goal.empty()) return {Goal::A, Goal::B};
  return {*goal_from_string(o.goal)};
}

PlannerConfig planner_of(const Options& o) {
  PlannerConfig p = o.planner;
  p.seed = o.seed;
  p.validate();
  return p;
}

ModelConfig model_of(const Options& o) {
  ModelConfig m;
  m.prior = *prior_kind_from_string(o.prior);
  m.likelihood = *likelihood_kind_from_string(o.likelihood);
  m.beta = o.beta;
  m.easiness = {o.o, o.c};
  m.planner = planner_of(o);
  m.n_sims = o.sims;
  m.smoothing = o.smoothing;
  m.scale.seconds_per_iteration = o.seconds_per_iteration;
  m.validate();
  return m;
}

// Lines of "ACTION think_ms"; blank lines and lines starting with '#' are skipped.
ObservationSequence read_observations(const std::string& path) {
  const std::string text = detail::read_file(path);
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  ObservationSequence obs;
  while (std::getline(in, line)) {
    ++n;
    auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto offset = static_cast<std::size_t>(t.data() - line.data());
    auto col = [&](std::size_t i) { return offset + i + 1; };
    auto a = action_from_char(t.front());
    if (!a || (t.size() > 1 && t[1] != ' ' && t[1] != '\t')) {
      detail::parse_fail(n, col(0), "expected an action U, D, L or R");
    }
    auto rest = detail::trim(t.substr(1));
    const std::size_t rest_at = static_cast<std::size_t>(rest.data() - t.data());
    long ms = 0;
    auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + rest.size(), ms);
    if (rest.empty() || ec != std::errc() || ptr != rest.data() + rest.size() || ms < 0) {
      detail::parse_fail(n, col(rest_at), "expected a non-negative integer think time in ms");
    }
    obs.push_back({*a, static_cast<double>(ms) / 1000.0});
  }
  return obs;
}

std::optional<SolveDataset> solve_data_of(const Options& o) {
  if (o.solve_path.empty()) return std::nullopt;
  return load_solve_data(o.solve_path);
}

void print_doc(const Json& j) { std::cout << j.dump(2) << '\n'; }

std::string fmt(double x) { return format_number(x); }

std::string cost_text(const OptCost& c) { return c.to_string(); }

int cmd_solve(const Options& o) {
  const GridMap map = read_map(o.map_path);
  if (doc(o)) {
    Json j{{"map", map.meta.id}, {"reachable_states", reachable_state_count(map)}};
    Json costs = Json::object();
    for (Goal g : goals_of(o)) costs[std::string(1, to_char(g))] = to_json(opt_cost(map, g));
    j["opt_cost"] = costs;
    print_doc(j);
    return 0;
  }
  if (!o.goal.empty()) {
    std::cout << cost_text(opt_cost(map, goals_of(o)[0])) << '\n';
    return 0;
  }
  for (Goal g : kBothGoals) std::cout << to_char(g) << ": " << cost_text(opt_cost(map, g)) << '\n';
  return 0;
}

int cmd_plan(const Options& o) {
  const GridMap map = read_map(o.map_path);
  const auto trace = plan_episode(map, goals_of(o)[0], planner_of(o));
  if (doc(o)) {
    Json j = to_json(trace);
    j["map"] = map.meta.id;
    j["goal"] = o.goal;
    j["seed"] = o.seed;
    print_doc(j);
    return 0;
  }
  std::cout << export_trace_lines(trace);
  std::cout << "outcome " << to_string(trace.outcome) << " (" << to_string(trace.reason) << "), "
            << trace.move_count() << " moves, " << trace.total_iterations << " iterations\n";
  return 0;
}

int cmd_simulate(const Options& o) {
  const GridMap map = read_map(o.map_path);
  Json all = Json::object();
  for (Goal g : goals_of(o)) {
    const auto batch = simulate_batch(map, g, planner_of(o), o.sims, o.jobs);
    if (doc(o)) {
      all[std::string(1, to_char(g))] = to_json(batch);
      continue;
    }
    std::cout << "goal " << to_char(g) << ": n=" << batch.traces.size();
    for (auto oc : {Outcome::Solved, Outcome::DeclaredUnsolvable, Outcome::BudgetExhausted}) {
      auto it = batch.outcomes.find(oc);
      std::cout << ' ' << to_string(oc) << '=' << (it == batch.outcomes.end() ? 0 : it->second);
    }
    std::cout << "\n  key step " << batch.key_step << ": iterations mean " << fmt(batch.key_step_iterations.mean)
              << " std " << fmt(batch.key_step_iterations.std_dev);
    if (batch.key_step < batch.step_frequencies.size()) {
      const auto& f = batch.step_frequencies[batch.key_step];
      std::cout << ", actions U" << f.counts[0] << " D" << f.counts[1] << " L" << f.counts[2] << " R" << f.counts[3]
                << " X" << f.counts[kDeclareSlot];
    }
    std::cout << "\n  total iterations mean " << fmt(batch.total_iterations.mean) << " std "
              << fmt(batch.total_iterations.std_dev) << '\n';
  }
  if (doc(o)) {
    all["map"] = map.meta.id;
    all["seed"] = o.seed;
    print_doc(all);
  }
  return 0;
}

int cmd_recognize(const Options& o) {
  const GridMap map = read_map(o.map_path);
  const ModelConfig config = model_of(o);
  const ObservationSequence obs = o.obs_path.empty() ? ObservationSequence{} : read_observations(o.obs_path);
  const auto data = solve_data_of(o);
  BatchCache cache(o.jobs);
  const auto report = recognize(map, obs, config, {data ? &*data : nullptr, &cache});
  if (doc(o)) {
    Json j = to_json(report);
    j["map"] = map.meta.id;
    j["model"] = to_json(config);
    print_doc(j);
    return 0;
  }
  std::cout << "prior A " << fmt(report.prior.p_a) << " B " << fmt(report.prior.p_b) << '\n';
  for (std::size_t i = 0; i < report.steps.size(); ++i) {
    const auto& s = report.steps[i];
    std::cout << "step " << i << ' ' << to_char(s.observation.action) << ' ' << fmt(s.observation.think_time)
              << "s  ll A " << fmt(s.likelihoods[0].combined) << " B " << fmt(s.likelihoods[1].combined)
              << "  posterior A " << fmt(s.posterior.p_a) << " B " << fmt(s.posterior.p_b) << '\n';
  }
  std::cout << "posterior A " << fmt(report.final_posterior.p_a) << " B " << fmt(report.final_posterior.p_b) << '\n';
  return 0;
}

int cmd_grid(const Options& o) {
  const InstanceSuite suite = load_suite(o.suite_path);
  const ResponseDataset responses = load_responses(o.responses_path);
  const auto data = solve_data_of(o);
  GridOptions options;
  options.stimulus.planner = planner_of(o);
  options.stimulus.n_sims = o.sims;
  options.stimulus.scale.seconds_per_iteration = o.seconds_per_iteration;
  options.jobs = o.jobs;
  options.calibrate = !o.no_calibrate;
  const auto report = run_grid(suite, data ? &*data : nullptr, responses, standard_grid(model_of(o)), options);
  if (!o.out.empty()) {
    std::ofstream(o.out + ".json", std::ios::binary) << to_json(report).dump(2) << '\n';
    std::ofstream(o.out + ".csv", std::ios::binary) << grid_csv(report);
  }
  if (doc(o)) {
    print_doc(to_json(report));
    return 0;
  }
  std::cout << report.cells.size() << " cells, " << report.response_count << " responses, baseline "
            << report.baseline << '\n';
  for (const auto& c : report.cells) {
    std::cout << "  " << c.config.name() << ": ";
    if (c.total) {
      std::cout << "total " << fmt(*c.total) << " offset " << fmt(c.offset.value_or(0.0)) << '\n';
    } else {
      std::cout << "not evaluated (" << c.error.value_or("") << ")\n";
    }
  }
  return 0;
}

// Synthetic solve data and responses for a suite: responses are drawn from the
// chosen model cell, so the grid can be exercised end to end.
int cmd_synth(const Options& o) {
  const InstanceSuite suite = load_suite(o.suite_path);
  const SolveDataset solve = synthesize_solve_data(suite, o.participants, o.seed);
  GridOptions options;
  options.stimulus.planner = planner_of(o);
  options.stimulus.n_sims = o.sims;
  options.stimulus.scale.seconds_per_iteration = o.seconds_per_iteration;
  options.jobs = o.jobs;
  options.calibrate = !o.no_calibrate;
  const ModelConfig model = model_of(o);
  const auto report = run_grid(suite, &solve, {}, {model}, options);
  const auto responses = synthesize_responses(report.cells.front().predictions, o.participants, o.seed + 1);
  std::ofstream(o.out + "-solve.csv", std::ios::binary) << to_csv(solve);
  std::ofstream(o.out + "-responses.csv", std::ios::binary) << to_csv(responses);
  if (doc(o)) {
    print_doc({{"solve_records", solve.records.size()}, {"responses", responses.records.size()},
               {"model", model.name()}, {"solve_file", o.out + "-solve.csv"},
               {"responses_file", o.out + "-responses.csv"}});
  } else {
    std::cout << "wrote " << solve.records.size() << " solve records to " << o.out << "-solve.csv and "
              << responses.records.size() << " responses to " << o.out << "-responses.csv\n";
  }
  return 0;
}

int cmd_serve(const Options& o) {
  std::map<std::string, GridMap> maps;
  if (!o.suite_path.empty()) {
    maps = load_suite(o.suite_path).maps;
  } else {
    const GridMap m = read_map(o.map_path);
    maps.emplace(m.meta.id, m);
  }
  Service service(std::move(maps), solve_data_of(o), o.jobs);
  httplib::Server server;
  mount(server, service);
  std::cerr << "listening on http://" << o.host << ':' << o.port << '\n';
  if (!server.listen(o.host, o.port)) throw Error(ErrorKind::InvalidArgument, "cannot listen on port " + std::to_string(o.port));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Goal recognition for single-box Sokoban"};
  app.require_subcommand(1);
  app.fallthrough();

  const std::vector<std::string> goal_values{"A", "B"};
  std::vector<std::string> prior_values, likelihood_values;
  for (auto k : kAllPriorKinds) prior_values.emplace_back(to_string(k));
  for (auto k : kAllLikelihoodKinds) likelihood_values.emplace_back(to_string(k));

  app.add_option("--seed", o.seed, "Base seed; episode i uses seed+i")->capture_default_str();
  app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"text", "doc"}))->capture_default_str();
  app.add_option("--jobs", o.jobs, "Worker threads (0 = available parallelism)")->capture_default_str();
  app.add_option("--sims", o.sims, "Simulations per batch")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--beta", o.beta, "Offline rationality")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--smoothing", o.smoothing, "Likelihood smoothing")->check(CLI::NonNegativeNumber)->capture_default_str();
  app.add_option("--seconds-per-iteration", o.seconds_per_iteration, "Timing scale")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--o", o.o, "Easiness offset")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--c", o.c, "Easiness cap")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--tau", o.planner.temperature, "Softmax temperature")->capture_default_str();
  app.add_option("--base-budget", o.planner.base_budget, "Initial lookahead budget")->capture_default_str();
  app.add_option("--max-budget", o.planner.max_budget, "Lookahead budget cap")->capture_default_str();
  app.add_option("--budget-growth", o.planner.budget_growth, "Budget growth factor")->capture_default_str();
  app.add_option("--stall", o.planner.stall_threshold, "Stalled steps before declaring")->capture_default_str();
  app.add_option("--max-steps", o.planner.max_steps, "Episode step cap")->capture_default_str();

  auto* solve = app.add_subcommand("solve", "Optimal cost per goal");
  solve->add_option("--map", o.map_path)->required()->check(CLI::ExistingFile);
  solve->add_option("--goal", o.goal)->check(CLI::IsMember(goal_values));

  auto* plan = app.add_subcommand("plan", "One planner episode");
  plan->add_option("--map", o.map_path)->required()->check(CLI::ExistingFile);
  plan->add_option("--goal", o.goal)->required()->check(CLI::IsMember(goal_values));

  auto* sim = app.add_subcommand("simulate", "Batch statistics");
  sim->add_option("--map", o.map_path)->required()->check(CLI::ExistingFile);
  sim->add_option("--goal", o.goal)->check(CLI::IsMember(goal_values));

  auto* rec = app.add_subcommand("recognize", "Posterior over goals");
  rec->add_option("--map", o.map_path)->required()->check(CLI::ExistingFile);
  rec->add_option("--prior", o.prior)->check(CLI::IsMember(prior_values))->capture_default_str();
  rec->add_option("--likelihood", o.likelihood)->check(CLI::IsMember(likelihood_values))->capture_default_str();
  rec->add_option("--obs", o.obs_path, "Observation file: lines 'ACTION think_ms'")->check(CLI::ExistingFile);
  rec->add_option("--solve-data", o.solve_path)->check(CLI::ExistingFile);

  auto* grid = app.add_subcommand("grid", "Score the 3x5 model grid against responses");
  grid->add_option("--suite", o.suite_path)->required()->check(CLI::ExistingPath);
  grid->add_option("--responses", o.responses_path)->required()->check(CLI::ExistingFile);
  grid->add_option("--solve-data", o.solve_path)->check(CLI::ExistingFile);
  grid->add_option("--out", o.out, "Write <out>.json and <out>.csv");
  grid->add_flag("--no-calibrate", o.no_calibrate, "Keep the given timing scale even with solve data");

  auto* synth = app.add_subcommand("synth", "Synthetic solve data and responses for a suite");
  synth->add_option("--suite", o.suite_path)->required()->check(CLI::ExistingPath);
  synth->add_option("--out", o.out, "Write <out>-solve.csv and <out>-responses.csv")->required();
  synth->add_option("--participants", o.participants)->check(CLI::PositiveNumber)->capture_default_str();
  synth->add_option("--prior", o.prior)->check(CLI::IsMember(prior_values))->capture_default_str();
  synth->add_option("--likelihood", o.likelihood)->check(CLI::IsMember(likelihood_values))->capture_default_str();
  synth->add_flag("--no-calibrate", o.no_calibrate);

  auto* serve = app.add_subcommand("serve", "HTTP service");
  auto* serve_suite = serve->add_option("--suite", o.suite_path)->check(CLI::ExistingPath);
  serve->add_option("--map", o.map_path)->check(CLI::ExistingFile)->excludes(serve_suite);
  serve->add_option("--port", o.port)->capture_default_str();
  serve->add_option("--host", o.host)->capture_default_str();
  serve->add_option("--solve-data", o.solve_path)->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
    if (serve->parsed() && o.suite_path.empty() && o.map_path.empty()) {
      throw CLI::RequiredError("--suite or --map");
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (solve->parsed()) return cmd_solve(o);
    if (plan->parsed()) return cmd_plan(o);
    if (sim->parsed()) return cmd_simulate(o);
    if (rec->parsed()) return cmd_recognize(o);
    if (grid->parsed()) return cmd_grid(o);
    if (synth->parsed()) return cmd_synth(o);
    if (serve->parsed()) return cmd_serve(o);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
