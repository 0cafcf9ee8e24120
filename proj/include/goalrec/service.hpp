#pragma once

// Session-based facade over the recognizer and planner, and its HTTP binding.
// The routes and payloads are documented in docs/API.md.

#include <map>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <vector>

#include "httplib.h"

#include "goalrec/serialize.hpp"

namespace goalrec {

struct Session {
  std::string id;
  std::string map_id;
  WorldState state;
  ObservationSequence observations;
  ModelConfig config;
  PosteriorReport report;
};

inline Json to_json(const Session& s) {
  Json obs = Json::array();
  for (const auto& o : s.observations) {
    obs.push_back({{"action", std::string(1, to_char(o.action))}, {"think_ms", std::lround(o.think_time * 1000.0)}});
  }
  return {{"id", s.id},         {"map_id", s.map_id},       {"state", to_json(s.state)},
          {"observations", obs}, {"model", to_json(s.config)}, {"report", to_json(s.report)}};
}

class Service {
 public:
  explicit Service(std::map<std::string, GridMap> maps, std::optional<SolveDataset> solve_data = std::nullopt,
                   unsigned jobs = 0)
      : maps_(std::move(maps)), solve_data_(std::move(solve_data)), cache_(jobs) {}

  std::vector<std::string> list_maps() const {
    std::vector<std::string> ids;
    for (const auto& [id, m] : maps_) ids.push_back(id);
    return ids;
  }

  const GridMap& get_map(const std::string& id) const {
    auto it = maps_.find(id);
    if (it == maps_.end()) throw Error(ErrorKind::UnknownMap, "no map with id " + id);
    return it->second;
  }

  Session create_session(const std::string& map_id, const ModelConfig& config) {
    const GridMap& map = get_map(map_id);
    config.validate();
    auto entry = std::make_shared<Entry>();
    entry->session.map_id = map_id;
    entry->session.state = map.start();
    entry->session.config = config;
    entry->session.report = recognize(map, {}, config, context());
    std::unique_lock lock(sessions_mutex_);
    entry->session.id = "s" + std::to_string(++next_id_);
    sessions_.emplace(entry->session.id, entry);
    return entry->session;
  }

  // One mutation per session at a time; a concurrent one is refused with Busy
  // so the client can retry.
  Session post_action(const std::string& session_id, Action action, long think_ms) {
    if (think_ms < 0) throw Error(ErrorKind::InvalidArgument, "think_ms must be non-negative");
    auto entry = find(session_id);
    std::unique_lock lock(entry->mutex, std::try_to_lock);
    if (!lock.owns_lock()) throw Error(ErrorKind::Busy, "session " + session_id + " is processing another action");
    Session& s = entry->session;
    const GridMap& map = get_map(s.map_id);
    auto next = try_apply(map, s.state, action);
    if (!next) {
      throw Error(ErrorKind::IllegalMove, std::string(1, to_char(action)) + " is not legal in the current state");
    }
    ObservationSequence obs = s.observations;
    obs.push_back({action, static_cast<double>(think_ms) / 1000.0});
    PosteriorReport report = recognize(map, obs, s.config, context());
    s.observations = std::move(obs);
    s.state = *next;
    s.report = std::move(report);
    return s;
  }

  Session get_session(const std::string& session_id) const {
    auto entry = find(session_id);
    std::lock_guard lock(entry->mutex);
    return entry->session;
  }

  std::shared_ptr<const SimulationBatch> simulate(const std::string& map_id, Goal goal, std::size_t n,
                                                  std::uint64_t seed) {
    PlannerConfig config;
    config.seed = seed;
    return cache_.get(get_map(map_id), goal, config, n);
  }

  BatchCache& cache() { return cache_; }

 private:
  struct Entry {
    mutable std::mutex mutex;
    Session session;
  };

  RecognitionContext context() { return {solve_data_ ? &*solve_data_ : nullptr, &cache_}; }

  std::shared_ptr<Entry> find(const std::string& id) const {
    std::shared_lock lock(sessions_mutex_);
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw Error(ErrorKind::UnknownSession, "no session " + id);
    return it->second;
  }

  const std::map<std::string, GridMap> maps_;
  const std::optional<SolveDataset> solve_data_;
  BatchCache cache_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::uint64_t next_id_ = 0;
};

// ---------------------------------------------------------------------------
// HTTP

inline int http_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::UnknownMap:
    case ErrorKind::UnknownSession: return 404;
    case ErrorKind::Busy: return 409;
    case ErrorKind::IllegalMove:
    case ErrorKind::InfeasibleObservation:
    case ErrorKind::MissingData:
    case ErrorKind::AllZeroMass: return 422;
    default: return 400;
  }
}

inline void write_json(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void write_error(httplib::Response& res, ErrorKind kind, const std::string& message) {
  if (kind == ErrorKind::Busy) res.set_header("Retry-After", "1");
  write_json(res, http_status(kind), {{"error", {{"kind", to_string(kind)}, {"message", message}}}});
}

template <typename Handler>
auto guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const Error& e) {
      write_error(res, e.kind(), e.message());
    } catch (const Json::exception& e) {
      write_error(res, ErrorKind::InvalidArgument, e.what());
    }
  };
}

inline Json parse_body(const httplib::Request& req) {
  try {
    return Json::parse(req.body);
  } catch (const Json::parse_error&) {
    throw Error(ErrorKind::InvalidArgument, "request body is not a JSON document");
  }
}

inline void mount(httplib::Server& server, Service& service) {
  server.Get("/maps", guarded([&](const httplib::Request&, httplib::Response& res) {
               Json maps = Json::array();
               for (const auto& id : service.list_maps()) {
                 const auto& m = service.get_map(id);
                 maps.push_back({{"id", id}, {"type", to_string(m.meta.instance_type)}, {"width", m.width},
                                 {"height", m.height}});
               }
               write_json(res, 200, {{"maps", maps}});
             }));
  server.Get(R"(/maps/([^/]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
               write_json(res, 200, to_json(service.get_map(req.matches[1])));
             }));
  server.Post("/sessions", guarded([&](const httplib::Request& req, httplib::Response& res) {
                const Json body = parse_body(req);
                if (!body.is_object() || !body.contains("map_id") || !body["map_id"].is_string()) {
                  throw Error(ErrorKind::InvalidArgument, "map_id (string) is required");
                }
                const ModelConfig config = model_config_from_json(body.value("model", Json::object()));
                write_json(res, 201, to_json(service.create_session(body["map_id"].get<std::string>(), config)));
              }));
  server.Get(R"(/sessions/([^/]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
               write_json(res, 200, to_json(service.get_session(req.matches[1])));
             }));
  server.Post(R"(/sessions/([^/]+)/actions)", guarded([&](const httplib::Request& req, httplib::Response& res) {
                const Json body = parse_body(req);
                if (!body.is_object() || !body.contains("action") || !body["action"].is_string()) {
                  throw Error(ErrorKind::InvalidArgument, "action (string) is required");
                }
                const auto text = body["action"].get<std::string>();
                auto action = text.size() == 1 ? action_from_char(text[0]) : std::nullopt;
                if (!action) throw Error(ErrorKind::InvalidArgument, "action must be one of U, D, L, R");
                long think_ms = 0;
                if (body.contains("think_ms")) {
                  if (!body["think_ms"].is_number_integer()) {
                    throw Error(ErrorKind::InvalidArgument, "think_ms must be an integer");
                  }
                  think_ms = body["think_ms"].get<long>();
                }
                write_json(res, 200, to_json(service.post_action(req.matches[1], *action, think_ms)));
              }));
  server.Post("/simulate", guarded([&](const httplib::Request& req, httplib::Response& res) {
                const Json body = parse_body(req);
                if (!body.is_object() || !body.contains("map_id") || !body["map_id"].is_string()) {
                  throw Error(ErrorKind::InvalidArgument, "map_id (string) is required");
                }
                auto goal = goal_from_string(body.value("goal", std::string("A")));
                if (!goal) throw Error(ErrorKind::InvalidArgument, "goal must be A or B");
                const auto n = body.value("n", 100LL);
                if (n < 1) throw Error(ErrorKind::InvalidConfig, "n must be >= 1");
                const auto seed = body.value("seed", std::uint64_t{0});
                auto batch = service.simulate(body["map_id"].get<std::string>(), *goal, static_cast<std::size_t>(n), seed);
                Json out = to_json(*batch);
                out["map_id"] = body["map_id"];
                out["seed"] = seed;
                write_json(res, 200, out);
              }));
}

}  // namespace goalrec
