#include <gtest/gtest.h>

#include <chrono>
#include <thread>

#include "goalrec/service.hpp"
#include "support.hpp"

using namespace goalrec;

namespace {

// One server for the whole suite, started on a free local port.
class Http : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    service_ = new Service(fixtures::corpus_maps());
    server_ = new httplib::Server();
    mount(*server_, *service_);
    port_ = server_->bind_to_any_port("127.0.0.1");
    thread_ = new std::thread([] { server_->listen_after_bind(); });
    server_->wait_until_ready();
  }
  static void TearDownTestSuite() {
    server_->stop();
    thread_->join();
    delete thread_;
    delete server_;
    delete service_;
  }

  static httplib::Client client() {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(60, 0);
    return c;
  }
  static Json post(const std::string& path, const Json& body, int expected) {
    auto res = client().Post(path, body.dump(), "application/json");
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expected) << res->body;
    return Json::parse(res->body);
  }
  static Json get(const std::string& path, int expected) {
    auto res = client().Get(path);
    EXPECT_TRUE(res);
    if (!res) return {};
    EXPECT_EQ(res->status, expected) << res->body;
    return Json::parse(res->body);
  }

  static inline Service* service_ = nullptr;
  static inline httplib::Server* server_ = nullptr;
  static inline std::thread* thread_ = nullptr;
  static inline int port_ = 0;
};

}  // namespace

TEST_F(Http, ListMapsIsStableAndNonEmpty) {
  const Json a = get("/maps", 200);
  const Json b = get("/maps", 200);
  ASSERT_FALSE(a["maps"].empty());
  EXPECT_EQ(a, b);
  EXPECT_EQ(a["maps"][0]["id"], "action-1");
  for (const auto& m : a["maps"]) EXPECT_TRUE(m.contains("type") && m.contains("width") && m.contains("height"));
}

TEST_F(Http, GetMap) {
  const Json m = get("/maps/easy-1", 200);
  EXPECT_EQ(m["id"], "easy-1");
  EXPECT_EQ(m["forced_moves"], "UU");
  EXPECT_EQ(m["key_step"], 2);
  EXPECT_EQ(parse_map(m["text"].get<std::string>()), service_->get_map("easy-1"));
  const Json err = get("/maps/nowhere", 404);
  EXPECT_EQ(err["error"]["kind"], "UnknownMap");
}

TEST_F(Http, SessionStartsAtPrior) {
  const Json s = post("/sessions", {{"map_id", "action-1-a"}, {"model", {{"prior", "easiness"}}}}, 201);
  const auto prior = easiness_prior(service_->get_map("action-1-a"));
  EXPECT_EQ(s["report"]["posterior"]["A"].get<double>(), prior.p_a);
  EXPECT_EQ(s["report"]["prior"]["B"].get<double>(), prior.p_b);
  EXPECT_TRUE(s["observations"].empty());
}

TEST_F(Http, SessionErrors) {
  EXPECT_EQ(post("/sessions", {{"map_id", "nowhere"}}, 404)["error"]["kind"], "UnknownMap");
  EXPECT_EQ(post("/sessions", {{"map_id", "easy-1"}, {"model", {{"n_sims", 0}}}}, 400)["error"]["kind"],
            "InvalidConfig");
  EXPECT_EQ(post("/sessions", {{"map_id", "easy-1"}, {"model", {{"bogus", 1}}}}, 400)["error"]["kind"],
            "InvalidConfig");
  EXPECT_EQ(get("/sessions/s999999", 404)["error"]["kind"], "UnknownSession");
  EXPECT_EQ(post("/sessions/s999999/actions", {{"action", "U"}}, 404)["error"]["kind"], "UnknownSession");
  auto res = client().Post("/sessions", "{not json", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
}

TEST_F(Http, IllegalMoveLeavesSessionUnchanged) {
  const Json s = post("/sessions", {{"map_id", "action-1"}}, 201);
  const std::string id = s["id"];
  const Json first = post("/sessions/" + id + "/actions", {{"action", "U"}, {"think_ms", 300}}, 200);
  EXPECT_EQ(first["report"]["steps"].size(), 1u);
  // Back to the start cell; the next D runs into the bottom wall.
  post("/sessions/" + id + "/actions", {{"action", "D"}, {"think_ms", 100}}, 200);
  const Json before = get("/sessions/" + id, 200);
  const Json err = post("/sessions/" + id + "/actions", {{"action", "D"}, {"think_ms", 100}}, 422);
  EXPECT_EQ(err["error"]["kind"], "IllegalMove");
  EXPECT_EQ(get("/sessions/" + id, 200), before);
  EXPECT_EQ(post("/sessions/" + id + "/actions", {{"action", "Q"}}, 400)["error"]["kind"], "InvalidArgument");
  EXPECT_EQ(post("/sessions/" + id + "/actions", {{"action", "U"}, {"think_ms", -1}}, 400)["error"]["kind"],
            "InvalidArgument");
}

TEST_F(Http, SessionReplayMatchesRecognize) {
  ModelConfig cfg;
  cfg.prior = PriorKind::Easiness;
  cfg.likelihood = LikelihoodKind::Online;
  cfg.n_sims = 30;
  const Json s = post("/sessions", {{"map_id", "competing-1"}, {"model", to_json(cfg)}}, 201);
  const std::string id = s["id"];
  const std::vector<std::pair<std::string, long>> moves{{"U", 350}, {"U", 420}, {"R", 2600}, {"U", 500}};
  Json last;
  ObservationSequence obs;
  for (const auto& [a, ms] : moves) {
    last = post("/sessions/" + id + "/actions", {{"action", a}, {"think_ms", ms}}, 200);
    obs.push_back({*action_from_char(a[0]), static_cast<double>(ms) / 1000.0});
  }
  const auto direct = recognize(service_->get_map("competing-1"), obs, cfg);
  EXPECT_EQ(last["report"]["posterior"]["A"].get<double>(), direct.final_posterior.p_a);
  EXPECT_EQ(last["report"]["steps"].size(), moves.size());
  EXPECT_EQ(last["state"], to_json(execute(service_->get_map("competing-1"),
                                           service_->get_map("competing-1").start(), actions_from_string("UURU"))));
}

TEST_F(Http, SessionsAreIsolated) {
  const std::string a = post("/sessions", {{"map_id", "easy-2"}}, 201)["id"];
  const std::string b = post("/sessions", {{"map_id", "easy-2"}}, 201)["id"];
  EXPECT_NE(a, b);
  post("/sessions/" + a + "/actions", {{"action", "U"}, {"think_ms", 100}}, 200);
  EXPECT_TRUE(get("/sessions/" + b, 200)["observations"].empty());
}

TEST_F(Http, ConcurrentActionsOnOneSession) {
  const std::string id = post("/sessions", {{"map_id", "easy-3"}}, 201)["id"];
  std::vector<std::thread> threads;
  std::atomic<int> ok{0}, busy{0}, illegal{0};
  for (int i = 0; i < 4; ++i) {
    threads.emplace_back([&] {
      auto res = client().Post("/sessions/" + id + "/actions", Json{{"action", "L"}, {"think_ms", 10}}.dump(),
                               "application/json");
      if (res && res->status == 200) ++ok;
      if (res && res->status == 409) {
        EXPECT_TRUE(res->has_header("Retry-After"));
        ++busy;
      }
      if (res && res->status == 422) ++illegal;
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_GE(ok.load(), 1);
  EXPECT_EQ(ok.load() + busy.load() + illegal.load(), 4);
  EXPECT_EQ(get("/sessions/" + id, 200)["observations"].size(), static_cast<std::size_t>(ok.load()));
}

TEST_F(Http, SimulateIsDeterministic) {
  const Json body{{"map_id", "action-1"}, {"goal", "B"}, {"n", 20}, {"seed", 4}};
  const Json a = post("/simulate", body, 200);
  const Json b = post("/simulate", body, 200);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a["n"], 20);
  EXPECT_EQ(a["outcomes"]["Solved"].get<int>() + a["outcomes"]["DeclaredUnsolvable"].get<int>() +
                a["outcomes"]["BudgetExhausted"].get<int>(),
            20);
  EXPECT_EQ(post("/simulate", {{"map_id", "nowhere"}}, 404)["error"]["kind"], "UnknownMap");
  EXPECT_EQ(post("/simulate", {{"map_id", "action-1"}, {"n", 0}}, 400)["error"]["kind"], "InvalidConfig");
}

TEST_F(Http, SimulateUnsolvableGoalMostlyDeclares) {
  // action-1-a moves A into a niche the box cannot enter.
  ASSERT_FALSE(opt_cost(service_->get_map("action-1-a"), Goal::A).solvable());
  const Json r = post("/simulate", {{"map_id", "action-1-a"}, {"goal", "A"}, {"n", 50}, {"seed", 0}}, 200);
  EXPECT_GT(r["outcomes"]["DeclaredUnsolvable"].get<int>(), 25);
}

TEST(ServiceDirect, PostActionMatchesRecognizeAndKeepsStateOnError) {
  Service svc(fixtures::corpus_maps());
  ModelConfig cfg;
  cfg.likelihood = LikelihoodKind::Offline;
  const Session s = svc.create_session("action-2", cfg);
  const auto& m = svc.get_map("action-2");
  Session after = svc.post_action(s.id, m.meta.forced_moves[0], 400);
  EXPECT_EQ(after.report.steps.size(), 1u);
  const WorldState before = after.state;
  EXPECT_THROW(svc.post_action(s.id, Action::U, -3), Error);
  EXPECT_EQ(svc.get_session(s.id).state, before);
  EXPECT_THROW(svc.get_map("zzz"), Error);
}
