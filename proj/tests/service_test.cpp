#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "plsanim/http.hpp"
#include "plsanim/service.hpp"
#include "plsanim/wire.hpp"

using namespace plsanim;
using json = nlohmann::json;

namespace {

class Api : public ::testing::Test {
 protected:
  Response call(std::string_view method, const std::string& path, const json& body = nullptr) {
    return service.handle(method, path, body.is_null() ? "" : body.dump());
  }

  std::string create(const json& body) {
    Response r = call("POST", "/api/sessions", body);
    EXPECT_EQ(r.status, 201) << r.body.dump();
    return r.body.at("id").get<std::string>();
  }

  Response step(const std::string& id, std::size_t index) {
    return call("POST", "/api/sessions/" + id + "/step", {{"index", index}});
  }

  Service service;
};

TEST_F(Api, Catalog) {
  Response r = call("GET", "/api/protocols");
  ASSERT_EQ(r.status, 200);
  ASSERT_EQ(r.body["protocols"].size(), 4u);
  EXPECT_EQ(r.body["protocols"][0]["name"], "nspk");
  EXPECT_EQ(r.body["protocols"][1]["watermarking"], true);
  EXPECT_EQ(r.body["eves"], json({"eve1", "eve2", "eve3", "eve4"}));
  EXPECT_EQ(r.body["modes"], json({"passive", "active"}));
  EXPECT_EQ(r.body["default_depth"], 30);
  EXPECT_EQ(call("POST", "/api/protocols").status, 405);
}

TEST_F(Api, CreateAndInspect) {
  std::string id = create({{"protocol", "nswj"}});
  Response r = call("GET", "/api/sessions/" + id);
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["protocol"], "nswj");
  EXPECT_EQ(r.body["eve"], "eve3");
  EXPECT_EQ(r.body["mode"], "active");
  EXPECT_TRUE(r.body["trace"].empty());
  ASSERT_EQ(r.body["events"].size(), 1u);
  EXPECT_EQ(r.body["events"][0]["index"], 1);
  EXPECT_EQ(r.body["events"][0]["text"], "env.A0.A1");
  EXPECT_EQ(r.body["events"][0]["channel"], "env");
  EXPECT_EQ(r.body["terminated"], false);
  EXPECT_EQ(service.session_count(), 1u);
}

TEST_F(Api, RejectsBadRequests) {
  EXPECT_EQ(call("POST", "/api/sessions", {{"protocol", "tls"}}).status, 400);
  EXPECT_EQ(call("POST", "/api/sessions", {{"protocol", "nswj"}, {"eve", "eve9"}}).status, 400);
  EXPECT_EQ(call("POST", "/api/sessions", {{"protocol", 3}}).status, 400);
  EXPECT_EQ(service.handle("POST", "/api/sessions", "{not json").status, 400);
  EXPECT_EQ(service.handle("POST", "/api/sessions", "[1,2]").status, 400);
  EXPECT_EQ(call("GET", "/api/sessions/nope").status, 404);
  EXPECT_EQ(call("GET", "/api/elsewhere").status, 404);
  EXPECT_EQ(call("GET", "/").status, 404);
  EXPECT_EQ(service.session_count(), 0u);
}

TEST_F(Api, StepsFollowTheMenu) {
  std::string id = create({{"protocol", "nswj"}});
  Response r = step(id, 1);
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["trace"][0]["text"], "env.A0.A1");
  EXPECT_EQ(r.body["events"][0]["text"], "send.A0.I.A1.Wat({N0,A0},BM0:1)");
  EXPECT_EQ(step(id, 0).status, 409);
  EXPECT_EQ(step(id, 2).status, 409);
  EXPECT_EQ(call("POST", "/api/sessions/" + id + "/step", {{"index", "1"}}).status, 400);
  Response stale = call("POST", "/api/sessions/" + id + "/step", {{"index", 1}, {"event", "env.A0.A1"}});
  EXPECT_EQ(stale.status, 409);
  Response checked =
      call("POST", "/api/sessions/" + id + "/step", {{"index", 1}, {"event", "send.A0.I.A1.Wat({N0,A0},BM0:1)"}});
  EXPECT_EQ(checked.status, 200);
  EXPECT_EQ(checked.body["trace"].size(), 2u);
}

TEST_F(Api, HonestRunToTermination) {
  std::string id = create({{"protocol", "dh"}, {"eve", "eve4"}, {"mode", "passive"}});
  ProtocolConfig c = default_config(Protocol::DH, EveLocation::Eve4, AttackMode::Passive);
  Trace honest = *honest_trace(c);
  Response r = call("GET", "/api/sessions/" + id);
  for (const Event& e : honest) {
    std::size_t index = 0;
    for (const auto& offered : r.body["events"]) {
      if (offered["text"] == render(e)) index = offered["index"].get<std::size_t>();
    }
    ASSERT_NE(index, 0u) << render(e);
    r = step(id, index);
    ASSERT_EQ(r.status, 200);
  }
  EXPECT_EQ(r.body["terminated"], true);
  EXPECT_TRUE(r.body["events"].empty());
  EXPECT_EQ(r.body["trace"].size(), honest.size());
}

TEST_F(Api, ResetAndDelete) {
  std::string id = create({{"protocol", "nspk"}});
  step(id, 1);
  Response r = call("POST", "/api/sessions/" + id + "/reset");
  ASSERT_EQ(r.status, 200);
  EXPECT_TRUE(r.body["trace"].empty());
  EXPECT_EQ(r.body["events"].size(), 2u);
  EXPECT_EQ(call("DELETE", "/api/sessions/" + id).status, 200);
  EXPECT_EQ(call("GET", "/api/sessions/" + id).status, 404);
  EXPECT_EQ(service.session_count(), 0u);
}

TEST_F(Api, CheckSecrecyAndAuthenticity) {
  std::string id = create({{"protocol", "nspk"}});
  Response sec = call("POST", "/api/sessions/" + id + "/check", {{"property", "secrecy"}});
  ASSERT_EQ(sec.status, 200);
  EXPECT_EQ(sec.body["verdict"], "violated");
  EXPECT_EQ(sec.body["trace"].back()["channel"], "leak");
  EXPECT_EQ(sec.body["prefix_length"], 0);
  EXPECT_EQ(sec.body["depth"], 30);

  Response alice = call("POST", "/api/sessions/" + id + "/check", {{"property", "corr"}, {"auth_for", "A0"}});
  ASSERT_EQ(alice.status, 200);
  EXPECT_EQ(alice.body["verdict"], "holds");
  EXPECT_EQ(alice.body["label"], "holds");
  EXPECT_GT(alice.body["states"].get<std::size_t>(), 1000u);
  EXPECT_EQ(alice.body["stats"]["timed_out"], false);

  Response bob = call("POST", "/api/sessions/" + id + "/check",
                      {{"property", "corr"}, {"trigger", "EndProt.A1.A0.?x.?y"}, {"guard", "StartProt.A0.A1.?x.?y"}});
  ASSERT_EQ(bob.status, 200);
  EXPECT_EQ(bob.body["verdict"], "violated");
  EXPECT_EQ(bob.body["trace"].back()["text"], "sig.EndProt.A1.A0.N0.N1");

  Response structured = call("POST", "/api/sessions/" + id + "/check",
                             {{"property", "inj-corr"},
                              {"trigger", {{"kind", "EndProt"}, {"self", "A1"}, {"peer", "A0"}, {"p1", "?x"}, {"p2", "?y"}}},
                              {"guard", {{"kind", "StartProt"}, {"self", "A0"}, {"peer", "A1"}, {"p1", "?x"}, {"p2", "?y"}}}});
  EXPECT_EQ(structured.body["verdict"], "violated");
}

TEST_F(Api, CheckStartsFromTheCurrentTrace) {
  std::string id = create({{"protocol", "nspk"}});
  step(id, 1);  // env.A0.A1: Alice talks to Bob
  Response r = call("POST", "/api/sessions/" + id + "/check", {{"property", "corr"}, {"auth_for", "A1"}, {"depth", 8}});
  ASSERT_EQ(r.status, 200);
  EXPECT_EQ(r.body["prefix_length"], 1);
  EXPECT_EQ(r.body["depth"], 8);
  if (r.body["verdict"] == "violated") {
    EXPECT_EQ(r.body["trace"][0]["text"], "env.A0.A1");
  }
}

TEST_F(Api, CheckRejectsBadProperties) {
  std::string id = create({{"protocol", "nswj"}});
  std::string path = "/api/sessions/" + id + "/check";
  EXPECT_EQ(call("POST", path, {{"property", "liveness"}}).status, 400);
  EXPECT_EQ(call("POST", path, {{"property", "corr"}}).status, 400);
  EXPECT_EQ(call("POST", path, {{"property", "corr"}, {"trigger", "EndProt.A1.A0.?x.?y"}}).status, 400);
  EXPECT_EQ(call("POST", path, {{"property", "corr"}, {"trigger", "Bogus"}, {"guard", "Bogus"}}).status, 400);
  EXPECT_EQ(call("POST", path, {{"property", "secrecy"}, {"message", "N7"}}).status, 400);
  EXPECT_EQ(call("POST", path, {{"property", "secrecy"}, {"depth", -1}}).status, 400);
}

TEST(ApiBudget, TimeoutAnswersAccepted) {
  Service::Options o;
  o.check_budget = std::chrono::milliseconds(0);
  Service s(o);
  Response c = s.handle("POST", "/api/sessions", R"({"protocol":"nspk"})");
  std::string id = c.body["id"];
  Response r = s.handle("POST", "/api/sessions/" + id + "/check", R"({"property":"corr","auth_for":"A0"})");
  EXPECT_EQ(r.status, 202);
  EXPECT_EQ(r.body["label"], "holds (timeout)");
  EXPECT_EQ(r.body["stats"]["timed_out"], true);
}

TEST(ApiExpiry, IdleSessionsAreDropped) {
  Service::Options o;
  o.idle_expiry = std::chrono::seconds(60);
  Service s(o);
  s.handle("POST", "/api/sessions", R"({"protocol":"dh"})");
  EXPECT_EQ(s.expire(Service::Clock::now()), 0u);
  EXPECT_EQ(s.expire(Service::Clock::now() + std::chrono::seconds(61)), 1u);
  EXPECT_EQ(s.session_count(), 0u);
}

TEST(Wire, EventRoundTrip) {
  ProtocolConfig c = default_config(Protocol::NSWJ, EveLocation::Eve3, AttackMode::Active);
  Trace t = *honest_trace(c);
  json j = wire::to_json(t);
  EXPECT_EQ(wire::trace_from_json(j, c.bounds), t);
  json texts = json::array();
  for (const auto& e : t) texts.push_back(render(e));
  EXPECT_EQ(wire::trace_from_json(texts, c.bounds), t);
  EXPECT_EQ(j[0]["src"], "A0");
  EXPECT_EQ(j[0]["tgt"], "A1");
  EXPECT_THROW(wire::event_from_json(json{{"channel", "send"}}, c.bounds), wire::WireError);
  EXPECT_THROW(wire::trace_from_json(json{{"a", 1}}, c.bounds), wire::WireError);
}

TEST(Wire, Verdicts) {
  json h = wire::to_json(Verdict{Holds{42, true, false}});
  EXPECT_EQ(h["verdict"], "holds");
  EXPECT_EQ(h["label"], "holds (bounded)");
  EXPECT_EQ(h["states"], 42);
  json v = wire::to_json(Verdict{Violated{{event::Terminate{}}}});
  EXPECT_EQ(v["verdict"], "violated");
  EXPECT_EQ(v["trace"][0]["text"], "terminate");
}

TEST(Http, RoundTripOverLocalhost) {
  Service service;
  httplib::Server server;
  std::vector<std::string> log;
  std::mutex log_mu;
  bind_routes(server, service, std::nullopt, [&](const std::string& m, const std::string& p, int status) {
    std::lock_guard lock(log_mu);
    log.push_back(m + " " + p + " " + std::to_string(status));
  });
  int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto cat = client.Get("/api/protocols");
  ASSERT_TRUE(cat);
  EXPECT_EQ(cat->status, 200);
  EXPECT_EQ(json::parse(cat->body)["protocols"].size(), 4u);

  auto created = client.Post("/api/sessions", R"({"protocol":"nswj","eve":"eve1"})", "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  std::string id = json::parse(created->body)["id"];
  auto checked = client.Post("/api/sessions/" + id + "/check", R"({"property":"secrecy"})", "application/json");
  ASSERT_TRUE(checked);
  EXPECT_EQ(json::parse(checked->body)["trace"].back()["text"], "leak.N0");
  auto gone = client.Delete("/api/sessions/" + id);
  ASSERT_TRUE(gone);
  EXPECT_EQ(gone->status, 200);
  auto missing = client.Get("/api/sessions/" + id);
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  server.stop();
  t.join();
  std::lock_guard lock(log_mu);
  ASSERT_EQ(log.size(), 5u);
  EXPECT_EQ(log[1], "POST /api/sessions 201");
}

}  // namespace
