// Session-based animation and checking API, independent of any HTTP library.
//
//   GET    /api/protocols
//   POST   /api/sessions                 {"protocol","eve","mode"}
//   GET    /api/sessions/{id}
//   DELETE /api/sessions/{id}
//   POST   /api/sessions/{id}/step       {"index": n, "event"?: text}
//   POST   /api/sessions/{id}/reset
//   POST   /api/sessions/{id}/check      {"property", "depth"?, "message"?, "trigger"?, "guard"?, "auth_for"?}
#pragma once

#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "plsanim/checker.hpp"
#include "plsanim/protocols.hpp"
#include "plsanim/wire.hpp"

namespace plsanim {

struct Response {
  int status = 200;
  nlohmann::json body;
};

class Service {
 public:
  using Clock = std::chrono::steady_clock;
  using json = nlohmann::json;

  struct Options {
    std::chrono::seconds idle_expiry{3600};
    std::chrono::milliseconds check_budget{120000};
    std::size_t default_depth = kDefaultDepth;
  };

  Service() : Service(Options{}) {}
  explicit Service(Options opts) : opts_(opts), rng_(std::random_device{}()) {}

  Response handle(std::string_view method, std::string_view path, std::string_view body) {
    try {
      return route(method, path, body);
    } catch (const json::exception& e) {
      return error(400, std::string("bad request body: ") + e.what());
    } catch (const ParseError& e) {
      return error(400, e.what());
    } catch (const PatternError& e) {
      return error(400, e.what());
    } catch (const wire::WireError& e) {
      return error(400, e.what());
    } catch (const ConfigError& e) {
      return error(400, e.what());
    } catch (const OutOfRange& e) {
      return error(400, e.what());
    }
  }

  std::size_t session_count() {
    std::lock_guard lock(mu_);
    return sessions_.size();
  }

  // Drops sessions idle for longer than the expiry; returns how many.
  std::size_t expire(Clock::time_point now = Clock::now()) {
    std::lock_guard lock(mu_);
    std::size_t n = 0;
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      std::unique_lock s(it->second->mu, std::try_to_lock);
      if (s.owns_lock() && now - it->second->last_used > opts_.idle_expiry) {
        s.unlock();
        it = sessions_.erase(it);
        ++n;
      } else {
        ++it;
      }
    }
    return n;
  }

 private:
  struct Session {
    explicit Session(ProtocolConfig c) : cfg(std::move(c)), root(assemble(cfg)), current(root) {}

    std::mutex mu;
    std::string id;
    ProtocolConfig cfg;
    SystemProcess root;
    SystemProcess current;
    Trace trace;
    Clock::time_point created;
    Clock::time_point last_used;
  };

  static Response error(int status, std::string message) { return {status, json{{"error", std::move(message)}}}; }

  static std::vector<std::string_view> segments(std::string_view path) {
    std::vector<std::string_view> out;
    auto q = path.find('?');
    if (q != std::string_view::npos) path = path.substr(0, q);
    for (auto part : detail::split_dots_by(path, '/')) {
      if (!part.empty()) out.push_back(part);
    }
    return out;
  }

  Response route(std::string_view method, std::string_view path, std::string_view body) {
    auto seg = segments(path);
    if (seg.size() < 2 || seg[0] != "api") return error(404, "no such endpoint");
    if (seg[1] == "protocols" && seg.size() == 2) {
      if (method != "GET") return error(405, "method not allowed");
      return catalog();
    }
    if (seg[1] != "sessions") return error(404, "no such endpoint");
    if (seg.size() == 2) {
      if (method != "POST") return error(405, "method not allowed");
      return create(parse_body(body));
    }
    expire();
    auto s = find(seg[2]);
    if (!s) return error(404, "unknown session");
    std::lock_guard lock(s->mu);
    s->last_used = Clock::now();
    if (seg.size() == 3) {
      if (method == "GET") return {200, state(*s)};
      if (method == "DELETE") {
        std::lock_guard g(mu_);
        sessions_.erase(s->id);
        return {200, json{{"deleted", s->id}}};
      }
      return error(405, "method not allowed");
    }
    if (seg.size() != 4 || method != "POST") return error(404, "no such endpoint");
    if (seg[3] == "step") return step(*s, parse_body(body));
    if (seg[3] == "reset") return reset(*s);
    if (seg[3] == "check") return check_session(*s, parse_body(body));
    return error(404, "no such endpoint");
  }

  static json parse_body(std::string_view body) {
    if (body.empty()) return json::object();
    json j = json::parse(body);
    if (!j.is_object()) throw wire::WireError("request body must be a JSON object");
    return j;
  }

  Response catalog() const {
    json protocols = json::array();
    for (auto p : kAllProtocols) {
      auto cfg = default_config(p, EveLocation::Eve3, AttackMode::Active);
      json secrets = json::array();
      for (const auto& s : cfg.secret_set) secrets.push_back(render(s));
      protocols.push_back({{"name", name(p)},
                           {"watermarking", is_watermarked(p)},
                           {"default_depth", opts_.default_depth},
                           {"secrets", secrets}});
    }
    json eves = json::array();
    for (auto e : kAllEves) eves.push_back(name(e));
    json modes = json::array();
    for (auto m : kAllModes) modes.push_back(name(m));
    return {200, json{{"protocols", protocols},
                      {"eves", eves},
                      {"modes", modes},
                      {"properties", {"secrecy", "corr", "inj-corr"}},
                      {"default_depth", opts_.default_depth}}};
  }

  static std::string text_field(const json& j, const char* key, const char* fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_string()) throw wire::WireError(std::string("'") + key + "' must be a string");
    return j[key].get<std::string>();
  }

  Response create(const json& req) {
    auto p = parse_protocol(text_field(req, "protocol", ""));
    auto e = parse_eve(text_field(req, "eve", "eve3"));
    auto m = parse_mode(text_field(req, "mode", "active"));
    if (!p) return error(400, "unknown protocol");
    if (!e) return error(400, "unknown eve location");
    if (!m) return error(400, "unknown attack mode");
    auto s = std::make_shared<Session>(default_config(*p, *e, *m));
    s->created = s->last_used = Clock::now();
    {
      std::lock_guard lock(mu_);
      do {
        s->id = fresh_id();
      } while (sessions_.count(s->id) != 0);
      sessions_.emplace(s->id, s);
    }
    std::lock_guard lock(s->mu);
    return {201, state(*s)};
  }

  std::string fresh_id() {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string id;
    std::uint64_t bits = rng_();
    for (int i = 0; i < 16; ++i, bits >>= 4) id += kHex[bits & 0xf];
    return id;
  }

  std::shared_ptr<Session> find(std::string_view id) {
    std::lock_guard lock(mu_);
    auto it = sessions_.find(std::string(id));
    return it == sessions_.end() ? nullptr : it->second;
  }

  static json state(const Session& s) {
    auto head = csp::settle(s.current);
    return json{{"id", s.id},
                {"protocol", name(s.cfg.protocol)},
                {"eve", name(s.cfg.eve)},
                {"mode", name(s.cfg.mode)},
                {"trace", wire::to_json(s.trace)},
                {"events", wire::numbered(csp::enabled(head))},
                {"terminated", head.is_ret()}};
  }

  static Response step(Session& s, const json& req) {
    if (!req.contains("index") || !req["index"].is_number_integer()) return error(400, "'index' must be an integer");
    auto events = csp::enabled(s.current);
    long long index = req["index"].get<long long>();
    if (index < 1 || static_cast<std::size_t>(index) > events.size()) return error(409, "index does not match an enabled event");
    const Event& e = events[static_cast<std::size_t>(index) - 1];
    if (req.contains("event") && req["event"] != render(e)) return error(409, "enabled events changed");
    s.current = csp::step(s.current, e);
    s.trace.push_back(e);
    return {200, state(s)};
  }

  static Response reset(Session& s) {
    s.current = s.root;
    s.trace.clear();
    return {200, state(s)};
  }

  PropertySpec property(const Session& s, const json& req) const {
    std::string kind = text_field(req, "property", "");
    const SemanticBounds& b = s.cfg.bounds;
    if (kind == "secrecy") {
      Secrecy spec;
      if (req.contains("message") && !req["message"].is_null()) spec.message = normalize(parse(text_field(req, "message", ""), b));
      return spec;
    }
    if (kind != "corr" && kind != "inj-corr") throw wire::WireError("property must be secrecy, corr or inj-corr");
    Correspondence c;
    if (req.contains("trigger") || req.contains("guard")) {
      if (!req.contains("trigger") || !req.contains("guard")) throw wire::WireError("trigger and guard go together");
      c = Correspondence{wire::pattern_from_json(req["trigger"], b), wire::pattern_from_json(req["guard"], b)};
    } else if (req.contains("auth_for")) {
      AgentId self = parse_agent(text_field(req, "auth_for", ""), b);
      AgentId peer = self == s.cfg.alice() ? s.cfg.bob() : s.cfg.alice();
      c = authenticity_for(self, peer);
    } else {
      throw wire::WireError("correspondence needs trigger and guard, or auth_for");
    }
    if (kind == "inj-corr") return InjectiveCorrespondence{c.trigger, c.guard};
    return c;
  }

  Response check_session(const Session& s, const json& req) const {
    PropertySpec spec = property(s, req);
    ExploreOptions opts;
    opts.depth = opts_.default_depth;
    if (req.contains("depth")) {
      if (!req["depth"].is_number_integer() || req["depth"].get<long long>() < 0) return error(400, "'depth' must be a natural number");
      opts.depth = req["depth"].get<std::size_t>();
    }
    auto started = Clock::now();
    opts.deadline = started + opts_.check_budget;
    CheckResult r = check_process(s.root, spec, opts, s.trace);
    auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - started);
    json j = wire::to_json(r.verdict);
    j["prefix_length"] = s.trace.size();
    j["depth"] = opts.depth;
    j["stats"] = {{"states", r.report.states},
                  {"transitions", r.report.transitions},
                  {"truncated", r.report.truncated},
                  {"timed_out", r.report.timed_out},
                  {"elapsed_ms", elapsed.count()}};
    return {r.report.timed_out ? 202 : 200, j};
  }

  Options opts_;
  std::mutex mu_;
  std::mt19937_64 rng_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
};

}  // namespace plsanim
