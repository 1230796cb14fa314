// JSON forms of events, traces, patterns and verdicts.
#pragma once

#include <string>

#include "json.hpp"

#include "plsanim/checker.hpp"
#include "plsanim/events.hpp"

namespace plsanim::wire {

using json = nlohmann::json;

class WireError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline json to_json(const Event& e) {
  json j;
  j["channel"] = std::string(channel_name(e));
  std::visit(
      [&j](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, event::Env>) {
          j["src"] = render(x.initiator);
          j["tgt"] = render(x.responder);
        } else if constexpr (std::is_same_v<T, event::Send> || std::is_same_v<T, event::Recv>) {
          j["src"] = render(x.src);
          j["medium"] = render(x.medium);
          j["tgt"] = render(x.tgt);
          j["msg"] = render(x.msg);
        } else if constexpr (std::is_same_v<T, event::Sig>) {
          j["kind"] = std::string(name(x.signal.kind));
          j["self"] = render(x.signal.self);
          j["peer"] = render(x.signal.peer);
          j["p1"] = render(x.signal.p1);
          j["p2"] = render(x.signal.p2);
        } else if constexpr (std::is_same_v<T, event::CJam> || std::is_same_v<T, event::Leak>) {
          j["msg"] = render(x.msg);
        }
      },
      e);
  j["text"] = render(e);
  return j;
}

inline json to_json(const Trace& t) {
  json out = json::array();
  for (const Event& e : t) out.push_back(to_json(e));
  return out;
}

// Enabled events numbered from 1 in the total event order.
inline json numbered(const std::vector<Event>& events) {
  json out = json::array();
  for (std::size_t i = 0; i < events.size(); ++i) {
    json j = to_json(events[i]);
    j["index"] = i + 1;
    out.push_back(std::move(j));
  }
  return out;
}

inline Event event_from_json(const json& j, const SemanticBounds& bounds) {
  if (j.is_string()) return parse_event(j.get<std::string>(), bounds);
  if (!j.is_object() || !j.contains("channel")) throw WireError("event must be a string or an object with a channel");
  auto field = [&j](const char* k) {
    if (!j.contains(k) || !j[k].is_string()) throw WireError(std::string("event field '") + k + "' missing");
    return j[k].get<std::string>();
  };
  std::string ch = field("channel");
  std::string text = ch;
  auto add = [&text](const std::string& s) { text += "." + s; };
  if (ch == "env") {
    add(field("src"));
    add(field("tgt"));
  } else if (ch == "send" || ch == "recv") {
    for (const char* k : {"src", "medium", "tgt", "msg"}) add(field(k));
  } else if (ch == "sig") {
    for (const char* k : {"kind", "self", "peer", "p1", "p2"}) add(field(k));
  } else if (ch == "cjam" || ch == "leak") {
    add(field("msg"));
  }
  return parse_event(text, bounds);
}

inline Trace trace_from_json(const json& j, const SemanticBounds& bounds) {
  if (!j.is_array()) throw WireError("trace must be an array");
  Trace t;
  for (const auto& e : j) t.push_back(event_from_json(e, bounds));
  return t;
}

// A pattern is either its text form or an object with a kind (StartProt,
// EndProt or leak) and slot fields; absent slots are wildcards.
inline EventPattern pattern_from_json(const json& j, const SemanticBounds& bounds) {
  if (j.is_string()) return parse_pattern(j.get<std::string>(), bounds);
  if (!j.is_object()) throw WireError("pattern must be a string or an object");
  auto slot = [&j](const char* k) -> std::string {
    if (!j.contains(k)) return "*";
    if (!j[k].is_string()) throw WireError(std::string("pattern field '") + k + "' must be a string");
    return j[k].get<std::string>();
  };
  std::string kind = j.contains("kind") && j["kind"].is_string() ? j["kind"].get<std::string>() : slot("channel");
  if (kind == "leak") return parse_pattern("leak." + slot("msg"), bounds);
  return parse_pattern(kind + "." + slot("self") + "." + slot("peer") + "." + slot("p1") + "." + slot("p2"), bounds);
}

inline json to_json(const Verdict& v) {
  json j;
  j["label"] = label(v);
  if (const auto* h = std::get_if<Holds>(&v)) {
    j["verdict"] = "holds";
    j["bounded"] = h->max_depth_hit;
    j["timed_out"] = h->timed_out;
    j["states"] = h->states_explored;
  } else {
    j["verdict"] = "violated";
    j["trace"] = to_json(std::get<Violated>(v).counterexample);
  }
  return j;
}

}  // namespace plsanim::wire
