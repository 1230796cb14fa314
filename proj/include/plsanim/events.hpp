// Protocol event alphabet: the seven channels and their text form.
#pragma once

#include <compare>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "plsanim/grammar.hpp"
#include "plsanim/terms.hpp"

namespace plsanim {

struct Signal {
  enum class Kind : std::uint8_t { StartProt, EndProt };

  Kind kind = Kind::StartProt;
  AgentId self;
  AgentId peer;
  Message p1;
  Message p2;

  friend auto operator<=>(const Signal&, const Signal&) = default;
};

inline std::string_view name(Signal::Kind k) { return k == Signal::Kind::StartProt ? "StartProt" : "EndProt"; }

namespace event {

struct Env {
  AgentId initiator;
  AgentId responder;
  friend auto operator<=>(const Env&, const Env&) = default;
};

// medium == Intruder is the public channel.
struct Send {
  AgentId src;
  AgentId medium;
  AgentId tgt;
  Message msg;
  friend auto operator<=>(const Send&, const Send&) = default;
};

struct Recv {
  AgentId src;
  AgentId medium;
  AgentId tgt;
  Message msg;
  friend auto operator<=>(const Recv&, const Recv&) = default;
};

struct CJam {
  Message msg;
  friend auto operator<=>(const CJam&, const CJam&) = default;
};

struct Sig {
  Signal signal;
  friend auto operator<=>(const Sig&, const Sig&) = default;
};

struct Leak {
  Message msg;
  friend auto operator<=>(const Leak&, const Leak&) = default;
};

struct Terminate {
  friend auto operator<=>(const Terminate&, const Terminate&) = default;
};

}  // namespace event

// Alternative order is the channel rank of the total event order.
using Event = std::variant<event::Env, event::Send, event::Recv, event::CJam, event::Sig, event::Leak, event::Terminate>;
using Trace = std::vector<Event>;

template <class T>
bool is(const Event& e) {
  return std::holds_alternative<T>(e);
}

inline bool on_public_channel(const Event& e) {
  if (auto* s = std::get_if<event::Send>(&e)) return s->medium.is_intruder();
  if (auto* r = std::get_if<event::Recv>(&e)) return r->medium.is_intruder();
  return false;
}

inline std::string_view channel_name(const Event& e) {
  static constexpr std::string_view kNames[] = {"env", "send", "recv", "cjam", "sig", "leak", "terminate"};
  return kNames[e.index()];
}

inline std::string render(const Event& e) {
  std::string out(channel_name(e));
  auto arg = [&out](const std::string& s) {
    out += '.';
    out += s;
  };
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, event::Env>) {
          arg(render(x.initiator));
          arg(render(x.responder));
        } else if constexpr (std::is_same_v<T, event::Send> || std::is_same_v<T, event::Recv>) {
          arg(render(x.src));
          arg(render(x.medium));
          arg(render(x.tgt));
          arg(render(x.msg));
        } else if constexpr (std::is_same_v<T, event::Sig>) {
          arg(std::string(name(x.signal.kind)));
          arg(render(x.signal.self));
          arg(render(x.signal.peer));
          arg(render(x.signal.p1));
          arg(render(x.signal.p2));
        } else if constexpr (std::is_same_v<T, event::CJam> || std::is_same_v<T, event::Leak>) {
          arg(render(x.msg));
        }
      },
      e);
  return out;
}

namespace detail {

inline std::vector<std::string_view> split_dots_by(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  for (;;) {
    std::size_t dot = text.find(sep, start);
    parts.push_back(text.substr(start, dot - start));
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return parts;
}

inline std::vector<std::string_view> split_dots(std::string_view text) { return split_dots_by(text, '.'); }

}  // namespace detail

// Inverse of render(Event).
inline Event parse_event(std::string_view text, const SemanticBounds& bounds) {
  auto parts = detail::split_dots(text);
  auto want = [&](std::size_t n) {
    if (parts.size() != n) throw ParseError(0, std::to_string(n - 1) + " arguments for " + std::string(parts[0]));
  };
  auto agent = [&](std::size_t i) { return parse_agent(parts[i], bounds); };
  auto message = [&](std::size_t i) { return normalize(parse(parts[i], bounds)); };
  std::string_view ch = parts[0];
  if (ch == "env") {
    want(3);
    return event::Env{agent(1), agent(2)};
  }
  if (ch == "send" || ch == "recv") {
    want(5);
    if (ch == "send") return event::Send{agent(1), agent(2), agent(3), message(4)};
    return event::Recv{agent(1), agent(2), agent(3), message(4)};
  }
  if (ch == "cjam") {
    want(2);
    return event::CJam{message(1)};
  }
  if (ch == "leak") {
    want(2);
    return event::Leak{message(1)};
  }
  if (ch == "sig") {
    want(6);
    Signal::Kind kind;
    if (parts[1] == "StartProt") {
      kind = Signal::Kind::StartProt;
    } else if (parts[1] == "EndProt") {
      kind = Signal::Kind::EndProt;
    } else {
      throw ParseError(4, "StartProt or EndProt");
    }
    return event::Sig{Signal{kind, agent(2), agent(3), message(4), message(5)}};
  }
  if (ch == "terminate") {
    want(1);
    return event::Terminate{};
  }
  throw ParseError(0, "channel name");
}

}  // namespace plsanim
