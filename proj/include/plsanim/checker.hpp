// Bounded depth-first exploration and the property checkers built on it.
#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "plsanim/events.hpp"
#include "plsanim/kernel.hpp"
#include "plsanim/protocols.hpp"

namespace plsanim {

inline constexpr std::size_t kDefaultDepth = 30;

struct ExploreOptions {
  std::size_t depth = kDefaultDepth;
  std::size_t fuel = csp::kDefaultFuel;
  bool reverse_order = false;
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

struct ExplorationReport {
  std::size_t states = 0;
  std::size_t transitions = 0;
  bool truncated = false;  // some path was cut by the depth bound
  bool timed_out = false;
  bool stopped = false;    // the visitor asked to stop
};

enum class Visit { Continue, Prune, Stop };

namespace detail {

template <class E>
struct Explorer {
  const ExploreOptions& opts;
  std::function<Visit(const std::vector<E>&, const E&)> visitor;
  std::vector<E> trace;
  std::size_t base = 0;
  ExplorationReport report;

  // Returns false when the search must unwind.
  bool dfs(const csp::Process<E>& p) {
    if (opts.deadline && std::chrono::steady_clock::now() >= *opts.deadline) {
      report.timed_out = true;
      return false;
    }
    ++report.states;
    csp::Process<E> h = csp::settle(p, opts.fuel);
    if (!h.is_vis() || h.branches().empty()) return true;
    if (trace.size() - base >= opts.depth) {
      report.truncated = true;
      return true;
    }
    auto visit = [&](const typename csp::Process<E>::Branch& b) {
      ++report.transitions;
      Visit v = visitor(trace, b.event);
      if (v == Visit::Stop) {
        trace.push_back(b.event);
        report.stopped = true;
        return false;
      }
      if (v == Visit::Prune) return true;
      trace.push_back(b.event);
      bool go_on = dfs(b.next());
      if (!go_on) return false;
      trace.pop_back();
      return true;
    };
    const auto& bs = h.branches();
    if (opts.reverse_order) {
      for (auto it = bs.rbegin(); it != bs.rend(); ++it) {
        if (!visit(*it)) return false;
      }
    } else {
      for (const auto& b : bs) {
        if (!visit(b)) return false;
      }
    }
    return true;
  }
};

}  // namespace detail

// Depth-first search over the visible transitions of p. The visitor sees the
// trace so far (starting with `prefix`) and the event about to be taken. When
// it returns Stop the search ends and `found` (if given) receives the trace
// including that event. The depth bound counts events after the prefix.
template <class E>
ExplorationReport explore(const csp::Process<E>& p, const ExploreOptions& opts,
                          std::function<Visit(const std::vector<E>&, const E&)> visitor,
                          std::vector<E> prefix = {}, std::vector<E>* found = nullptr) {
  detail::Explorer<E> ex{opts, std::move(visitor), std::move(prefix), 0, {}};
  ex.base = ex.trace.size();
  ex.dfs(p);
  if (ex.report.stopped && found != nullptr) *found = ex.trace;
  return ex.report;
}

// ---------------------------------------------------------------------------
// Event patterns.

class PatternError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Slot {
  enum class Kind { Wildcard, Exact, Var };
  Kind kind = Kind::Wildcard;
  std::optional<Message> value;
  std::string var;

  static Slot any() { return {}; }
  static Slot exact(Message m) { return Slot{Kind::Exact, normalize(m), {}}; }
  static Slot exact(const AgentId& a) { return exact(msg::agent(a)); }
  static Slot bind(std::string name) { return Slot{Kind::Var, std::nullopt, std::move(name)}; }
};

using Bindings = std::map<std::string, Message>;

// Matches signal events (self, peer, p1, p2) or leak events (one slot).
struct EventPattern {
  enum class Channel { Sig, Leak };
  Channel channel = Channel::Sig;
  Signal::Kind kind = Signal::Kind::EndProt;
  std::vector<Slot> slots;

  static EventPattern signal(Signal::Kind k, Slot self, Slot peer, Slot p1, Slot p2) {
    return EventPattern{Channel::Sig, k, {std::move(self), std::move(peer), std::move(p1), std::move(p2)}};
  }
  static EventPattern leak(Slot m) { return EventPattern{Channel::Leak, Signal::Kind::EndProt, {std::move(m)}}; }
};

inline bool match_slot(const Slot& s, const Message& v, Bindings& b) {
  switch (s.kind) {
    case Slot::Kind::Wildcard:
      return true;
    case Slot::Kind::Exact:
      return *s.value == v;
    case Slot::Kind::Var: {
      auto [it, fresh] = b.emplace(s.var, v);
      return fresh || it->second == v;
    }
  }
  return false;
}

// On success the bindings are extended; on failure they are left untouched.
inline bool match(const EventPattern& p, const Event& e, Bindings& b) {
  std::vector<Message> values;
  if (p.channel == EventPattern::Channel::Sig) {
    auto* s = std::get_if<event::Sig>(&e);
    if (s == nullptr || s->signal.kind != p.kind) return false;
    values = {msg::agent(s->signal.self), msg::agent(s->signal.peer), s->signal.p1, s->signal.p2};
  } else {
    auto* l = std::get_if<event::Leak>(&e);
    if (l == nullptr) return false;
    values = {l->msg};
  }
  if (values.size() != p.slots.size()) return false;
  Bindings trial = b;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!match_slot(p.slots[i], values[i], trial)) return false;
  }
  b = std::move(trial);
  return true;
}

inline std::string render(const Slot& s) {
  switch (s.kind) {
    case Slot::Kind::Wildcard:
      return "*";
    case Slot::Kind::Exact:
      return s.value->kind() == MsgKind::Ag ? render(s.value->agent()) : render(*s.value);
    case Slot::Kind::Var:
      return "?" + s.var;
  }
  return "*";
}

inline std::string render(const EventPattern& p) {
  std::string out = p.channel == EventPattern::Channel::Sig ? std::string(name(p.kind)) : "leak";
  for (const auto& s : p.slots) out += "." + render(s);
  return out;
}

// "EndProt.A1.A0.?x.?y", "sig.StartProt.*.*.N0.N1", "leak.N0". Agent slots
// are the first two of a signal.
inline EventPattern parse_pattern(std::string_view text, const SemanticBounds& bounds) {
  auto parts = detail::split_dots(text);
  if (!parts.empty() && parts[0] == "sig") parts.erase(parts.begin());
  if (parts.empty()) throw PatternError("empty pattern");
  auto slot = [&](std::string_view s, bool agent) {
    if (s == "*") return Slot::any();
    if (s.size() > 1 && s[0] == '?') return Slot::bind(std::string(s.substr(1)));
    try {
      return agent ? Slot::exact(parse_agent(s, bounds)) : Slot::exact(parse(s, bounds));
    } catch (const ParseError& e) {
      throw PatternError("bad pattern slot '" + std::string(s) + "': " + e.what());
    }
  };
  std::string_view head = parts[0];
  if (head == "leak" || head == "Leak") {
    if (parts.size() != 2) throw PatternError("leak pattern takes one slot");
    return EventPattern::leak(slot(parts[1], false));
  }
  Signal::Kind kind;
  if (head == "StartProt") {
    kind = Signal::Kind::StartProt;
  } else if (head == "EndProt") {
    kind = Signal::Kind::EndProt;
  } else {
    throw PatternError("pattern must start with StartProt, EndProt or leak");
  }
  if (parts.size() != 5) throw PatternError("signal pattern takes four slots");
  return EventPattern::signal(kind, slot(parts[1], true), slot(parts[2], true), slot(parts[3], false), slot(parts[4], false));
}

// ---------------------------------------------------------------------------
// Properties and verdicts.

struct Secrecy {
  std::optional<Message> message;  // restrict to one secret
};

struct Correspondence {
  EventPattern trigger;
  EventPattern guard;
};

struct InjectiveCorrespondence {
  EventPattern trigger;
  EventPattern guard;
};

using PropertySpec = std::variant<Secrecy, Correspondence, InjectiveCorrespondence>;

// `self` completing a run with `peer` must be preceded by `peer` committing to
// the same payloads.
inline Correspondence authenticity_for(const AgentId& self, const AgentId& peer) {
  return Correspondence{
      EventPattern::signal(Signal::Kind::EndProt, Slot::exact(self), Slot::exact(peer), Slot::bind("p1"), Slot::bind("p2")),
      EventPattern::signal(Signal::Kind::StartProt, Slot::exact(peer), Slot::exact(self), Slot::bind("p1"), Slot::bind("p2"))};
}

struct Holds {
  std::size_t states_explored = 0;
  bool max_depth_hit = false;
  bool timed_out = false;
};

struct Violated {
  Trace counterexample;
};

using Verdict = std::variant<Holds, Violated>;

inline bool holds(const Verdict& v) { return std::holds_alternative<Holds>(v); }

// "holds", "holds (bounded)", "holds (timeout)" or "violated".
inline std::string label(const Verdict& v) {
  if (auto* h = std::get_if<Holds>(&v)) {
    if (h->timed_out) return "holds (timeout)";
    return h->max_depth_hit ? "holds (bounded)" : "holds";
  }
  return "violated";
}

namespace detail {

inline bool secrecy_violation(const Secrecy& s, const Event& e) {
  auto* l = std::get_if<event::Leak>(&e);
  return l != nullptr && (!s.message || normalize(*s.message) == l->msg);
}

inline bool correspondence_violation(const EventPattern& trigger, const EventPattern& guard, const Trace& before,
                                     const Event& e) {
  Bindings b;
  if (!match(trigger, e, b)) return false;
  return std::none_of(before.begin(), before.end(), [&](const Event& x) {
    Bindings g = b;
    return match(guard, x, g);
  });
}

// Kuhn's augmenting paths: can every trigger get its own earlier guard?
inline bool augment(std::size_t t, const std::vector<std::vector<std::size_t>>& adj, std::vector<int>& owner,
                    std::vector<char>& seen) {
  for (std::size_t g : adj[t]) {
    if (seen[g]) continue;
    seen[g] = 1;
    if (owner[g] < 0 || augment(static_cast<std::size_t>(owner[g]), adj, owner, seen)) {
      owner[g] = static_cast<int>(t);
      return true;
    }
  }
  return false;
}

inline bool injective_violation(const EventPattern& trigger, const EventPattern& guard, const Trace& before,
                                const Event& e) {
  Bindings probe;
  if (!match(trigger, e, probe)) return false;
  Trace all = before;
  all.push_back(e);
  std::vector<std::vector<std::size_t>> adj;
  for (std::size_t j = 0; j < all.size(); ++j) {
    Bindings b;
    if (!match(trigger, all[j], b)) continue;
    std::vector<std::size_t> candidates;
    for (std::size_t i = 0; i < j; ++i) {
      Bindings g = b;
      if (match(guard, all[i], g)) candidates.push_back(i);
    }
    adj.push_back(std::move(candidates));
  }
  std::vector<int> owner(all.size(), -1);
  for (std::size_t t = 0; t < adj.size(); ++t) {
    std::vector<char> seen(all.size(), 0);
    if (!augment(t, adj, owner, seen)) return true;
  }
  return false;
}

}  // namespace detail

// Whether taking e after `before` violates the property.
inline bool violates(const PropertySpec& spec, const Trace& before, const Event& e) {
  return std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Secrecy>) {
          return detail::secrecy_violation(s, e);
        } else if constexpr (std::is_same_v<T, Correspondence>) {
          return detail::correspondence_violation(s.trigger, s.guard, before, e);
        } else {
          return detail::injective_violation(s.trigger, s.guard, before, e);
        }
      },
      spec);
}

inline bool violates(const PropertySpec& spec, const Trace& t) {
  if (t.empty()) return false;
  Trace before(t.begin(), t.end() - 1);
  return violates(spec, before, t.back());
}

// ---------------------------------------------------------------------------
// Feasibility.

struct Feasibility {
  bool feasible = true;
  std::optional<std::size_t> failed_at;
  std::string reason;

  explicit operator bool() const { return feasible; }
};

inline Feasibility check_feasible(const SystemProcess& root, const Trace& t, std::size_t fuel = csp::kDefaultFuel) {
  try {
    csp::run(root, t, fuel);
    return {};
  } catch (const csp::RunFailure& f) {
    return Feasibility{false, f.index(), f.reason() == csp::RunFailure::Reason::Refused ? "refused" : "diverged"};
  }
}

inline Feasibility check_feasible(const ProtocolConfig& cfg, const Trace& t) { return check_feasible(assemble(cfg), t); }

// ---------------------------------------------------------------------------
// Checking.

class CheckerError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct CheckResult {
  Verdict verdict;
  ExplorationReport report;
};

// Checks `spec` on the behaviours of `root` that extend `prefix`. A found
// counterexample is replayed from `root` before being reported.
inline CheckResult check_process(const SystemProcess& root, const PropertySpec& spec, const ExploreOptions& opts = {},
                                 const Trace& prefix = {}) {
  SystemProcess start = csp::run(root, prefix, opts.fuel);
  Trace found;
  auto report = explore<Event>(
      start, opts, [&spec](const Trace& before, const Event& e) { return violates(spec, before, e) ? Visit::Stop : Visit::Continue; },
      prefix, &found);
  if (!report.stopped) return {Holds{report.states, report.truncated, report.timed_out}, report};
  auto replay = check_feasible(root, found, opts.fuel);
  if (!replay) throw CheckerError("counterexample failed replay at event " + std::to_string(*replay.failed_at));
  return {Violated{std::move(found)}, report};
}

inline CheckResult check(const ProtocolConfig& cfg, const PropertySpec& spec, const ExploreOptions& opts = {},
                         const Trace& prefix = {}) {
  return check_process(assemble(cfg), spec, opts, prefix);
}

inline Verdict check_secrecy(const ProtocolConfig& cfg, const Secrecy& spec = {}, std::size_t depth = kDefaultDepth) {
  ExploreOptions o;
  o.depth = depth;
  return check(cfg, spec, o).verdict;
}

inline Verdict check_correspondence(const ProtocolConfig& cfg, const Correspondence& spec, std::size_t depth = kDefaultDepth) {
  ExploreOptions o;
  o.depth = depth;
  return check(cfg, spec, o).verdict;
}

inline Verdict check_injective(const ProtocolConfig& cfg, const InjectiveCorrespondence& spec,
                               std::size_t depth = kDefaultDepth) {
  ExploreOptions o;
  o.depth = depth;
  return check(cfg, spec, o).verdict;
}

// Greedily drops events (latest first, never the final one) while the trace
// stays feasible and still ends in a violation.
inline Trace trim(const SystemProcess& root, const PropertySpec& spec, Trace t, std::size_t keep_prefix = 0) {
  if (t.size() < 2) return t;
  for (std::size_t i = t.size() - 1; i-- > keep_prefix;) {
    Trace shorter = t;
    shorter.erase(shorter.begin() + static_cast<std::ptrdiff_t>(i));
    if (violates(spec, shorter) && check_feasible(root, shorter)) t = std::move(shorter);
  }
  return t;
}

// An event the intruder could take without interfering: delivering exactly what
// was sent, to its addressee, at most once.
inline bool honest_extension(const Trace& before, const Event& e) {
  if (is<event::Leak>(e)) return false;
  if (auto* env = std::get_if<event::Env>(&e)) return env->responder.is_legit();
  auto* r = std::get_if<event::Recv>(&e);
  if (r == nullptr) return true;
  std::size_t sent = 0;
  std::size_t delivered = 0;
  for (const Event& x : before) {
    if (auto* s = std::get_if<event::Send>(&x); s && s->src == r->src && s->tgt == r->tgt && s->msg == r->msg) ++sent;
    if (auto* d = std::get_if<event::Recv>(&x); d && *d == *r) ++delivered;
  }
  return delivered < sent;
}

// First complete honest run found by explore: ends with Terminate and uses
// only honest extensions. nullopt if none exists within the depth.
inline std::optional<Trace> honest_trace(const SystemProcess& root, const ExploreOptions& opts = {}) {
  Trace found;
  auto report = explore<Event>(
      root, opts,
      [](const Trace& before, const Event& e) {
        if (!honest_extension(before, e)) return Visit::Prune;
        return is<event::Terminate>(e) ? Visit::Stop : Visit::Continue;
      },
      {}, &found);
  if (!report.stopped) return std::nullopt;
  return found;
}

inline std::optional<Trace> honest_trace(const ProtocolConfig& cfg) { return honest_trace(assemble(cfg)); }

// Uniform choice among enabled events at each step, reproducible per seed.
inline Trace random_walk(const SystemProcess& root, std::size_t steps, std::uint64_t seed, std::size_t fuel = csp::kDefaultFuel) {
  std::mt19937_64 rng(seed);
  Trace t;
  SystemProcess p = root;
  for (std::size_t i = 0; i < steps; ++i) {
    auto es = csp::enabled(p, fuel);
    if (es.empty()) break;
    std::uniform_int_distribution<std::size_t> pick(0, es.size() - 1);
    t.push_back(es[pick(rng)]);
    p = csp::step(p, t.back(), fuel);
  }
  return t;
}

inline Trace random_walk(const ProtocolConfig& cfg, std::size_t steps, std::uint64_t seed) {
  return random_walk(assemble(cfg), steps, seed);
}

}  // namespace plsanim
