// Deterministic CSP over interaction trees.
//
// A Process is a head-normal tree node: Ret (terminated), Sil (one silent
// step, lazily computed) or Vis (a finite, sorted map from events to lazy
// continuations). A Vis node may additionally carry a receptor: an input
// prefix over an unbounded event domain, described by a predicate. Receptor
// events are never listed by enabled(); they fire only when a parallel
// partner offers the same event explicitly inside the synchronisation set.
#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace plsanim::csp {

inline constexpr std::size_t kDefaultFuel = 100;

class KernelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class EventRefused : public KernelError {
 public:
  EventRefused() : KernelError("event refused") {}
};

class DivergenceExhausted : public KernelError {
 public:
  explicit DivergenceExhausted(std::size_t fuel)
      : KernelError("no visible event within " + std::to_string(fuel) + " silent steps") {}
};

class DuplicateEvent : public KernelError {
 public:
  DuplicateEvent() : KernelError("duplicate event in choice") {}
};

class OverlappingAlphabets : public KernelError {
 public:
  OverlappingAlphabets() : KernelError("external choice over overlapping events") {}
};

class NondeterministicInterleaving : public KernelError {
 public:
  NondeterministicInterleaving() : KernelError("both sides of an interleaving offer the same event") {}
};

class UnguardedRecursion : public KernelError {
 public:
  UnguardedRecursion() : KernelError("recursive reference reached before any event or silent step") {}
};

// Failure while replaying a trace: which event and why.
class RunFailure : public KernelError {
 public:
  enum class Reason { Refused, Diverged };

  RunFailure(std::size_t index, Reason reason)
      : KernelError("trace rejected at event " + std::to_string(index) +
                    (reason == Reason::Refused ? " (refused)" : " (diverged)")),
        index_(index),
        reason_(reason) {}

  std::size_t index() const { return index_; }
  Reason reason() const { return reason_; }

 private:
  std::size_t index_;
  Reason reason_;
};

template <class Event>
using EventSet = std::function<bool(const Event&)>;

template <class Event>
EventSet<Event> no_events() {
  return [](const Event&) { return false; };
}

template <class Event>
EventSet<Event> all_events() {
  return [](const Event&) { return true; };
}

template <class Event>
EventSet<Event> event_set(std::vector<Event> events) {
  std::sort(events.begin(), events.end());
  return [events = std::move(events)](const Event& e) { return std::binary_search(events.begin(), events.end(), e); };
}

template <class Event>
class Process {
 public:
  enum class Kind { Ret, Sil, Vis };

  using Thunk = std::function<Process()>;

  struct Branch {
    Event event;
    Thunk next;
  };

  struct Receptor {
    std::function<bool(const Event&)> accepts;
    std::function<Process(const Event&)> next;
  };

  static Process ret() { return Process(std::make_shared<const Node>(Node{Kind::Ret, {}, {}, {}})); }
  static Process sil(Thunk next) { return Process(std::make_shared<const Node>(Node{Kind::Sil, std::move(next), {}, {}})); }

  // Branches must be sorted by event and duplicate-free.
  static Process vis(std::vector<Branch> branches, std::optional<Receptor> receptor = std::nullopt) {
    return Process(std::make_shared<const Node>(Node{Kind::Vis, {}, std::move(branches), std::move(receptor)}));
  }

  Kind kind() const { return node_->kind; }
  bool is_ret() const { return kind() == Kind::Ret; }
  bool is_sil() const { return kind() == Kind::Sil; }
  bool is_vis() const { return kind() == Kind::Vis; }

  Process silent_next() const { return node_->sil(); }
  const std::vector<Branch>& branches() const { return node_->branches; }
  const std::optional<Receptor>& receptor() const { return node_->receptor; }

  const Branch* find(const Event& e) const {
    const auto& bs = node_->branches;
    auto it = std::lower_bound(bs.begin(), bs.end(), e, [](const Branch& b, const Event& x) { return b.event < x; });
    if (it != bs.end() && !(e < it->event)) return &*it;
    return nullptr;
  }

  bool receives(const Event& e) const { return node_->receptor && node_->receptor->accepts(e); }

  // Whether this head node can take e, explicitly or through its receptor.
  bool accepts(const Event& e) const { return is_vis() && (find(e) != nullptr || receives(e)); }

  // Continuation after e from a Vis head; nullopt when e is refused.
  std::optional<Process> after(const Event& e) const {
    if (!is_vis()) return std::nullopt;
    if (const Branch* b = find(e)) return b->next();
    if (receives(e)) return node_->receptor->next(e);
    return std::nullopt;
  }

 private:
  struct Node {
    Kind kind;
    Thunk sil;
    std::vector<Branch> branches;
    std::optional<Receptor> receptor;
  };

  explicit Process(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  std::shared_ptr<const Node> node_;
};

template <class Event>
Process<Event> deadlock() {
  return Process<Event>::vis({});
}

template <class Event>
Process<Event> terminated() {
  return Process<Event>::ret();
}

template <class Event>
Process<Event> prefix(Event e, typename Process<Event>::Thunk next) {
  std::vector<typename Process<Event>::Branch> bs;
  bs.push_back({std::move(e), std::move(next)});
  return Process<Event>::vis(std::move(bs));
}

template <class Event>
Process<Event> prefix(Event e, Process<Event> next) {
  return prefix<Event>(std::move(e), [next = std::move(next)] { return next; });
}

template <class Event>
Process<Event> choice_map(std::vector<typename Process<Event>::Branch> branches) {
  std::sort(branches.begin(), branches.end(), [](const auto& a, const auto& b) { return a.event < b.event; });
  for (std::size_t i = 1; i < branches.size(); ++i) {
    if (!(branches[i - 1].event < branches[i].event)) throw DuplicateEvent();
  }
  return Process<Event>::vis(std::move(branches));
}

template <class Event>
Process<Event> ext_choice(Process<Event> p, Process<Event> q) {
  using P = Process<Event>;
  if (p.is_sil()) return P::sil([p, q] { return ext_choice(p.silent_next(), q); });
  if (q.is_sil()) return P::sil([p, q] { return ext_choice(p, q.silent_next()); });
  if (p.is_ret()) return p;
  if (q.is_ret()) return q;

  std::vector<typename P::Branch> out;
  const auto& pb = p.branches();
  const auto& qb = q.branches();
  out.reserve(pb.size() + qb.size());
  std::merge(pb.begin(), pb.end(), qb.begin(), qb.end(), std::back_inserter(out),
             [](const auto& a, const auto& b) { return a.event < b.event; });
  for (std::size_t i = 1; i < out.size(); ++i) {
    if (!(out[i - 1].event < out[i].event)) throw OverlappingAlphabets();
  }
  if (!p.receptor() && !q.receptor()) return P::vis(std::move(out));
  typename P::Receptor r{
      [p, q](const Event& e) { return p.receives(e) || q.receives(e); },
      [p, q](const Event& e) {
        if (p.receives(e) && q.receives(e)) throw OverlappingAlphabets();
        return p.receives(e) ? p.receptor()->next(e) : q.receptor()->next(e);
      }};
  return P::vis(std::move(out), std::move(r));
}

// Monadic sequencing: on termination continue with f.
template <class Event>
Process<Event> seq(Process<Event> p, std::function<Process<Event>()> f) {
  using P = Process<Event>;
  if (p.is_ret()) return f();
  if (p.is_sil()) return P::sil([p, f] { return seq(p.silent_next(), f); });
  std::vector<typename P::Branch> out;
  out.reserve(p.branches().size());
  for (const auto& b : p.branches()) out.push_back({b.event, [next = b.next, f] { return seq(next(), f); }});
  std::optional<typename P::Receptor> r;
  if (p.receptor()) r = typename P::Receptor{p.receptor()->accepts, [p, f](const Event& e) { return seq(p.receptor()->next(e), f); }};
  return P::vis(std::move(out), std::move(r));
}

// Generalised parallel: events in sync need both sides; others interleave.
// Silent steps are taken eagerly, left side first.
template <class Event>
Process<Event> par(Process<Event> p, EventSet<Event> sync, Process<Event> q) {
  using P = Process<Event>;
  if (p.is_sil()) return P::sil([p, sync, q] { return par(p.silent_next(), sync, q); });
  if (q.is_sil()) return P::sil([p, sync, q] { return par(p, sync, q.silent_next()); });
  if (p.is_ret() && q.is_ret()) return P::ret();

  static const std::vector<typename P::Branch> kNone;
  const auto& pb = p.is_vis() ? p.branches() : kNone;
  const auto& qb = q.is_vis() ? q.branches() : kNone;

  std::vector<typename P::Branch> out;
  out.reserve(pb.size() + qb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < pb.size() || j < qb.size()) {
    bool take_p = j >= qb.size() || (i < pb.size() && !(qb[j].event < pb[i].event));
    bool take_q = i >= pb.size() || (j < qb.size() && !(pb[i].event < qb[j].event));
    const Event& e = take_p ? pb[i].event : qb[j].event;
    if (sync(e)) {
      bool p_ok = take_p || p.receives(e);
      bool q_ok = take_q || q.receives(e);
      if (p_ok && q_ok) {
        out.push_back({e, [p, q, sync, e] { return par(*p.after(e), sync, *q.after(e)); }});
      }
    } else if (take_p && take_q) {
      throw NondeterministicInterleaving();
    } else if (take_p) {
      out.push_back({e, [next = pb[i].next, q, sync] { return par(next(), sync, q); }});
    } else {
      out.push_back({e, [p, next = qb[j].next, sync] { return par(p, sync, next()); }});
    }
    if (take_p) ++i;
    if (take_q) ++j;
  }

  if (!p.receptor() && !q.receptor()) return P::vis(std::move(out));
  // Consulted only for events that are not explicit branches of the result.
  typename P::Receptor r{
      [p, q, sync](const Event& e) {
        if (sync(e)) return p.accepts(e) && q.accepts(e);
        return p.receives(e) != q.receives(e);
      },
      [p, q, sync](const Event& e) {
        if (sync(e)) return par(*p.after(e), sync, *q.after(e));
        if (p.receives(e)) return par(p.receptor()->next(e), sync, q);
        return par(p, sync, q.receptor()->next(e));
      }};
  return P::vis(std::move(out), std::move(r));
}

// Hidden events become silent steps and preempt visible ones; among several
// enabled hidden events the least in the event order is taken.
template <class Event>
Process<Event> hide(Process<Event> p, EventSet<Event> hidden) {
  using P = Process<Event>;
  if (p.is_ret()) return p;
  if (p.is_sil()) return P::sil([p, hidden] { return hide(p.silent_next(), hidden); });
  for (const auto& b : p.branches()) {
    if (hidden(b.event)) return P::sil([next = b.next, hidden] { return hide(next(), hidden); });
  }
  std::vector<typename P::Branch> out;
  out.reserve(p.branches().size());
  for (const auto& b : p.branches()) out.push_back({b.event, [next = b.next, hidden] { return hide(next(), hidden); }});
  std::optional<typename P::Receptor> r;
  if (p.receptor()) {
    r = typename P::Receptor{[p, hidden](const Event& e) { return !hidden(e) && p.receives(e); },
                             [p, hidden](const Event& e) { return hide(p.receptor()->next(e), hidden); }};
  }
  return P::vis(std::move(out), std::move(r));
}

// Behaves as p until p performs an event in x, then continues as handler.
template <class Event>
Process<Event> exception(Process<Event> p, EventSet<Event> x, typename Process<Event>::Thunk handler) {
  using P = Process<Event>;
  if (p.is_ret()) return p;
  if (p.is_sil()) return P::sil([p, x, handler] { return exception(p.silent_next(), x, handler); });
  std::vector<typename P::Branch> out;
  out.reserve(p.branches().size());
  for (const auto& b : p.branches()) {
    if (x(b.event)) {
      out.push_back({b.event, handler});
    } else {
      out.push_back({b.event, [next = b.next, x, handler] { return exception(next(), x, handler); }});
    }
  }
  std::optional<typename P::Receptor> r;
  if (p.receptor()) {
    r = typename P::Receptor{p.receptor()->accepts, [p, x, handler](const Event& e) {
                               return x(e) ? handler() : exception(p.receptor()->next(e), x, handler);
                             }};
  }
  return P::vis(std::move(out), std::move(r));
}

template <class Event>
Process<Event> exception(Process<Event> p, EventSet<Event> x, Process<Event> handler) {
  return exception<Event>(std::move(p), std::move(x), [handler] { return handler; });
}

// Guarded recursion, unfolded on demand. The body receives a thunk for the
// recursive reference; forcing it before producing a head is an error.
template <class Event>
Process<Event> rec(std::function<Process<Event>(typename Process<Event>::Thunk)> body) {
  auto unfolding = std::make_shared<bool>(true);
  typename Process<Event>::Thunk self = [body, unfolding] {
    if (*unfolding) throw UnguardedRecursion();
    return rec<Event>(body);
  };
  Process<Event> head = body(self);
  *unfolding = false;
  return head;
}

// Resolves up to fuel silent steps.
template <class Event>
Process<Event> settle(Process<Event> p, std::size_t fuel = kDefaultFuel) {
  std::size_t left = fuel;
  while (p.is_sil()) {
    if (left == 0) throw DivergenceExhausted(fuel);
    p = p.silent_next();
    --left;
  }
  return p;
}

template <class Event>
std::vector<Event> enabled(const Process<Event>& p, std::size_t fuel = kDefaultFuel) {
  Process<Event> h = settle(p, fuel);
  std::vector<Event> out;
  if (h.is_vis()) {
    out.reserve(h.branches().size());
    for (const auto& b : h.branches()) out.push_back(b.event);
  }
  return out;
}

template <class Event>
bool offers(const Process<Event>& p, const Event& e, std::size_t fuel = kDefaultFuel) {
  return settle(p, fuel).accepts(e);
}

template <class Event>
Process<Event> step(const Process<Event>& p, const Event& e, std::size_t fuel = kDefaultFuel) {
  auto next = settle(p, fuel).after(e);
  if (!next) throw EventRefused();
  return *next;
}

template <class Event>
Process<Event> run(Process<Event> p, const std::vector<Event>& trace, std::size_t fuel = kDefaultFuel) {
  for (std::size_t i = 0; i < trace.size(); ++i) {
    try {
      p = step(p, trace[i], fuel);
    } catch (const EventRefused&) {
      throw RunFailure(i, RunFailure::Reason::Refused);
    } catch (const DivergenceExhausted&) {
      throw RunFailure(i, RunFailure::Reason::Diverged);
    }
  }
  return p;
}

}  // namespace plsanim::csp
