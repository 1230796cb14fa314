// Protocol configurations and process builders for NSPK, NSWJ, DH and DHWJ.
//
// System shape:
//   (PAlice |[Env, Terminate]| PBob) |[public Send/Recv, Terminate]| PIntruder
// where each agent is
//   ((Role |[Recv to self, CJam]| Jammer) \ CJam)  /_{Terminate}  Skip
// for the watermarking protocols, and just Role /_{Terminate} Skip otherwise.
#pragma once

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "plsanim/events.hpp"
#include "plsanim/inference.hpp"
#include "plsanim/kernel.hpp"
#include "plsanim/terms.hpp"

namespace plsanim {

enum class Protocol { NSPK, NSWJ, DH, DHWJ };
enum class EveLocation { Eve1, Eve2, Eve3, Eve4 };
enum class AttackMode { Passive, Active };

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr Protocol kAllProtocols[] = {Protocol::NSPK, Protocol::NSWJ, Protocol::DH, Protocol::DHWJ};
inline constexpr EveLocation kAllEves[] = {EveLocation::Eve1, EveLocation::Eve2, EveLocation::Eve3, EveLocation::Eve4};
inline constexpr AttackMode kAllModes[] = {AttackMode::Passive, AttackMode::Active};

inline std::string_view name(Protocol p) {
  switch (p) {
    case Protocol::NSPK:
      return "nspk";
    case Protocol::NSWJ:
      return "nswj";
    case Protocol::DH:
      return "dh";
    case Protocol::DHWJ:
      return "dhwj";
  }
  return "?";
}

inline std::string_view name(EveLocation e) {
  static constexpr std::string_view kNames[] = {"eve1", "eve2", "eve3", "eve4"};
  return kNames[static_cast<int>(e)];
}

inline std::string_view name(AttackMode m) { return m == AttackMode::Active ? "active" : "passive"; }

namespace detail {

inline bool same_name(std::string_view a, std::string_view b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end(),
                    [](char x, char y) { return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y)); });
}

}  // namespace detail

// Names are matched case-insensitively.
inline std::optional<Protocol> parse_protocol(std::string_view s) {
  for (auto p : kAllProtocols) {
    if (detail::same_name(name(p), s)) return p;
  }
  return std::nullopt;
}

inline std::optional<EveLocation> parse_eve(std::string_view s) {
  for (auto e : kAllEves) {
    if (detail::same_name(name(e), s)) return e;
  }
  return std::nullopt;
}

inline std::optional<AttackMode> parse_mode(std::string_view s) {
  for (auto m : kAllModes) {
    if (detail::same_name(name(m), s)) return m;
  }
  return std::nullopt;
}

// Agent 0 is Alice, agent 1 is Bob.
inline bool in_jamming_range(EveLocation eve, const AgentId& agent) {
  if (!agent.is_legit()) return false;
  bool alice = agent.index.value() == 0;
  switch (eve) {
    case EveLocation::Eve1:
      return alice;
    case EveLocation::Eve2:
      return !alice;
    case EveLocation::Eve3:
      return true;
    case EveLocation::Eve4:
      return false;
  }
  return false;
}

inline bool is_watermarked(Protocol p) { return p == Protocol::NSWJ || p == Protocol::DHWJ; }

struct ProtocolConfig {
  Protocol protocol = Protocol::NSWJ;
  SemanticBounds bounds;
  std::map<AgentId, BoundedIndex> nonce_of;
  std::map<AgentId, Bitmask> bitmask_of;
  std::vector<AgentId> env_partners;
  std::vector<Message> secret_set;
  Knowledge intruder_initial;
  std::optional<Message> secret_datum;
  EveLocation eve = EveLocation::Eve3;
  AttackMode mode = AttackMode::Active;

  AgentId alice() const { return AgentId::legit(0, bounds.agents); }
  AgentId bob() const { return AgentId::legit(1, bounds.agents); }

  // Legitimate agents followed by the intruder.
  std::vector<AgentId> participants() const {
    std::vector<AgentId> out;
    for (std::uint32_t i = 0; i < bounds.agents; ++i) out.push_back(AgentId::legit(i, bounds.agents));
    out.push_back(AgentId::intruder());
    return out;
  }

  Message nonce(const AgentId& a) const {
    auto it = nonce_of.find(a);
    if (it == nonce_of.end()) throw ConfigError("no nonce configured for " + render(a));
    return msg::nonce(it->second);
  }

  // Watermarking bitmask term of an agent, if it has one.
  std::optional<Message> mask(const AgentId& a) const {
    auto it = bitmask_of.find(a);
    if (it == bitmask_of.end()) return std::nullopt;
    return msg::bitm(it->second);
  }

  Message own_mask(const AgentId& a) const {
    auto m = mask(a);
    if (!m) throw ConfigError("no bitmask configured for " + render(a));
    return *m;
  }

  // Key pair index: legitimate agent i uses i, the intruder uses #agents.
  BoundedIndex key_index(const AgentId& a, std::uint32_t bound) const {
    if (a.is_legit()) return mk_index(a.index.value(), bound);
    if (a.is_intruder()) return mk_index(bounds.agents, bound);
    throw ConfigError("no key pair for " + render(a));
  }
  Message pub_key(const AgentId& a) const { return msg::pk(key_index(a, bounds.pub_keys)); }
  Message priv_key(const AgentId& a) const { return msg::sk(key_index(a, bounds.priv_keys)); }

  Message base() const { return msg::expg(mk_index(0, bounds.exp_bases)); }

  Message datum() const {
    if (!secret_datum) throw ConfigError("no secret datum configured");
    return *secret_datum;
  }
};

inline ProtocolConfig default_config(Protocol protocol, EveLocation eve, AttackMode mode) {
  ProtocolConfig c;
  c.protocol = protocol;
  c.eve = eve;
  c.mode = mode;
  c.bounds = SemanticBounds{2, 4, 1, 1, 1, 1, 1};
  if (protocol == Protocol::NSPK) {
    c.bounds.pub_keys = 3;
    c.bounds.priv_keys = 3;
  }
  if (is_watermarked(protocol)) {
    c.bounds.bitmask_codes = 3;
    c.bounds.bitmask_max_len = 2;
  }
  const SemanticBounds& b = c.bounds;
  AgentId alice = c.alice();
  AgentId bob = c.bob();
  AgentId intruder = AgentId::intruder();
  auto n = [&b](std::uint32_t i) { return msg::nonce(mk_index(i, b.nonces)); };

  c.nonce_of = {{alice, mk_index(0, b.nonces)}, {bob, mk_index(1, b.nonces)}, {intruder, mk_index(2, b.nonces)}};
  if (is_watermarked(protocol)) {
    auto bm = [&b](std::uint32_t code) {
      return Bitmask::bm(mk_index(code, b.bitmask_codes), mk_index(1, b.bitmask_max_len));
    };
    c.bitmask_of = {{alice, bm(0)}, {bob, bm(1)}, {intruder, bm(2)}};
  }

  std::vector<Message> initial = {msg::agent(alice), msg::agent(bob), msg::agent(intruder), n(2)};
  switch (protocol) {
    case Protocol::NSPK:
      c.env_partners = {bob, intruder};
      c.secret_set = {n(1)};
      for (const AgentId& a : c.participants()) initial.push_back(c.pub_key(a));
      initial.push_back(c.priv_key(intruder));
      break;
    case Protocol::NSWJ:
      c.env_partners = {bob};
      c.secret_set = {n(0), n(1)};
      initial.push_back(*c.mask(intruder));
      break;
    case Protocol::DH:
      c.env_partners = {bob};
      c.secret_datum = n(3);
      c.secret_set = {n(3)};
      initial.push_back(c.base());
      break;
    case Protocol::DHWJ:
      c.env_partners = {bob};
      c.secret_datum = n(3);
      // The watermarked half-keys are payloads the jamming is meant to hide.
      c.secret_set = {n(3), normalize(msg::modexp(c.base(), n(0))), normalize(msg::modexp(c.base(), n(1)))};
      initial.push_back(c.base());
      initial.push_back(*c.mask(intruder));
      break;
  }
  std::sort(c.secret_set.begin(), c.secret_set.end());
  c.intruder_initial = Knowledge(std::move(initial));
  return c;
}

inline void validate(const ProtocolConfig& c) {
  if (!c.bounds.valid()) throw ConfigError("all bounds must be positive");
  if (c.bounds.agents < 2) throw ConfigError("need at least two legitimate agents");
  for (const AgentId& a : c.participants()) c.nonce(a);
  auto injective = [](const auto& map) {
    std::vector<typename std::decay_t<decltype(map)>::mapped_type> values;
    for (const auto& [k, v] : map) values.push_back(v);
    std::sort(values.begin(), values.end());
    return std::adjacent_find(values.begin(), values.end()) == values.end();
  };
  if (!injective(c.nonce_of)) throw ConfigError("nonce map is not injective");
  if (!injective(c.bitmask_of)) throw ConfigError("bitmask map is not injective");
  if (is_watermarked(c.protocol)) {
    for (const AgentId& a : c.participants()) c.own_mask(a);
    const Bitmask& mine = c.bitmask_of.at(AgentId::intruder());
    for (const auto& [a, bm] : c.bitmask_of) {
      if (a.is_legit() && bitmask_leq(mine, bm)) throw ConfigError("intruder bitmask is a prefix of " + render(a) + "'s");
    }
  }
  Knowledge start = saturate(c.intruder_initial);
  for (const Message& s : c.secret_set) {
    if (knows(start, s)) throw ConfigError("secret " + render(s) + " is initially known to the intruder");
  }
}

inline const std::vector<Message>& secret_set(const ProtocolConfig& c) { return c.secret_set; }

// Every message a legitimate agent could accept at some step, instantiated
// over the configured bounds. Fake messages are drawn from this list.
inline std::vector<Message> receivable_messages(const ProtocolConfig& c) {
  const SemanticBounds& b = c.bounds;
  std::vector<Message> nonces;
  for (std::uint32_t i = 0; i < b.nonces; ++i) nonces.push_back(msg::nonce(mk_index(i, b.nonces)));
  std::vector<Message> agents;
  for (const AgentId& a : c.participants()) agents.push_back(msg::agent(a));

  std::vector<Message> payloads;
  std::vector<Message> out;
  switch (c.protocol) {
    case Protocol::NSPK:
    case Protocol::NSWJ:
      for (const auto& x : nonces) {
        for (const auto& a : agents) payloads.push_back(msg::pair(x, a));
      }
      for (const auto& x : nonces) {
        for (const auto& y : nonces) payloads.push_back(msg::pair(x, y));
      }
      for (const auto& x : nonces) payloads.push_back(x);
      break;
    case Protocol::DH:
    case Protocol::DHWJ: {
      for (const auto& x : nonces) payloads.push_back(msg::modexp(c.base(), x));
      for (const auto& x : nonces) {
        for (std::size_t i = 0; i < nonces.size(); ++i) {
          for (std::size_t j = i; j < nonces.size(); ++j) {
            payloads.push_back(msg::senc(x, msg::modexp(msg::modexp(c.base(), nonces[i]), nonces[j])));
          }
        }
      }
      break;
    }
  }
  for (const auto& p : payloads) {
    switch (c.protocol) {
      case Protocol::NSPK:
        for (const AgentId& a : c.participants()) out.push_back(normalize(msg::aenc(p, c.pub_key(a))));
        break;
      case Protocol::NSWJ:
      case Protocol::DHWJ:
        for (const AgentId& a : c.participants()) out.push_back(normalize(msg::wat(p, c.own_mask(a))));
        break;
      case Protocol::DH:
        out.push_back(normalize(p));
        break;
    }
  }
  return out;
}

using SystemProcess = csp::Process<Event>;

namespace detail {

using Cont = std::function<SystemProcess()>;

inline SystemProcess finish() { return csp::prefix<Event>(event::Terminate{}, csp::terminated<Event>()); }

// Building blocks for one agent's role script.
struct Role {
  std::shared_ptr<const ProtocolConfig> cfg;
  AgentId self;

  bool jammed() const { return is_watermarked(cfg->protocol); }

  SystemProcess send(const AgentId& to, const Message& m, Cont k) const {
    return csp::prefix<Event>(event::Send{self, AgentId::intruder(), to, normalize(m)}, std::move(k));
  }

  SystemProcess signal(Signal::Kind kind, const AgentId& peer, const Message& p1, const Message& p2, Cont k) const {
    return csp::prefix<Event>(event::Sig{Signal{kind, self, peer, normalize(p1), normalize(p2)}}, std::move(k));
  }

  // Input choice over (claimed sender, message) candidates. With jamming, the
  // accepted term then passes through this agent's jammer on cjam.
  SystemProcess recv(const std::vector<std::pair<AgentId, Message>>& candidates,
                     std::function<SystemProcess(const AgentId&, const Message&)> k) const {
    std::vector<SystemProcess::Branch> bs;
    for (const auto& [from, m] : candidates) {
      Message n = normalize(m);
      Cont deliver = [k, from = from, n] { return k(from, n); };
      if (jammed()) {
        Message jm = normalize(msg::jam(n, cfg->own_mask(self)));
        deliver = [deliver, jm] { return csp::prefix<Event>(event::CJam{jm}, deliver); };
      }
      bs.push_back({event::Recv{from, AgentId::intruder(), self, n}, deliver});
    }
    std::sort(bs.begin(), bs.end(), [](const auto& a, const auto& b) { return a.event < b.event; });
    bs.erase(std::unique(bs.begin(), bs.end(), [](const auto& a, const auto& b) { return a.event == b.event; }), bs.end());
    return SystemProcess::vis(std::move(bs));
  }

  std::vector<Message> nonces() const {
    std::vector<Message> out;
    for (std::uint32_t i = 0; i < cfg->bounds.nonces; ++i) out.push_back(msg::nonce(mk_index(i, cfg->bounds.nonces)));
    return out;
  }

  // Wraps a payload the way this protocol protects messages from `from`.
  // nullopt when the receiver cannot check it (an unknown watermark code).
  std::optional<Message> sealed_from(const AgentId& from, const AgentId& to, const Message& payload) const {
    switch (cfg->protocol) {
      case Protocol::NSPK:
        return msg::aenc(payload, cfg->pub_key(to));
      case Protocol::NSWJ:
      case Protocol::DHWJ:
        if (!from.is_legit()) return std::nullopt;
        return msg::wat(payload, cfg->own_mask(from));
      case Protocol::DH:
        return payload;
    }
    return std::nullopt;
  }

  Message seal(const AgentId& to, const Message& payload) const { return *sealed_from(self, to, payload); }

  // Unwraps a message accepted through sealed_from.
  Message opened(const Message& m) const { return cfg->protocol == Protocol::DH ? m : m.left(); }
};

// Alice's script once the environment has chosen her partner.
inline SystemProcess initiator_session(const Role& r, const AgentId& peer) {
  const auto& c = r.cfg;
  Message na = c->nonce(r.self);
  auto finish_run = [r, peer](Message p1, Message p2) {
    return r.signal(Signal::Kind::EndProt, peer, p1, p2, finish);
  };

  if (c->protocol == Protocol::NSPK || c->protocol == Protocol::NSWJ) {
    std::vector<std::pair<AgentId, Message>> replies;
    for (const Message& x : r.nonces()) {
      if (auto m = r.sealed_from(peer, r.self, msg::pair(na, x))) replies.emplace_back(peer, *m);
    }
    return r.send(peer, r.seal(peer, msg::pair(na, msg::agent(r.self))), [=] {
      return r.recv(replies, [=](const AgentId&, const Message& m) {
        Message nb = r.opened(m).right();
        return r.signal(Signal::Kind::StartProt, peer, na, nb, [=] {
          return r.send(peer, r.seal(peer, nb), [=] { return finish_run(na, nb); });
        });
      });
    });
  }

  // DH and DHWJ.
  Message t = c->datum();
  std::vector<std::pair<AgentId, Message>> halves;
  for (const Message& x : r.nonces()) {
    if (auto m = r.sealed_from(peer, r.self, msg::modexp(c->base(), x))) halves.emplace_back(peer, *m);
  }
  return r.send(peer, r.seal(peer, msg::modexp(c->base(), na)), [=] {
    return r.recv(halves, [=](const AgentId&, const Message& m) {
      Message ka = normalize(msg::modexp(r.opened(m), na));
      return r.signal(Signal::Kind::StartProt, peer, ka, t, [=] {
        return r.send(peer, r.seal(peer, msg::senc(t, ka)), [=]() -> SystemProcess {
          if (c->protocol == Protocol::DH) return finish_run(ka, t);
          std::vector<std::pair<AgentId, Message>> confirm;
          if (auto m2 = r.sealed_from(peer, r.self, msg::senc(t, ka))) confirm.emplace_back(peer, *m2);
          return r.recv(confirm, [=](const AgentId&, const Message&) { return finish_run(ka, t); });
        });
      });
    });
  });
}

// Bob's script: accept a first message from any peer he can check.
inline SystemProcess responder_session(const Role& r) {
  const auto& c = r.cfg;
  Message nb = c->nonce(r.self);
  std::vector<AgentId> peers;
  for (const AgentId& a : c->participants()) {
    if (a != r.self) peers.push_back(a);
  }

  if (c->protocol == Protocol::NSPK || c->protocol == Protocol::NSWJ) {
    std::vector<std::pair<AgentId, Message>> firsts;
    for (const AgentId& a : peers) {
      for (const Message& x : r.nonces()) {
        if (auto m = r.sealed_from(a, r.self, msg::pair(x, msg::agent(a)))) firsts.emplace_back(a, *m);
      }
    }
    return r.recv(firsts, [=](const AgentId& a, const Message& m) {
      Message na = r.opened(m).left();
      return r.signal(Signal::Kind::StartProt, a, na, nb, [=] {
        return r.send(a, r.seal(a, msg::pair(na, nb)), [=] {
          std::vector<std::pair<AgentId, Message>> third;
          if (auto m3 = r.sealed_from(a, r.self, nb)) third.emplace_back(a, *m3);
          return r.recv(third, [=](const AgentId&, const Message&) {
            return r.signal(Signal::Kind::EndProt, a, na, nb, finish);
          });
        });
      });
    });
  }

  Message t = c->datum();
  std::vector<std::pair<AgentId, Message>> halves;
  for (const AgentId& a : peers) {
    for (const Message& x : r.nonces()) {
      if (auto m = r.sealed_from(a, r.self, msg::modexp(c->base(), x))) halves.emplace_back(a, *m);
    }
  }
  return r.recv(halves, [=](const AgentId& a, const Message& m) {
    Message kb = normalize(msg::modexp(r.opened(m), nb));
    return r.signal(Signal::Kind::StartProt, a, kb, t, [=] {
      return r.send(a, r.seal(a, msg::modexp(c->base(), nb)), [=] {
        std::vector<std::pair<AgentId, Message>> ciphers;
        for (const Message& x : r.nonces()) {
          if (auto m3 = r.sealed_from(a, r.self, msg::senc(x, kb))) ciphers.emplace_back(a, *m3);
        }
        return r.recv(ciphers, [=](const AgentId&, const Message& m3) {
          Message x = r.opened(m3).left();
          if (c->protocol == Protocol::DH) return r.signal(Signal::Kind::EndProt, a, kb, x, finish);
          return r.send(a, r.seal(a, msg::senc(x, kb)), [=] { return r.signal(Signal::Kind::EndProt, a, kb, x, finish); });
        });
      });
    });
  });
}

inline csp::EventSet<Event> is_terminate() {
  return [](const Event& e) { return is<event::Terminate>(e); };
}

inline csp::EventSet<Event> is_cjam() {
  return [](const Event& e) { return is<event::CJam>(e); };
}

}  // namespace detail

// The receiver of a watermarking agent: every public message addressed to the
// agent is jammed with the agent's own bitmask and handed over on cjam.
inline SystemProcess jamming_process(const AgentId& agent, const ProtocolConfig& cfg) {
  if (!is_watermarked(cfg.protocol)) throw ConfigError("jamming needs a watermarking protocol");
  Message mask = cfg.own_mask(agent);
  using Body = std::function<SystemProcess(SystemProcess::Thunk)>;
  Body body = [agent, mask](SystemProcess::Thunk self) {
    SystemProcess::Receptor r{
        [agent](const Event& e) {
          auto* rv = std::get_if<event::Recv>(&e);
          return rv != nullptr && rv->tgt == agent && rv->medium.is_intruder();
        },
        [mask, self](const Event& e) {
          const auto& rv = std::get<event::Recv>(e);
          return csp::prefix<Event>(event::CJam{normalize(msg::jam(rv.msg, mask))}, self);
        }};
    return SystemProcess::vis({}, std::move(r));
  };
  return csp::rec<Event>(body);
}

namespace detail {

inline SystemProcess wrap_agent(const std::shared_ptr<const ProtocolConfig>& cfg, const AgentId& self, SystemProcess role) {
  if (is_watermarked(cfg->protocol)) {
    csp::EventSet<Event> sync = [self](const Event& e) {
      if (is<event::CJam>(e)) return true;
      auto* rv = std::get_if<event::Recv>(&e);
      return rv != nullptr && rv->tgt == self && rv->medium.is_intruder();
    };
    role = csp::hide(csp::par(role, sync, jamming_process(self, *cfg)), is_cjam());
  }
  return csp::exception(role, is_terminate(), csp::terminated<Event>());
}

}  // namespace detail

inline SystemProcess initiator_process(const ProtocolConfig& cfg) {
  auto c = std::make_shared<const ProtocolConfig>(cfg);
  detail::Role r{c, c->alice()};
  std::vector<SystemProcess::Branch> bs;
  for (const AgentId& peer : c->env_partners) {
    bs.push_back({event::Env{r.self, peer}, [r, peer] { return detail::initiator_session(r, peer); }});
  }
  return detail::wrap_agent(c, r.self, csp::choice_map<Event>(std::move(bs)));
}

// Bob joins whichever run the environment starts.
inline SystemProcess responder_process(const ProtocolConfig& cfg) {
  auto c = std::make_shared<const ProtocolConfig>(cfg);
  detail::Role r{c, c->bob()};
  std::vector<SystemProcess::Branch> bs;
  for (const AgentId& peer : c->env_partners) {
    bs.push_back({event::Env{c->alice(), peer}, [r] { return detail::responder_session(r); }});
  }
  return detail::wrap_agent(c, r.self, csp::choice_map<Event>(std::move(bs)));
}

// Everything the intruder carries between events.
struct IntruderState {
  Knowledge knowledge;
  std::vector<Message> fakes;        // sorted; what she can build from receivable messages
  std::vector<event::Recv> relay;    // sorted; heard but not yet delivered
  std::vector<Message> leaked;       // sorted

  static IntruderState initial(const ProtocolConfig& c, const std::vector<Message>& receivable) {
    IntruderState s;
    s.knowledge = saturate(c.intruder_initial);
    s.refresh_fakes(c, receivable);
    return s;
  }

  // What the intruder's receiver passes to her over cjam.
  static Message overheard(const ProtocolConfig& c, const event::Send& s) {
    if (!s.tgt.is_legit() || !in_jamming_range(c.eve, s.tgt)) return s.msg;
    auto mask = c.mask(s.tgt);
    return normalize(msg::jam(s.msg, mask ? *mask : msg::bitm(Bitmask::null())));
  }

  IntruderState hear(const ProtocolConfig& c, const std::vector<Message>& receivable, const event::Send& s) const {
    IntruderState next = *this;
    Message view = overheard(c, s);
    std::size_t before = next.knowledge.size();
    next.knowledge = add_and_saturate(std::move(next.knowledge), view);
    if (s.tgt.is_legit()) {
      event::Recv r{s.src, AgentId::intruder(), s.tgt, s.msg};
      next.relay.insert(std::upper_bound(next.relay.begin(), next.relay.end(), r), r);
    }
    if (next.knowledge.size() != before) next.refresh_fakes(c, receivable);
    return next;
  }

  bool can_relay(const event::Recv& r) const { return std::binary_search(relay.begin(), relay.end(), r); }
  bool can_fake(const Message& m) const { return std::binary_search(fakes.begin(), fakes.end(), m); }

  IntruderState deliver(const event::Recv& r) const {
    IntruderState next = *this;
    auto it = std::lower_bound(next.relay.begin(), next.relay.end(), r);
    if (it != next.relay.end() && *it == r) next.relay.erase(it);
    return next;
  }

  std::vector<Message> leakable(const ProtocolConfig& c) const {
    std::vector<Message> out;
    for (const Message& s : c.secret_set) {
      if (knows(knowledge, s) && !std::binary_search(leaked.begin(), leaked.end(), normalize(s))) {
        out.push_back(normalize(s));
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  IntruderState leak(const Message& s) const {
    IntruderState next = *this;
    next.leaked.insert(std::upper_bound(next.leaked.begin(), next.leaked.end(), s), s);
    return next;
  }

 private:
  void refresh_fakes(const ProtocolConfig& c, const std::vector<Message>& receivable) {
    fakes.clear();
    if (c.mode == AttackMode::Active) fakes = filter_buildable(receivable, knowledge);
    std::sort(fakes.begin(), fakes.end());
  }
};

namespace detail {

struct IntruderContext {
  ProtocolConfig cfg;
  std::vector<Message> receivable;
};

inline SystemProcess intruder_body(const std::shared_ptr<const IntruderContext>& ctx,
                                   const std::shared_ptr<const IntruderState>& st) {
  const ProtocolConfig& c = ctx->cfg;
  std::vector<SystemProcess::Branch> bs;
  for (const Message& s : st->leakable(c)) {
    bs.push_back({event::Leak{s}, [ctx, st, s] { return intruder_body(ctx, std::make_shared<const IntruderState>(st->leak(s))); }});
  }
  bs.push_back({event::Terminate{}, [] { return csp::terminated<Event>(); }});

  // Hear any public send; deliver (relay, or fake when active) receivable messages.
  SystemProcess::Receptor r{
      [ctx, st](const Event& e) {
        if (auto* s = std::get_if<event::Send>(&e)) return s->medium.is_intruder() && s->src.is_legit();
        if (auto* rv = std::get_if<event::Recv>(&e)) {
          if (!rv->medium.is_intruder() || !rv->tgt.is_legit() || rv->src == rv->tgt) return false;
          return st->can_relay(*rv) || st->can_fake(rv->msg);
        }
        return false;
      },
      [ctx, st](const Event& e) -> SystemProcess {
        if (auto* s = std::get_if<event::Send>(&e)) {
          auto next = std::make_shared<const IntruderState>(st->hear(ctx->cfg, ctx->receivable, *s));
          Message view = IntruderState::overheard(ctx->cfg, *s);
          return csp::prefix<Event>(event::CJam{view}, [ctx, next] { return intruder_body(ctx, next); });
        }
        const auto& rv = std::get<event::Recv>(e);
        if (!st->can_relay(rv)) return intruder_body(ctx, st);
        return intruder_body(ctx, std::make_shared<const IntruderState>(st->deliver(rv)));
      }};
  return SystemProcess::vis(std::move(bs), std::move(r));
}

}  // namespace detail

inline SystemProcess intruder_process(const ProtocolConfig& cfg) {
  auto ctx = std::make_shared<const detail::IntruderContext>(detail::IntruderContext{cfg, receivable_messages(cfg)});
  auto st = std::make_shared<const IntruderState>(IntruderState::initial(cfg, ctx->receivable));
  return csp::hide(detail::intruder_body(ctx, st), detail::is_cjam());
}

inline SystemProcess assemble(const ProtocolConfig& cfg) {
  validate(cfg);
  csp::EventSet<Event> agents_sync = [](const Event& e) { return is<event::Env>(e) || is<event::Terminate>(e); };
  csp::EventSet<Event> abi = [](const Event& e) { return on_public_channel(e) || is<event::Terminate>(e); };
  return csp::par(csp::par(initiator_process(cfg), agents_sync, responder_process(cfg)), abi, intruder_process(cfg));
}

// Replays the intruder's state along a trace of the assembled system.
inline IntruderState intruder_state_after(const ProtocolConfig& cfg, const Trace& trace) {
  auto receivable = receivable_messages(cfg);
  IntruderState st = IntruderState::initial(cfg, receivable);
  for (const Event& e : trace) {
    if (auto* s = std::get_if<event::Send>(&e); s && s->medium.is_intruder()) {
      st = st.hear(cfg, receivable, *s);
    } else if (auto* r = std::get_if<event::Recv>(&e); r && st.can_relay(*r)) {
      st = st.deliver(*r);
    } else if (auto* l = std::get_if<event::Leak>(&e)) {
      st = st.leak(l->msg);
    }
  }
  return st;
}

}  // namespace plsanim
