// One PASS/FAIL line per acceptance criterion; exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "plsanim/checker.hpp"
#include "support/inference_oracle.hpp"
#include "support/kernel_oracle.hpp"

using namespace plsanim;

namespace {

enum class Prop { Secrecy, AuthAlice, AuthBob };
constexpr Prop kProps[] = {Prop::Secrecy, Prop::AuthAlice, Prop::AuthBob};

const char* prop_name(Prop p) {
  switch (p) {
    case Prop::Secrecy:
      return "secrecy";
    case Prop::AuthAlice:
      return "auth-Alice";
    case Prop::AuthBob:
      return "auth-Bob";
  }
  return "?";
}

using Key = std::tuple<Protocol, EveLocation, AttackMode, Prop>;

struct Outcome {
  Verdict verdict;
  double seconds = 0;
};

std::string describe(const Key& k) {
  auto [p, e, m, prop] = k;
  return std::string(name(p)) + "/" + std::string(name(e)) + "/" + std::string(name(m)) + "/" + prop_name(prop);
}

PropertySpec spec_for(const ProtocolConfig& c, Prop p) {
  switch (p) {
    case Prop::Secrecy:
      return Secrecy{};
    case Prop::AuthAlice:
      return authenticity_for(c.alice(), c.bob());
    case Prop::AuthBob:
      return authenticity_for(c.bob(), c.alice());
  }
  return Secrecy{};
}

class Table {
 public:
  const Outcome& get(const Key& k) {
    auto it = cache_.find(k);
    if (it != cache_.end()) return it->second;
    auto [p, e, m, prop] = k;
    ProtocolConfig c = default_config(p, e, m);
    auto start = std::chrono::steady_clock::now();
    Verdict v = check(c, spec_for(c, prop)).verdict;
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return cache_.emplace(k, Outcome{std::move(v), secs}).first->second;
  }

 private:
  std::map<Key, Outcome> cache_;
};

// Expected verdicts: true = holds.
std::vector<std::pair<Key, bool>> expected_table() {
  std::vector<std::pair<Key, bool>> rows;
  const auto A = AttackMode::Active;
  rows.push_back({{Protocol::NSPK, EveLocation::Eve3, A, Prop::Secrecy}, false});
  rows.push_back({{Protocol::NSPK, EveLocation::Eve3, A, Prop::AuthAlice}, true});
  rows.push_back({{Protocol::NSPK, EveLocation::Eve3, A, Prop::AuthBob}, false});
  for (auto m : {AttackMode::Active, AttackMode::Passive}) {
    for (auto e : kAllEves) {
      rows.push_back({{Protocol::NSWJ, e, m, Prop::Secrecy}, e == EveLocation::Eve3});
      rows.push_back({{Protocol::NSWJ, e, m, Prop::AuthAlice}, true});
      rows.push_back({{Protocol::NSWJ, e, m, Prop::AuthBob}, true});
    }
  }
  for (auto prop : kProps) rows.push_back({{Protocol::DH, EveLocation::Eve3, A, prop}, false});
  for (auto e : kAllEves) {
    rows.push_back({{Protocol::DHWJ, e, A, Prop::Secrecy}, e == EveLocation::Eve3});
    rows.push_back({{Protocol::DHWJ, e, A, Prop::AuthAlice}, true});
    rows.push_back({{Protocol::DHWJ, e, A, Prop::AuthBob}, true});
  }
  return rows;
}

struct Result {
  bool pass = false;
  std::string detail;
};

Result results_table(Table& t) {
  auto rows = expected_table();
  std::size_t ok = 0;
  std::string first;
  for (const auto& [k, want] : rows) {
    bool got = holds(t.get(k).verdict);
    if (got == want) {
      ++ok;
    } else if (first.empty()) {
      first = "; first mismatch " + describe(k) + " got " + label(t.get(k).verdict);
    }
  }
  return {ok == rows.size() && rows.size() == 42, std::to_string(ok) + "/" + std::to_string(rows.size()) + " verdicts" + first};
}

Result eve1_leak(Table& t) {
  const auto& v = t.get({Protocol::NSWJ, EveLocation::Eve1, AttackMode::Active, Prop::Secrecy}).verdict;
  auto* x = std::get_if<Violated>(&v);
  if (x == nullptr) return {false, "no counterexample"};
  ProtocolConfig c = default_config(Protocol::NSWJ, EveLocation::Eve1, AttackMode::Active);
  Message n0 = c.nonce(c.alice());
  bool leaked = std::any_of(x->counterexample.begin(), x->counterexample.end(), [&](const Event& e) {
    auto* l = std::get_if<event::Leak>(&e);
    return l != nullptr && l->msg == n0;
  });
  return {leaked, "counterexample of " + std::to_string(x->counterexample.size()) + " events ends with " +
                      render(x->counterexample.back())};
}

Result lowe_trace(Table& t) {
  const auto& v = t.get({Protocol::NSPK, EveLocation::Eve3, AttackMode::Active, Prop::AuthBob}).verdict;
  auto* x = std::get_if<Violated>(&v);
  if (x == nullptr) return {false, "no counterexample"};
  ProtocolConfig c = default_config(Protocol::NSPK, EveLocation::Eve3, AttackMode::Active);
  const Trace& tr = x->counterexample;
  AgentId a = c.alice();
  AgentId b = c.bob();
  Message na = c.nonce(a);
  Message nb = c.nonce(b);
  Message first = normalize(msg::aenc(msg::pair(na, msg::agent(a)), c.pub_key(b)));

  bool env_with_intruder = std::find(tr.begin(), tr.end(), Event{event::Env{a, AgentId::intruder()}}) != tr.end();
  bool forwarded = false;
  bool unguarded_end = false;
  bool guard_seen = false;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (auto* r = std::get_if<event::Recv>(&tr[i]); r && r->tgt == b && r->msg == first) {
      event::Send direct{a, AgentId::intruder(), b, first};
      bool sent_directly = std::find(tr.begin(), tr.begin() + static_cast<std::ptrdiff_t>(i), Event{direct}) !=
                           tr.begin() + static_cast<std::ptrdiff_t>(i);
      forwarded = forwarded || !sent_directly;
    }
    if (auto* s = std::get_if<event::Sig>(&tr[i])) {
      const Signal& g = s->signal;
      if (g.kind == Signal::Kind::StartProt && g.self == a && g.peer == b && g.p1 == na && g.p2 == nb) guard_seen = true;
      if (g.kind == Signal::Kind::EndProt && g.self == b && g.peer == a && g.p1 == na && g.p2 == nb && !guard_seen) {
        unguarded_end = true;
      }
    }
  }
  bool feasible = static_cast<bool>(check_feasible(c, tr));
  bool pass = env_with_intruder && forwarded && unguarded_end && feasible;
  return {pass, std::string("env.A0.I ") + (env_with_intruder ? "yes" : "no") + ", forwarded first message " +
                    (forwarded ? "yes" : "no") + ", unguarded EndProt " + (unguarded_end ? "yes" : "no") + ", replay " +
                    (feasible ? "feasible" : "infeasible")};
}

Result runtime(Table& t) {
  double worst = 0;
  double worst_e3 = 0;
  std::string slowest;
  for (const auto& [k, want] : expected_table()) {
    double s = t.get(k).seconds;
    if (s > worst) {
      worst = s;
      slowest = describe(k);
    }
    if (std::get<0>(k) == Protocol::NSWJ && std::get<1>(k) == EveLocation::Eve3) worst_e3 = std::max(worst_e3, s);
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "slowest check %.3f s (%s), slowest nswj/eve3 check %.3f s", worst, slowest.c_str(), worst_e3);
  return {worst <= 120.0 && worst_e3 <= 10.0, buf};
}

Result inference_oracle() {
  ProtocolConfig c = default_config(Protocol::NSWJ, EveLocation::Eve3, AttackMode::Active);
  auto rep = oracle::compare_inference(1000, 1, c.bounds);
  std::string detail = std::to_string(rep.cases) + " knowledge sets, " + std::to_string(rep.queries) + " build queries, " +
                       std::to_string(rep.saturate_mismatches + rep.buildable_mismatches) + " mismatches";
  if (!rep.ok()) detail += " (" + rep.first_failure + ")";
  return {rep.ok() && rep.cases == 1000, detail};
}

Result kernel_laws() {
  auto rep = oracle::kernel_laws(500, 1);
  std::size_t checks = 0;
  std::size_t failures = 0;
  for (const auto& [law, n] : rep.checks) checks += n;
  for (const auto& [law, n] : rep.failures) failures += n;
  std::string detail = std::to_string(rep.checks.size()) + " laws, " + std::to_string(checks) + " checks, " +
                       std::to_string(failures) + " failures";
  if (failures != 0) detail += " (" + rep.first_failure + ")";
  return {failures == 0 && !rep.checks.empty(), detail};
}

Result honest_runs() {
  std::size_t ok = 0;
  std::size_t total = 0;
  std::string first;
  for (auto p : kAllProtocols) {
    for (auto e : kAllEves) {
      ++total;
      ProtocolConfig c = default_config(p, e, AttackMode::Active);
      auto t = honest_trace(c);
      bool good = false;
      if (t) {
        std::size_t ends = std::count_if(t->begin(), t->end(), [&](const Event& x) {
          auto* s = std::get_if<event::Sig>(&x);
          return s != nullptr && s->signal.kind == Signal::Kind::EndProt;
        });
        good = ends == 2 && is<event::Terminate>(t->back()) && static_cast<bool>(check_feasible(c, *t));
      }
      if (good) {
        ++ok;
      } else if (first.empty()) {
        first = "; failed for " + std::string(name(p)) + "/" + std::string(name(e));
      }
    }
  }
  return {ok == total, std::to_string(ok) + "/" + std::to_string(total) + " configurations" + first};
}

Result passive_active(Table& t) {
  std::size_t same = 0;
  std::size_t total = 0;
  std::string first;
  for (auto p : {Protocol::NSWJ, Protocol::DHWJ}) {
    for (auto e : kAllEves) {
      for (auto prop : kProps) {
        ++total;
        bool a = holds(t.get({p, e, AttackMode::Active, prop}).verdict);
        bool b = holds(t.get({p, e, AttackMode::Passive, prop}).verdict);
        if (a == b) {
          ++same;
        } else if (first.empty()) {
          first = "; differs at " + describe({p, e, AttackMode::Active, prop});
        }
      }
    }
  }
  return {same == total, std::to_string(same) + "/" + std::to_string(total) + " verdict pairs agree" + first};
}

}  // namespace

int main() {
  Table table;
  struct Criterion {
    int id;
    const char* title;
    std::function<Result()> run;
  };
  const Criterion criteria[] = {
      {1, "results table parity", [&] { return results_table(table); }},
      {2, "eve1 nswj secrecy counterexample leaks N0", [&] { return eve1_leak(table); }},
      {3, "nspk auth-Bob counterexample is the man in the middle", [&] { return lowe_trace(table); }},
      {4, "runtime budget", [&] { return runtime(table); }},
      {5, "inference agrees with the naive oracle", [] { return inference_oracle(); }},
      {6, "kernel laws against the small-step oracle", [] { return kernel_laws(); }},
      {7, "honest runs complete and replay", [] { return honest_runs(); }},
      {8, "passive and active verdicts agree", [&] { return passive_active(table); }},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %d  %s: %s\n", r.pass ? "PASS" : "FAIL", c.id, c.title, r.detail.c_str());
    std::fflush(stdout);
    if (!r.pass) ++failed;
  }
  std::printf("%d/8 criteria passed\n", 8 - failed);
  return failed == 0 ? 0 : 1;
}
