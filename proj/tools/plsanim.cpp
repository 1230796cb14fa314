// plsanim: animate and check the bundled protocols from the terminal, or
// serve the JSON API.
//
// Exit status: 0 holds / feasible, 2 violated / infeasible, 1 error.

#include <csignal>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"

#include "plsanim/checker.hpp"
#include "plsanim/http.hpp"
#include "plsanim/protocols.hpp"
#include "plsanim/service.hpp"

using namespace plsanim;

namespace {

struct Selection {
  std::string protocol;
  std::string eve = "eve3";
  std::string mode = "active";

  ProtocolConfig config() const {
    return default_config(*parse_protocol(protocol), *parse_eve(eve), *parse_mode(mode));
  }
};

template <class Range>
std::vector<std::string> names(const Range& all) {
  std::vector<std::string> out;
  for (auto x : all) out.emplace_back(name(x));
  return out;
}

void add_selection(CLI::App* cmd, Selection& sel) {
  cmd->add_option("protocol,--protocol", sel.protocol, "protocol name")
      ->required()
      ->check(CLI::IsMember(names(kAllProtocols), CLI::ignore_case));
  cmd->add_option("--eve", sel.eve, "eavesdropper location")->check(CLI::IsMember(names(kAllEves), CLI::ignore_case))->capture_default_str();
  cmd->add_option("--mode", sel.mode, "attack mode")->check(CLI::IsMember(names(kAllModes), CLI::ignore_case))->capture_default_str();
}

void print_trace(std::ostream& out, const Trace& t) {
  for (const Event& e : t) out << render(e) << '\n';
}

int cmd_list() {
  std::cout << "protocols:";
  for (auto p : kAllProtocols) std::cout << ' ' << name(p);
  std::cout << "\neves:";
  for (auto e : kAllEves) std::cout << ' ' << name(e);
  std::cout << "\nmodes:";
  for (auto m : kAllModes) std::cout << ' ' << name(m);
  std::cout << "\nproperties: secrecy corr inj-corr\ndefault depth: " << kDefaultDepth << '\n';
  return 0;
}

int cmd_animate(const Selection& sel, std::istream& in) {
  ProtocolConfig cfg = sel.config();
  const SystemProcess root = assemble(cfg);
  SystemProcess p = root;
  Trace trace;
  for (;;) {
    auto head = csp::settle(p);
    auto events = csp::enabled(head);
    if (events.empty()) {
      std::cout << (head.is_ret() ? "terminated" : "deadlock") << '\n';
    }
    for (std::size_t i = 0; i < events.size(); ++i) std::cout << i + 1 << ". " << render(events[i]) << '\n';
    std::cout << "> " << std::flush;
    std::string line;
    if (!std::getline(in, line) || line == "q") return 0;
    if (line == "r") {
      p = root;
      trace.clear();
      std::cout << "reset\n";
      continue;
    }
    std::size_t pick = 0;
    try {
      std::size_t used = 0;
      pick = std::stoul(line, &used);
      if (used != line.size()) pick = 0;
    } catch (const std::exception&) {
      pick = 0;
    }
    if (pick < 1 || pick > events.size()) {
      std::cout << "choose 1.." << events.size() << ", r or q\n";
      continue;
    }
    trace.push_back(events[pick - 1]);
    p = csp::step(head, trace.back());
    std::cout << "trace:\n";
    for (const Event& e : trace) std::cout << "  " << render(e) << '\n';
  }
}

struct CheckArgs {
  std::string property = "secrecy";
  std::size_t depth = kDefaultDepth;
  std::string message;
  std::string trigger;
  std::string guard;
  std::string auth_for = "A1";
  bool trim = false;
  bool reverse = false;
};

PropertySpec make_property(const ProtocolConfig& cfg, const CheckArgs& a) {
  if (a.property == "secrecy") {
    Secrecy s;
    if (!a.message.empty()) s.message = normalize(parse(a.message, cfg.bounds));
    return s;
  }
  Correspondence c;
  if (!a.trigger.empty() || !a.guard.empty()) {
    if (a.trigger.empty() || a.guard.empty()) throw PatternError("--trigger and --guard go together");
    c = Correspondence{parse_pattern(a.trigger, cfg.bounds), parse_pattern(a.guard, cfg.bounds)};
  } else {
    AgentId self = parse_agent(a.auth_for, cfg.bounds);
    c = authenticity_for(self, self == cfg.alice() ? cfg.bob() : cfg.alice());
  }
  if (a.property == "inj-corr") return InjectiveCorrespondence{c.trigger, c.guard};
  return c;
}

int cmd_check(const Selection& sel, const CheckArgs& a) {
  ProtocolConfig cfg = sel.config();
  PropertySpec spec = make_property(cfg, a);
  ExploreOptions opts;
  opts.depth = a.depth;
  opts.reverse_order = a.reverse;
  SystemProcess root = assemble(cfg);
  CheckResult r = check_process(root, spec, opts);
  if (auto* v = std::get_if<Violated>(&r.verdict)) {
    Trace t = a.trim ? trim(root, spec, v->counterexample) : v->counterexample;
    std::cout << "Violated\n";
    print_trace(std::cout, t);
    return 2;
  }
  const auto& h = std::get<Holds>(r.verdict);
  std::cout << (h.max_depth_hit ? "Holds (bounded)" : "Holds") << "\nstates explored: " << h.states_explored << '\n';
  return 0;
}

int cmd_walk(const Selection& sel, std::size_t steps, std::uint64_t seed) {
  print_trace(std::cout, random_walk(sel.config(), steps, seed));
  return 0;
}

int cmd_feasible(const Selection& sel, std::vector<std::string> events) {
  ProtocolConfig cfg = sel.config();
  if (events.empty()) {
    for (std::string line; std::getline(std::cin, line);) {
      if (!line.empty()) events.push_back(line);
    }
  }
  Trace t;
  for (const auto& e : events) t.push_back(parse_event(e, cfg.bounds));
  auto f = check_feasible(cfg, t);
  if (f) {
    std::cout << "feasible\n";
    return 0;
  }
  std::cout << "infeasible at event " << *f.failed_at + 1 << " (" << f.reason << "): " << render(t[*f.failed_at]) << '\n';
  return 2;
}

int cmd_serve(int port, const std::string& address, const std::string& static_dir) {
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  Service service;
  httplib::Server server;
  std::optional<std::string> dir;
  if (!static_dir.empty()) dir = static_dir;
  bind_routes(server, service, dir, [](const std::string& method, const std::string& path, int status) {
    std::cout << method << ' ' << path << ' ' << status << std::endl;
  });
  if (!server.bind_to_port(address, port)) {
    std::cerr << "cannot listen on " << address << ':' << port << '\n';
    return 1;
  }
  std::thread waiter([&server, stop_signals] {
    int sig = 0;
    sigwait(&stop_signals, &sig);
    server.stop();
  });
  std::cout << "listening on http://" << address << ':' << port << std::endl;
  server.listen_after_bind();
  if (waiter.joinable()) {
    // listen_after_bind only returns after stop(), so the waiter has fired.
    waiter.join();
  }
  std::cout << "stopped" << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symbolic animator and bounded checker for watermarking and jamming protocols"};
  app.require_subcommand(1);

  app.add_subcommand("list", "list protocols, eve locations and modes");

  Selection anim_sel;
  auto* animate = app.add_subcommand("animate", "step through a protocol by hand");
  add_selection(animate, anim_sel);

  Selection check_sel;
  CheckArgs check_args;
  auto* check = app.add_subcommand("check", "check a property by bounded search");
  add_selection(check, check_sel);
  check->add_option("--property", check_args.property, "secrecy, corr or inj-corr")
      ->check(CLI::IsMember({"secrecy", "corr", "inj-corr"}))
      ->capture_default_str();
  check->add_option("--depth", check_args.depth, "search depth in events")->capture_default_str();
  check->add_option("--message", check_args.message, "restrict secrecy to one message");
  check->add_option("--trigger", check_args.trigger, "trigger pattern, e.g. EndProt.A1.A0.?x.?y");
  check->add_option("--guard", check_args.guard, "guard pattern, e.g. StartProt.A0.A1.?x.?y");
  check->add_option("--auth-for", check_args.auth_for, "agent whose authenticity is checked")->capture_default_str();
  check->add_flag("--trim", check_args.trim, "drop irrelevant events from the counterexample");
  check->add_flag("--reverse", check_args.reverse, "visit events in reverse order");

  Selection walk_sel;
  std::size_t steps = 20;
  std::uint64_t seed = 0;
  auto* walk = app.add_subcommand("walk", "print a seeded random run");
  add_selection(walk, walk_sel);
  walk->add_option("--steps", steps)->capture_default_str();
  walk->add_option("--seed", seed)->capture_default_str();

  Selection feas_sel;
  std::vector<std::string> events;
  auto* feasible = app.add_subcommand("feasible", "replay a trace (arguments or stdin, one event per line)");
  add_selection(feasible, feas_sel);
  feasible->add_option("--event", events, "event text; repeatable");

  int port = 8080;
  std::string address = "127.0.0.1";
  std::string static_dir;
  auto* serve = app.add_subcommand("serve", "run the HTTP API");
  serve->add_option("--port", port)->capture_default_str();
  serve->add_option("--address", address)->capture_default_str();
  serve->add_option("--static", static_dir, "directory served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (app.got_subcommand("list")) return cmd_list();
    if (animate->parsed()) return cmd_animate(anim_sel, std::cin);
    if (check->parsed()) return cmd_check(check_sel, check_args);
    if (walk->parsed()) return cmd_walk(walk_sel, steps, seed);
    if (feasible->parsed()) return cmd_feasible(feas_sel, events);
    if (serve->parsed()) return cmd_serve(port, address, static_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
