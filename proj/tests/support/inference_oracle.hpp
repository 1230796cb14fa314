// Naive reference for the intruder's deductions: forward closure by
// enumerating every rule instance over pairs of known items, and memoised
// backward chaining for construction.
#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "plsanim/inference.hpp"
#include "random_terms.hpp"

namespace plsanim::oracle {

using MsgSet = std::set<Message>;

class Derivable {
 public:
  explicit Derivable(const MsgSet& k) : k_(k) {}

  bool operator()(const Message& raw) {
    Message m = normalize(raw);
    if (auto it = memo_.find(m); it != memo_.end()) return it->second;
    bool r = k_.count(m) != 0 || compose(m);
    memo_.emplace(m, r);
    return r;
  }

 private:
  bool compose(const Message& m) {
    switch (m.kind()) {
      case MsgKind::Pair:
      case MsgKind::Wat:
      case MsgKind::SEnc:
      case MsgKind::AEnc:
      case MsgKind::Sig:
        return (*this)(m.left()) && (*this)(m.right());
      case MsgKind::ModExp:
        return chain(m);
      default:
        return false;
    }
  }

  // Try every split of the exponents into a sub-chain built first and the
  // rest applied on top of it.
  bool chain(const Message& m) {
    std::vector<Message> exps;
    Message base = m;
    while (base.kind() == MsgKind::ModExp) {
      exps.push_back(base.right());
      base = base.left();
    }
    std::size_t n = exps.size();
    for (std::size_t mask = 0; mask + 1 < (std::size_t{1} << n); ++mask) {
      Message inner = base;
      bool rest_ok = true;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask & (std::size_t{1} << i)) {
          inner = msg::modexp(inner, exps[i]);
        } else if (!(*this)(exps[i])) {
          rest_ok = false;
          break;
        }
      }
      if (rest_ok && (*this)(inner)) return true;
    }
    return false;
  }

  const MsgSet& k_;
  std::map<Message, bool> memo_;
};

inline MsgSet saturate(const std::vector<Message>& start) {
  MsgSet k;
  for (const auto& m : start) k.insert(normalize(m));
  for (bool grew = true; grew;) {
    grew = false;
    std::vector<Message> items(k.begin(), k.end());
    Derivable can(k);
    std::vector<Message> found;
    for (const Message& x : items) {
      if (x.kind() == MsgKind::Pair) {
        found.push_back(x.left());
        found.push_back(x.right());
      }
      if (x.kind() == MsgKind::Wat) found.push_back(x.left());
      if (x.kind() == MsgKind::AEnc || x.kind() == MsgKind::SEnc || x.kind() == MsgKind::Sig) {
        Message inv = x.right();
        if (inv.kind() == MsgKind::Key) {
          KeyId id = inv.key();
          id.kind = id.kind == KeyId::Kind::Public ? KeyId::Kind::Private : KeyId::Kind::Public;
          inv = msg::key(id);
        }
        if (can(inv)) found.push_back(x.left());
      }
      for (const Message& y : items) {
        // Jam: the jamming mask must be a known item and a prefix of the watermark.
        if (x.kind() != MsgKind::Jam || x.left().kind() != MsgKind::Wat || !(x.right() == y)) continue;
        const Message& wmask = x.left().right();
        if (y.kind() == MsgKind::Bitm && wmask.kind() == MsgKind::Bitm) {
          const Bitmask& j = y.bitmask();
          const Bitmask& w = wmask.bitmask();
          bool prefix = j.is_null() || (!w.is_null() && j.code == w.code && j.length.value() <= w.length.value());
          if (prefix) found.push_back(x.left());
        }
      }
    }
    for (const auto& f : found) grew |= k.insert(normalize(f)).second;
  }
  return k;
}

inline bool buildable(const Message& m, const MsgSet& saturated) { return Derivable(saturated)(m); }

struct InferenceReport {
  std::size_t cases = 0;
  std::size_t queries = 0;
  std::size_t saturate_mismatches = 0;
  std::size_t buildable_mismatches = 0;
  std::string first_failure;

  bool ok() const { return saturate_mismatches == 0 && buildable_mismatches == 0; }
};

// Compares the library against the oracle on `cases` seeded knowledge sets
// of up to six terms of depth at most three.
inline InferenceReport compare_inference(std::size_t cases, std::uint64_t first_seed, const SemanticBounds& bounds) {
  InferenceReport rep;
  for (std::size_t c = 0; c < cases; ++c) {
    testing::TermGen gen(first_seed + c, bounds);
    std::vector<Message> start = gen.terms(6, 3);
    ++rep.cases;

    Knowledge mine = plsanim::saturate(Knowledge(start));
    MsgSet theirs = saturate(start);
    std::vector<Message> theirs_v(theirs.begin(), theirs.end());
    if (mine.items() != theirs_v) {
      ++rep.saturate_mismatches;
      if (rep.first_failure.empty()) rep.first_failure = "saturate, seed " + std::to_string(first_seed + c);
    }

    std::vector<Message> queries;
    for (std::size_t i = 0; i < 12; ++i) queries.push_back(gen.term(3));
    for (const auto& x : theirs_v) {
      queries.push_back(msg::pair(x, gen.atom()));
      if (gen.coin(0.3)) queries.push_back(msg::modexp(x, gen.atom()));
      if (gen.coin(0.3)) queries.push_back(msg::wat(x, msg::bitm(gen.bitmask())));
    }
    for (const auto& q : queries) {
      ++rep.queries;
      if (plsanim::buildable(q, mine) != buildable(q, theirs)) {
        ++rep.buildable_mismatches;
        if (rep.first_failure.empty()) rep.first_failure = "buildable, seed " + std::to_string(first_seed + c);
      }
    }
  }
  return rep;
}

}  // namespace plsanim::oracle
