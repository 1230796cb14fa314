// Symbolic message algebra: bounded indices, agents, keys, bitmasks and
// message terms, together with normalization and the total term order.
#pragma once

#include <algorithm>
#include <compare>
#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace plsanim {

class OutOfRange : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// A natural number drawn from the finite space {0, .., bound-1}.
class BoundedIndex {
 public:
  constexpr BoundedIndex() = default;

  constexpr std::uint32_t value() const { return value_; }
  constexpr std::uint32_t bound() const { return bound_; }

  friend constexpr auto operator<=>(const BoundedIndex&, const BoundedIndex&) = default;

 private:
  constexpr BoundedIndex(std::uint32_t value, std::uint32_t bound) : value_(value), bound_(bound) {}
  friend BoundedIndex mk_index(std::uint32_t, std::uint32_t);

  std::uint32_t value_ = 0;
  std::uint32_t bound_ = 1;
};

// Rejects rather than wraps: an out-of-range index is always a modelling bug.
inline BoundedIndex mk_index(std::uint32_t n, std::uint32_t bound) {
  if (bound == 0) {
    throw OutOfRange("mk_index: bound must be positive");
  }
  if (n >= bound) {
    throw OutOfRange("mk_index: " + std::to_string(n) + " is not below " + std::to_string(bound));
  }
  return BoundedIndex(n, bound);
}

struct AgentId {
  enum class Kind : std::uint8_t { Legit, Intruder, Server };

  Kind kind = Kind::Intruder;
  BoundedIndex index;  // meaningful for Legit only

  static AgentId legit(BoundedIndex i) { return AgentId{Kind::Legit, i}; }
  static AgentId legit(std::uint32_t i, std::uint32_t agents) { return legit(mk_index(i, agents)); }
  static AgentId intruder() { return AgentId{Kind::Intruder, {}}; }
  static AgentId server() { return AgentId{Kind::Server, {}}; }

  bool is_legit() const { return kind == Kind::Legit; }
  bool is_intruder() const { return kind == Kind::Intruder; }

  friend auto operator<=>(const AgentId&, const AgentId&) = default;
};

struct KeyId {
  enum class Kind : std::uint8_t { Public, Private };

  Kind kind = Kind::Public;
  BoundedIndex index;

  static KeyId pub(BoundedIndex i) { return KeyId{Kind::Public, i}; }
  static KeyId priv(BoundedIndex i) { return KeyId{Kind::Private, i}; }

  friend auto operator<=>(const KeyId&, const KeyId&) = default;
};

// Symbolic stand-in for a spreading code: identity plus length, nothing else.
struct Bitmask {
  bool present = false;  // false is the empty (Null) bitmask
  BoundedIndex code;
  BoundedIndex length;

  static Bitmask null() { return {}; }
  static Bitmask bm(BoundedIndex code, BoundedIndex length) { return Bitmask{true, code, length}; }

  bool is_null() const { return !present; }

  friend auto operator<=>(const Bitmask& a, const Bitmask& b) {
    if (auto c = a.present <=> b.present; c != 0) return c;
    if (!a.present) return std::strong_ordering::equal;
    if (auto c = a.code <=> b.code; c != 0) return c;
    return a.length <=> b.length;
  }
  friend bool operator==(const Bitmask& a, const Bitmask& b) { return (a <=> b) == 0; }
};

// Prefix order on bitmasks: Null is below everything, otherwise same code and
// no longer than the other.
inline bool bitmask_leq(const Bitmask& lhs, const Bitmask& rhs) {
  if (lhs.is_null()) return true;
  if (rhs.is_null()) return false;
  return lhs.code == rhs.code && lhs.length.value() <= rhs.length.value();
}

struct SemanticBounds {
  std::uint32_t agents = 2;
  std::uint32_t nonces = 4;
  std::uint32_t pub_keys = 1;
  std::uint32_t priv_keys = 1;
  std::uint32_t exp_bases = 1;
  std::uint32_t bitmask_codes = 3;
  std::uint32_t bitmask_max_len = 2;

  bool valid() const {
    return agents > 0 && nonces > 0 && pub_keys > 0 && priv_keys > 0 && exp_bases > 0 &&
           bitmask_codes > 0 && bitmask_max_len > 0;
  }

  friend bool operator==(const SemanticBounds&, const SemanticBounds&) = default;
};

// Constructor order doubles as the first key of the total term order.
enum class MsgKind : std::uint8_t { Ag, Non, Key, Pair, Expg, ModExp, Bitm, Wat, Jam, SEnc, AEnc, Sig };

inline bool is_binary(MsgKind k) {
  switch (k) {
    case MsgKind::Pair:
    case MsgKind::ModExp:
    case MsgKind::Wat:
    case MsgKind::Jam:
    case MsgKind::SEnc:
    case MsgKind::AEnc:
    case MsgKind::Sig:
      return true;
    default:
      return false;
  }
}

// Immutable, shared message term. Copies are cheap.
class Message {
 public:
  using Atom = std::variant<std::monostate, AgentId, BoundedIndex, KeyId, Bitmask>;

  MsgKind kind() const { return node_->kind; }

  const AgentId& agent() const { return std::get<AgentId>(node_->atom); }
  // Nonce or exponent-base index.
  const BoundedIndex& index() const { return std::get<BoundedIndex>(node_->atom); }
  const KeyId& key() const { return std::get<KeyId>(node_->atom); }
  const Bitmask& bitmask() const { return std::get<Bitmask>(node_->atom); }

  // Children of binary constructors: payload/base/first and key/mask/exponent/second.
  const Message& left() const { return *node_->left; }
  const Message& right() const { return *node_->right; }

  bool is_normal() const { return node_->normal; }
  std::size_t depth() const { return node_->depth; }
  bool same_node(const Message& other) const { return node_ == other.node_; }

  static Message atom(MsgKind kind, Atom atom) {
    return Message(std::make_shared<const Node>(kind, std::move(atom)));
  }
  static Message binary(MsgKind kind, Message l, Message r, bool normal = false) {
    return Message(std::make_shared<const Node>(kind, std::move(l), std::move(r), normal));
  }

  friend std::strong_ordering compare(const Message& a, const Message& b);
  friend std::strong_ordering operator<=>(const Message& a, const Message& b) { return compare(a, b); }
  friend bool operator==(const Message& a, const Message& b) { return compare(a, b) == 0; }

 private:
  struct Node {
    Node(MsgKind k, Atom a) : kind(k), atom(std::move(a)), normal(true), depth(1) {}
    Node(MsgKind k, Message l, Message r, bool n)
        : kind(k),
          left(std::make_unique<Message>(std::move(l))),
          right(std::make_unique<Message>(std::move(r))),
          normal(n),
          depth(1 + std::max(left->depth(), right->depth())) {}

    MsgKind kind;
    Atom atom;
    std::unique_ptr<const Message> left;
    std::unique_ptr<const Message> right;
    bool normal;
    std::size_t depth;
  };

  explicit Message(std::shared_ptr<const Node> n) : node_(std::move(n)) {}

  std::shared_ptr<const Node> node_;
};

inline std::strong_ordering compare(const Message& a, const Message& b) {
  if (a.node_ == b.node_) return std::strong_ordering::equal;
  if (auto c = a.kind() <=> b.kind(); c != 0) return c;
  if (!is_binary(a.kind())) return a.node_->atom <=> b.node_->atom;
  if (auto c = compare(a.left(), b.left()); c != 0) return c;
  return compare(a.right(), b.right());
}

namespace msg {

inline Message agent(AgentId a) { return Message::atom(MsgKind::Ag, a); }
inline Message nonce(BoundedIndex n) { return Message::atom(MsgKind::Non, n); }
inline Message key(KeyId k) { return Message::atom(MsgKind::Key, k); }
inline Message pk(BoundedIndex i) { return key(KeyId::pub(i)); }
inline Message sk(BoundedIndex i) { return key(KeyId::priv(i)); }
inline Message expg(BoundedIndex g) { return Message::atom(MsgKind::Expg, g); }
inline Message bitm(Bitmask b) { return Message::atom(MsgKind::Bitm, b); }
inline Message pair(Message a, Message b) { return Message::binary(MsgKind::Pair, std::move(a), std::move(b)); }
inline Message modexp(Message base, Message e) { return Message::binary(MsgKind::ModExp, std::move(base), std::move(e)); }
inline Message wat(Message m, Message mask) { return Message::binary(MsgKind::Wat, std::move(m), std::move(mask)); }
inline Message jam(Message m, Message mask) { return Message::binary(MsgKind::Jam, std::move(m), std::move(mask)); }
inline Message senc(Message m, Message k) { return Message::binary(MsgKind::SEnc, std::move(m), std::move(k)); }
inline Message aenc(Message m, Message k) { return Message::binary(MsgKind::AEnc, std::move(m), std::move(k)); }
inline Message sign(Message m, Message k) { return Message::binary(MsgKind::Sig, std::move(m), std::move(k)); }

}  // namespace msg

inline bool is_null_mask(const Message& m) { return m.kind() == MsgKind::Bitm && m.bitmask().is_null(); }

// Splits a modexp chain into its innermost non-modexp base and exponents
// (innermost first).
inline std::pair<Message, std::vector<Message>> modexp_chain(const Message& m) {
  std::vector<Message> exps;
  const Message* cur = &m;
  while (cur->kind() == MsgKind::ModExp) {
    exps.push_back(cur->right());
    cur = &cur->left();
  }
  std::reverse(exps.begin(), exps.end());
  return {*cur, std::move(exps)};
}

// Canonical form: null jams are dropped and modexp exponents are sorted so
// that (g^a)^b and (g^b)^a coincide. Single bottom-up pass reaches the fixpoint.
inline Message normalize(const Message& m) {
  if (m.is_normal()) return m;
  Message l = normalize(m.left());
  Message r = normalize(m.right());
  switch (m.kind()) {
    case MsgKind::Jam:
      if (is_null_mask(r)) return l;
      break;
    case MsgKind::ModExp: {
      auto [base, exps] = modexp_chain(l);
      exps.push_back(std::move(r));
      std::sort(exps.begin(), exps.end());
      Message out = base;
      for (auto& e : exps) out = Message::binary(MsgKind::ModExp, out, std::move(e), true);
      return out;
    }
    default:
      break;
  }
  return Message::binary(m.kind(), std::move(l), std::move(r), true);
}

inline bool msg_eq(const Message& a, const Message& b) { return normalize(a) == normalize(b); }

// Public and private keys swap; anything else (symmetric keys) is its own inverse.
inline Message inverse_key(const Message& k) {
  if (k.kind() != MsgKind::Key) return k;
  const KeyId& id = k.key();
  return msg::key(id.kind == KeyId::Kind::Public ? KeyId::priv(id.index) : KeyId::pub(id.index));
}

inline bool well_formed(const Message& m, const SemanticBounds& b) {
  auto fits = [](const BoundedIndex& i, std::uint32_t bound) { return i.bound() == bound && i.value() < bound; };
  switch (m.kind()) {
    case MsgKind::Ag:
      return !m.agent().is_legit() || fits(m.agent().index, b.agents);
    case MsgKind::Non:
      return fits(m.index(), b.nonces);
    case MsgKind::Key:
      return fits(m.key().index, m.key().kind == KeyId::Kind::Public ? b.pub_keys : b.priv_keys);
    case MsgKind::Expg:
      return fits(m.index(), b.exp_bases);
    case MsgKind::Bitm:
      return m.bitmask().is_null() ||
             (fits(m.bitmask().code, b.bitmask_codes) && fits(m.bitmask().length, b.bitmask_max_len));
    case MsgKind::Wat:
    case MsgKind::Jam:
      if (m.right().kind() != MsgKind::Bitm) return false;
      [[fallthrough]];
    default:
      return well_formed(m.left(), b) && well_formed(m.right(), b);
  }
}

}  // namespace plsanim
