// Intruder knowledge: breakdown saturation and buildability.
//
// Breakdown rules: Up (unpair), Dec/Verify, Wat1 (read a watermarked
// payload), Jam (recover a watermarked term when the jamming mask is known and
// is a prefix of the watermark mask). Build-up rules: Pa, Enc/Sign, Wat2 and
// modexp. There is no breakdown of modexp and no way to build a jam.
#pragma once

#include <algorithm>
#include <initializer_list>
#include <vector>

#include "plsanim/terms.hpp"

namespace plsanim {

// Sorted, duplicate-free set of normalized messages.
class Knowledge {
 public:
  Knowledge() = default;
  Knowledge(std::initializer_list<Message> items) : Knowledge(std::vector<Message>(items)) {}
  explicit Knowledge(std::vector<Message> items) {
    for (auto& m : items) m = normalize(m);
    std::sort(items.begin(), items.end());
    items.erase(std::unique(items.begin(), items.end()), items.end());
    items_ = std::move(items);
  }

  // Expects a normalized message.
  bool contains(const Message& m) const { return std::binary_search(items_.begin(), items_.end(), m); }

  bool insert(const Message& m) {
    Message n = normalize(m);
    auto it = std::lower_bound(items_.begin(), items_.end(), n);
    if (it != items_.end() && *it == n) return false;
    items_.insert(it, std::move(n));
    return true;
  }

  bool subset_of(const Knowledge& other) const {
    return std::includes(other.items_.begin(), other.items_.end(), items_.begin(), items_.end());
  }

  const std::vector<Message>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  friend bool operator==(const Knowledge&, const Knowledge&) = default;

 private:
  std::vector<Message> items_;
};

namespace detail {

inline bool is_sub_multiset(const std::vector<Message>& small, const std::vector<Message>& big) {
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

inline std::vector<Message> multiset_minus(const std::vector<Message>& big, const std::vector<Message>& small) {
  std::vector<Message> out;
  std::set_difference(big.begin(), big.end(), small.begin(), small.end(), std::back_inserter(out));
  return out;
}

inline bool build_normal(const Message& m, const Knowledge& k);

// A chain base^{e1..en} is buildable from a known sub-chain base^S plus the
// remaining exponents, or from the base and every exponent.
inline bool build_chain(const Message& m, const Knowledge& k) {
  auto [base, exps] = modexp_chain(m);
  auto all_buildable = [&k](const std::vector<Message>& es) {
    return std::all_of(es.begin(), es.end(), [&k](const Message& e) { return build_normal(e, k); });
  };
  if (build_normal(base, k) && all_buildable(exps)) return true;
  for (const Message& x : k) {
    if (x.kind() != MsgKind::ModExp) continue;
    auto [xbase, xexps] = modexp_chain(x);
    if (xbase != base || xexps.size() >= exps.size() || !is_sub_multiset(xexps, exps)) continue;
    if (all_buildable(multiset_minus(exps, xexps))) return true;
  }
  return false;
}

inline bool build_normal(const Message& m, const Knowledge& k) {
  if (k.contains(m)) return true;
  switch (m.kind()) {
    case MsgKind::Pair:
    case MsgKind::AEnc:
    case MsgKind::SEnc:
    case MsgKind::Sig:
    case MsgKind::Wat:
      return build_normal(m.left(), k) && build_normal(m.right(), k);
    case MsgKind::ModExp:
      return build_chain(m, k);
    default:
      return false;
  }
}

}  // namespace detail

inline bool buildable(const Message& m, const Knowledge& k) { return detail::build_normal(normalize(m), k); }

inline bool knows(const Knowledge& k, const Message& m) { return k.contains(normalize(m)); }

// K plus everything one breakdown step yields from K. Decryption needs the
// inverse key to be derivable (member or buildable), so a computed DH session
// key opens a symmetric ciphertext.
inline Knowledge break_once(const Knowledge& k) {
  Knowledge out = k;
  for (const Message& x : k) {
    switch (x.kind()) {
      case MsgKind::Pair:
        out.insert(x.left());
        out.insert(x.right());
        break;
      case MsgKind::AEnc:
      case MsgKind::SEnc:
      case MsgKind::Sig:
        if (buildable(inverse_key(x.right()), k)) out.insert(x.left());
        break;
      case MsgKind::Wat:
        out.insert(x.left());
        break;
      case MsgKind::Jam: {
        const Message& inner = x.left();
        const Message& jmask = x.right();
        if (inner.kind() == MsgKind::Wat && inner.right().kind() == MsgKind::Bitm &&
            jmask.kind() == MsgKind::Bitm && k.contains(jmask) &&
            bitmask_leq(jmask.bitmask(), inner.right().bitmask())) {
          out.insert(inner);
        }
        break;
      }
      default:
        break;
    }
  }
  return out;
}

inline Knowledge saturate(Knowledge k) {
  for (;;) {
    Knowledge next = break_once(k);
    if (next.size() == k.size()) return k;
    k = std::move(next);
  }
}

inline Knowledge add_and_saturate(Knowledge k, const Message& m) {
  if (!k.insert(m)) return k;
  return saturate(std::move(k));
}

// Candidates (in order, first occurrence kept) that can be built from K.
inline std::vector<Message> filter_buildable(const std::vector<Message>& candidates, const Knowledge& k) {
  std::vector<Message> out;
  std::vector<Message> seen;
  for (const Message& c : candidates) {
    Message n = normalize(c);
    auto it = std::lower_bound(seen.begin(), seen.end(), n);
    if (it != seen.end() && *it == n) continue;
    seen.insert(it, n);
    if (detail::build_normal(n, k)) out.push_back(n);
  }
  return out;
}

}  // namespace plsanim
