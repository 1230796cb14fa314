// Text notation for messages.
//
//   agent  A<n> | I | S         nonce   N<n>        keys   PK<n> | SK<n>
//   base   G<n>                 bitmask BM<c>:<l> | BMNULL
//   pair   {m,m}                aenc    {m}k        senc   {|m|}k
//   sign   [m]k                 modexp  m^m (left-assoc)
//   Wat(m,b)  Jam(m,b)          grouping ( m )
//
// Keys of encryptions and signatures extend over a whole modexp chain, so
// "{|N3|}G0^N0^N1" encrypts under G0^N0^N1. Parentheses are only emitted
// where that reading, or left association, would otherwise change the term.
#pragma once

#include <cctype>
#include <stdexcept>
#include <string>
#include <string_view>

#include "plsanim/terms.hpp"

namespace plsanim {

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t position, std::string expected)
      : std::runtime_error("parse error at " + std::to_string(position) + ": expected " + expected),
        position_(position),
        expected_(std::move(expected)) {}

  std::size_t position() const { return position_; }
  const std::string& expected() const { return expected_; }

 private:
  std::size_t position_;
  std::string expected_;
};

inline std::string render(const AgentId& a) {
  switch (a.kind) {
    case AgentId::Kind::Legit:
      return "A" + std::to_string(a.index.value());
    case AgentId::Kind::Intruder:
      return "I";
    case AgentId::Kind::Server:
      return "S";
  }
  return "?";
}

inline std::string render(const Bitmask& b) {
  if (b.is_null()) return "BMNULL";
  return "BM" + std::to_string(b.code.value()) + ":" + std::to_string(b.length.value());
}

namespace detail {

inline bool is_crypto(MsgKind k) { return k == MsgKind::AEnc || k == MsgKind::SEnc || k == MsgKind::Sig; }

inline void render_to(std::string& out, const Message& m);

inline void render_grouped(std::string& out, const Message& m, bool group) {
  if (group) out += '(';
  render_to(out, m);
  if (group) out += ')';
}

inline void render_to(std::string& out, const Message& m) {
  switch (m.kind()) {
    case MsgKind::Ag:
      out += render(m.agent());
      return;
    case MsgKind::Non:
      out += "N" + std::to_string(m.index().value());
      return;
    case MsgKind::Key:
      out += (m.key().kind == KeyId::Kind::Public ? "PK" : "SK") + std::to_string(m.key().index.value());
      return;
    case MsgKind::Expg:
      out += "G" + std::to_string(m.index().value());
      return;
    case MsgKind::Bitm:
      out += render(m.bitmask());
      return;
    case MsgKind::Pair:
      out += '{';
      render_to(out, m.left());
      out += ',';
      render_to(out, m.right());
      out += '}';
      return;
    case MsgKind::ModExp:
      render_grouped(out, m.left(), is_crypto(m.left().kind()));
      out += '^';
      render_grouped(out, m.right(), is_crypto(m.right().kind()) || m.right().kind() == MsgKind::ModExp);
      return;
    case MsgKind::Wat:
    case MsgKind::Jam:
      out += m.kind() == MsgKind::Wat ? "Wat(" : "Jam(";
      render_to(out, m.left());
      out += ',';
      render_to(out, m.right());
      out += ')';
      return;
    case MsgKind::AEnc:
    case MsgKind::SEnc:
    case MsgKind::Sig: {
      const char* open = m.kind() == MsgKind::AEnc ? "{" : m.kind() == MsgKind::SEnc ? "{|" : "[";
      const char* close = m.kind() == MsgKind::AEnc ? "}" : m.kind() == MsgKind::SEnc ? "|}" : "]";
      out += open;
      render_to(out, m.left());
      out += close;
      render_grouped(out, m.right(), is_crypto(m.right().kind()));
      return;
    }
  }
}

class Parser {
 public:
  Parser(std::string_view text, const SemanticBounds& bounds) : text_(text), bounds_(bounds) {}

  Message parse_all() {
    Message m = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("end of input");
    return m;
  }

  AgentId parse_agent_all() {
    skip_ws();
    AgentId a = agent_token();
    skip_ws();
    if (pos_ != text_.size()) fail("end of input");
    return a;
  }

 private:
  [[noreturn]] void fail(const std::string& expected) const { throw ParseError(pos_, expected); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(std::string_view tok) {
    skip_ws();
    if (text_.substr(pos_, tok.size()) == tok) {
      pos_ += tok.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view tok) {
    if (!accept(tok)) fail("'" + std::string(tok) + "'");
  }

  bool peek_digit() const { return pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])); }

  std::uint32_t number() {
    if (!peek_digit()) fail("digits");
    std::uint64_t v = 0;
    while (peek_digit()) {
      v = v * 10 + static_cast<std::uint64_t>(text_[pos_++] - '0');
      if (v > 0xffffffffULL) fail("a smaller number");
    }
    return static_cast<std::uint32_t>(v);
  }

  BoundedIndex index(std::uint32_t bound) {
    std::size_t at = pos_;
    std::uint32_t n = number();
    if (n >= bound) throw ParseError(at, "index below " + std::to_string(bound));
    return mk_index(n, bound);
  }

  AgentId agent_token() {
    if (accept("A")) return AgentId::legit(index(bounds_.agents));
    if (accept("I")) return AgentId::intruder();
    if (accept("S")) return AgentId::server();
    fail("agent");
  }

  Message expr() {
    Message m = primary();
    while (accept("^")) m = msg::modexp(m, primary());
    return m;
  }

  Message crypto_tail(MsgKind kind, Message payload) {
    Message k = expr();
    return Message::binary(kind, std::move(payload), std::move(k));
  }

  Message primary() {
    skip_ws();
    if (accept("(")) {
      Message m = expr();
      expect(")");
      return m;
    }
    if (accept("{|")) {
      Message m = expr();
      expect("|}");
      return crypto_tail(MsgKind::SEnc, m);
    }
    if (accept("{")) {
      Message a = expr();
      if (accept(",")) {
        Message b = expr();
        expect("}");
        return msg::pair(a, b);
      }
      expect("}");
      return crypto_tail(MsgKind::AEnc, a);
    }
    if (accept("[")) {
      Message m = expr();
      expect("]");
      return crypto_tail(MsgKind::Sig, m);
    }
    if (accept("Wat(") || accept("Jam(")) {
      bool wat = text_.substr(pos_ - 4, 4) == "Wat(";
      Message m = expr();
      expect(",");
      Message b = expr();
      expect(")");
      return wat ? msg::wat(m, b) : msg::jam(m, b);
    }
    if (accept("BMNULL")) return msg::bitm(Bitmask::null());
    if (accept("BM")) {
      BoundedIndex code = index(bounds_.bitmask_codes);
      expect(":");
      BoundedIndex len = index(bounds_.bitmask_max_len);
      return msg::bitm(Bitmask::bm(code, len));
    }
    if (accept("PK")) return msg::pk(index(bounds_.pub_keys));
    if (accept("SK")) return msg::sk(index(bounds_.priv_keys));
    if (accept("N")) return msg::nonce(index(bounds_.nonces));
    if (accept("G")) return msg::expg(index(bounds_.exp_bases));
    if (pos_ < text_.size() && (text_[pos_] == 'A' || text_[pos_] == 'I' || text_[pos_] == 'S')) {
      return msg::agent(agent_token());
    }
    fail("message");
  }

  std::string_view text_;
  const SemanticBounds& bounds_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::string render(const Message& m) {
  std::string out;
  detail::render_to(out, m);
  return out;
}

inline Message parse(std::string_view text, const SemanticBounds& bounds = {}) {
  return detail::Parser(text, bounds).parse_all();
}

inline AgentId parse_agent(std::string_view text, const SemanticBounds& bounds = {}) {
  return detail::Parser(text, bounds).parse_agent_all();
}

}  // namespace plsanim
