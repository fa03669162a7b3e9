// SPDX-License-Identifier: Apache-2.0
//
// S-expression reader and canonical printer for FunctionDef.
#include "varcalc/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <system_error>

namespace varcalc::expr {

ParseError::ParseError(const std::string& message, std::size_t offset)
    : InputError(message + " at offset " + std::to_string(offset)), offset_(offset) {}

namespace {

struct Token {
  enum Kind { LParen, RParen, Atom, End } kind;
  std::string_view text;
  std::size_t offset;
};

class Lexer {
public:
  explicit Lexer(std::string_view s) : s_(s) {}

  Token next() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (pos_ >= s_.size()) return {Token::End, {}, pos_};
    const std::size_t start = pos_;
    const char c = s_[pos_];
    if (c == '(') return ++pos_, Token{Token::LParen, s_.substr(start, 1), start};
    if (c == ')') return ++pos_, Token{Token::RParen, s_.substr(start, 1), start};
    while (pos_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[pos_])) && s_[pos_] != '(' &&
           s_[pos_] != ')')
      ++pos_;
    return {Token::Atom, s_.substr(start, pos_ - start), start};
  }

  Token peek() {
    const auto save = pos_;
    Token t = next();
    pos_ = save;
    return t;
  }

private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

bool looks_numeric(std::string_view a) {
  if (a.empty()) return false;
  std::size_t i = (a[0] == '-' || a[0] == '+') ? 1 : 0;
  return i < a.size() && (std::isdigit(static_cast<unsigned char>(a[i])) || a[i] == '.');
}

bool is_identifier(std::string_view a) {
  if (a.empty() || !(std::isalpha(static_cast<unsigned char>(a[0])) || a[0] == '_')) return false;
  for (char c : a)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  return true;
}

class Parser {
public:
  Parser(std::string_view text, const VarSpace& space) : lex_(text), space_(space) {}

  NodePtr parse_all() {
    NodePtr root = parse_expr();
    Token t = lex_.next();
    if (t.kind != Token::End) throw ParseError("unexpected trailing input '" + std::string(t.text) + "'", t.offset);
    return root;
  }

private:
  NodePtr parse_expr() {
    Token t = lex_.next();
    switch (t.kind) {
      case Token::End: throw ParseError("expected expression", t.offset);
      case Token::RParen: throw ParseError("unexpected ')'", t.offset);
      case Token::Atom: return parse_atom(t);
      case Token::LParen: return parse_list(t);
    }
    throw ParseError("unreachable", t.offset);
  }

  NodePtr parse_atom(const Token& t) {
    if (looks_numeric(t.text)) {
      double v = 0.0;
      std::string_view s = t.text;
      if (!s.empty() && s[0] == '+') s.remove_prefix(1);
      auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v))
        throw ParseError("malformed number '" + std::string(t.text) + "'", t.offset);
      return constant(v);
    }
    if (!is_identifier(t.text)) throw ParseError("unexpected token '" + std::string(t.text) + "'", t.offset);
    const int idx = space_.index_of(t.text);
    if (idx < 0) throw ParseError("unknown variable '" + std::string(t.text) + "'", t.offset);
    return variable(idx);
  }

  NodePtr parse_list(const Token& open) {
    Token head = lex_.next();
    if (head.kind == Token::End) throw ParseError("unclosed list", head.offset);
    if (head.kind != Token::Atom)
      throw ParseError("expected operator (+ - * pow abs max min)", head.offset);
    const std::string_view op = head.text;

    if (op == "pow") {
      NodePtr base = parse_expr_in_list();
      Token e = lex_.next();
      if (e.kind == Token::End) throw ParseError("unclosed list", e.offset);
      if (e.kind != Token::Atom) throw ParseError("expected nonnegative integer exponent", e.offset);
      long long exponent = 0;
      auto [ptr, ec] = std::from_chars(e.text.data(), e.text.data() + e.text.size(), exponent);
      if (ec != std::errc() || ptr != e.text.data() + e.text.size())
        throw ParseError("expected nonnegative integer exponent", e.offset);
      if (exponent < 0) throw ParseError("negative exponent", e.offset);
      if (exponent > 64) throw ParseError("exponent too large", e.offset);
      expect_close();
      return power(base, static_cast<int>(exponent));
    }

    Op kind;
    std::size_t min_args = 1, max_args = SIZE_MAX;
    if (op == "+") kind = Op::Add;
    else if (op == "-") kind = Op::Sub, max_args = 2;
    else if (op == "*") kind = Op::Mul;
    else if (op == "abs") kind = Op::Abs, max_args = 1;
    else if (op == "max") kind = Op::Max, min_args = 2;
    else if (op == "min") kind = Op::Min, min_args = 2;
    else throw ParseError("unknown operator '" + std::string(op) + "'", head.offset);

    std::vector<NodePtr> kids;
    for (;;) {
      Token t = lex_.peek();
      if (t.kind == Token::End) throw ParseError("unclosed list", t.offset);
      if (t.kind == Token::RParen) {
        lex_.next();
        break;
      }
      kids.push_back(parse_expr());
    }
    if (kids.size() < min_args || kids.size() > max_args)
      throw ParseError("wrong number of arguments to '" + std::string(op) + "'", open.offset);
    return make(kind, std::move(kids));
  }

  NodePtr parse_expr_in_list() {
    Token t = lex_.peek();
    if (t.kind == Token::End) throw ParseError("unclosed list", t.offset);
    return parse_expr();
  }

  void expect_close() {
    Token t = lex_.next();
    if (t.kind == Token::End) throw ParseError("unclosed list", t.offset);
    if (t.kind != Token::RParen) throw ParseError("expected ')'", t.offset);
  }

  Lexer lex_;
  const VarSpace& space_;
};

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, ptr);
}

void print_into(const Node& n, const VarSpace& space, std::string& out) {
  switch (n.op) {
    case Op::Const: out += format_number(n.value); return;
    case Op::Var: out += space.names().at(static_cast<std::size_t>(n.index)); return;
    case Op::Pow:
      out += "(pow ";
      print_into(*n.children[0], space, out);
      out += ' ';
      out += std::to_string(n.index);
      out += ')';
      return;
    default: break;
  }
  const char* head = "";
  switch (n.op) {
    case Op::Add: head = "+"; break;
    case Op::Sub: head = "-"; break;
    case Op::Mul: head = "*"; break;
    case Op::Abs: head = "abs"; break;
    case Op::Max: head = "max"; break;
    case Op::Min: head = "min"; break;
    default: break;
  }
  out += '(';
  out += head;
  for (const auto& c : n.children) {
    out += ' ';
    print_into(*c, space, out);
  }
  out += ')';
}

}  // namespace

FunctionDef parse_function(std::string_view text, const VarSpace& space) {
  Parser p(text, space);
  return FunctionDef(space, p.parse_all());
}

std::string print(const Node& node, const VarSpace& space) {
  std::string out;
  print_into(node, space, out);
  return out;
}

}  // namespace varcalc::expr
