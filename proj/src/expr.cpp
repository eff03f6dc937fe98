#include "causex/expr.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "causex/error.hpp"

namespace causex {

namespace {

bool parse_number(std::string_view s, double& out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

Value Value::from_label(const std::string& label, const std::vector<std::string>* order) {
  double d = 0.0;
  if (parse_number(label, d)) return num(d);
  return sym(label, order);
}

std::string Value::to_string() const {
  return is_number() ? format_number(number) : symbol;
}

bool operator==(const Value& a, const Value& b) {
  if (a.kind != b.kind) return false;
  if (a.is_number()) return std::fabs(a.number - b.number) <= 1e-12;
  return a.symbol == b.symbol;
}

// --- lexer -----------------------------------------------------------------

namespace {

enum class Tok {
  Number, Ident, String, Keyword,
  Plus, Minus, Star, Slash, Lt, Le, EqEq, Ne, Ge, Gt,
  LParen, RParen, Arrow, Semi, End,
};

struct Token {
  Tok kind;
  std::string text;
  double number = 0.0;
  int line;
  int column;
};

bool is_keyword(std::string_view w) {
  static const char* kw[] = {"if", "then", "else", "case", "of", "default", "and", "or", "not"};
  for (const char* k : kw) {
    if (w == k) return true;
  }
  return false;
}

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::End: return "end of input";
    case Tok::Number: return "number " + t.text;
    case Tok::Ident: return "identifier '" + t.text + "'";
    case Tok::String: return "string '" + t.text + "'";
    default: return "'" + t.text + "'";
  }
}

[[noreturn]] void syntax_error(int line, int column, const std::string& msg) {
  fail(ErrorCode::Syntax,
       "syntax error at line " + std::to_string(line) + ", column " + std::to_string(column) +
           ": " + msg);
}

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  std::size_t i = 0;
  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n; ++k) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
      ++i;
    }
  };
  while (i < src.size()) {
    char c = src[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      advance(1);
      continue;
    }
    const int tl = line;
    const int tc = col;
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j < src.size() && src[j] == '.') {
        ++j;
        while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      }
      if (j < src.size() && (src[j] == 'e' || src[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < src.size() && (src[k] == '+' || src[k] == '-')) ++k;
        if (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) {
          while (k < src.size() && std::isdigit(static_cast<unsigned char>(src[k]))) ++k;
          j = k;
        }
      }
      std::string text(src.substr(i, j - i));
      double v = 0.0;
      if (!parse_number(text, v)) syntax_error(tl, tc, "malformed number " + text);
      out.push_back({Tok::Number, text, v, tl, tc});
      advance(j - i);
      continue;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < src.size() &&
             (std::isalnum(static_cast<unsigned char>(src[j])) || src[j] == '_')) {
        ++j;
      }
      std::string word(src.substr(i, j - i));
      out.push_back({is_keyword(word) ? Tok::Keyword : Tok::Ident, word, 0.0, tl, tc});
      advance(j - i);
      continue;
    }
    if (c == '\'' || c == '"') {
      std::size_t j = i + 1;
      while (j < src.size() && src[j] != c && src[j] != '\n') ++j;
      if (j >= src.size() || src[j] != c) syntax_error(tl, tc, "unterminated string literal");
      out.push_back({Tok::String, std::string(src.substr(i + 1, j - i - 1)), 0.0, tl, tc});
      advance(j + 1 - i);
      continue;
    }
    auto two = [&](char a, char b) {
      return c == a && i + 1 < src.size() && src[i + 1] == b;
    };
    Tok kind;
    std::size_t len = 1;
    if (two('<', '=')) { kind = Tok::Le; len = 2; }
    else if (two('>', '=')) { kind = Tok::Ge; len = 2; }
    else if (two('=', '=')) { kind = Tok::EqEq; len = 2; }
    else if (two('!', '=')) { kind = Tok::Ne; len = 2; }
    else if (two('-', '>')) { kind = Tok::Arrow; len = 2; }
    else if (c == '<') kind = Tok::Lt;
    else if (c == '>') kind = Tok::Gt;
    else if (c == '+') kind = Tok::Plus;
    else if (c == '-') kind = Tok::Minus;
    else if (c == '*') kind = Tok::Star;
    else if (c == '/') kind = Tok::Slash;
    else if (c == '(') kind = Tok::LParen;
    else if (c == ')') kind = Tok::RParen;
    else if (c == ';') kind = Tok::Semi;
    else syntax_error(tl, tc, std::string("unexpected character '") + c + "'");
    out.push_back({kind, std::string(src.substr(i, len)), 0.0, tl, tc});
    advance(len);
  }
  out.push_back({Tok::End, "", 0.0, line, col});
  return out;
}

// --- parser ----------------------------------------------------------------

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  ExprPtr parse_all() {
    ExprPtr e = expr();
    if (peek().kind != Tok::End) unexpected("an operator or end of input");
    return e;
  }

 private:
  const Token& peek() const { return toks_[pos_]; }
  Token take() { return toks_[pos_++]; }

  bool at_keyword(const char* kw) const {
    return peek().kind == Tok::Keyword && peek().text == kw;
  }

  [[noreturn]] void unexpected(const std::string& expected) const {
    syntax_error(peek().line, peek().column,
                 "expected " + expected + ", found " + describe(peek()));
  }

  void expect_keyword(const char* kw) {
    if (!at_keyword(kw)) unexpected(std::string("'") + kw + "'");
    ++pos_;
  }

  void expect(Tok kind, const char* what) {
    if (peek().kind != kind) unexpected(what);
    ++pos_;
  }

  static std::shared_ptr<Expr> node(Expr::Op op, const Token& at) {
    auto e = std::make_shared<Expr>();
    e->op = op;
    e->line = at.line;
    e->column = at.column;
    return e;
  }

  ExprPtr expr() {
    if (at_keyword("if")) {
      auto e = node(Expr::Op::If, take());
      e->args.push_back(expr());
      expect_keyword("then");
      e->args.push_back(expr());
      expect_keyword("else");
      e->args.push_back(expr());
      return e;
    }
    if (at_keyword("case")) return case_expr();
    return or_expr();
  }

  Value case_label() {
    const Token& t = peek();
    if (t.kind == Tok::Number) {
      ++pos_;
      return Value::num(t.number);
    }
    if (t.kind == Tok::Minus && toks_[pos_ + 1].kind == Tok::Number) {
      pos_ += 2;
      return Value::num(-toks_[pos_ - 1].number);
    }
    if (t.kind == Tok::String || t.kind == Tok::Ident) {
      ++pos_;
      return Value::from_label(t.text);
    }
    unexpected("a case value");
  }

  ExprPtr case_expr() {
    auto e = node(Expr::Op::Case, take());
    if (peek().kind != Tok::Ident) unexpected("an identifier after 'case'");
    e->text = take().text;
    expect_keyword("of");
    std::vector<ExprPtr> bodies;
    do {
      e->labels.push_back(case_label());
      expect(Tok::Arrow, "'->'");
      bodies.push_back(expr());
      expect(Tok::Semi, "';'");
    } while (!at_keyword("default"));
    ++pos_;
    expect(Tok::Arrow, "'->'");
    bodies.push_back(expr());
    e->args = std::move(bodies);
    return e;
  }

  ExprPtr or_expr() {
    ExprPtr lhs = and_expr();
    while (at_keyword("or")) {
      auto e = node(Expr::Op::Or, take());
      e->args = {lhs, and_expr()};
      lhs = e;
    }
    return lhs;
  }

  ExprPtr and_expr() {
    ExprPtr lhs = cmp_expr();
    while (at_keyword("and")) {
      auto e = node(Expr::Op::And, take());
      e->args = {lhs, cmp_expr()};
      lhs = e;
    }
    return lhs;
  }

  ExprPtr cmp_expr() {
    ExprPtr lhs = add_expr();
    Expr::Op op;
    switch (peek().kind) {
      case Tok::Lt: op = Expr::Op::Lt; break;
      case Tok::Le: op = Expr::Op::Le; break;
      case Tok::EqEq: op = Expr::Op::Eq; break;
      case Tok::Ne: op = Expr::Op::Ne; break;
      case Tok::Ge: op = Expr::Op::Ge; break;
      case Tok::Gt: op = Expr::Op::Gt; break;
      default: return lhs;
    }
    auto e = node(op, take());
    e->args = {lhs, add_expr()};
    return e;
  }

  ExprPtr add_expr() {
    ExprPtr lhs = mul_expr();
    while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
      const auto op = peek().kind == Tok::Plus ? Expr::Op::Add : Expr::Op::Sub;
      auto e = node(op, take());
      e->args = {lhs, mul_expr()};
      lhs = e;
    }
    return lhs;
  }

  ExprPtr mul_expr() {
    ExprPtr lhs = unary();
    while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
      const auto op = peek().kind == Tok::Star ? Expr::Op::Mul : Expr::Op::Div;
      auto e = node(op, take());
      e->args = {lhs, unary()};
      lhs = e;
    }
    return lhs;
  }

  ExprPtr unary() {
    if (at_keyword("not")) {
      auto e = node(Expr::Op::Not, take());
      e->args = {unary()};
      return e;
    }
    if (peek().kind == Tok::Minus) {
      auto e = node(Expr::Op::Neg, take());
      e->args = {unary()};
      return e;
    }
    return atom();
  }

  ExprPtr atom() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number: {
        auto e = node(Expr::Op::Number, take());
        e->number = t.number;
        return e;
      }
      case Tok::Ident: {
        auto e = node(Expr::Op::Ident, t);
        e->text = take().text;
        return e;
      }
      case Tok::String: {
        auto e = node(Expr::Op::String, t);
        e->text = take().text;
        return e;
      }
      case Tok::LParen: {
        ++pos_;
        ExprPtr e = expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      default:
        unexpected("a number, identifier, string or '('");
    }
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

const char* op_text(Expr::Op op) {
  switch (op) {
    case Expr::Op::Add: return "+";
    case Expr::Op::Sub: return "-";
    case Expr::Op::Mul: return "*";
    case Expr::Op::Div: return "/";
    case Expr::Op::Lt: return "<";
    case Expr::Op::Le: return "<=";
    case Expr::Op::Eq: return "==";
    case Expr::Op::Ne: return "!=";
    case Expr::Op::Ge: return ">=";
    case Expr::Op::Gt: return ">";
    case Expr::Op::And: return "and";
    case Expr::Op::Or: return "or";
    default: return "?";
  }
}

std::string print_label(const Value& v) {
  return v.is_number() ? format_number(v.number) : "'" + v.symbol + "'";
}

void print_to(const Expr& e, std::string& out) {
  using Op = Expr::Op;
  switch (e.op) {
    case Op::Number: out += format_number(e.number); return;
    case Op::String: out += "'" + e.text + "'"; return;
    case Op::Ident: out += e.text; return;
    case Op::Neg:
      out += "(-";
      print_to(*e.args[0], out);
      out += ")";
      return;
    case Op::Not:
      out += "(not ";
      print_to(*e.args[0], out);
      out += ")";
      return;
    case Op::If:
      out += "(if ";
      print_to(*e.args[0], out);
      out += " then ";
      print_to(*e.args[1], out);
      out += " else ";
      print_to(*e.args[2], out);
      out += ")";
      return;
    case Op::Case:
      out += "(case " + e.text + " of ";
      for (std::size_t i = 0; i < e.labels.size(); ++i) {
        out += print_label(e.labels[i]) + " -> ";
        print_to(*e.args[i], out);
        out += "; ";
      }
      out += "default -> ";
      print_to(*e.args.back(), out);
      out += ")";
      return;
    default:
      out += "(";
      print_to(*e.args[0], out);
      out += std::string(" ") + op_text(e.op) + " ";
      print_to(*e.args[1], out);
      out += ")";
      return;
  }
}

// --- evaluation --------------------------------------------------------------

[[noreturn]] void eval_error(const Expr& e, const std::string& msg) {
  fail(ErrorCode::Evaluation, msg + " (line " + std::to_string(e.line) + ", column " +
                                  std::to_string(e.column) + ")");
}

double as_number(const Expr& at, const Value& v) {
  if (!v.is_number()) eval_error(at, "arithmetic on symbol '" + v.symbol + "'");
  return v.number;
}

int rank_in(const std::vector<std::string>& order, const Value& v, const Expr& at) {
  const std::string s = v.to_string();
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (order[i] == s) return static_cast<int>(i);
  }
  eval_error(at, "symbol '" + s + "' is not in the compared domain");
}

// Three-way comparison; returns <0, 0, >0.
int compare(const Expr& at, const Value& a, const Value& b) {
  if (a.is_number() && b.is_number()) {
    if (std::fabs(a.number - b.number) <= 1e-12) return 0;
    return a.number < b.number ? -1 : 1;
  }
  const std::vector<std::string>* order = a.order ? a.order : b.order;
  if (!order) {
    eval_error(at, "cannot order '" + a.to_string() + "' and '" + b.to_string() +
                       "' without an ordered domain");
  }
  return rank_in(*order, a, at) - rank_in(*order, b, at);
}

// Values of different kinds are never equal.
bool equal_values(const Value& a, const Value& b) { return a == b; }

}  // namespace

ExprPtr parse(std::string_view source) {
  Parser p(tokenize(source));
  return p.parse_all();
}

std::string print(const Expr& e) {
  std::string out;
  print_to(e, out);
  return out;
}

bool truthy(const Value& v) {
  if (!v.is_number()) fail(ErrorCode::Evaluation, "symbol '" + v.symbol + "' used as a condition");
  return v.number != 0.0;
}

Value evaluate(const Expr& e, const Env& env) {
  using Op = Expr::Op;
  switch (e.op) {
    case Op::Number: return Value::num(e.number);
    case Op::String: return Value::from_label(e.text);
    case Op::Ident: {
      auto it = env.find(e.text);
      if (it == env.end()) eval_error(e, "unbound identifier '" + e.text + "'");
      return it->second;
    }
    case Op::Neg: return Value::num(-as_number(e, evaluate(*e.args[0], env)));
    case Op::Not: {
      Value v = evaluate(*e.args[0], env);
      if (!v.is_number()) eval_error(e, "'not' applied to a symbol");
      return Value::num(v.number == 0.0 ? 1.0 : 0.0);
    }
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div: {
      double a = as_number(e, evaluate(*e.args[0], env));
      double b = as_number(e, evaluate(*e.args[1], env));
      switch (e.op) {
        case Op::Add: return Value::num(a + b);
        case Op::Sub: return Value::num(a - b);
        case Op::Mul: return Value::num(a * b);
        default:
          if (b == 0.0) eval_error(e, "division by zero");
          return Value::num(a / b);
      }
    }
    case Op::Eq:
    case Op::Ne: {
      Value a = evaluate(*e.args[0], env);
      Value b = evaluate(*e.args[1], env);
      bool eq = equal_values(a, b);
      return Value::num((e.op == Op::Eq) == eq ? 1.0 : 0.0);
    }
    case Op::Lt:
    case Op::Le:
    case Op::Ge:
    case Op::Gt: {
      Value a = evaluate(*e.args[0], env);
      Value b = evaluate(*e.args[1], env);
      int c = compare(e, a, b);
      bool r = e.op == Op::Lt ? c < 0 : e.op == Op::Le ? c <= 0 : e.op == Op::Ge ? c >= 0 : c > 0;
      return Value::num(r ? 1.0 : 0.0);
    }
    case Op::And:
    case Op::Or: {
      Value a = evaluate(*e.args[0], env);
      Value b = evaluate(*e.args[1], env);
      bool ta = truthy(a);
      bool tb = truthy(b);
      return Value::num((e.op == Op::And ? (ta && tb) : (ta || tb)) ? 1.0 : 0.0);
    }
    case Op::If:
      return truthy(evaluate(*e.args[0], env)) ? evaluate(*e.args[1], env)
                                               : evaluate(*e.args[2], env);
    case Op::Case: {
      auto it = env.find(e.text);
      if (it == env.end()) eval_error(e, "unbound identifier '" + e.text + "'");
      for (std::size_t i = 0; i < e.labels.size(); ++i) {
        if (equal_values(it->second, e.labels[i])) return evaluate(*e.args[i], env);
      }
      return evaluate(*e.args.back(), env);
    }
  }
  eval_error(e, "unknown expression node");
}

namespace {

void collect(const Expr& e, std::set<std::string>& out) {
  if (e.op == Expr::Op::Ident || e.op == Expr::Op::Case) out.insert(e.text);
  for (const auto& a : e.args) collect(*a, out);
}

}  // namespace

std::set<std::string> free_identifiers(const Expr& e) {
  std::set<std::string> out;
  collect(e, out);
  return out;
}

void check_bound(const Expr& e, const std::set<std::string>& names, const std::string& context) {
  for (const auto& id : free_identifiers(e)) {
    if (!names.count(id)) {
      fail(ErrorCode::Validation, context + ": unresolved identifier '" + id + "'");
    }
  }
}

bool structurally_equal(const Expr& a, const Expr& b) {
  if (a.op != b.op || a.text != b.text || a.args.size() != b.args.size() ||
      a.labels.size() != b.labels.size()) {
    return false;
  }
  if (a.op == Expr::Op::Number && a.number != b.number) return false;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    if (!(a.labels[i] == b.labels[i])) return false;
  }
  for (std::size_t i = 0; i < a.args.size(); ++i) {
    if (!structurally_equal(*a.args[i], *b.args[i])) return false;
  }
  return true;
}

}  // namespace causex
