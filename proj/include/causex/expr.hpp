#pragma once

#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace causex {

/// Runtime value of the expression language. Booleans are numbers (1/0).
/// A symbol read from an ordered variable carries that variable's domain so
/// it can be compared with `<`/`>` against other symbols of the same domain.
struct Value {
  enum class Kind { Number, Symbol };

  Kind kind = Kind::Number;
  double number = 0.0;
  std::string symbol;
  const std::vector<std::string>* order = nullptr;

  static Value num(double v) { return {Kind::Number, v, {}, nullptr}; }
  static Value sym(std::string s, const std::vector<std::string>* order = nullptr) {
    return {Kind::Symbol, 0.0, std::move(s), order};
  }
  /// A domain label as seen by expressions: numeric-looking labels become
  /// numbers, everything else a symbol.
  static Value from_label(const std::string& label, const std::vector<std::string>* order = nullptr);

  bool is_number() const { return kind == Kind::Number; }
  std::string to_string() const;
};

bool operator==(const Value& a, const Value& b);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
  enum class Op {
    Number, String, Ident,
    Neg, Not,
    Add, Sub, Mul, Div,
    Lt, Le, Eq, Ne, Ge, Gt,
    And, Or,
    If,    // args: cond, then, else
    Case,  // text: scrutinee; args: arm bodies..., default; labels: arm values
  };

  Op op = Op::Number;
  double number = 0.0;
  std::string text;
  std::vector<ExprPtr> args;
  std::vector<Value> labels;
  int line = 1;
  int column = 1;
};

using Env = std::unordered_map<std::string, Value>;

/// Parses the structural-equation language:
///
///   expr  := "if" expr "then" expr "else" expr | case | or
///   case  := "case" ident "of" (value "->" expr ";")+ "default" "->" expr
///   or    := and ("or" and)*
///   and   := cmp ("and" cmp)*
///   cmp   := add (relop add)?
///   add   := mul (("+"|"-") mul)*
///   mul   := unary (("*"|"/") unary)*
///   unary := "not" unary | "-" unary | atom
///   atom  := number | ident | 'string' | "(" expr ")"
///
/// Throws Error{Syntax} with "line L, column C" and the expected tokens.
ExprPtr parse(std::string_view source);

/// Canonical, fully parenthesised rendering that parses back to the same tree.
std::string print(const Expr& e);

/// Strict evaluation; the untaken branch of `if` and non-matching `case`
/// arms are not evaluated. Throws Error{Evaluation}.
Value evaluate(const Expr& e, const Env& env);

/// Truth of a value: non-zero numbers are true; symbols are an error.
bool truthy(const Value& v);

std::set<std::string> free_identifiers(const Expr& e);

/// Bind-time check: every identifier must be in `names`.
void check_bound(const Expr& e, const std::set<std::string>& names, const std::string& context);

bool structurally_equal(const Expr& a, const Expr& b);

}  // namespace causex
