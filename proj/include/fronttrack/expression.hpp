#pragma once

#include <cctype>
#include <cmath>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "fronttrack/errors.hpp"

namespace fronttrack {

// Arithmetic expression over named variables.  Grammar:
//   expr   := term (('+'|'-') term)*
//   term   := unary (('*'|'/') unary)*
//   unary  := ('+'|'-') unary | primary
//   primary:= number | var | fn '(' expr ')' | '(' expr ')'
// Functions: exp, sin, cos, abs, box (box(x) = 1 on [0,1), 0 elsewhere).
// Constants: numeric literals and pi.
class Expression {
 public:
  Expression() = default;

  static Expression parse(const std::string& text, const std::vector<std::string>& vars) {
    Parser p{text, 0, vars};
    Expression e;
    e.vars_ = vars;
    e.root_ = p.parse_expr();
    p.skip_ws();
    require(p.pos == text.size(), ErrorKind::ConfigError,
            "trailing characters in expression: '" + text.substr(p.pos) + "'");
    e.text_ = text;
    return e;
  }

  double operator()(const std::vector<double>& values) const {
    require(root_ != nullptr, ErrorKind::Precondition, "empty expression");
    require(values.size() == vars_.size(), ErrorKind::Precondition, "expression arity mismatch");
    return eval(*root_, values);
  }

  bool empty() const { return root_ == nullptr; }
  const std::string& text() const { return text_; }

 private:
  enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Exp, Sin, Cos, Abs, Box };

  struct Node {
    Op op;
    double value = 0.0;
    int var = -1;
    std::unique_ptr<Node> a, b;
  };

  using NodePtr = std::unique_ptr<Node>;

  static double eval(const Node& n, const std::vector<double>& v) {
    switch (n.op) {
      case Op::Const: return n.value;
      case Op::Var: return v[n.var];
      case Op::Add: return eval(*n.a, v) + eval(*n.b, v);
      case Op::Sub: return eval(*n.a, v) - eval(*n.b, v);
      case Op::Mul: return eval(*n.a, v) * eval(*n.b, v);
      case Op::Div: return eval(*n.a, v) / eval(*n.b, v);
      case Op::Neg: return -eval(*n.a, v);
      case Op::Exp: return std::exp(eval(*n.a, v));
      case Op::Sin: return std::sin(eval(*n.a, v));
      case Op::Cos: return std::cos(eval(*n.a, v));
      case Op::Abs: return std::abs(eval(*n.a, v));
      case Op::Box: {
        double x = eval(*n.a, v);
        return (x >= 0.0 && x < 1.0) ? 1.0 : 0.0;
      }
    }
    return 0.0;
  }

  struct Parser {
    const std::string& s;
    size_t pos;
    const std::vector<std::string>& vars;

    void skip_ws() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
      skip_ws();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    NodePtr parse_expr() {
      NodePtr lhs = parse_term();
      for (;;) {
        if (eat('+')) {
          lhs = binary(Op::Add, std::move(lhs), parse_term());
        } else if (eat('-')) {
          lhs = binary(Op::Sub, std::move(lhs), parse_term());
        } else {
          return lhs;
        }
      }
    }

    NodePtr parse_term() {
      NodePtr lhs = parse_unary();
      for (;;) {
        if (eat('*')) {
          lhs = binary(Op::Mul, std::move(lhs), parse_unary());
        } else if (eat('/')) {
          lhs = binary(Op::Div, std::move(lhs), parse_unary());
        } else {
          return lhs;
        }
      }
    }

    NodePtr parse_unary() {
      if (eat('-')) {
        auto n = std::make_unique<Node>();
        n->op = Op::Neg;
        n->a = parse_unary();
        return n;
      }
      if (eat('+')) return parse_unary();
      return parse_primary();
    }

    NodePtr parse_primary() {
      skip_ws();
      require(pos < s.size(), ErrorKind::ConfigError, "unexpected end of expression");
      char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        size_t end;
        double v = std::stod(s.substr(pos), &end);
        pos += end;
        auto n = std::make_unique<Node>();
        n->op = Op::Const;
        n->value = v;
        return n;
      }
      if (c == '(') {
        ++pos;
        NodePtr inner = parse_expr();
        require(eat(')'), ErrorKind::ConfigError, "missing ')'");
        return inner;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t start = pos;
        while (pos < s.size() &&
               (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
          ++pos;
        std::string word = s.substr(start, pos - start);
        skip_ws();
        if (pos < s.size() && s[pos] == '(') {
          ++pos;
          NodePtr arg = parse_expr();
          require(eat(')'), ErrorKind::ConfigError, "missing ')' after " + word);
          Op op;
          if (word == "exp") op = Op::Exp;
          else if (word == "sin") op = Op::Sin;
          else if (word == "cos") op = Op::Cos;
          else if (word == "abs") op = Op::Abs;
          else if (word == "box") op = Op::Box;
          else fail(ErrorKind::ConfigError, "unknown function '" + word + "'");
          auto n = std::make_unique<Node>();
          n->op = op;
          n->a = std::move(arg);
          return n;
        }
        if (word == "pi") {
          auto n = std::make_unique<Node>();
          n->op = Op::Const;
          n->value = M_PI;
          return n;
        }
        for (size_t i = 0; i < vars.size(); ++i) {
          if (vars[i] == word) {
            auto n = std::make_unique<Node>();
            n->op = Op::Var;
            n->var = static_cast<int>(i);
            return n;
          }
        }
        fail(ErrorKind::ConfigError, "unknown identifier '" + word + "'");
      }
      fail(ErrorKind::ConfigError, std::string("unexpected character '") + c + "'");
    }

    static NodePtr binary(Op op, NodePtr a, NodePtr b) {
      auto n = std::make_unique<Node>();
      n->op = op;
      n->a = std::move(a);
      n->b = std::move(b);
      return n;
    }
  };

  std::shared_ptr<const Node> root_;
  std::vector<std::string> vars_;
  std::string text_;
};

}  // namespace fronttrack
