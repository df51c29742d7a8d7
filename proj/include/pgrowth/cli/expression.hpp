#pragma once

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "pgrowth/core/error.hpp"

namespace pgrowth {

/// Closed-form scalar expression over the coordinates x, y, z (aliases x1, x2, x3).
/// Grammar: + - * / ^ (also the typographic − × ÷), unary minus, parentheses, sin, cos, exp,
/// and the constants pi and e. ^ is right associative and binds tighter than unary minus.
class Expression {
 public:
  enum class Kind { constant, variable, add, sub, mul, div, pow, neg, sin, cos, exp, log };

  Expression() : Expression(constant_node(0.0)) {}

  /// Parses `text`; variables beyond `dim` coordinates are rejected. Errors name `key`.
  static Expression parse(std::string_view text, int dim, const std::string& key = "expression") {
    Parser parser{normalize(text), 0, dim, key};
    auto root = parser.expr();
    parser.skip_space();
    if (parser.pos != parser.src.size()) parser.fail("unexpected '" + std::string(1, parser.src[parser.pos]) + "'");
    Expression e(std::move(root));
    e.text_ = std::string(text);
    return e;
  }

  [[nodiscard]] const std::string& text() const { return text_; }

  [[nodiscard]] double operator()(const double* x) const { return eval(*root_, x); }

  template <class V>
  [[nodiscard]] double at(const V& point) const {
    double x[3] = {0.0, 0.0, 0.0};
    for (int i = 0; i < static_cast<int>(point.size()) && i < 3; ++i) x[i] = point(i);
    return eval(*root_, x);
  }

  /// Symbolic partial derivative with respect to coordinate `var`.
  [[nodiscard]] Expression derivative(int var) const {
    Expression d(diff(root_, var));
    d.text_ = "d/dx" + std::to_string(var + 1) + "(" + text_ + ")";
    return d;
  }

  [[nodiscard]] bool is_constant() const { return root_->kind == Kind::constant; }

 private:
  struct Node;
  using NodePtr = std::shared_ptr<const Node>;
  struct Node {
    Kind kind;
    double value = 0.0;
    int var = 0;
    NodePtr a, b;
  };

  explicit Expression(NodePtr root) : root_(std::move(root)) {}

  static NodePtr constant_node(double v) { return std::make_shared<Node>(Node{Kind::constant, v, 0, nullptr, nullptr}); }
  static NodePtr variable_node(int i) { return std::make_shared<Node>(Node{Kind::variable, 0.0, i, nullptr, nullptr}); }

  static bool is_const(const NodePtr& n, double v) { return n->kind == Kind::constant && n->value == v; }

  // constructors with light constant folding
  static NodePtr make(Kind k, NodePtr a, NodePtr b = nullptr) {
    const bool ca = a && a->kind == Kind::constant;
    const bool cb = !b || b->kind == Kind::constant;
    if (ca && cb) {
      Node tmp{k, 0.0, 0, a, b};
      const double dummy[3] = {0.0, 0.0, 0.0};
      return constant_node(eval(tmp, dummy));
    }
    switch (k) {
      case Kind::add:
        if (is_const(a, 0.0)) return b;
        if (is_const(b, 0.0)) return a;
        break;
      case Kind::sub:
        if (is_const(b, 0.0)) return a;
        if (is_const(a, 0.0)) return make(Kind::neg, b);
        break;
      case Kind::mul:
        if (is_const(a, 0.0) || is_const(b, 0.0)) return constant_node(0.0);
        if (is_const(a, 1.0)) return b;
        if (is_const(b, 1.0)) return a;
        break;
      case Kind::div:
        if (is_const(a, 0.0)) return constant_node(0.0);
        if (is_const(b, 1.0)) return a;
        break;
      case Kind::pow:
        if (is_const(b, 1.0)) return a;
        if (is_const(b, 0.0)) return constant_node(1.0);
        break;
      default:
        break;
    }
    return std::make_shared<Node>(Node{k, 0.0, 0, std::move(a), std::move(b)});
  }

  static double eval(const Node& n, const double* x) {
    switch (n.kind) {
      case Kind::constant: return n.value;
      case Kind::variable: return x[n.var];
      case Kind::add: return eval(*n.a, x) + eval(*n.b, x);
      case Kind::sub: return eval(*n.a, x) - eval(*n.b, x);
      case Kind::mul: return eval(*n.a, x) * eval(*n.b, x);
      case Kind::div: return eval(*n.a, x) / eval(*n.b, x);
      case Kind::pow: return std::pow(eval(*n.a, x), eval(*n.b, x));
      case Kind::neg: return -eval(*n.a, x);
      case Kind::sin: return std::sin(eval(*n.a, x));
      case Kind::cos: return std::cos(eval(*n.a, x));
      case Kind::exp: return std::exp(eval(*n.a, x));
      case Kind::log: return std::log(eval(*n.a, x));
    }
    return 0.0;
  }

  static NodePtr diff(const NodePtr& n, int var) {
    switch (n->kind) {
      case Kind::constant: return constant_node(0.0);
      case Kind::variable: return constant_node(n->var == var ? 1.0 : 0.0);
      case Kind::add: return make(Kind::add, diff(n->a, var), diff(n->b, var));
      case Kind::sub: return make(Kind::sub, diff(n->a, var), diff(n->b, var));
      case Kind::mul:
        return make(Kind::add, make(Kind::mul, diff(n->a, var), n->b), make(Kind::mul, n->a, diff(n->b, var)));
      case Kind::div:
        return make(Kind::div, make(Kind::sub, make(Kind::mul, diff(n->a, var), n->b), make(Kind::mul, n->a, diff(n->b, var))),
                    make(Kind::mul, n->b, n->b));
      case Kind::pow: {
        const NodePtr da = diff(n->a, var);
        if (n->b->kind == Kind::constant) {
          const double c = n->b->value;
          return make(Kind::mul, make(Kind::mul, constant_node(c), make(Kind::pow, n->a, constant_node(c - 1.0))), da);
        }
        // d(a^b) = a^b (b' log a + b a'/a)
        const NodePtr inner = make(Kind::add, make(Kind::mul, diff(n->b, var), make(Kind::log, n->a)),
                                   make(Kind::div, make(Kind::mul, n->b, da), n->a));
        return make(Kind::mul, n, inner);
      }
      case Kind::neg: return make(Kind::neg, diff(n->a, var));
      case Kind::sin: return make(Kind::mul, make(Kind::cos, n->a), diff(n->a, var));
      case Kind::cos: return make(Kind::neg, make(Kind::mul, make(Kind::sin, n->a), diff(n->a, var)));
      case Kind::exp: return make(Kind::mul, n, diff(n->a, var));
      case Kind::log: return make(Kind::div, diff(n->a, var), n->a);
    }
    return constant_node(0.0);
  }

  // maps the typographic operators to ASCII
  static std::string normalize(std::string_view text) {
    std::string out;
    for (std::size_t i = 0; i < text.size();) {
      const auto rest = text.substr(i);
      if (rest.rfind("\xE2\x88\x92", 0) == 0) {  // U+2212 minus
        out += '-';
        i += 3;
      } else if (rest.rfind("\xC3\x97", 0) == 0) {  // U+00D7 times
        out += '*';
        i += 2;
      } else if (rest.rfind("\xC3\xB7", 0) == 0) {  // U+00F7 division
        out += '/';
        i += 2;
      } else {
        out += text[i];
        ++i;
      }
    }
    return out;
  }

  struct Parser {
    std::string src;
    std::size_t pos;
    int dim;
    std::string key;

    [[noreturn]] void fail(const std::string& what) const {
      throw ConfigError(key + ": " + what + " at offset " + std::to_string(pos) + " in '" + src + "'");
    }
    void skip_space() {
      while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }
    bool accept(char c) {
      skip_space();
      if (pos < src.size() && src[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }
    NodePtr expr() {
      NodePtr lhs = term();
      for (;;) {
        if (accept('+')) {
          lhs = make(Kind::add, lhs, term());
        } else if (accept('-')) {
          lhs = make(Kind::sub, lhs, term());
        } else {
          return lhs;
        }
      }
    }
    NodePtr term() {
      NodePtr lhs = unary();
      for (;;) {
        if (accept('*')) {
          lhs = make(Kind::mul, lhs, unary());
        } else if (accept('/')) {
          lhs = make(Kind::div, lhs, unary());
        } else {
          return lhs;
        }
      }
    }
    NodePtr unary() {
      if (accept('-')) return make(Kind::neg, unary());
      if (accept('+')) return unary();
      return power();
    }
    NodePtr power() {
      NodePtr base = primary();
      if (accept('^')) return make(Kind::pow, base, unary());
      return base;
    }
    NodePtr primary() {
      skip_space();
      if (pos >= src.size()) fail("unexpected end of expression");
      const char c = src[pos];
      if (accept('(')) {
        NodePtr inner = expr();
        if (!accept(')')) fail("missing ')'");
        return inner;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char* begin = src.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("bad number");
        pos += static_cast<std::size_t>(end - begin);
        return constant_node(v);
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        const std::size_t start = pos;
        while (pos < src.size() && std::isalnum(static_cast<unsigned char>(src[pos]))) ++pos;
        const std::string name = src.substr(start, pos - start);
        if (name == "sin" || name == "cos" || name == "exp") {
          if (!accept('(')) fail("expected '(' after " + name);
          NodePtr arg = expr();
          if (!accept(')')) fail("missing ')'");
          const Kind k = name == "sin" ? Kind::sin : name == "cos" ? Kind::cos : Kind::exp;
          return make(k, arg);
        }
        if (name == "pi") return constant_node(M_PI);
        if (name == "e") return constant_node(M_E);
        int var = -1;
        if (name == "x" || name == "x1") var = 0;
        if (name == "y" || name == "x2") var = 1;
        if (name == "z" || name == "x3") var = 2;
        if (var < 0) fail("unknown name '" + name + "'");
        if (var >= dim) fail("coordinate '" + name + "' does not exist in " + std::to_string(dim) + "D");
        return variable_node(var);
      }
      fail("unexpected '" + std::string(1, c) + "'");
    }
  };

  NodePtr root_;
  std::string text_ = "0";
};

}  // namespace pgrowth
