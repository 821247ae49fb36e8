#pragma once

#include <cctype>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "holomenta/types.hpp"

namespace holomenta::expr {

// Scalar expression language for system definitions. Fixed unary function
// set, standard precedence (^ above unary minus above * / above + -),
// left-associative + - * /, right-associative ^. "-x^2" parses as -(x^2).

enum class NodeKind { constant, variable, unary, binary, call };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  NodeKind kind;
  double value = 0.0;      // constant
  std::string name;        // variable name or call function name
  char op = 0;             // binary: + - * / ^ ; unary: '-'
  NodePtr left, right;     // unary/call use left only
};

struct Expression {
  NodePtr root;
};

inline NodePtr make_constant(double v) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::constant;
  n->value = v;
  return n;
}

inline NodePtr make_variable(std::string name) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::variable;
  n->name = std::move(name);
  return n;
}

inline NodePtr make_unary(NodePtr child) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::unary;
  n->op = '-';
  n->left = std::move(child);
  return n;
}

inline NodePtr make_binary(char op, NodePtr lhs, NodePtr rhs) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::binary;
  n->op = op;
  n->left = std::move(lhs);
  n->right = std::move(rhs);
  return n;
}

inline NodePtr make_call(std::string fn, NodePtr arg) {
  auto n = std::make_shared<Node>();
  n->kind = NodeKind::call;
  n->name = std::move(fn);
  n->left = std::move(arg);
  return n;
}

inline bool is_known_function(const std::string& name) {
  return name == "sin" || name == "cos" || name == "tan" || name == "sqrt" ||
         name == "exp" || name == "log" || name == "abs";
}

namespace detail {

class Parser {
 public:
  explicit Parser(const std::string& src) : src_(src) {}

  NodePtr parse() {
    skip_ws();
    if (pos_ >= src_.size()) throw ParseError("empty expression", pos_);
    NodePtr e = parse_sum();
    skip_ws();
    if (pos_ < src_.size())
      throw ParseError("unexpected trailing input", pos_);
    return e;
  }

 private:
  const std::string& src_;
  std::size_t pos_ = 0;

  void skip_ws() {
    while (pos_ < src_.size() &&
           std::isspace(static_cast<unsigned char>(src_[pos_])))
      ++pos_;
  }

  bool peek_is(char c) {
    skip_ws();
    return pos_ < src_.size() && src_[pos_] == c;
  }

  bool accept(char c) {
    if (peek_is(c)) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c, const char* what) {
    if (!accept(c)) throw ParseError(std::string("expected ") + what, pos_);
  }

  NodePtr parse_sum() {
    NodePtr lhs = parse_product();
    for (;;) {
      if (accept('+'))
        lhs = make_binary('+', lhs, parse_product());
      else if (accept('-'))
        lhs = make_binary('-', lhs, parse_product());
      else
        return lhs;
    }
  }

  NodePtr parse_product() {
    NodePtr lhs = parse_factor();
    for (;;) {
      if (accept('*'))
        lhs = make_binary('*', lhs, parse_factor());
      else if (accept('/'))
        lhs = make_binary('/', lhs, parse_factor());
      else
        return lhs;
    }
  }

  // factor handles unary minus, which binds looser than ^.
  NodePtr parse_factor() {
    if (accept('-')) return make_unary(parse_factor());
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (accept('^')) return make_binary('^', base, parse_factor());
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos_ >= src_.size())
      throw ParseError("unexpected end of expression", pos_);
    const char c = src_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = parse_sum();
      expect(')', "')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
      return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_')
      return parse_name();
    throw ParseError("unexpected character", pos_);
  }

  NodePtr parse_number() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isdigit(static_cast<unsigned char>(src_[pos_])) ||
            src_[pos_] == '.'))
      ++pos_;
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t mark = pos_ + 1;
      if (mark < src_.size() && (src_[mark] == '+' || src_[mark] == '-'))
        ++mark;
      if (mark < src_.size() &&
          std::isdigit(static_cast<unsigned char>(src_[mark]))) {
        pos_ = mark;
        while (pos_ < src_.size() &&
               std::isdigit(static_cast<unsigned char>(src_[pos_])))
          ++pos_;
      }
    }
    try {
      return make_constant(std::stod(src_.substr(start, pos_ - start)));
    } catch (const std::exception&) {
      throw ParseError("malformed number", start);
    }
  }

  NodePtr parse_name() {
    const std::size_t start = pos_;
    while (pos_ < src_.size() &&
           (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
            src_[pos_] == '_'))
      ++pos_;
    std::string name = src_.substr(start, pos_ - start);
    if (peek_is('(')) {
      if (!is_known_function(name))
        throw ParseError("unknown function '" + name + "'", start);
      ++pos_;
      NodePtr arg = parse_sum();
      expect(')', "')'");
      return make_call(std::move(name), std::move(arg));
    }
    return make_variable(std::move(name));
  }
};

inline int precedence(const Node& n) {
  switch (n.kind) {
    case NodeKind::binary:
      if (n.op == '+' || n.op == '-') return 1;
      if (n.op == '*' || n.op == '/') return 2;
      return 4;  // ^
    case NodeKind::unary:
      return 3;
    default:
      return 5;
  }
}

inline void serialize_node(const Node& n, std::string& out) {
  auto child = [&](const Node& c, bool needs_parens) {
    if (needs_parens) out += '(';
    serialize_node(c, out);
    if (needs_parens) out += ')';
  };
  switch (n.kind) {
    case NodeKind::constant: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.17g", n.value);
      out += buf;
      return;
    }
    case NodeKind::variable:
      out += n.name;
      return;
    case NodeKind::unary:
      out += '-';
      child(*n.left, precedence(*n.left) < precedence(n));
      return;
    case NodeKind::call:
      out += n.name;
      out += '(';
      serialize_node(*n.left, out);
      out += ')';
      return;
    case NodeKind::binary: {
      const int p = precedence(n);
      // Left-associative chains keep the left child unparenthesized at equal
      // precedence; '^' is right-associative so the rule flips.
      const bool right_assoc = (n.op == '^');
      child(*n.left, precedence(*n.left) < p + (right_assoc ? 1 : 0));
      out += n.op;
      child(*n.right,
            precedence(*n.right) < p + (right_assoc ? 0 : 1));
      return;
    }
  }
}

inline double apply_call(const std::string& fn, double x) {
  if (fn == "sin") return std::sin(x);
  if (fn == "cos") return std::cos(x);
  if (fn == "tan") return std::tan(x);
  if (fn == "sqrt") {
    if (x < 0.0) throw EvalError("sqrt of negative value");
    return std::sqrt(x);
  }
  if (fn == "exp") return std::exp(x);
  if (fn == "log") {
    if (x <= 0.0) throw EvalError("log of non-positive value");
    return std::log(x);
  }
  if (fn == "abs") return std::abs(x);
  throw EvalError("unknown function '" + fn + "'");
}

inline double pow_checked(double base, double exponent) {
  if (base < 0.0 && exponent != std::floor(exponent))
    throw EvalError("fractional power of negative base");
  return std::pow(base, exponent);
}

}  // namespace detail

inline Expression parse(const std::string& source) {
  detail::Parser p(source);
  return Expression{p.parse()};
}

inline std::string serialize(const Expression& e) {
  std::string out;
  detail::serialize_node(*e.root, out);
  return out;
}

using Bindings = std::map<std::string, double>;

inline double evaluate_node(const Node& n, const Bindings& env) {
  switch (n.kind) {
    case NodeKind::constant:
      return n.value;
    case NodeKind::variable: {
      auto it = env.find(n.name);
      if (it == env.end()) throw EvalError("unbound variable '" + n.name + "'");
      return it->second;
    }
    case NodeKind::unary:
      return -evaluate_node(*n.left, env);
    case NodeKind::call:
      return detail::apply_call(n.name, evaluate_node(*n.left, env));
    case NodeKind::binary: {
      const double a = evaluate_node(*n.left, env);
      const double b = evaluate_node(*n.right, env);
      switch (n.op) {
        case '+': return a + b;
        case '-': return a - b;
        case '*': return a * b;
        case '/':
          if (b == 0.0) throw EvalError("division by zero");
          return a / b;
        case '^': return detail::pow_checked(a, b);
      }
      throw EvalError("corrupt expression node");
    }
  }
  throw EvalError("corrupt expression node");
}

inline double evaluate(const Expression& e, const Bindings& env) {
  const double v = evaluate_node(*e.root, env);
  if (!std::isfinite(v)) throw EvalError("non-finite expression value");
  return v;
}

/// Central-difference gradient with respect to the listed variables, step
/// h = cbrt(eps)(1+|x|). When the plain stencil and the halved stencil
/// disagree by more than 1e-5 relative, the Richardson combination of the
/// two is returned instead.
inline std::vector<double> gradient(const Expression& e, const Bindings& env,
                                    const std::vector<std::string>& names) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  std::vector<double> out;
  out.reserve(names.size());
  Bindings work = env;
  for (const auto& name : names) {
    auto it = work.find(name);
    if (it == work.end())
      throw EvalError("unbound variable '" + name + "'");
    const double x = it->second;
    const double h = std::cbrt(eps) * (1.0 + std::abs(x));
    auto diff = [&](double step) {
      it->second = x + step;
      const double fp = evaluate(e, work);
      it->second = x - step;
      const double fm = evaluate(e, work);
      it->second = x;
      return (fp - fm) / (2.0 * step);
    };
    const double d1 = diff(h);
    const double d2 = diff(h / 2.0);
    const double scale = std::max(1.0, std::abs(d2));
    out.push_back(std::abs(d1 - d2) > 1e-5 * scale ? (4.0 * d2 - d1) / 3.0
                                                   : d1);
  }
  return out;
}

/// Variables appearing in the expression, in first-appearance order.
inline void collect_variables(const Node& n, std::vector<std::string>& out) {
  switch (n.kind) {
    case NodeKind::variable:
      for (const auto& s : out)
        if (s == n.name) return;
      out.push_back(n.name);
      return;
    case NodeKind::unary:
    case NodeKind::call:
      collect_variables(*n.left, out);
      return;
    case NodeKind::binary:
      collect_variables(*n.left, out);
      collect_variables(*n.right, out);
      return;
    default:
      return;
  }
}

/// Structural substitution of constants for named variables (used by the
/// config layer to resolve parameters).
inline NodePtr substitute(const NodePtr& n, const Bindings& params) {
  switch (n->kind) {
    case NodeKind::variable: {
      auto it = params.find(n->name);
      return it == params.end() ? n : make_constant(it->second);
    }
    case NodeKind::unary:
      return make_unary(substitute(n->left, params));
    case NodeKind::call:
      return make_call(n->name, substitute(n->left, params));
    case NodeKind::binary:
      return make_binary(n->op, substitute(n->left, params),
                         substitute(n->right, params));
    default:
      return n;
  }
}

/// Expression compiled against a fixed coordinate list: evaluation reads
/// variables by index from a vector, no name lookups. Flattened postfix
/// program, cheap enough for finite-difference-heavy inner loops.
class BoundExpr {
 public:
  BoundExpr() = default;

  BoundExpr(const Expression& e, const std::vector<std::string>& coords) {
    compile(*e.root, coords);
  }

  double operator()(const Vec& q) const {
    double stack[64];
    int top = -1;
    for (const auto& ins : program_) {
      switch (ins.code) {
        case Op::push_const: stack[++top] = ins.value; break;
        case Op::push_var: stack[++top] = q[ins.index]; break;
        case Op::neg: stack[top] = -stack[top]; break;
        case Op::add: --top; stack[top] += stack[top + 1]; break;
        case Op::sub: --top; stack[top] -= stack[top + 1]; break;
        case Op::mul: --top; stack[top] *= stack[top + 1]; break;
        case Op::div:
          --top;
          if (stack[top + 1] == 0.0) throw EvalError("division by zero");
          stack[top] /= stack[top + 1];
          break;
        case Op::pow:
          --top;
          stack[top] = detail::pow_checked(stack[top], stack[top + 1]);
          break;
        case Op::fn_sin: stack[top] = std::sin(stack[top]); break;
        case Op::fn_cos: stack[top] = std::cos(stack[top]); break;
        case Op::fn_tan: stack[top] = std::tan(stack[top]); break;
        case Op::fn_sqrt:
          if (stack[top] < 0.0) throw EvalError("sqrt of negative value");
          stack[top] = std::sqrt(stack[top]);
          break;
        case Op::fn_exp: stack[top] = std::exp(stack[top]); break;
        case Op::fn_log:
          if (stack[top] <= 0.0) throw EvalError("log of non-positive value");
          stack[top] = std::log(stack[top]);
          break;
        case Op::fn_abs: stack[top] = std::abs(stack[top]); break;
      }
    }
    const double v = stack[0];
    if (!std::isfinite(v)) throw EvalError("non-finite expression value");
    return v;
  }

 private:
  enum class Op {
    push_const, push_var, neg, add, sub, mul, div, pow,
    fn_sin, fn_cos, fn_tan, fn_sqrt, fn_exp, fn_log, fn_abs,
  };
  struct Instr {
    Op code;
    double value = 0.0;
    int index = 0;
  };
  std::vector<Instr> program_;

  void compile(const Node& n, const std::vector<std::string>& coords) {
    switch (n.kind) {
      case NodeKind::constant:
        program_.push_back({Op::push_const, n.value, 0});
        return;
      case NodeKind::variable: {
        for (std::size_t i = 0; i < coords.size(); ++i) {
          if (coords[i] == n.name) {
            program_.push_back({Op::push_var, 0.0, static_cast<int>(i)});
            return;
          }
        }
        throw EvalError("unbound variable '" + n.name + "'");
      }
      case NodeKind::unary:
        compile(*n.left, coords);
        program_.push_back({Op::neg});
        return;
      case NodeKind::call: {
        compile(*n.left, coords);
        Op code;
        if (n.name == "sin") code = Op::fn_sin;
        else if (n.name == "cos") code = Op::fn_cos;
        else if (n.name == "tan") code = Op::fn_tan;
        else if (n.name == "sqrt") code = Op::fn_sqrt;
        else if (n.name == "exp") code = Op::fn_exp;
        else if (n.name == "log") code = Op::fn_log;
        else if (n.name == "abs") code = Op::fn_abs;
        else throw EvalError("unknown function '" + n.name + "'");
        program_.push_back({code});
        return;
      }
      case NodeKind::binary:
        compile(*n.left, coords);
        compile(*n.right, coords);
        switch (n.op) {
          case '+': program_.push_back({Op::add}); return;
          case '-': program_.push_back({Op::sub}); return;
          case '*': program_.push_back({Op::mul}); return;
          case '/': program_.push_back({Op::div}); return;
          case '^': program_.push_back({Op::pow}); return;
        }
        throw EvalError("corrupt expression node");
    }
  }
};

inline bool structurally_equal(const Node& a, const Node& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case NodeKind::constant: return a.value == b.value;
    case NodeKind::variable: return a.name == b.name;
    case NodeKind::unary: return structurally_equal(*a.left, *b.left);
    case NodeKind::call:
      return a.name == b.name && structurally_equal(*a.left, *b.left);
    case NodeKind::binary:
      return a.op == b.op && structurally_equal(*a.left, *b.left) &&
             structurally_equal(*a.right, *b.right);
  }
  return false;
}

}  // namespace holomenta::expr
