#include "thermopt/expression.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <numbers>
#include <vector>

namespace thermopt {

struct Expression::Node {
  enum class Op { Number, Var, Neg, Add, Sub, Mul, Div, Pow, Exp, Sin, Cos, Sqrt } op = Op::Number;
  double value = 0.0;
  int var = 0;
  std::shared_ptr<const Node> a, b;

  double eval(const Point& p) const {
    switch (op) {
      case Op::Number: return value;
      case Op::Var: return p[var];
      case Op::Neg: return -a->eval(p);
      case Op::Add: return a->eval(p) + b->eval(p);
      case Op::Sub: return a->eval(p) - b->eval(p);
      case Op::Mul: return a->eval(p) * b->eval(p);
      case Op::Div: return a->eval(p) / b->eval(p);
      case Op::Pow: return std::pow(a->eval(p), b->eval(p));
      case Op::Exp: return std::exp(a->eval(p));
      case Op::Sin: return std::sin(a->eval(p));
      case Op::Cos: return std::cos(a->eval(p));
      case Op::Sqrt: return std::sqrt(a->eval(p));
    }
    return 0.0;
  }

  bool constant() const {
    if (op == Op::Var) return false;
    return (!a || a->constant()) && (!b || b->constant());
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;
using Op = Expression::Node::Op;

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
  auto n = std::make_shared<Expression::Node>();
  n->op = op;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ < s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ExpressionError("expression column " + std::to_string(pos_ + 1) + ": " + msg, static_cast<int>(pos_ + 1));
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (accept('+')) {
        n = make(Op::Add, n, term());
      } else if (accept('-')) {
        n = make(Op::Sub, n, term());
      } else {
        return n;
      }
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (accept('*')) {
        n = make(Op::Mul, n, unary());
      } else if (accept('/')) {
        n = make(Op::Div, n, unary());
      } else {
        return n;
      }
    }
  }

  NodePtr unary() {
    if (accept('-')) return make(Op::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = primary();
    if (accept('^')) return make(Op::Pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (accept('(')) {
      NodePtr n = expr();
      if (!accept(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string_view name = s_.substr(start, pos_ - start);
      if (name == "x" || name == "y" || name == "z") {
        auto n = std::make_shared<Expression::Node>();
        n->op = Op::Var;
        n->var = name[0] - 'x';
        return n;
      }
      if (name == "pi") {
        auto n = std::make_shared<Expression::Node>();
        n->value = std::numbers::pi;
        return n;
      }
      Op op;
      if (name == "exp") {
        op = Op::Exp;
      } else if (name == "sin") {
        op = Op::Sin;
      } else if (name == "cos") {
        op = Op::Cos;
      } else if (name == "sqrt") {
        op = Op::Sqrt;
      } else {
        pos_ = start;
        fail("unknown identifier '" + std::string(name) + "'");
      }
      if (!accept('(')) fail("expected '(' after " + std::string(name));
      NodePtr arg = expr();
      if (!accept(')')) fail("expected ')'");
      return make(op, arg);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  NodePtr number() {
    const char* begin = s_.data() + pos_;
    const char* end = s_.data() + s_.size();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr == begin) fail("malformed number");
    pos_ += static_cast<std::size_t>(ptr - begin);
    auto n = std::make_shared<Expression::Node>();
    n->value = v;
    return n;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

Expression Expression::parse(std::string_view text) {
  Expression e;
  e.text_ = std::string(text);
  e.root_ = Parser(e.text_).parse();
  return e;
}

double Expression::operator()(const Point& p) const { return root_->eval(p); }

bool Expression::is_constant() const { return root_->constant(); }

}  // namespace thermopt
