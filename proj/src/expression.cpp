#include "tdlab/expression.hpp"

#include <cctype>
#include <cmath>
#include <sstream>

namespace tdlab {

struct Expression::Node {
  enum Kind { Number, X, Add, Sub, Mul, Div, Pow, Neg, Sin, Cos, Exp } kind = Number;
  double value = 0.0;
  std::shared_ptr<const Node> a, b;

  double eval(double x) const {
    switch (kind) {
      case Number: return value;
      case X: return x;
      case Add: return a->eval(x) + b->eval(x);
      case Sub: return a->eval(x) - b->eval(x);
      case Mul: return a->eval(x) * b->eval(x);
      case Div: return a->eval(x) / b->eval(x);
      case Pow: return std::pow(a->eval(x), b->eval(x));
      case Neg: return -a->eval(x);
      case Sin: return std::sin(a->eval(x));
      case Cos: return std::cos(a->eval(x));
      case Exp: return std::exp(a->eval(x));
    }
    return 0.0;
  }
};

namespace {

using NodePtr = std::shared_ptr<const Expression::Node>;

class Parser {
 public:
  Parser(const std::string& s, const std::string& field) : s_(s), field_(field) {}

  NodePtr parse() {
    NodePtr n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  const std::string& s_;
  const std::string& field_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    std::ostringstream os;
    os << field_ << ": " << what << " at column " << pos_ + 1 << " in \"" << s_ << '"';
    throw ConfigError(os.str());
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool eat(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodePtr make(Expression::Node::Kind k, NodePtr a = nullptr, NodePtr b = nullptr,
                      double v = 0.0) {
    auto n = std::make_shared<Expression::Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    n->value = v;
    return n;
  }

  NodePtr expr() {
    NodePtr n = term();
    for (;;) {
      if (eat('+'))
        n = make(Expression::Node::Add, n, term());
      else if (eat('-'))
        n = make(Expression::Node::Sub, n, term());
      else
        return n;
    }
  }

  NodePtr term() {
    NodePtr n = unary();
    for (;;) {
      if (eat('*'))
        n = make(Expression::Node::Mul, n, unary());
      else if (eat('/'))
        n = make(Expression::Node::Div, n, unary());
      else
        return n;
    }
  }

  NodePtr unary() {
    if (eat('-')) return make(Expression::Node::Neg, unary());
    if (eat('+')) return unary();
    return power();
  }

  // Right associative; binds tighter than unary minus on its left: -x^2 = -(x^2).
  NodePtr power() {
    NodePtr base = primary();
    if (eat('^')) return make(Expression::Node::Pow, base, unary());
    return base;
  }

  NodePtr primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[pos_];
    if (eat('(')) {
      NodePtr n = expr();
      if (!eat(')')) fail("expected ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("malformed number");
      pos_ += static_cast<std::size_t>(end - begin);
      return make(Expression::Node::Number, nullptr, nullptr, v);
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      if (id == "x") return make(Expression::Node::X);
      if (id == "pi") return make(Expression::Node::Number, nullptr, nullptr, M_PI);
      if (id == "e") return make(Expression::Node::Number, nullptr, nullptr, M_E);
      Expression::Node::Kind k;
      if (id == "sin")
        k = Expression::Node::Sin;
      else if (id == "cos")
        k = Expression::Node::Cos;
      else if (id == "exp")
        k = Expression::Node::Exp;
      else {
        pos_ = start;
        fail("unknown identifier '" + id + "'");
      }
      if (!eat('(')) fail("expected '(' after " + id);
      NodePtr arg = expr();
      if (!eat(')')) fail("expected ')'");
      return make(k, arg);
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }
};

}  // namespace

Expression Expression::parse(const std::string& text, const std::string& field) {
  Expression e;
  e.text_ = text;
  e.root_ = Parser(text, field).parse();
  return e;
}

double Expression::operator()(double x) const { return root_->eval(x); }

Field Expression::on_grid(const Grid& g) const {
  Field f(g.M);
  for (int i = 0; i < g.M; ++i) f[i] = (*this)(g.x(i));
  if (!f.allFinite()) throw ConfigError("expression \"" + text_ + "\" is not finite on the grid");
  return f;
}

}  // namespace tdlab
