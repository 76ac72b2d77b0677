#include "expr.hpp"

#include <cctype>
#include <cmath>
#include <cstring>
#include <functional>
#include <map>
#include <stdexcept>

namespace lab {

namespace {

enum class Op {
  Const, Var, Add, Sub, Mul, Div, Pow, Neg,
  Sin, Cos, Tan, Asin, Acos, Atan, Sinh, Cosh, Tanh, Exp, Log, Sqrt, Abs
};

const std::map<std::string, Op>& functions() {
  static const std::map<std::string, Op> f = {
      {"sin", Op::Sin},   {"cos", Op::Cos},   {"tan", Op::Tan},
      {"asin", Op::Asin}, {"acos", Op::Acos}, {"atan", Op::Atan},
      {"sinh", Op::Sinh}, {"cosh", Op::Cosh}, {"tanh", Op::Tanh},
      {"exp", Op::Exp},   {"log", Op::Log},   {"sqrt", Op::Sqrt},
      {"abs", Op::Abs}};
  return f;
}

}  // namespace

struct Expr::Node {
  Op op;
  double value = 0;   // Const
  int var = 0;        // Var
  std::unique_ptr<Node> a, b;

  std::unique_ptr<Node> clone() const {
    auto n = std::make_unique<Node>();
    n->op = op;
    n->value = value;
    n->var = var;
    if (a) n->a = a->clone();
    if (b) n->b = b->clone();
    return n;
  }

  double eval(const double* vars) const {
    switch (op) {
      case Op::Const: return value;
      case Op::Var: return vars[var];
      case Op::Add: return a->eval(vars) + b->eval(vars);
      case Op::Sub: return a->eval(vars) - b->eval(vars);
      case Op::Mul: return a->eval(vars) * b->eval(vars);
      case Op::Div: return a->eval(vars) / b->eval(vars);
      case Op::Pow: return std::pow(a->eval(vars), b->eval(vars));
      case Op::Neg: return -a->eval(vars);
      case Op::Sin: return std::sin(a->eval(vars));
      case Op::Cos: return std::cos(a->eval(vars));
      case Op::Tan: return std::tan(a->eval(vars));
      case Op::Asin: return std::asin(a->eval(vars));
      case Op::Acos: return std::acos(a->eval(vars));
      case Op::Atan: return std::atan(a->eval(vars));
      case Op::Sinh: return std::sinh(a->eval(vars));
      case Op::Cosh: return std::cosh(a->eval(vars));
      case Op::Tanh: return std::tanh(a->eval(vars));
      case Op::Exp: return std::exp(a->eval(vars));
      case Op::Log: return std::log(a->eval(vars));
      case Op::Sqrt: return std::sqrt(a->eval(vars));
      case Op::Abs: return std::abs(a->eval(vars));
    }
    return 0;
  }
};

namespace {

using NodePtr = std::unique_ptr<Expr::Node>;

struct Parser {
  const std::string& s;
  size_t pos = 0;
  int dim;

  explicit Parser(const std::string& text, int d) : s(text), dim(d) {}

  [[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument("expression error at offset " + std::to_string(pos) +
                                " in \"" + s + "\": " + what);
  }

  void skip() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eat(char c) {
    skip();
    if (pos < s.size() && s[pos] == c) { ++pos; return true; }
    return false;
  }
  char peek() {
    skip();
    return pos < s.size() ? s[pos] : '\0';
  }

  NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr) {
    auto n = std::make_unique<Expr::Node>();
    n->op = op;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  NodePtr expr() {
    NodePtr lhs = term();
    for (;;) {
      if (eat('+')) lhs = make(Op::Add, std::move(lhs), term());
      else if (eat('-')) lhs = make(Op::Sub, std::move(lhs), term());
      else return lhs;
    }
  }

  NodePtr term() {
    NodePtr lhs = unary();
    for (;;) {
      if (eat('*')) lhs = make(Op::Mul, std::move(lhs), unary());
      else if (eat('/')) lhs = make(Op::Div, std::move(lhs), unary());
      else return lhs;
    }
  }

  NodePtr unary() {
    if (eat('-')) return make(Op::Neg, unary());
    if (eat('+')) return unary();
    return power();
  }

  NodePtr power() {
    NodePtr base = atom();
    if (eat('^')) return make(Op::Pow, std::move(base), unary());
    return base;
  }

  NodePtr atom() {
    char c = peek();
    if (c == '(') {
      ++pos;
      NodePtr e = expr();
      if (!eat(')')) fail("missing )");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return ident();
    fail("unexpected character");
  }

  NodePtr number() {
    skip();
    size_t end = pos;
    char* after = nullptr;
    double v = std::strtod(s.c_str() + pos, &after);
    end = size_t(after - s.c_str());
    if (end == pos) fail("bad number");
    pos = end;
    auto n = make(Op::Const);
    n->value = v;
    return n;
  }

  NodePtr ident() {
    skip();
    size_t start = pos;
    while (pos < s.size() &&
           (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
      ++pos;
    std::string name = s.substr(start, pos - start);

    if (name == "pi") { auto n = make(Op::Const); n->value = 3.141592653589793238462643383279502884; return n; }
    if (name == "e")  { auto n = make(Op::Const); n->value = 2.718281828459045235360287471352662498; return n; }

    auto fit = functions().find(name);
    if (fit != functions().end()) {
      if (!eat('(')) fail("function " + name + " needs (");
      NodePtr arg = expr();
      if (!eat(')')) fail("missing ) after " + name);
      return make(fit->second, std::move(arg));
    }

    static const char* short_names[3] = {"x", "y", "z"};
    for (int i = 0; i < dim && i < 3; ++i) {
      if (name == short_names[i] || name == "x" + std::to_string(i + 1)) {
        auto n = make(Op::Var);
        n->var = i;
        return n;
      }
    }
    fail("unknown identifier " + name);
  }
};

}  // namespace

Expr::Expr() = default;
Expr::Expr(Expr&&) noexcept = default;
Expr& Expr::operator=(Expr&&) noexcept = default;
Expr::~Expr() = default;

Expr::Expr(const Expr& other) : text_(other.text_) {
  if (other.root_) root_ = other.root_->clone();
}

Expr& Expr::operator=(const Expr& other) {
  if (this != &other) {
    text_ = other.text_;
    root_ = other.root_ ? other.root_->clone() : nullptr;
  }
  return *this;
}

Expr Expr::parse(const std::string& text, int dim) {
  Parser p(text, dim);
  Expr e;
  e.root_ = p.expr();
  p.skip();
  if (p.pos != text.size()) p.fail("trailing input");
  e.text_ = text;
  return e;
}

double Expr::eval(const double* vars) const {
  if (!root_) throw std::logic_error("empty expression");
  return root_->eval(vars);
}

}  // namespace lab
