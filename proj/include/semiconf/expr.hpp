#pragma once

// Polynomial expressions over complex variables with complex conjugation.
// Nodes are immutable and shared, so an Expr is a DAG.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "semiconf/core.hpp"

namespace semiconf {

enum class Op { Var, ConstReal, ConstComplex, Add, Sub, Mul, ScaleReal, Square, Conj };

struct ExprNode {
  Op op = Op::ConstReal;
  int var = -1;         // Var
  Point value{};        // ConstReal, ConstComplex
  double lambda = 1.0;  // ScaleReal
  std::shared_ptr<const ExprNode> lhs, rhs;
};

class Expr {
 public:
  Expr() : Expr(constant(0.0)) {}
  explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}

  static Expr var(int i) {
    if (i < 0) throw Error("variable index must be non-negative");
    auto n = std::make_shared<ExprNode>();
    n->op = Op::Var;
    n->var = i;
    return Expr(n);
  }

  static Expr constant(Point c) {
    auto n = std::make_shared<ExprNode>();
    n->op = c.imag() == 0.0 ? Op::ConstReal : Op::ConstComplex;
    n->value = c;
    return Expr(n);
  }
  static Expr constant(double c) { return constant(Point(c, 0.0)); }

  static Expr binary(Op op, const Expr& a, const Expr& b) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->lhs = a.node_;
    n->rhs = b.node_;
    return Expr(n);
  }

  static Expr unary(Op op, const Expr& a, double lambda = 1.0) {
    auto n = std::make_shared<ExprNode>();
    n->op = op;
    n->lhs = a.node_;
    n->lambda = lambda;
    return Expr(n);
  }

  const ExprNode& node() const { return *node_; }
  const std::shared_ptr<const ExprNode>& ptr() const { return node_; }
  Op op() const { return node_->op; }
  Expr lhs() const { return Expr(node_->lhs); }
  Expr rhs() const { return Expr(node_->rhs); }
  bool is_constant() const { return op() == Op::ConstReal || op() == Op::ConstComplex; }

 private:
  std::shared_ptr<const ExprNode> node_;
};

inline Expr operator+(const Expr& a, const Expr& b) { return Expr::binary(Op::Add, a, b); }
inline Expr operator-(const Expr& a, const Expr& b) { return Expr::binary(Op::Sub, a, b); }
inline Expr operator*(const Expr& a, const Expr& b) { return Expr::binary(Op::Mul, a, b); }
inline Expr scale(double lambda, const Expr& a) { return Expr::unary(Op::ScaleReal, a, lambda); }
inline Expr operator-(const Expr& a) { return scale(-1.0, a); }
inline Expr square(const Expr& a) { return Expr::unary(Op::Square, a); }
inline Expr conj(const Expr& a) { return Expr::unary(Op::Conj, a); }

namespace detail {

template <class F>
void visit_postorder(const ExprNode* n, std::unordered_map<const ExprNode*, bool>& seen, F& f) {
  if (!n || seen.count(n)) return;
  seen[n] = true;
  visit_postorder(n->lhs.get(), seen, f);
  visit_postorder(n->rhs.get(), seen, f);
  f(*n);
}

}  // namespace detail

/// Calls f on every distinct node, children first.
template <class F>
void for_each_node(const Expr& e, F&& f) {
  std::unordered_map<const ExprNode*, bool> seen;
  detail::visit_postorder(e.ptr().get(), seen, f);
}

inline Point evaluate(const Expr& e, std::span<const Point> z) {
  std::unordered_map<const ExprNode*, Point> val;
  for_each_node(e, [&](const ExprNode& n) {
    auto L = [&] { return val.at(n.lhs.get()); };
    auto R = [&] { return val.at(n.rhs.get()); };
    Point v;
    switch (n.op) {
      case Op::Var:
        if (static_cast<std::size_t>(n.var) >= z.size()) throw Error("evaluate: missing variable value");
        v = z[n.var];
        break;
      case Op::ConstReal:
      case Op::ConstComplex: v = n.value; break;
      case Op::Add: v = L() + R(); break;
      case Op::Sub: v = L() - R(); break;
      case Op::Mul: v = L() * R(); break;
      case Op::ScaleReal: v = n.lambda * L(); break;
      case Op::Square: v = L() * L(); break;
      case Op::Conj: v = std::conj(L()); break;
    }
    val[&n] = v;
  });
  return val.at(e.ptr().get());
}

inline Point evaluate(const Expr& e, std::initializer_list<Point> z) {
  std::vector<Point> v(z);
  return evaluate(e, std::span<const Point>(v));
}

/// Total degree in (z, conj z).
inline int degree(const Expr& e) {
  std::unordered_map<const ExprNode*, int> deg;
  for_each_node(e, [&](const ExprNode& n) {
    int d = 0;
    switch (n.op) {
      case Op::Var: d = 1; break;
      case Op::ConstReal:
      case Op::ConstComplex: d = 0; break;
      case Op::Add:
      case Op::Sub: d = std::max(deg.at(n.lhs.get()), deg.at(n.rhs.get())); break;
      case Op::Mul: d = deg.at(n.lhs.get()) + deg.at(n.rhs.get()); break;
      case Op::ScaleReal: d = n.lambda == 0.0 ? 0 : deg.at(n.lhs.get()); break;
      case Op::Square: d = 2 * deg.at(n.lhs.get()); break;
      case Op::Conj: d = deg.at(n.lhs.get()); break;
    }
    deg[&n] = d;
  });
  return deg.at(e.ptr().get());
}

/// One more than the largest variable index (0 for constants).
inline std::size_t variable_count(const Expr& e) {
  std::size_t n = 0;
  for_each_node(e, [&](const ExprNode& x) {
    if (x.op == Op::Var) n = std::max(n, static_cast<std::size_t>(x.var) + 1);
  });
  return n;
}

inline bool has_variables(const Expr& e) { return variable_count(e) > 0; }

/// Upper bound on |e| when every |z_i| <= r, by magnitude interval arithmetic.
inline double magnitude_bound(const Expr& e, double r) {
  std::unordered_map<const ExprNode*, double> b;
  for_each_node(e, [&](const ExprNode& n) {
    double v = 0.0;
    switch (n.op) {
      case Op::Var: v = r; break;
      case Op::ConstReal:
      case Op::ConstComplex: v = std::abs(n.value); break;
      case Op::Add:
      case Op::Sub: v = b.at(n.lhs.get()) + b.at(n.rhs.get()); break;
      case Op::Mul: v = b.at(n.lhs.get()) * b.at(n.rhs.get()); break;
      case Op::ScaleReal: v = std::abs(n.lambda) * b.at(n.lhs.get()); break;
      case Op::Square: v = b.at(n.lhs.get()) * b.at(n.lhs.get()); break;
      case Op::Conj: v = b.at(n.lhs.get()); break;
    }
    b[&n] = v;
  });
  return b.at(e.ptr().get());
}

inline std::string format_number(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string format_constant(Point c) {
  if (c.imag() == 0.0) return c.real() < 0.0 ? "(" + format_number(c.real()) + ")" : format_number(c.real());
  std::string im = format_number(std::abs(c.imag())) + "i";
  if (c.real() == 0.0) return c.imag() < 0.0 ? "(-" + im + ")" : im;
  return "(" + format_number(c.real()) + (c.imag() < 0.0 ? "-" : "+") + im + ")";
}

/// Fully parenthesized form; parse_expression reads it back to an equal DAG
/// up to sharing. Variables print as z1, z2, ...
inline std::string to_string(const Expr& e) {
  std::unordered_map<const ExprNode*, std::string> s;
  for_each_node(e, [&](const ExprNode& n) {
    auto L = [&] { return s.at(n.lhs.get()); };
    auto R = [&] { return s.at(n.rhs.get()); };
    std::string v;
    switch (n.op) {
      case Op::Var: v = "z" + std::to_string(n.var + 1); break;
      case Op::ConstReal:
      case Op::ConstComplex: v = format_constant(n.value); break;
      case Op::Add: v = "(" + L() + " + " + R() + ")"; break;
      case Op::Sub: v = "(" + L() + " - " + R() + ")"; break;
      case Op::Mul: v = "(" + L() + " * " + R() + ")"; break;
      case Op::ScaleReal: v = "(" + format_constant(n.lambda) + " * " + L() + ")"; break;
      case Op::Square: v = (n.lhs->op == Op::Square ? "(" + L() + ")" : L()) + "^2"; break;
      case Op::Conj: v = "conj(" + L() + ")"; break;
    }
    s[&n] = std::move(v);
  });
  return s.at(e.ptr().get());
}

// ---------------------------------------------------------------------------
// Parser: + - * / ^, unary minus, parentheses, conj(), numbers with an
// optional "i" suffix, bare "i", and variables z, w, z1, z2, ...

class ParseError : public Error {
 public:
  using Error::Error;
};

namespace detail {

class Parser {
 public:
  explicit Parser(std::string src) : s_(std::move(src)) {}

  Expr parse() {
    Expr e = sum();
    skip();
    if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ParseError("parse error at column " + std::to_string(pos_ + 1) + ": " + msg);
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

  static Expr fold_binary(Op op, const Expr& a, const Expr& b) {
    if (a.is_constant() && b.is_constant()) {
      Point x = a.node().value, y = b.node().value;
      return Expr::constant(op == Op::Add ? x + y : op == Op::Sub ? x - y : x * y);
    }
    return Expr::binary(op, a, b);
  }

  static Expr fold_scale(double lambda, const Expr& a) {
    if (a.is_constant()) return Expr::constant(lambda * a.node().value);
    return scale(lambda, a);
  }

  Expr sum() {
    Expr e = product();
    for (;;) {
      if (eat('+')) e = fold_binary(Op::Add, e, product());
      else if (eat('-')) e = fold_binary(Op::Sub, e, product());
      else return e;
    }
  }

  Expr product() {
    Expr e = unary();
    for (;;) {
      if (eat('*')) {
        Expr rhs = unary();
        // A real literal factor is a real scaling.
        if (e.op() == Op::ConstReal && !rhs.is_constant()) e = scale(e.node().value.real(), rhs);
        else if (rhs.op() == Op::ConstReal && !e.is_constant()) e = scale(rhs.node().value.real(), e);
        else e = fold_binary(Op::Mul, e, rhs);
      } else if (eat('/')) {
        Expr rhs = unary();
        if (rhs.op() != Op::ConstReal) fail("division only by a real constant");
        double d = rhs.node().value.real();
        if (d == 0.0) fail("division by zero");
        e = fold_scale(1.0 / d, e);
      } else {
        return e;
      }
    }
  }

  Expr unary() {
    if (eat('-')) return fold_scale(-1.0, unary());
    if (eat('+')) return unary();
    return power();
  }

  Expr power() {
    Expr base = atom();
    if (!eat('^')) return base;
    skip();
    std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    if (start == pos_) fail("exponent must be a non-negative integer");
    int n = std::stoi(s_.substr(start, pos_ - start));
    return pow(base, n);
  }

  static Expr pow(const Expr& x, int n) {
    if (n == 0) return Expr::constant(1.0);
    if (n == 1) return x;
    if (x.is_constant()) return Expr::constant(std::pow(x.node().value, n));
    Expr half = pow(x, n / 2);
    Expr sq = square(half);
    return n % 2 == 0 ? sq : Expr::binary(Op::Mul, sq, x);
  }

  Expr atom() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      Expr e = sum();
      if (!eat(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      std::string word = s_.substr(start, pos_ - start);
      if (word == "conj") {
        if (!eat('(')) fail("expected '(' after conj");
        Expr e = sum();
        if (!eat(')')) fail("expected ')'");
        return e.is_constant() ? Expr::constant(std::conj(e.node().value)) : conj(e);
      }
      if (word == "i") return Expr::constant(Point(0.0, 1.0));
      if (word == "z") return Expr::var(0);
      if (word == "w") return Expr::var(1);
      if (word.size() > 1 && word[0] == 'z' &&
          std::all_of(word.begin() + 1, word.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
        int k = std::stoi(word.substr(1));
        if (k < 1) fail("variables are numbered from z1");
        return Expr::var(k - 1);
      }
      pos_ = start;
      fail("unknown identifier '" + word + "'");
    }
    fail("unexpected '" + std::string(1, c) + "'");
  }

  Expr number() {
    const char* begin = s_.c_str() + pos_;
    char* end = nullptr;
    double x = std::strtod(begin, &end);
    if (end == begin) fail("bad number");
    pos_ += static_cast<std::size_t>(end - begin);
    if (pos_ < s_.size() && s_[pos_] == 'i') {
      ++pos_;
      return Expr::constant(Point(0.0, x));
    }
    return Expr::constant(x);
  }

  std::string s_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline Expr parse_expression(const std::string& src) { return detail::Parser(src).parse(); }

}  // namespace semiconf
