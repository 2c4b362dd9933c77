#pragma once

// Sparse real multivariate polynomials and the slack-variable reduction of a
// basic semialgebraic set {p = 0, q >= 0, r > 0} to a real algebraic set.

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "semiconf/expr.hpp"

namespace semiconf {

class Polynomial {
 public:
  using Monomial = std::vector<int>;  // exponent per variable

  Polynomial() = default;
  explicit Polynomial(std::size_t n_vars) : n_(n_vars) {}

  static Polynomial constant(std::size_t n_vars, double c) {
    Polynomial p(n_vars);
    if (c != 0.0) p.terms_[Monomial(n_vars, 0)] = c;
    return p;
  }

  static Polynomial variable(std::size_t n_vars, std::size_t i) {
    if (i >= n_vars) throw Error("polynomial variable index out of range");
    Polynomial p(n_vars);
    Monomial m(n_vars, 0);
    m[i] = 1;
    p.terms_[m] = 1.0;
    return p;
  }

  std::size_t variables() const { return n_; }
  const std::map<Monomial, double>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  int degree() const {
    int d = 0;
    for (const auto& [m, c] : terms_) {
      int s = 0;
      for (int e : m) s += e;
      d = std::max(d, s);
    }
    return d;
  }

  /// Same polynomial in more variables (new ones appended).
  Polynomial extended(std::size_t n_vars) const {
    if (n_vars < n_) throw Error("polynomial cannot drop variables");
    Polynomial p(n_vars);
    for (const auto& [m, c] : terms_) {
      Monomial mm = m;
      mm.resize(n_vars, 0);
      p.terms_[mm] = c;
    }
    return p;
  }

  double evaluate(std::span<const double> x) const {
    if (x.size() < n_) throw Error("polynomial: too few coordinates");
    double total = 0.0;
    for (const auto& [m, c] : terms_) {
      double t = c;
      for (std::size_t i = 0; i < n_; ++i)
        for (int k = 0; k < m[i]; ++k) t *= x[i];
      total += t;
    }
    return total;
  }

  double evaluate(std::initializer_list<double> x) const {
    std::vector<double> v(x);
    return evaluate(std::span<const double>(v));
  }

  friend Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    Polynomial p = a.extended(std::max(a.n_, b.n_));
    Polynomial q = b.extended(p.n_);
    for (const auto& [m, c] : q.terms_) p.add_term(m, c);
    return p;
  }

  friend Polynomial operator-(const Polynomial& a, const Polynomial& b) { return a + (-1.0) * b; }

  friend Polynomial operator*(double k, const Polynomial& a) {
    Polynomial p(a.n_);
    if (k == 0.0) return p;
    for (const auto& [m, c] : a.terms_) p.terms_[m] = k * c;
    return p;
  }

  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    std::size_t n = std::max(a.n_, b.n_);
    Polynomial x = a.extended(n), y = b.extended(n), p(n);
    for (const auto& [ma, ca] : x.terms_)
      for (const auto& [mb, cb] : y.terms_) {
        Monomial m(n);
        for (std::size_t i = 0; i < n; ++i) m[i] = ma[i] + mb[i];
        p.add_term(m, ca * cb);
      }
    return p;
  }

  bool operator==(const Polynomial&) const = default;

  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::string s;
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      const auto& [m, c] = *it;
      if (!s.empty()) s += " + ";
      s += format_number(c);
      for (std::size_t i = 0; i < n_; ++i)
        if (m[i] > 0) s += "*x" + std::to_string(i + 1) + (m[i] > 1 ? "^" + std::to_string(m[i]) : "");
    }
    return s;
  }

 private:
  void add_term(const Monomial& m, double c) {
    double& slot = terms_[m];
    slot += c;
    if (slot == 0.0) terms_.erase(m);
  }

  std::size_t n_ = 0;
  std::map<Monomial, double> terms_;
};

inline Polynomial squared(const Polynomial& p) { return p * p; }

/// P over R^(N+M) whose zero set projects onto {p_i = 0, q_j >= 0, r_k > 0}.
struct SlackReduction {
  Polynomial P;
  std::size_t n_original = 0;
  std::size_t n_total = 0;
  std::size_t n_q = 0;
  std::size_t n_r = 0;

  /// Forgets the slack coordinates.
  std::vector<double> project(std::span<const double> x) const {
    return std::vector<double>(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n_original));
  }
};

inline SlackReduction basic_semialgebraic_to_algebraic(std::size_t n, const std::vector<Polynomial>& p,
                                                       const std::vector<Polynomial>& q,
                                                       const std::vector<Polynomial>& r) {
  SlackReduction out;
  out.n_original = n;
  out.n_q = q.size();
  out.n_r = r.size();
  out.n_total = n + q.size() + r.size();
  const std::size_t N = out.n_total;
  Polynomial P(N);
  for (const auto& pi : p) P = P + squared(pi.extended(N));
  for (std::size_t j = 0; j < q.size(); ++j) {
    auto y = Polynomial::variable(N, n + j);
    P = P + squared(y * y - q[j].extended(N));
  }
  for (std::size_t k = 0; k < r.size(); ++k) {
    auto z = Polynomial::variable(N, n + q.size() + k);
    P = P + squared(z * z * r[k].extended(N) - Polynomial::constant(N, 1.0));
  }
  out.P = P;
  return out;
}

/// Expression evaluating P at the real parts of the complex inputs.
inline Expr to_expr(const Polynomial& P) {
  if (P.is_zero()) return Expr::constant(0.0);
  std::vector<Expr> re;
  for (std::size_t i = 0; i < P.variables(); ++i) {
    Expr z = Expr::var(static_cast<int>(i));
    re.push_back(scale(0.5, z + conj(z)));
  }
  auto power = [&](std::size_t i, int e) {
    Expr acc = re[i];
    for (int k = 1; k < e; ++k) acc = acc * re[i];
    return acc;
  };
  std::optional<Expr> total;
  for (const auto& [m, c] : P.terms()) {
    std::optional<Expr> term;
    for (std::size_t i = 0; i < m.size(); ++i) {
      if (m[i] == 0) continue;
      Expr f = power(i, m[i]);
      term = term ? *term * f : f;
    }
    Expr t = term ? (c == 1.0 ? *term : scale(c, *term)) : Expr::constant(c);
    total = total ? *total + t : t;
  }
  return *total;
}

}  // namespace semiconf
