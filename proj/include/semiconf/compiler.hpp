#pragma once

// Lowers an expression DAG into a quasifunctional linkage by splicing
// averagers, scalers, squarers and conjugators. Gadget sizes come from
// magnitude bounds so every intermediate value sits well inside the domain
// of the gadget that consumes it.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "semiconf/expr.hpp"
#include "semiconf/gadgets.hpp"

namespace semiconf::compiler {

using gadgets::PantographMode;
using gadgets::GadgetSpec;
using gadgets::QFLinkage;

/// One spliced gadget and the numbers that justify its size.
struct InstantiationRecord {
  std::string gadget;
  std::string mode;
  std::string node;    // canonical form of the expression node served
  std::string prefix;  // vertex namespace of the instance
  std::map<std::string, double> params;
  double required = 0.0;   // bound on the quantity the domain constrains
  double certified = 0.0;  // the gadget's guarantee for that quantity
};

struct CompiledQF {
  QFLinkage qf;
  std::map<std::string, VertexId> node_vertex;
  std::vector<InstantiationRecord> log;
  Expr expr;
  std::size_t n_vars = 0;
  double radius = 0.0;

  /// Every gadget's certified bound is at least twice what it must carry.
  bool margins_ok() const {
    return std::all_of(log.begin(), log.end(), [](const InstantiationRecord& r) {
      return r.certified >= 2.0 * r.required * (1.0 - 1e-12);
    });
  }
};

struct CompileOptions {
  /// Smallest gadget size; keeps gadgets for tiny bounds well conditioned.
  double size_floor = 0.125;
};

namespace detail {

class Lowering {
 public:
  Lowering(std::size_t n_vars, double radius, const CompileOptions& opt, GadgetSpec spec)
      : as_(std::move(spec)), radius_(radius), opt_(opt) {
    for (std::size_t i = 0; i < n_vars; ++i) as_.add_input(VertexId("z" + std::to_string(i + 1)));
  }

  struct Value {
    VertexId v;
    double bound = 0.0;
    bool is_const = false;
    Point c{};
  };

  Value lower(const Expr& e) {
    const std::string key = to_string(e);
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    Value out = lower_fresh(e, key);
    memo_[key] = out;
    node_vertex_[key] = out.v;
    return out;
  }

  CompiledQF finish(const Expr& e, std::size_t n_vars) && {
    Value top = lower(e);
    VertexId out = top.v;
    // Inputs and outputs must be distinct vertices.
    if (top.is_const || memo_inputs_.count(out.name)) out = identity(top, to_string(e)).v;
    CompiledQF c;
    c.log = std::move(log_);
    c.node_vertex = std::move(node_vertex_);
    c.expr = e;
    c.n_vars = n_vars;
    c.radius = radius_;
    std::vector<Point> centers(n_vars, Point(0.0));
    c.qf = std::move(as_).finish({out}, gadgets::Domain::polydisk(centers, radius_));
    return c;
  }

 private:
  double size(double x) const { return std::max(x, opt_.size_floor); }

  std::string next_prefix(const std::string& what) { return "n" + std::to_string(counter_++) + "_" + what; }

  Value lower_fresh(const Expr& e, const std::string& key) {
    if (!has_variables(e)) return constant(evaluate(e, std::span<const Point>{}));
    switch (e.op()) {
      case Op::Var: {
        VertexId v("z" + std::to_string(e.node().var + 1));
        if (!as_.linkage().has_vertex(v)) throw Error("compile: variable " + v.name + " exceeds n_vars");
        memo_inputs_.insert(v.name);
        return {v, radius_};
      }
      case Op::Add: return add(lower(e.lhs()), lower(e.rhs()), key);
      case Op::Sub: return sub(lower(e.lhs()), lower(e.rhs()), key);
      case Op::Mul: {
        Value x = lower(e.lhs()), y = lower(e.rhs());
        if (x.is_const && x.c.imag() == 0.0) return scale(x.c.real(), y, key);
        if (y.is_const && y.c.imag() == 0.0) return scale(y.c.real(), x, key);
        return mul(x, y, key);
      }
      case Op::ScaleReal: return scale(e.node().lambda, lower(e.lhs()), key);
      case Op::Square: return square(lower(e.lhs()), key);
      case Op::Conj: return conj(lower(e.lhs()), key);
      case Op::ConstReal:
      case Op::ConstComplex: break;
    }
    throw Error("compile: unreachable node kind");
  }

  Value constant(Point c) {
    VertexId v("const/" + std::to_string(consts_++));
    as_.add_pinned(v, c);
    return {v, std::abs(c), true, c};
  }

  void record(std::string gadget, std::string mode, const std::string& node, const std::string& prefix,
              std::map<std::string, double> params, double required, double certified) {
    log_.push_back({std::move(gadget), std::move(mode), node, prefix, std::move(params), required, certified});
  }

  Value average(const Value& x, const Value& y, const std::string& node) {
    double required = x.bound + y.bound;  // bounds |x - y|
    double a = size(required / 2.0);
    std::string prefix = next_prefix("avg");
    auto m = as_.add(gadgets::pantograph(PantographMode::Average, a), prefix, {{"A", x.v}, {"C", y.v}});
    record("pantograph", "average", node, prefix, {{"a", a}, {"c", 1.0}}, required, 4.0 * a);
    return {m.at("B"), (x.bound + y.bound) / 2.0};
  }

  Value identity(const Value& x, const std::string& node) {
    std::string prefix = next_prefix("id");
    auto m = as_.add(gadgets::identity_gadget(), prefix, {{"D", x.v}});
    record("identity", "", node, prefix, {}, 0.0, std::numeric_limits<double>::infinity());
    return {m.at("E"), x.bound};
  }

  Value scale(double lambda, const Value& x, const std::string& node) {
    if (x.is_const) return constant(lambda * x.c);
    if (lambda == 0.0) return constant(0.0);
    if (lambda == 1.0) return identity(x, node);
    const double b = x.bound;
    std::string prefix;
    if (lambda > 1.0) {
      double c = lambda - 1.0, a = size(b);
      prefix = next_prefix("up");
      auto m = as_.add(gadgets::pantograph(PantographMode::ScaleUp, a, c), prefix, {{"B", x.v}});
      record("pantograph", "scale_up", node, prefix, {{"a", a}, {"c", c}}, b, 2.0 * a);
      return {m.at("C"), lambda * b};
    }
    if (lambda > 0.0) {
      double c = 1.0 / lambda - 1.0, a = size(b / (1.0 + c));
      prefix = next_prefix("down");
      auto m = as_.add(gadgets::pantograph(PantographMode::ScaleDown, a, c), prefix, {{"C", x.v}});
      record("pantograph", "scale_down", node, prefix, {{"a", a}, {"c", c}}, b, 2.0 * a * (1.0 + c));
      return {m.at("B"), lambda * b};
    }
    double c = -lambda, a = size(b);
    prefix = next_prefix("neg");
    auto m = as_.add(gadgets::pantograph(PantographMode::Negate, a, c), prefix, {{"A", x.v}});
    record("pantograph", "negate", node, prefix, {{"a", a}, {"c", c}}, b, 2.0 * a);
    return {m.at("C"), -lambda * b};
  }

  Value add(const Value& x, const Value& y, const std::string& node) {
    if (x.v == y.v) return scale(2.0, x, node);
    Value half = average(x, y, node);
    return scale(2.0, half, node);
  }

  Value sub(const Value& x, const Value& y, const std::string& node) {
    if (x.v == y.v) return constant(0.0);
    return add(x, scale(-1.0, y, node), node);
  }

  // zw = ((z + w)/2)^2 - ((z - w)/2)^2
  Value mul(const Value& x, const Value& y, const std::string& node) {
    if (x.v == y.v) return square(x, node);
    Value half_sum = average(x, y, node);
    Value half_diff = average(x, scale(-1.0, y, node), node);
    return sub(square(half_sum, node), square(half_diff, node), node);
  }

  Value square(const Value& x, const std::string& node) {
    if (x.is_const) return constant(x.c * x.c);
    double r = size(2.0 * x.bound);
    std::string prefix = next_prefix("sq");
    auto g = gadgets::squaring(r);
    auto m = as_.add(g, prefix, {{"z", x.v}});
    VertexId out = g.outputs[0];
    record("squaring", "", node, prefix, {{"r", r}}, x.bound, r);
    return {m.at(out), x.bound * x.bound};
  }

  Value conj(const Value& x, const std::string& node) {
    if (x.is_const) return constant(std::conj(x.c));
    double r = size(2.0 * x.bound);
    std::string prefix = next_prefix("conj");
    auto m = as_.add(gadgets::conjugation(r), prefix, {{"C", x.v}});
    record("conjugation", "", node, prefix, {{"r", r}}, x.bound, r);
    return {m.at("D"), x.bound};
  }

  gadgets::Assembly as_;
  double radius_;
  CompileOptions opt_;
  std::map<std::string, Value> memo_;
  std::map<std::string, VertexId> node_vertex_;
  std::set<std::string> memo_inputs_;
  std::vector<InstantiationRecord> log_;
  int counter_ = 0;
  int consts_ = 0;
};

}  // namespace detail

/// Quasifunctional linkage computing e on the polydisk |z_i| <= radius.
inline CompiledQF compile(const Expr& e, std::size_t n_vars, double radius, const CompileOptions& opt = {}) {
  if (!(radius > 0.0)) throw Error("compile: radius must be positive");
  if (variable_count(e) > n_vars) throw Error("compile: expression uses more variables than declared");
  if (n_vars == 0) throw Error("compile: need at least one input variable");
  GadgetSpec spec{"compiled",
                  {{"radius", radius}, {"vars", static_cast<double>(n_vars)}},
                  {{"expr", to_string(e)}}};
  detail::Lowering low(n_vars, radius, opt, spec);
  return std::move(low).finish(e, n_vars);
}

inline CompiledQF compile(const std::string& expr, std::size_t n_vars, double radius,
                          const CompileOptions& opt = {}) {
  return compile(parse_expression(expr), n_vars, radius, opt);
}

/// Rebuilds a gadget (including its placement program) from its spec.
inline QFLinkage rebuild_gadget(const GadgetSpec& s) {
  using namespace gadgets;
  if (s.kind == "identity") return identity_gadget();
  if (s.kind == "pantograph") {
    auto mode = pantograph_mode_from_string(s.text.at("mode"));
    return pantograph(mode, s.number("a"), s.number("c"), Point(s.number("center_re"), s.number("center_im")));
  }
  if (s.kind == "peaucellier") return peaucellier(s.number("a"), s.number("b"), s.number("c"));
  if (s.kind == "squaring") return squaring(s.number("r"));
  if (s.kind == "straight_line")
    return straight_line(Point(s.number("p_re"), s.number("p_im")), Point(s.number("q_re"), s.number("q_im")),
                         {s.number("inv_a"), s.number("inv_b"), s.number("inv_c")});
  if (s.kind == "conjugation") return conjugation(s.number("r"), s.number("a"), s.number("b"), s.number("c"));
  if (s.kind == "compiled") {
    auto it = s.text.find("expr");
    if (it == s.text.end()) throw Error("compiled gadget spec lacks 'expr'");
    return compile(it->second, static_cast<std::size_t>(s.number("vars")), s.number("radius")).qf;
  }
  throw Error("unknown gadget kind '" + s.kind + "'");
}

/// Compiled linkage for P with the output pinned at 0; its input vertices,
/// used as markers, are confined to the zero set of P.
struct ZeroSetLinkage {
  Linkage linkage;
  MarkerSet markers;
  VertexId output;
  CompiledQF compiled;
};

inline ZeroSetLinkage linkage_for_zero_set(const Expr& P, std::size_t n_vars, double radius) {
  ZeroSetLinkage z;
  z.compiled = compile(P, n_vars, radius);
  z.output = z.compiled.qf.outputs.at(0);
  z.linkage = pin(z.compiled.qf.linkage, z.output, 0.0);
  z.markers.vertices = z.compiled.qf.inputs;
  return z;
}

}  // namespace semiconf::compiler
