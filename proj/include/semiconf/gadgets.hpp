#pragma once

// Quasifunctional gadgets. Each gadget is a linkage with ordered input and
// output vertices, a certified input domain and an exact forward-placement
// program that builds a realization from the inputs and a branch selector.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "semiconf/core.hpp"
#include "semiconf/random.hpp"

namespace semiconf::gadgets {

/// Discrete choices left open by the linkage (triangle orientations,
/// rhombus flips) plus a continuous phase for rotationally free pieces.
struct Branch {
  std::uint64_t bits = 0;
  double phase = 0.0;

  bool flag(int k) const { return ((bits >> k) & 1u) != 0; }

  /// Independent selector for the k-th sub-gadget of a composite.
  Branch child(std::uint64_t k) const {
    return {splitmix64(bits ^ (0x9e3779b97f4a7c15ULL * (k + 1))),
            phase + 0.6180339887498949 * static_cast<double>(k + 1)};
  }

  static Branch random(Rng& rng) { return {rng(), uniform_angle(rng)}; }
};

enum class PlacementErrorKind { Infeasible, Degenerate };

class PlacementError : public Error {
 public:
  PlacementError(PlacementErrorKind kind, const std::string& what)
      : Error(std::string(kind == PlacementErrorKind::Infeasible ? "infeasible" : "degenerate") +
              ": " + what),
        kind_(kind) {}
  PlacementErrorKind kind() const { return kind_; }

 private:
  PlacementErrorKind kind_;
};

/// Intersection of circle(c0, r0) with circle(c1, r1). `flip` picks the
/// side; coincident circles (possible only when c0 == c1 and r0 == r1)
/// resolve through `phase`. Slightly negative discriminants from rounding
/// are clamped to a tangency.
inline Point circle_intersection(Point c0, double r0, Point c1, double r1, bool flip, double phase) {
  double scale = std::max({r0, r1, 1e-300});
  Point delta = c1 - c0;
  double d = std::abs(delta);
  if (d <= 1e-13 * scale) {
    if (std::abs(r0 - r1) <= 1e-12 * scale) return c0 + std::polar(r0, phase);
    throw PlacementError(PlacementErrorKind::Degenerate, "concentric circles with different radii");
  }
  double along = (d * d + r0 * r0 - r1 * r1) / (2.0 * d);
  double h2 = r0 * r0 - along * along;
  if (h2 < -1e-10 * scale * scale)
    throw PlacementError(PlacementErrorKind::Degenerate, "circles do not meet");
  double h = std::sqrt(std::max(0.0, h2));
  Point u = delta / d;
  Point n(-u.imag(), u.real());
  return c0 + along * u + (flip ? -h : h) * n;
}

// ---------------------------------------------------------------------------
// Domains

enum class DomainKind { Plane, Polydisk, Annulus, PairDistance, Segment };

inline const char* to_string(DomainKind k) {
  switch (k) {
    case DomainKind::Plane: return "plane";
    case DomainKind::Polydisk: return "polydisk";
    case DomainKind::Annulus: return "annulus";
    case DomainKind::PairDistance: return "pair_distance";
    case DomainKind::Segment: return "segment";
  }
  return "plane";
}

/// Certified input domain. Margins are in plane units: positive inside,
/// negative outside.
struct Domain {
  DomainKind kind = DomainKind::Plane;
  std::size_t arity = 1;
  std::vector<Point> centers;  // Polydisk: one per input; Annulus: one
  double radius = 0.0;         // Polydisk, PairDistance
  double inner = 0.0, outer = 0.0;
  Point from{}, to{};          // Segment

  /// Radius used when sampling the unbounded plane.
  static constexpr double kPlaneSampleRadius = 10.0;

  static Domain plane(std::size_t n) {
    Domain d;
    d.arity = n;
    return d;
  }
  static Domain polydisk(std::vector<Point> centers, double r) {
    Domain d;
    d.kind = DomainKind::Polydisk;
    d.arity = centers.size();
    d.centers = std::move(centers);
    d.radius = r;
    return d;
  }
  static Domain annulus(Point center, double inner, double outer) {
    Domain d;
    d.kind = DomainKind::Annulus;
    d.centers = {center};
    d.inner = inner;
    d.outer = outer;
    return d;
  }
  static Domain pair_distance(double r) {
    Domain d;
    d.kind = DomainKind::PairDistance;
    d.arity = 2;
    d.radius = r;
    return d;
  }
  static Domain segment(Point p, Point q) {
    Domain d;
    d.kind = DomainKind::Segment;
    d.from = p;
    d.to = q;
    return d;
  }

  double margin(std::span<const Point> z) const {
    if (z.size() != arity) throw Error("domain: expected " + std::to_string(arity) + " inputs");
    switch (kind) {
      case DomainKind::Plane: return std::numeric_limits<double>::infinity();
      case DomainKind::Polydisk: {
        double m = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < z.size(); ++i) m = std::min(m, radius - std::abs(z[i] - centers[i]));
        return m;
      }
      case DomainKind::Annulus: {
        double rho = std::abs(z[0] - centers[0]);
        return std::min(rho - inner, outer - rho);
      }
      case DomainKind::PairDistance: return radius - std::abs(z[0] - z[1]);
      case DomainKind::Segment: {
        Point dir = to - from;
        double len = std::abs(dir);
        Point local = (z[0] - from) / (dir / len);
        double off = std::abs(local.imag());
        double along = std::min(local.real(), len - local.real());
        return off > 1e-9 * std::max(1.0, len) ? -off : along;
      }
    }
    return 0.0;
  }

  bool contains(std::span<const Point> z, double tol = kExactTolerance) const {
    return margin(z) >= -tol * std::max(1.0, scale());
  }

  /// Typical coordinate size, for relative tolerances.
  double scale() const {
    switch (kind) {
      case DomainKind::Plane: return kPlaneSampleRadius;
      case DomainKind::Polydisk: {
        double s = radius;
        for (auto c : centers) s = std::max(s, std::abs(c) + radius);
        return s;
      }
      case DomainKind::Annulus: return std::abs(centers[0]) + outer;
      case DomainKind::PairDistance: return radius;
      case DomainKind::Segment: return std::max(std::abs(from), std::abs(to));
    }
    return 1.0;
  }

  /// Largest r such that the polydisk |z_i - center_i| <= r lies inside.
  double polydisk_radius() const {
    switch (kind) {
      case DomainKind::Plane: return std::numeric_limits<double>::infinity();
      case DomainKind::Polydisk: return radius;
      case DomainKind::PairDistance: return radius / 2.0;
      case DomainKind::Annulus:
      case DomainKind::Segment: return 0.0;
    }
    return 0.0;
  }

  std::vector<Point> sample(Rng& rng) const {
    std::vector<Point> z(arity);
    switch (kind) {
      case DomainKind::Plane:
        for (auto& x : z) x = uniform_in_disk(rng, 0.0, kPlaneSampleRadius);
        break;
      case DomainKind::Polydisk:
        for (std::size_t i = 0; i < arity; ++i) z[i] = uniform_in_disk(rng, centers[i], radius);
        break;
      case DomainKind::Annulus: {
        double rho = std::sqrt(uniform(rng, inner * inner, outer * outer));
        z[0] = uniform_on_circle(rng, centers[0], rho);
        break;
      }
      case DomainKind::PairDistance:
        z[0] = uniform_in_disk(rng, 0.0, radius);
        z[1] = uniform_in_disk(rng, z[0], radius);
        break;
      case DomainKind::Segment: z[0] = from + uniform(rng, 0.0, 1.0) * (to - from); break;
    }
    return z;
  }

  std::vector<Point> sample_boundary(Rng& rng) const {
    std::vector<Point> z(arity);
    switch (kind) {
      case DomainKind::Plane: throw Error("the plane has no boundary");
      case DomainKind::Polydisk:
        for (std::size_t i = 0; i < arity; ++i) z[i] = uniform_on_circle(rng, centers[i], radius);
        break;
      case DomainKind::Annulus:
        z[0] = uniform_on_circle(rng, centers[0], (rng() & 1u) ? outer : inner);
        break;
      case DomainKind::PairDistance:
        z[0] = uniform_in_disk(rng, 0.0, radius);
        z[1] = uniform_on_circle(rng, z[0], radius);
        break;
      case DomainKind::Segment: z[0] = (rng() & 1u) ? to : from; break;
    }
    return z;
  }

  /// Points `factor` times beyond the declared constraint.
  std::vector<Point> sample_outside(Rng& rng, double factor = 1.05) const {
    std::vector<Point> z(arity);
    switch (kind) {
      case DomainKind::Plane: throw Error("nothing lies outside the plane");
      case DomainKind::Polydisk: {
        for (std::size_t i = 0; i < arity; ++i) z[i] = uniform_in_disk(rng, centers[i], radius);
        std::size_t k = rng() % arity;
        z[k] = uniform_on_circle(rng, centers[k], radius * factor);
        break;
      }
      case DomainKind::Annulus:
        z[0] = uniform_on_circle(rng, centers[0], (rng() & 1u) ? outer * factor : inner / factor);
        break;
      case DomainKind::PairDistance:
        z[0] = uniform_in_disk(rng, 0.0, radius);
        z[1] = uniform_on_circle(rng, z[0], radius * factor);
        break;
      case DomainKind::Segment: {
        Point dir = to - from;
        z[0] = (rng() & 1u) ? to + (factor - 1.0) * dir : from - (factor - 1.0) * dir;
        break;
      }
    }
    return z;
  }
};

// ---------------------------------------------------------------------------
// Quasifunctional linkages

/// Constructor name and parameters; enough to rebuild the gadget.
struct GadgetSpec {
  std::string kind;
  std::map<std::string, double> numbers;
  std::map<std::string, std::string> text;

  double number(const std::string& key) const {
    auto it = numbers.find(key);
    if (it == numbers.end()) throw Error("gadget spec '" + kind + "' lacks parameter '" + key + "'");
    return it->second;
  }
  bool operator==(const GadgetSpec&) const = default;
};

/// Writes positions for the gadget's vertices. `pos[slot[i]]` is the
/// position of the gadget's i-th vertex (sorted order). Inputs and pinned
/// vertices are already filled in when the placer runs.
using Placer = std::function<void(std::span<Point> pos, std::span<const std::size_t> slot, const Branch&)>;

/// A sub-gadget's declared domain, checked on composite realizations.
struct Probe {
  std::string label;
  std::vector<VertexId> inputs;
  Domain domain;
};

/// Apex of an equilateral triangle over the rigid bar u-v. Joining it to u,
/// v and an interior joint of the bar makes the joint transversally
/// determined; the bare collinear triangle only fixes it to second order.
struct Truss {
  VertexId apex, u, v;
};

inline Point truss_apex(Point u, Point v) { return u + (v - u) * Point(0.5, std::sqrt(3.0) / 2.0); }

struct QFLinkage {
  Linkage linkage;
  std::vector<VertexId> inputs;
  std::vector<VertexId> outputs;
  Domain domain;
  GadgetSpec spec;
  int branch_bits = 0;
  Placer placer;
  std::vector<Probe> probes;
  std::vector<Truss> trusses;  // apexes are placed after the placer runs

  std::uint64_t branch_count() const { return branch_bits >= 63 ? ~0ULL : (1ULL << branch_bits); }

  /// Exact realization for the given inputs and branch.
  Realization place(std::span<const Point> in, const Branch& branch = {}) const {
    if (in.size() != inputs.size()) throw Error("place: wrong number of inputs");
    if (!domain.contains(in))
      throw PlacementError(PlacementErrorKind::Infeasible, "inputs outside the certified domain");
    std::vector<Point> pos(linkage.vertex_count());
    for (const auto& [v, z] : linkage.pins()) pos[linkage.require_index(v)] = z;
    for (std::size_t k = 0; k < in.size(); ++k) pos[linkage.require_index(inputs[k])] = in[k];
    std::vector<std::size_t> slot(pos.size());
    std::iota(slot.begin(), slot.end(), std::size_t{0});
    placer(pos, slot, branch);
    for (const auto& t : trusses)
      pos[linkage.require_index(t.apex)] =
          truss_apex(pos[linkage.require_index(t.u)], pos[linkage.require_index(t.v)]);
    return Realization(linkage.vertices(), std::move(pos));
  }

  Realization place(std::initializer_list<Point> in, const Branch& branch = {}) const {
    std::vector<Point> v(in);
    return place(std::span<const Point>(v), branch);
  }

  std::vector<Point> outputs_of(const Realization& r) const { return r.restrict_to({outputs}); }
  std::vector<Point> inputs_of(const Realization& r) const { return r.restrict_to({inputs}); }

  /// Smallest margin over the own domain and every probe.
  double min_margin(const Realization& r, std::string* where = nullptr) const {
    auto in = inputs_of(r);
    double best = domain.margin(in);
    if (where) *where = spec.kind;
    for (const auto& p : probes) {
      auto z = r.restrict_to({p.inputs});
      double m = p.domain.margin(z);
      if (m < best) {
        best = m;
        if (where) *where = p.label;
      }
    }
    return best;
  }
};

namespace detail {

inline std::vector<std::size_t> local_indices(const Linkage& l, std::initializer_list<const char*> names) {
  std::vector<std::size_t> out;
  for (const char* n : names) out.push_back(l.require_index(VertexId(n)));
  return out;
}

/// Accessor for the gadget's own vertices inside a host position array.
struct Frame {
  std::span<Point> pos;
  std::span<const std::size_t> slot;
  const std::vector<std::size_t>& ix;
  Point& operator[](std::size_t k) const { return pos[slot[ix[k]]]; }
};

inline void check_positive(std::initializer_list<double> xs, const char* what) {
  for (double x : xs)
    if (!(x > 0.0) || !std::isfinite(x)) throw Error(std::string(what) + ": parameters must be positive");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Assembly: composite gadgets built by splicing sub-gadgets and custom steps.

class Assembly {
 public:
  explicit Assembly(GadgetSpec spec) : spec_(std::move(spec)) {}

  Linkage& linkage() { return linkage_; }
  const Linkage& linkage() const { return linkage_; }
  std::vector<Truss>& trusses() { return trusses_; }

  VertexId add_input(const VertexId& v) {
    if (linkage_.has_vertex(v)) throw Error("assembly: input '" + v.name + "' exists");
    linkage_.add_vertex(v);
    inputs_.push_back(v);
    return v;
  }

  VertexId add_pinned(const VertexId& v, Point z) {
    if (linkage_.has_vertex(v)) throw Error("assembly: vertex '" + v.name + "' exists");
    linkage_.add_vertex(v).set_pin(v, z);
    return v;
  }

  /// Splices `g` in. Gadget vertices listed in `identify` become the given
  /// host vertices; the rest are renamed `prefix/name`. Returns the host name
  /// of every gadget vertex.
  std::map<VertexId, VertexId> add(const QFLinkage& g, const std::string& prefix,
                                   const std::map<VertexId, VertexId>& identify) {
    Identification pairs;
    for (const auto& [inner, outer] : identify) pairs.emplace_back(outer, inner);
    linkage_ = splice(linkage_, g.linkage, pairs, prefix);
    std::map<VertexId, VertexId> names;
    std::vector<VertexId> ordered;
    for (const auto& v : g.linkage.vertices()) {
      auto it = identify.find(v);
      VertexId host = it != identify.end() ? it->second : namespaced(prefix, v);
      names[v] = host;
      ordered.push_back(host);
    }
    steps_.push_back({g.placer, std::move(ordered)});
    bits_ += g.branch_bits;
    for (const auto& t : g.trusses) trusses_.push_back({names.at(t.apex), names.at(t.u), names.at(t.v)});
    Probe own{prefix, {}, g.domain};
    for (const auto& v : g.inputs) own.inputs.push_back(names.at(v));
    probes_.push_back(std::move(own));
    for (const auto& p : g.probes) {
      Probe q{prefix + "/" + p.label, {}, p.domain};
      for (const auto& v : p.inputs) q.inputs.push_back(names.at(v));
      probes_.push_back(std::move(q));
    }
    return names;
  }

  /// Custom placement step over host vertices `names` (indexed in that order).
  void add_step(std::vector<VertexId> names, Placer p, int bits = 0) {
    steps_.push_back({std::move(p), std::move(names)});
    bits_ += bits;
  }

  void add_probe(Probe p) { probes_.push_back(std::move(p)); }

  QFLinkage finish(std::vector<VertexId> outputs, Domain domain) && {
    QFLinkage q;
    q.inputs = inputs_;
    q.outputs = std::move(outputs);
    for (const auto& v : q.outputs)
      if (!linkage_.has_vertex(v)) throw Error("assembly: unknown output '" + v.name + "'");
    q.domain = std::move(domain);
    q.spec = spec_;
    q.branch_bits = std::min(bits_, 63);
    q.probes = std::move(probes_);
    q.trusses = std::move(trusses_);

    struct Compiled {
      Placer placer;
      std::vector<std::size_t> slots;
    };
    auto compiled = std::make_shared<std::vector<Compiled>>();
    for (auto& s : steps_) {
      Compiled c{std::move(s.placer), {}};
      for (const auto& v : s.names) c.slots.push_back(linkage_.require_index(v));
      compiled->push_back(std::move(c));
    }
    q.placer = [compiled](std::span<Point> pos, std::span<const std::size_t> slot, const Branch& br) {
      std::vector<std::size_t> tmp;
      for (std::size_t k = 0; k < compiled->size(); ++k) {
        const auto& c = (*compiled)[k];
        tmp.resize(c.slots.size());
        for (std::size_t i = 0; i < tmp.size(); ++i) tmp[i] = slot[c.slots[i]];
        c.placer(pos, tmp, br.child(k));
      }
    };
    q.linkage = std::move(linkage_);
    return q;
  }

 private:
  struct Step {
    Placer placer;
    std::vector<VertexId> names;
  };
  GadgetSpec spec_;
  Linkage linkage_;
  std::vector<VertexId> inputs_;
  std::vector<Step> steps_;
  std::vector<Probe> probes_;
  std::vector<Truss> trusses_;
  int bits_ = 0;
};

// ---------------------------------------------------------------------------
// Primitive constructions

/// Circumradius of the unit equilateral triangle.
inline double identity_spoke_length() { return 1.0 / std::sqrt(3.0); }

/// Unit triangle ABC with D and E both joined to A, B, C; forces E = D.
inline QFLinkage identity_gadget() {
  const double s = identity_spoke_length();
  QFLinkage q;
  auto& l = q.linkage;
  l.add_edge("A", "B", 1.0).add_edge("B", "C", 1.0).add_edge("A", "C", 1.0);
  for (const char* hub : {"D", "E"})
    for (const char* corner : {"A", "B", "C"}) l.add_edge(hub, corner, s);
  q.inputs = {"D"};
  q.outputs = {"E"};
  q.domain = Domain::plane(1);
  q.spec = {"identity", {}, {}};
  q.branch_bits = 1;
  auto ix = detail::local_indices(l, {"A", "B", "C", "D", "E"});
  q.placer = [ix, s](std::span<Point> pos, std::span<const std::size_t> slot, const Branch& br) {
    detail::Frame f{pos, slot, ix};
    Point d = f[3];
    double turn = (br.flag(0) ? -2.0 : 2.0) * std::numbers::pi / 3.0;
    for (int k = 0; k < 3; ++k) f[k] = d + std::polar(s, br.phase + k * turn);
    f[4] = d;
  };
  return q;
}

/// Puts a joint C on edge u-v at fraction `at` from u (edges C-u and C-v of
/// lengths at*l and (1-at)*l). The edge u-v is kept.
inline std::pair<Linkage, VertexId> midpoint_joint(const Linkage& l, const VertexId& u, const VertexId& v,
                                                   double at, const VertexId& name) {
  if (!(at > 0.0 && at < 1.0)) throw Error("midpoint_joint: fraction must lie in (0,1)");
  const Edge* e = l.find_edge(u, v);
  if (!e) throw Error("midpoint_joint: no edge " + u.name + "-" + v.name);
  if (l.has_vertex(name)) throw Error("midpoint_joint: vertex '" + name.name + "' exists");
  Linkage out = l;
  out.add_edge(name, u, at * e->length).add_edge(name, v, (1.0 - at) * e->length);
  return {std::move(out), name};
}

inline std::pair<Linkage, VertexId> midpoint_joint(const Linkage& l, const VertexId& u, const VertexId& v,
                                                   double at = 0.5) {
  return midpoint_joint(l, u, v, at, VertexId(u.name + "|" + v.name));
}

/// Two-bar chain u-aux-v with lengths c, d; |u - v| ranges over [|c-d|, c+d].
inline Linkage two_bar_chain(const Linkage& l, const VertexId& u, const VertexId& v, double c, double d,
                             const VertexId& aux) {
  if (l.has_vertex(aux)) throw Error("cable: vertex '" + aux.name + "' exists");
  Linkage out = l;
  out.add_edge(u, aux, c, EdgeKind::Cable).add_edge(aux, v, d, EdgeKind::Cable);
  return out;
}

/// Simulated cable |u - v| <= b.
inline Linkage cable(const Linkage& l, const VertexId& u, const VertexId& v, double b, const VertexId& aux) {
  detail::check_positive({b}, "cable");
  return two_bar_chain(l, u, v, b / 2.0, b / 2.0, aux);
}

/// Simulated telescoping edge a <= |u - v| <= b.
inline Linkage telescope(const Linkage& l, const VertexId& u, const VertexId& v, double a, double b,
                         const VertexId& aux) {
  detail::check_positive({a, b}, "telescope");
  if (!(a < b)) throw Error("telescope: need a < b");
  return two_bar_chain(l, u, v, (a + b) / 2.0, (b - a) / 2.0, aux);
}

/// Trusses the joint on the existing bar u-v; the joint's edge to u gives
/// its position along the bar.
inline Linkage add_truss(const Linkage& l, const VertexId& u, const VertexId& v, const VertexId& joint,
                         const VertexId& apex, std::vector<Truss>* record) {
  const Edge* bar = l.find_edge(u, v);
  const Edge* part = l.find_edge(u, joint);
  if (!bar || !part) throw Error("truss: missing bar edges at '" + joint.name + "'");
  if (l.has_vertex(apex)) throw Error("truss: vertex '" + apex.name + "' exists");
  const double L = bar->length, t = part->length / L;
  Linkage out = l;
  out.add_edge(apex, u, L).add_edge(apex, v, L).add_edge(apex, joint, L * std::sqrt((0.5 - t) * (0.5 - t) + 0.75));
  if (record) record->push_back({apex, u, v});
  return out;
}

/// Adds the 4-cycle p0 p1 p2 p3 (sides side1, side2, side1, side2), joints at
/// the midpoints of p0p1 and p2p3 and a brace of length side2 between them.
inline Linkage add_rigidified_quad(const Linkage& l, const std::array<VertexId, 4>& p, double side1,
                                   double side2, const VertexId& m01, const VertexId& m23,
                                   std::vector<Truss>* trusses = nullptr) {
  detail::check_positive({side1, side2}, "rigidified_parallelogram");
  Linkage out = l;
  auto edge = [&](const VertexId& a, const VertexId& b, double len) {
    if (const Edge* e = out.find_edge(a, b)) {
      if (std::abs(e->length - len) > kExactTolerance) throw Error("rigidified_parallelogram: edge clash");
      return;
    }
    out.add_edge(a, b, len);
  };
  edge(p[0], p[1], side1);
  edge(p[1], p[2], side2);
  edge(p[2], p[3], side1);
  edge(p[3], p[0], side2);
  out = midpoint_joint(out, p[0], p[1], 0.5, m01).first;
  out = midpoint_joint(out, p[2], p[3], 0.5, m23).first;
  out.add_edge(m01, m23, side2, EdgeKind::Brace);
  if (trusses) {
    out = add_truss(out, p[0], p[1], m01, VertexId(m01.name + "^"), trusses);
    out = add_truss(out, p[2], p[3], m23, VertexId(m23.name + "^"), trusses);
  }
  return out;
}

/// Parallelogram P0 P1 P2 P3 with brace between the midpoints M01 and M23.
inline Linkage rigidified_parallelogram(double side1, double side2) {
  return add_rigidified_quad(Linkage{}, {"P0", "P1", "P2", "P3"}, side1, side2, "M01", "M23");
}

// Pantograph ---------------------------------------------------------------

enum class PantographMode { Average, ScaleUp, ScaleDown, Negate };

inline const char* to_string(PantographMode m) {
  switch (m) {
    case PantographMode::Average: return "average";
    case PantographMode::ScaleUp: return "scale_up";
    case PantographMode::ScaleDown: return "scale_down";
    case PantographMode::Negate: return "negate";
  }
  return "average";
}

inline PantographMode pantograph_mode_from_string(const std::string& s) {
  for (auto m : {PantographMode::Average, PantographMode::ScaleUp, PantographMode::ScaleDown,
                 PantographMode::Negate})
    if (s == to_string(m)) return m;
  throw Error("unknown pantograph mode '" + s + "'");
}

/// Rigidified parallelogram DEBF (DE = BF = c*a, EB = FD = a) with bar DA
/// through E and bar DC through F, both of length (1+c)*a. Every realization
/// satisfies C = (1+c)B - cA. `center` is the pin position for the modes
/// that pin a vertex.
inline QFLinkage pantograph(PantographMode mode, double a, double c = 1.0, Point center = 0.0) {
  detail::check_positive({a, c}, "pantograph");
  if (mode == PantographMode::Average && std::abs(c - 1.0) > 1e-15)
    throw Error("pantograph: average mode needs c = 1");
  QFLinkage q;
  auto& l = q.linkage;
  const double p = c * a;
  l.add_edge("D", "E", p).add_edge("E", "A", a).add_edge("D", "A", (1.0 + c) * a);
  l.add_edge("D", "F", a).add_edge("F", "C", p).add_edge("D", "C", (1.0 + c) * a);
  l = add_rigidified_quad(l, {"D", "E", "B", "F"}, p, a, "mDE", "mBF", &q.trusses);
  l = add_truss(l, "D", "A", "E", "E^", &q.trusses);
  l = add_truss(l, "D", "C", "F", "F^", &q.trusses);

  switch (mode) {
    case PantographMode::Average:
      q.inputs = {"A", "C"};
      q.outputs = {"B"};
      q.domain = Domain::pair_distance(4.0 * a);
      break;
    case PantographMode::ScaleUp:
      l.set_pin("A", center);
      q.inputs = {"B"};
      q.outputs = {"C"};
      q.domain = Domain::polydisk({center}, 2.0 * a);
      break;
    case PantographMode::ScaleDown:
      l.set_pin("A", center);
      q.inputs = {"C"};
      q.outputs = {"B"};
      q.domain = Domain::polydisk({center}, 2.0 * a * (1.0 + c));
      break;
    case PantographMode::Negate:
      l.set_pin("B", center);
      q.inputs = {"A"};
      q.outputs = {"C"};
      q.domain = Domain::polydisk({center}, 2.0 * a);
      break;
  }
  q.spec = {"pantograph",
            {{"a", a}, {"c", c}, {"center_re", center.real()}, {"center_im", center.imag()}},
            {{"mode", to_string(mode)}}};
  q.branch_bits = 1;

  auto ix = detail::local_indices(l, {"A", "B", "C", "D", "E", "F", "mDE", "mBF"});
  const bool from_ac = mode == PantographMode::Average || mode == PantographMode::ScaleDown;
  q.placer = [ix, a, c, from_ac](std::span<Point> pos, std::span<const std::size_t> slot, const Branch& br) {
    detail::Frame f{pos, slot, ix};
    Point A = f[0];
    if (from_ac) f[1] = (c * A + f[2]) / (1.0 + c);
    else f[2] = (1.0 + c) * f[1] - c * A;
    Point X = f[1] - A;
    Point u = circle_intersection(0.0, a, X, a, br.flag(0), br.phase);
    Point D = A + (1.0 + c) * u;
    Point E = A + u;
    Point F = D + (X - u);
    f[3] = D;
    f[4] = E;
    f[5] = F;
    f[6] = (D + E) / 2.0;
    f[7] = (f[1] + F) / 2.0;
  };
  return q;
}

// Peaucellier inversor -------------------------------------------------------

struct InversorParams {
  double a, b, c;
  double t2() const { return a * a - b * b; }
  double inner() const { return std::sqrt(t2() + c * c) - c; }
  double outer() const { return std::sqrt(t2() + c * c) + c; }
};

struct InversorPoints {
  Point A, B, C, D, E, mBD, mCE, aux;
};

/// Exact inversor placement for input D = z, pivot A at 0.
inline InversorPoints place_inversor(const InversorParams& p, Point z, const Branch& br) {
  double rho = std::abs(z);
  if (rho == 0.0) throw PlacementError(PlacementErrorKind::Infeasible, "inversor input at the pivot");
  InversorPoints out;
  out.A = 0.0;
  out.D = z;
  out.E = p.t2() * z / (rho * rho);
  Point n = z / rho;
  Point m = (out.D + out.E) / 2.0;
  double w = std::abs(out.E - out.D) / 2.0;
  if (w > p.c * (1.0 + 1e-9))
    throw PlacementError(PlacementErrorKind::Infeasible, "inversor input outside the annulus");
  double s = std::sqrt(std::max(0.0, p.b * p.b - w * w));
  double h = std::sqrt(std::max(0.0, p.c * p.c - w * w));
  Point perp = Point(0.0, 1.0) * n;
  double sb = br.flag(0) ? -1.0 : 1.0;
  double sx = br.flag(1) ? -1.0 : 1.0;
  out.B = m + sb * s * perp;
  out.C = m - sb * s * perp;
  out.mBD = (out.B + out.D) / 2.0;
  out.mCE = (out.C + out.E) / 2.0;
  out.aux = m + sx * h * perp;
  return out;
}

/// Linkage of the inversor with the given vertex names (order: pivot, B, C,
/// input, output, mBD, mCE, cable aux). The pivot is pinned at 0.
inline Linkage inversor_linkage(const InversorParams& p, const std::array<VertexId, 8>& n,
                                std::vector<Truss>* trusses = nullptr) {
  Linkage l;
  l.add_edge(n[0], n[1], p.a).add_edge(n[0], n[2], p.a);
  l = add_rigidified_quad(l, {n[1], n[3], n[2], n[4]}, p.b, p.b, n[5], n[6], trusses);
  l = cable(l, n[3], n[4], 2.0 * p.c, n[7]);
  l.set_pin(n[0], 0.0);
  return l;
}

/// z -> t^2 z / |z|^2 with t^2 = a^2 - b^2 on the annulus sqrt(t^2+c^2) -+ c.
/// The rhombus BDCE is braced and a cable bounds |D - E| by 2c.
inline QFLinkage peaucellier(double a, double b, double c) {
  detail::check_positive({a, b, c}, "peaucellier");
  if (!(c < b && b < a)) throw Error("peaucellier: need c < b < a");
  InversorParams p{a, b, c};
  QFLinkage q;
  q.linkage = inversor_linkage(p, {"A", "B", "C", "D", "E", "mBD", "mCE", "X"}, &q.trusses);
  q.inputs = {"D"};
  q.outputs = {"E"};
  q.domain = Domain::annulus(0.0, p.inner(), p.outer());
  q.spec = {"peaucellier", {{"a", a}, {"b", b}, {"c", c}}, {}};
  q.branch_bits = 2;
  auto ix = detail::local_indices(q.linkage, {"B", "C", "D", "E", "mBD", "mCE", "X"});
  q.placer = [ix, p](std::span<Point> pos, std::span<const std::size_t> slot, const Branch& br) {
    detail::Frame f{pos, slot, ix};
    auto pts = place_inversor(p, f[2], br);
    f[0] = pts.B;
    f[1] = pts.C;
    f[3] = pts.E;
    f[4] = pts.mBD;
    f[5] = pts.mCE;
    f[6] = pts.aux;
  };
  return q;
}

// Squaring -------------------------------------------------------------------

/// z -> z^2 on |z| <= r through t^2 - t h((h(t+z) + h(t-z))/2) = z^2 with
/// h the inversor for t = 4r, c = 3r (annulus 2r..8r).
inline QFLinkage squaring(double r) {
  detail::check_positive({r}, "squaring");
  const double t = 4.0 * r;
  const Point half_t = t / 2.0;
  Assembly as({"squaring", {{"r", r}}, {}});
  as.add_input("z");
  as.add_pinned("t", t);

  // t + z = 2 * avg(t, z); |t - z| <= 5r.
  auto m1 = as.add(pantograph(PantographMode::Average, 2.5 * r), "sum_half", {{"A", "t"}, {"C", "z"}});
  auto m2 = as.add(pantograph(PantographMode::ScaleUp, 2.5 * r), "sum", {{"B", m1.at("B")}});
  // t - z is the reflection of z through t/2; |z - t/2| <= 3r.
  auto m3 = as.add(pantograph(PantographMode::Negate, 3.0 * r, 1.0, half_t), "diff", {{"A", "z"}});

  auto inv = peaucellier(std::sqrt(32.0) * r, 4.0 * r, 3.0 * r);
  auto h1 = as.add(inv, "inv_sum", {{"D", m2.at("C")}});
  auto h2 = as.add(inv, "inv_diff", {{"D", m3.at("C")}});
  // |h(t+z) - h(t-z)| <= 32r/15.
  auto m4 = as.add(pantograph(PantographMode::Average, 16.0 * r / 15.0), "mean",
                   {{"A", h1.at("E")}, {"C", h2.at("E")}});
  auto h3 = as.add(inv, "inv_mean", {{"D", m4.at("B")}});
  // h3 = t - z^2/t; reflect through t/2 to get z^2/t (|h3 - t/2| <= 9r/4).
  auto m5 = as.add(pantograph(PantographMode::Negate, 9.0 * r / 4.0, 1.0, half_t), "quot",
                   {{"A", h3.at("E")}});
  VertexId out = m5.at("C");
  // Multiply by t; the input is bounded by r/4.
  if (t > 1.0 + 1e-12) {
    out = as.add(pantograph(PantographMode::ScaleUp, r / 4.0, t - 1.0), "scale", {{"B", out}}).at("C");
  } else if (t < 1.0 - 1e-12) {
    double c = 1.0 / t - 1.0;
    out = as.add(pantograph(PantographMode::ScaleDown, (r / 4.0) / (1.0 + c), c), "scale", {{"C", out}})
              .at("B");
  }
  return std::move(as).finish({out}, Domain::polydisk({0.0}, r));
}

// Straight line ----------------------------------------------------------------

/// Circle arc along which the drive vertex D moves; `theta_from` gives the
/// `p` end of the traced segment.
struct LineDrive {
  VertexId drive;
  Point center;
  double radius = 0.0;
  double theta_from = 0.0;
  double theta_to = 0.0;
  Point at(double s) const {
    return center + std::polar(radius, theta_from + s * (theta_to - theta_from));
  }
};

namespace detail {

struct LineLocal {
  InversorParams inv;
  double d;       // radius of the drive circle through the pivot
  double height;  // traced line Im z = height
  double half;    // traced segment is [-half, half] + i*height
  double theta_lo, theta_hi;
};

inline LineLocal line_local(const InversorParams& p) {
  LineLocal g;
  g.inv = p;
  g.d = std::sqrt(p.t2() + p.c * p.c) / 2.0;  // inner < 2d < outer
  g.height = p.t2() / (2.0 * g.d);
  double far = p.t2() / p.inner();
  g.half = std::sqrt(far * far - g.height * g.height);
  // D = d i + d e^{i theta}; |D|^2 = 2 d^2 (1 + sin theta) >= inner^2.
  g.theta_lo = std::asin(p.inner() * p.inner() / (2.0 * g.d * g.d) - 1.0);
  g.theta_hi = std::numbers::pi - g.theta_lo;
  return g;
}

}  // namespace detail

/// Linkage whose vertex A traces exactly the segment [p, q]: an inversor with
/// pivot C and input D, where D is tied by a bar of length d to B pinned at
/// d*i, so D runs along a circle through the pivot and A along a line. The
/// local picture is then scaled, rotated and translated onto [p, q].
inline QFLinkage straight_line(Point p, Point q, InversorParams inv = {5.0, 4.0, 3.0}) {
  if (std::abs(q - p) <= kExactTolerance) throw Error("straight_line: endpoints must differ");
  auto g = detail::line_local(inv);
  const Point L0(-g.half, g.height), L1(g.half, g.height);
  // Local [L0, L1] maps onto [p, q] by z -> w k z + z0.
  const double k = std::abs(q - p) / std::abs(L1 - L0);
  const Point w = (q - p) / std::abs(q - p);
  const Point z0 = p - w * k * L0;

  std::vector<Truss> trusses;
  Linkage local = inversor_linkage(
      inv, {"C", "inv/B", "inv/C", "D", "A", "inv/mBD", "inv/mCE", "inv/X"}, &trusses);
  local.add_edge("B", "D", g.d).set_pin("B", Point(0.0, g.d));

  QFLinkage out;
  out.trusses = std::move(trusses);
  out.linkage = transform(rescale(local, k), EuclideanMotion{w, false, z0});
  out.inputs = {"A"};
  out.outputs = {};
  out.domain = Domain::segment(p, q);
  out.spec = {"straight_line",
              {{"p_re", p.real()}, {"p_im", p.imag()}, {"q_re", q.real()}, {"q_im", q.imag()},
               {"inv_a", inv.a}, {"inv_b", inv.b}, {"inv_c", inv.c}},
              {}};
  out.branch_bits = 2;
  auto ix = detail::local_indices(out.linkage,
                                  {"A", "B", "C", "D", "inv/B", "inv/C", "inv/mBD", "inv/mCE", "inv/X"});
  out.placer = [ix, g, k, w, z0](std::span<Point> pos, std::span<const std::size_t> slot, const Branch& br) {
    detail::Frame f{pos, slot, ix};
    auto fwd = [&](Point z) { return w * k * z + z0; };
    Point a = (f[0] - z0) / (w * k);
    Point d_local = g.inv.t2() * a / std::norm(a);
    auto pts = place_inversor(g.inv, d_local, br);
    f[1] = fwd(Point(0.0, g.d));
    f[2] = fwd(0.0);
    f[3] = fwd(pts.D);
    f[4] = fwd(pts.B);
    f[5] = fwd(pts.C);
    f[6] = fwd(pts.mBD);
    f[7] = fwd(pts.mCE);
    f[8] = fwd(pts.aux);
  };
  return out;
}

/// Drive arc of a straight-line gadget built by straight_line().
inline LineDrive straight_line_drive(const QFLinkage& line) {
  if (line.spec.kind != "straight_line") throw Error("straight_line_drive: not a straight-line gadget");
  Point p(line.spec.number("p_re"), line.spec.number("p_im"));
  Point q(line.spec.number("q_re"), line.spec.number("q_im"));
  InversorParams inv{line.spec.number("inv_a"), line.spec.number("inv_b"), line.spec.number("inv_c")};
  auto g = detail::line_local(inv);
  const Point L0(-g.half, g.height), L1(g.half, g.height);
  const double k = std::abs(q - p) / std::abs(L1 - L0);
  const Point w = (q - p) / std::abs(q - p);
  const Point z0 = p - w * k * L0;
  // Larger theta gives smaller Re(A) locally, i.e. the p end.
  double turn = std::arg(w);
  return {"D", w * k * Point(0.0, g.d) + z0, k * g.d, g.theta_hi + turn, g.theta_lo + turn};
}

// Conjugation ------------------------------------------------------------------

/// z -> conj(z) on |z| <= r: A slides on [a, b], B on [-b, -a], and the
/// braced rhombus A C B D of side c makes D the mirror image of C.
inline QFLinkage conjugation(double r, double a, double b, double c) {
  detail::check_positive({r, a, b, c}, "conjugation");
  if (!(b - r > c && c > a + r)) throw Error("conjugation: need b - r > c > a + r");
  Assembly as({"conjugation", {{"r", r}, {"a", a}, {"b", b}, {"c", c}}, {}});
  as.add_input("C");
  as.linkage() = add_rigidified_quad(as.linkage(), {"A", "C", "B", "D"}, c, c, "mAC", "mBD", &as.trusses());
  as.add_step({"A", "B", "C", "D", "mAC", "mBD"},
              [c](std::span<Point> pos, std::span<const std::size_t> slot, const Branch&) {
                auto P = [&](std::size_t k) -> Point& { return pos[slot[k]]; };
                Point z = P(2);
                double h2 = c * c - z.imag() * z.imag();
                if (h2 < 0.0) throw PlacementError(PlacementErrorKind::Degenerate, "rhombus cannot close");
                double root = std::sqrt(h2);
                P(0) = z.real() + root;
                P(1) = z.real() - root;
                P(3) = std::conj(z);
                P(4) = (P(0) + z) / 2.0;
                P(5) = (P(1) + P(3)) / 2.0;
              });
  as.add(straight_line(a, b), "right", {{"A", "A"}});
  as.add(straight_line(-b, -a), "left", {{"A", "B"}});
  return std::move(as).finish({"D"}, Domain::polydisk({0.0}, r));
}

/// Default sizing a = r, c = 3r, b = 5r.
inline QFLinkage conjugation(double r) { return conjugation(r, r, 5.0 * r, 3.0 * r); }

}  // namespace semiconf::gadgets
