#pragma once

// Planar linkage data model: vertices, bars, pins, realizations and the
// graph surgeries (union, splice, pinning, motions, anchor frames) that the
// gadget library and the compiler are built from.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace semiconf {

using Point = std::complex<double>;

/// Tolerance for exactly constructed realizations (plane units).
inline constexpr double kExactTolerance = 1e-9;
/// Tolerance for numerically solved realizations (plane units).
inline constexpr double kSolveTolerance = 1e-6;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct VertexId {
  std::string name;

  VertexId() = default;
  VertexId(std::string n) : name(std::move(n)) {}
  VertexId(const char* n) : name(n) {}

  const std::string& str() const { return name; }
  bool empty() const { return name.empty(); }

  auto operator<=>(const VertexId&) const = default;
  bool operator==(const VertexId&) const = default;
};

/// `prefix/name`; an empty prefix leaves the name unchanged.
inline VertexId namespaced(const std::string& prefix, const VertexId& v) {
  if (prefix.empty()) return v;
  return VertexId(prefix + "/" + v.name);
}

enum class EdgeKind { Bar, Brace, Cable };

inline const char* to_string(EdgeKind k) {
  switch (k) {
    case EdgeKind::Bar: return "bar";
    case EdgeKind::Brace: return "brace";
    case EdgeKind::Cable: return "cable";
  }
  return "bar";
}

inline EdgeKind edge_kind_from_string(const std::string& s) {
  if (s == "bar") return EdgeKind::Bar;
  if (s == "brace") return EdgeKind::Brace;
  if (s == "cable") return EdgeKind::Cable;
  throw Error("unknown edge kind '" + s + "'");
}

/// Undirected bar; stored with u <= v.
struct Edge {
  VertexId u;
  VertexId v;
  double length = 0.0;
  EdgeKind kind = EdgeKind::Bar;

  bool joins(const VertexId& a, const VertexId& b) const {
    return (u == a && v == b) || (u == b && v == a);
  }
  bool operator==(const Edge&) const = default;
};

/// A planar linkage (L, l, V, mu): vertices, positive-length edges and a
/// partial pinning map. Vertices and edges are kept sorted by name so that
/// two linkages built by different routes compare and serialize identically.
///
/// The mutating members exist for construction; once a Linkage is handed to
/// other code it is treated as an immutable value and every surgery below
/// returns a new one.
class Linkage {
 public:
  const std::vector<VertexId>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::map<VertexId, Point>& pins() const { return pins_; }

  std::size_t vertex_count() const { return vertices_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  bool empty() const { return vertices_.empty(); }

  std::optional<std::size_t> index_of(const VertexId& v) const {
    auto it = std::lower_bound(vertices_.begin(), vertices_.end(), v);
    if (it == vertices_.end() || *it != v) return std::nullopt;
    return static_cast<std::size_t>(it - vertices_.begin());
  }

  std::size_t require_index(const VertexId& v) const {
    auto i = index_of(v);
    if (!i) throw Error("unknown vertex '" + v.name + "'");
    return *i;
  }

  bool has_vertex(const VertexId& v) const { return index_of(v).has_value(); }

  const Edge* find_edge(const VertexId& a, const VertexId& b) const {
    const auto& [lo, hi] = std::minmax(a, b);
    auto it = std::lower_bound(edges_.begin(), edges_.end(), std::pair(lo, hi), EdgeKeyLess{});
    if (it == edges_.end() || it->u != lo || it->v != hi) return nullptr;
    return &*it;
  }

  bool has_edge(const VertexId& a, const VertexId& b) const { return find_edge(a, b) != nullptr; }

  std::optional<Point> pin_of(const VertexId& v) const {
    auto it = pins_.find(v);
    if (it == pins_.end()) return std::nullopt;
    return it->second;
  }
  bool is_pinned(const VertexId& v) const { return pins_.count(v) != 0; }

  double total_length() const {
    double d = 0.0;
    for (const auto& e : edges_) d += e.length;
    return d;
  }

  Linkage& add_vertex(const VertexId& v) {
    if (v.empty()) throw Error("vertex names must be non-empty");
    auto it = std::lower_bound(vertices_.begin(), vertices_.end(), v);
    if (it == vertices_.end() || *it != v) vertices_.insert(it, v);
    return *this;
  }

  /// Adds a bar, creating missing endpoints.
  Linkage& add_edge(const VertexId& a, const VertexId& b, double length,
                    EdgeKind kind = EdgeKind::Bar) {
    add_vertex(a);
    add_vertex(b);
    return add_edge_unchecked(a, b, length, kind);
  }

  /// Adds a bar without touching the vertex set. Used by readers that must
  /// be able to represent (and then report) dangling references.
  Linkage& add_edge_unchecked(const VertexId& a, const VertexId& b, double length,
                              EdgeKind kind = EdgeKind::Bar) {
    const auto& [lo, hi] = std::minmax(a, b);
    Edge e{lo, hi, length, kind};
    auto it = std::upper_bound(edges_.begin(), edges_.end(), std::pair(lo, hi), EdgeKeyLess{});
    edges_.insert(it, std::move(e));
    return *this;
  }

  Linkage& remove_edge(const VertexId& a, const VertexId& b) {
    const auto& [lo, hi] = std::minmax(a, b);
    std::erase_if(edges_, [&](const Edge& e) { return e.u == lo && e.v == hi; });
    return *this;
  }

  Linkage& set_pin(const VertexId& v, Point z) {
    pins_[v] = z;
    return *this;
  }

  Linkage& clear_pin(const VertexId& v) {
    pins_.erase(v);
    return *this;
  }

  bool operator==(const Linkage&) const = default;

 private:
  struct EdgeKeyLess {
    using Key = std::pair<VertexId, VertexId>;
    bool operator()(const Edge& e, const Key& k) const {
      return std::tie(e.u, e.v) < std::tie(k.first, k.second);
    }
    bool operator()(const Key& k, const Edge& e) const {
      return std::tie(k.first, k.second) < std::tie(e.u, e.v);
    }
  };

  std::vector<VertexId> vertices_;
  std::vector<Edge> edges_;
  std::map<VertexId, Point> pins_;
};

/// Ordered list of distinguished vertices W = (w1, ..., wk).
struct MarkerSet {
  std::vector<VertexId> vertices;

  std::size_t size() const { return vertices.size(); }
  bool operator==(const MarkerSet&) const = default;
};

/// Checks a marker set against a linkage; throws on unknown or repeated names.
inline void require_markers(const Linkage& l, const MarkerSet& w) {
  std::vector<VertexId> seen;
  for (const auto& v : w.vertices) {
    if (!l.has_vertex(v)) throw Error("marker '" + v.name + "' is not a vertex");
    if (std::find(seen.begin(), seen.end(), v) != seen.end())
      throw Error("marker '" + v.name + "' repeated");
    seen.push_back(v);
  }
}

/// Vertex positions aligned with a linkage's (sorted) vertex list.
class Realization {
 public:
  Realization() = default;
  Realization(std::vector<VertexId> vertices, std::vector<Point> positions)
      : vertices_(std::move(vertices)), positions_(std::move(positions)) {
    if (vertices_.size() != positions_.size())
      throw Error("realization: vertex and position counts differ");
  }

  static Realization zeros(const Linkage& l) {
    return Realization(l.vertices(), std::vector<Point>(l.vertex_count()));
  }

  const std::vector<VertexId>& vertices() const { return vertices_; }
  const std::vector<Point>& positions() const { return positions_; }
  std::vector<Point>& positions() { return positions_; }
  std::size_t size() const { return positions_.size(); }

  std::optional<std::size_t> index_of(const VertexId& v) const {
    auto it = std::lower_bound(vertices_.begin(), vertices_.end(), v);
    if (it == vertices_.end() || *it != v) return std::nullopt;
    return static_cast<std::size_t>(it - vertices_.begin());
  }

  Point at(const VertexId& v) const {
    auto i = index_of(v);
    if (!i) throw Error("realization has no vertex '" + v.name + "'");
    return positions_[*i];
  }

  void set(const VertexId& v, Point z) {
    auto i = index_of(v);
    if (!i) throw Error("realization has no vertex '" + v.name + "'");
    positions_[*i] = z;
  }

  std::vector<Point> restrict_to(const MarkerSet& w) const {
    std::vector<Point> out;
    out.reserve(w.size());
    for (const auto& v : w.vertices) out.push_back(at(v));
    return out;
  }

  bool operator==(const Realization&) const = default;

 private:
  std::vector<VertexId> vertices_;
  std::vector<Point> positions_;
};

/// Largest | |phi(u) - phi(v)| - l(uv) | over all edges (plane units).
inline double max_edge_residual(const Linkage& l, const Realization& r) {
  double worst = 0.0;
  for (const auto& e : l.edges()) {
    double d = std::abs(r.at(e.u) - r.at(e.v));
    worst = std::max(worst, std::abs(d - e.length));
  }
  return worst;
}

inline double max_pin_residual(const Linkage& l, const Realization& r) {
  double worst = 0.0;
  for (const auto& [v, z] : l.pins()) worst = std::max(worst, std::abs(r.at(v) - z));
  return worst;
}

inline bool is_realization(const Linkage& l, const Realization& r, double tol) {
  if (r.vertices() != l.vertices()) return false;
  return max_edge_residual(l, r) <= tol && max_pin_residual(l, r) <= tol;
}

// ---------------------------------------------------------------------------
// Euclidean motions z -> w z + z0 or w conj(z) + z0 with |w| = 1.

struct EuclideanMotion {
  Point rotation{1.0, 0.0};
  bool reflect = false;
  Point shift{0.0, 0.0};

  static EuclideanMotion identity() { return {}; }
  static EuclideanMotion translation(Point z0) { return {Point(1.0, 0.0), false, z0}; }

  static EuclideanMotion rotation_about(Point center, double angle) {
    Point w = std::polar(1.0, angle);
    return {w, false, center - w * center};
  }

  /// Reflection across the line through p and q (p != q).
  static EuclideanMotion reflection_across(Point p, Point q) {
    Point dir = (q - p) / std::abs(q - p);
    Point w = dir * dir;
    return {w, true, p - w * std::conj(p)};
  }

  Point operator()(Point z) const { return rotation * (reflect ? std::conj(z) : z) + shift; }

  /// `next` applied after `*this`.
  EuclideanMotion then(const EuclideanMotion& next) const {
    EuclideanMotion out;
    out.reflect = reflect != next.reflect;
    out.rotation = next.rotation * (next.reflect ? std::conj(rotation) : rotation);
    out.shift = next(shift);
    return out;
  }

  EuclideanMotion inverse() const {
    if (!reflect) return {std::conj(rotation), false, -std::conj(rotation) * shift};
    return {rotation, true, -rotation * std::conj(shift)};
  }

  bool is_valid(double tol = kExactTolerance) const {
    return std::abs(std::abs(rotation) - 1.0) <= tol;
  }
};

inline Realization apply(const EuclideanMotion& g, const Realization& r) {
  auto pos = r.positions();
  for (auto& z : pos) z = g(z);
  return Realization(r.vertices(), std::move(pos));
}

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind {
  NonPositiveLength,
  ZeroLengthEdge,
  SelfEdge,
  DuplicateEdge,
  DanglingVertex,
  DanglingPin,
  PinnedPairInconsistent,
  NonFinite,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  bool has(ViolationKind k) const {
    return std::any_of(violations.begin(), violations.end(),
                       [k](const Violation& v) { return v.kind == k; });
  }
};

inline ValidationReport validate(const Linkage& l, double tol = kExactTolerance) {
  ValidationReport rep;
  auto add = [&](ViolationKind k, std::string msg) { rep.violations.push_back({k, std::move(msg)}); };
  const auto& edges = l.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    std::string tag = e.u.name + "-" + e.v.name;
    if (!std::isfinite(e.length)) add(ViolationKind::NonFinite, "non-finite edge length " + tag);
    if (e.length == 0.0) add(ViolationKind::ZeroLengthEdge, "zero-length edge " + tag);
    else if (e.length < 0.0) add(ViolationKind::NonPositiveLength, "negative edge length " + tag);
    if (e.u == e.v) add(ViolationKind::SelfEdge, "self edge at " + e.u.name);
    if (i > 0 && edges[i - 1].u == e.u && edges[i - 1].v == e.v)
      add(ViolationKind::DuplicateEdge, "duplicate edge " + tag);
    for (const auto* end : {&e.u, &e.v})
      if (!l.has_vertex(*end)) add(ViolationKind::DanglingVertex, "dangling vertex " + end->name);
    auto pu = l.pin_of(e.u), pv = l.pin_of(e.v);
    if (pu && pv && std::abs(std::abs(*pu - *pv) - e.length) > tol)
      add(ViolationKind::PinnedPairInconsistent, "pinned pair inconsistent " + tag);
  }
  for (const auto& [v, z] : l.pins()) {
    if (!l.has_vertex(v)) add(ViolationKind::DanglingPin, "pin on unknown vertex " + v.name);
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
      add(ViolationKind::NonFinite, "non-finite pin " + v.name);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Connectivity

/// Component label per vertex (indices follow l.vertices()).
inline std::vector<std::size_t> component_labels(const Linkage& l) {
  std::vector<std::size_t> parent(l.vertex_count());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& e : l.edges()) {
    auto a = l.index_of(e.u), b = l.index_of(e.v);
    if (a && b) parent[find(*a)] = find(*b);
  }
  std::vector<std::size_t> label(l.vertex_count());
  for (std::size_t i = 0; i < label.size(); ++i) label[i] = find(i);
  return label;
}

inline bool is_connected(const Linkage& l) {
  auto label = component_labels(l);
  return std::all_of(label.begin(), label.end(), [&](std::size_t x) { return x == label.front(); });
}

// ---------------------------------------------------------------------------
// Surgeries. All take linkages by const reference and return new values.

inline Linkage with_prefix(const Linkage& l, const std::string& prefix) {
  Linkage out;
  for (const auto& v : l.vertices()) out.add_vertex(namespaced(prefix, v));
  for (const auto& e : l.edges())
    out.add_edge_unchecked(namespaced(prefix, e.u), namespaced(prefix, e.v), e.length, e.kind);
  for (const auto& [v, z] : l.pins()) out.set_pin(namespaced(prefix, v), z);
  return out;
}

/// Renames every vertex; `f` must be injective on l's vertices.
template <class F>
Linkage rename_vertices(const Linkage& l, F&& f) {
  Linkage out;
  for (const auto& v : l.vertices()) out.add_vertex(f(v));
  if (out.vertex_count() != l.vertex_count()) throw Error("rename_vertices: renaming is not injective");
  for (const auto& e : l.edges()) out.add_edge_unchecked(f(e.u), f(e.v), e.length, e.kind);
  for (const auto& [v, z] : l.pins()) out.set_pin(f(v), z);
  return out;
}

/// Tagged union; vertex names become `prefix1/name` and `prefix2/name`.
inline Linkage disjoint_union(const Linkage& l1, const Linkage& l2,
                              const std::string& prefix1 = "l1",
                              const std::string& prefix2 = "l2") {
  if (prefix1 == prefix2) throw Error("disjoint_union needs distinct prefixes");
  Linkage out = with_prefix(l1, prefix1);
  for (const auto& v : l2.vertices()) out.add_vertex(namespaced(prefix2, v));
  for (const auto& e : l2.edges())
    out.add_edge_unchecked(namespaced(prefix2, e.u), namespaced(prefix2, e.v), e.length, e.kind);
  for (const auto& [v, z] : l2.pins()) out.set_pin(namespaced(prefix2, v), z);
  return out;
}

using Identification = std::vector<std::pair<VertexId, VertexId>>;  // (outer, inner)

/// Glues `inner` into `outer`. Each (outer vertex, inner vertex) pair becomes
/// one vertex carrying the outer name; every other inner vertex is renamed
/// to `prefix/name`. Identified pins must agree.
inline Linkage splice(const Linkage& outer, const Linkage& inner, const Identification& identify,
                      const std::string& prefix = "inner") {
  std::map<VertexId, VertexId> rename;
  std::vector<VertexId> outer_seen;
  for (const auto& [o, i] : identify) {
    if (!outer.has_vertex(o)) throw Error("splice: '" + o.name + "' is not an outer vertex");
    if (!inner.has_vertex(i)) throw Error("splice: '" + i.name + "' is not an inner vertex");
    if (rename.count(i)) throw Error("splice: inner vertex '" + i.name + "' identified twice");
    if (std::find(outer_seen.begin(), outer_seen.end(), o) != outer_seen.end())
      throw Error("splice: outer vertex '" + o.name + "' identified twice");
    outer_seen.push_back(o);
    rename[i] = o;
  }
  auto mapped = [&](const VertexId& v) {
    auto it = rename.find(v);
    return it != rename.end() ? it->second : namespaced(prefix, v);
  };

  Linkage out = outer;
  for (const auto& v : inner.vertices()) {
    VertexId m = mapped(v);
    if (!rename.count(v) && out.has_vertex(m))
      throw Error("splice: name clash on '" + m.name + "'");
    out.add_vertex(m);
  }
  for (const auto& [v, z] : inner.pins()) {
    VertexId m = mapped(v);
    if (auto existing = out.pin_of(m)) {
      if (std::abs(*existing - z) > kExactTolerance) throw Error("pin conflict at '" + m.name + "'");
    } else {
      out.set_pin(m, z);
    }
  }
  for (const auto& e : inner.edges()) {
    VertexId a = mapped(e.u), b = mapped(e.v);
    if (const Edge* old = out.find_edge(a, b); old && std::abs(old->length - e.length) <= kExactTolerance)
      continue;
    out.add_edge_unchecked(a, b, e.length, e.kind);
  }
  return out;
}

inline Linkage pin(const Linkage& l, const VertexId& v, Point z) {
  if (!l.has_vertex(v)) throw Error("pin: unknown vertex '" + v.name + "'");
  if (auto old = l.pin_of(v); old && std::abs(*old - z) > kExactTolerance)
    throw Error("pin: '" + v.name + "' is already pinned elsewhere");
  Linkage out = l;
  out.set_pin(v, z);
  return out;
}

inline Linkage unpin(const Linkage& l, const VertexId& v) {
  if (!l.has_vertex(v)) throw Error("unpin: unknown vertex '" + v.name + "'");
  Linkage out = l;
  out.clear_pin(v);
  return out;
}

/// Moves every pin by g. Edge lengths are unchanged.
inline Linkage transform(const Linkage& l, const EuclideanMotion& g) {
  if (!g.is_valid()) throw Error("transform: rotation part must have modulus 1");
  Linkage out = l;
  for (const auto& [v, z] : l.pins()) out.set_pin(v, g(z));
  return out;
}

/// Multiplies every edge length and every pin coordinate by k > 0.
inline Linkage rescale(const Linkage& l, double k) {
  if (!(k > 0.0)) throw Error("rescale: factor must be positive");
  Linkage out;
  for (const auto& v : l.vertices()) out.add_vertex(v);
  for (const auto& e : l.edges()) out.add_edge_unchecked(e.u, e.v, e.length * k, e.kind);
  for (const auto& [v, z] : l.pins()) out.set_pin(v, z * k);
  return out;
}

inline Linkage strip_braces(const Linkage& l) {
  Linkage out;
  for (const auto& v : l.vertices()) out.add_vertex(v);
  for (const auto& e : l.edges())
    if (e.kind != EdgeKind::Brace) out.add_edge_unchecked(e.u, e.v, e.length, e.kind);
  for (const auto& [v, z] : l.pins()) out.set_pin(v, z);
  return out;
}

// ---------------------------------------------------------------------------
// Anchor frame: pins at 0, 1, i, -1-i, any three of which are noncollinear.

inline const std::vector<Point>& anchor_points() {
  static const std::vector<Point> pts{{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}, {-1.0, -1.0}};
  return pts;
}

inline const std::vector<VertexId>& anchor_names() {
  static const std::vector<VertexId> names{"anchor/0", "anchor/1", "anchor/i", "anchor/-1-i"};
  return names;
}

/// First pinned vertex (by name) sitting at anchor k, if any.
inline std::optional<VertexId> find_anchor(const Linkage& l, std::size_t k) {
  for (const auto& [v, z] : l.pins())
    if (std::abs(z - anchor_points().at(k)) <= kExactTolerance) return v;
  return std::nullopt;
}

struct AnchorFrameReport {
  std::vector<VertexId> added_vertices;
  std::size_t added_edges = 0;
  std::vector<std::pair<VertexId, VertexId>> skipped_coincident;
};

inline Linkage add_anchor_frame(const Linkage& l, AnchorFrameReport* report = nullptr) {
  AnchorFrameReport rep;
  Linkage out = l;
  for (std::size_t k = 0; k < anchor_points().size(); ++k) {
    if (find_anchor(out, k)) continue;
    VertexId name = anchor_names()[k];
    if (out.has_vertex(name)) throw Error("add_anchor_frame: '" + name.name + "' exists but is not an anchor");
    out.add_vertex(name).set_pin(name, anchor_points()[k]);
    rep.added_vertices.push_back(name);
  }
  std::vector<std::pair<VertexId, Point>> pinned(out.pins().begin(), out.pins().end());
  for (std::size_t i = 0; i < pinned.size(); ++i) {
    for (std::size_t j = i + 1; j < pinned.size(); ++j) {
      const auto& [vi, zi] = pinned[i];
      const auto& [vj, zj] = pinned[j];
      double len = std::abs(zi - zj);
      if (len <= kExactTolerance) {
        rep.skipped_coincident.emplace_back(vi, vj);
        continue;
      }
      if (out.has_edge(vi, vj)) continue;
      out.add_edge(vi, vj, len);
      ++rep.added_edges;
    }
  }
  if (report) *report = std::move(rep);
  return out;
}

inline bool has_anchor_frame(const Linkage& l) {
  std::vector<VertexId> anchors;
  for (std::size_t k = 0; k < anchor_points().size(); ++k) {
    auto a = find_anchor(l, k);
    if (!a) return false;
    anchors.push_back(*a);
  }
  for (std::size_t i = 0; i < anchors.size(); ++i)
    for (std::size_t j = i + 1; j < anchors.size(); ++j)
      if (!l.has_edge(anchors[i], anchors[j])) return false;
  return true;
}

/// Keeps only the first `keep` anchors (order 0, 1, i) pinned; every other
/// pinned vertex is released. Edges are untouched.
inline Linkage relax_anchors(const Linkage& l, int keep) {
  if (keep < 0 || keep > 3) throw Error("relax_anchors: keep must be 0..3");
  if (!has_anchor_frame(l)) throw Error("relax_anchors: linkage carries no anchor frame");
  std::vector<VertexId> kept;
  for (int k = 0; k < keep; ++k) kept.push_back(*find_anchor(l, static_cast<std::size_t>(k)));
  Linkage out = l;
  for (const auto& [v, z] : l.pins())
    if (std::find(kept.begin(), kept.end(), v) == kept.end()) out.clear_pin(v);
  return out;
}

}  // namespace semiconf
