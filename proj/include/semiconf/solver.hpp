#pragma once

// Generic realization finder: Levenberg-Marquardt on the squared-distance
// residuals |p_u - p_v|^2 - l^2, random-restart sampling of the
// configuration space and natural-parameter continuation along a drive path.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "semiconf/core.hpp"
#include "semiconf/random.hpp"

namespace semiconf::solver {

enum class Status { Converged, Infeasible, MaxIterations };

inline const char* to_string(Status s) {
  switch (s) {
    case Status::Converged: return "converged";
    case Status::Infeasible: return "infeasible";
    case Status::MaxIterations: return "max-iterations";
  }
  return "max-iterations";
}

enum class GuessPolicy { Random, Seeded, WarmStart };

struct SolveOptions {
  int max_iterations = 200;
  double initial_damping = 1e-3;  // relative to the largest diagonal entry
  /// Converged once every squared-length residual is at most
  /// max(tolerance, 64 eps l_max^2); the second term is the round-off floor
  /// of long edges. A looser, length-scaled test accepts shallow local
  /// minima near singular configurations (folded pantographs) as solutions.
  double tolerance = 1e-12;
  /// Extra iterations after convergence while the residual keeps shrinking;
  /// degenerate triangles (interior joints) converge only linearly.
  int polish_iterations = 40;
  /// Systems with at most this many unknowns use a dense factorization.
  std::size_t dense_limit = 64;
  /// Radius of the random-restart disk; 0 means the sum of edge lengths.
  double random_radius = 0.0;
};

struct SolveProblem {
  Linkage linkage;
  std::map<VertexId, Point> fixed;  // in addition to the linkage's pins
  GuessPolicy policy = GuessPolicy::Random;
  std::optional<Realization> initial;
  double noise = 0.0;  // Seeded: radius of the perturbation disk
};

struct SolveResult {
  Status status = Status::MaxIterations;
  Realization realization;
  double residual = 0.0;       // max |squared-length residual|
  double edge_residual = 0.0;  // max | |p_u - p_v| - l |
  int iterations = 0;
};

/// Residual system precompiled once so restarts share the setup cost.
class System {
 public:
  System(const Linkage& l, const std::map<VertexId, Point>& fixed, std::size_t dense_limit = 64)
      : linkage_(l) {
    dense_limit_ = dense_limit;
    const std::size_t n = l.vertex_count();
    fixed_.assign(n, false);
    base_.assign(n, Point(0.0));
    auto fix = [&](const VertexId& v, Point z) {
      std::size_t i = l.require_index(v);
      if (fixed_[i] && std::abs(base_[i] - z) > kExactTolerance) inconsistent_ = true;
      fixed_[i] = true;
      base_[i] = z;
    };
    for (const auto& [v, z] : l.pins()) fix(v, z);
    for (const auto& [v, z] : fixed) fix(v, z);
    col_.assign(n, -1);
    for (std::size_t i = 0; i < n; ++i)
      if (!fixed_[i]) {
        col_[i] = static_cast<int>(free_.size());
        free_.push_back(i);
      }
    double lmax = 0.0;
    for (const auto& e : l.edges()) {
      std::size_t u = l.require_index(e.u), v = l.require_index(e.v);
      edges_.push_back({u, v, e.length});
      lmax = std::max(lmax, e.length);
      if (fixed_[u] && fixed_[v] && std::abs(std::abs(base_[u] - base_[v]) - e.length) > kExactTolerance)
        inconsistent_ = true;
    }
    scale2_ = std::max(1.0, lmax * lmax);
    unknowns_ = 2 * free_.size();
    if (unknowns_ > 0) build_pattern();
    for (const auto& [v, z] : l.pins()) pin_centroid_ += z;
    for (const auto& [v, z] : fixed) pin_centroid_ += z;
    std::size_t count = l.pins().size() + fixed.size();
    if (count > 0) pin_centroid_ /= static_cast<double>(count);
  }

  const Linkage& linkage() const { return linkage_; }
  bool inconsistent() const { return inconsistent_; }
  std::size_t unknowns() const { return unknowns_; }
  bool is_fixed(std::size_t i) const { return fixed_[i]; }
  Point fixed_position(std::size_t i) const { return base_[i]; }
  Point pin_centroid() const { return pin_centroid_; }

  /// Initial positions for a restart.
  std::vector<Point> guess(const SolveProblem& p, Rng& rng, const SolveOptions& opt) const {
    std::vector<Point> pos(base_);
    const bool have_initial = p.initial.has_value() && p.policy != GuessPolicy::Random;
    if (have_initial && p.initial->vertices() != linkage_.vertices())
      throw Error("solve: initial realization does not match the linkage");
    double radius = opt.random_radius > 0.0 ? opt.random_radius : std::max(linkage_.total_length(), 1.0);
    for (std::size_t i : free_) {
      if (!have_initial) pos[i] = uniform_in_disk(rng, pin_centroid_, radius);
      else pos[i] = p.initial->positions()[i];
      if (have_initial && p.policy == GuessPolicy::Seeded && p.noise > 0.0)
        pos[i] = uniform_in_disk(rng, pos[i], p.noise);
    }
    return pos;
  }

  SolveResult run(std::vector<Point> pos, const SolveOptions& opt) const {
    SolveResult res;
    if (inconsistent_) {
      res.status = Status::Infeasible;
      res.realization = Realization(linkage_.vertices(), std::move(pos));
      res.residual = max_residual(res.realization.positions());
      res.edge_residual = max_edge_residual(linkage_, res.realization);
      return res;
    }
    const double tol = std::max(opt.tolerance, 64.0 * std::numeric_limits<double>::epsilon() * scale2_);
    auto out = lm(pos, opt, tol, opt.max_iterations, opt.polish_iterations);
    const double rmax = out.rmax;

    res.iterations = out.iterations;
    res.residual = max_residual(pos);
    res.realization = Realization(linkage_.vertices(), std::move(pos));
    res.edge_residual = max_edge_residual(linkage_, res.realization);
    if (out.converged || rmax <= tol) {
      res.status = res.edge_residual < kSolveTolerance ? Status::Converged : Status::MaxIterations;
    } else if (res.edge_residual >= kSolveTolerance && (out.stalled || gradient_small(res.realization.positions()))) {
      // Stuck at a visibly nonzero residual: no realization near this start.
      res.status = Status::Infeasible;
    } else {
      res.status = Status::MaxIterations;
    }
    return res;
  }

 private:
  // Per-solve scratch so one System can serve parallel restarts.
  struct Workspace {
    Eigen::MatrixXd dense;
    Eigen::SparseMatrix<double> sparse;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    bool analyzed = false;
  };

  void init(Workspace& ws) const {
    const auto n = static_cast<Eigen::Index>(unknowns_);
    if (dense_) ws.dense.resize(n, n);
    else ws.sparse = sparse_jtj_;
  }

  struct LmOutcome {
    int iterations = 0;
    double rmax = 0.0;
    bool converged = false;
    bool stalled = false;
  };

  LmOutcome lm(std::vector<Point>& pos, const SolveOptions& opt, double tol,
               int max_iterations, int polish_iterations) const {
    LmOutcome o;
    std::vector<double> r(edges_.size());
    std::vector<ExtPoint> ext = extend(pos);
    double cost = residuals(ext, r);
    o.rmax = max_abs(r);
    o.converged = o.rmax <= tol;
    int polish = 0;
    double mu = -1.0;
    double last_accepted_cost = cost;

    Eigen::VectorXd g(static_cast<Eigen::Index>(unknowns_)), delta;
    std::vector<ExtPoint> trial(ext);
    std::vector<double> rt(edges_.size());
    Workspace ws;
    init(ws);

    while (unknowns_ > 0 && o.iterations < max_iterations) {
      if (o.converged && (polish >= polish_iterations || o.rmax == 0.0)) break;
      ++o.iterations;
      assemble(pos, r, g, ws);
      double dmax = max_diag(ws);
      if (dmax == 0.0) break;
      if (mu < 0.0) mu = opt.initial_damping * dmax;
      // A high floor stalls progress along nearly singular directions
      // (collinear telescopes, midpoint joints).
      const double mu_floor = 1e-20 * dmax;
      bool accepted = false;
      for (int attempt = 0; attempt < 30 && !accepted; ++attempt) {
        if (!factor_solve(ws, mu, g, delta)) {
          mu *= 10.0;
          continue;
        }
        trial = ext;
        for (std::size_t k = 0; k < free_.size(); ++k)
          trial[free_[k]] += ExtPoint(delta[2 * k], delta[2 * k + 1]);
        double tc = residuals(trial, rt);
        if (std::isfinite(tc) && tc < cost) {
          ext.swap(trial);
          round_to(ext, pos);
          r.swap(rt);
          cost = tc;
          mu = std::max(mu / 10.0, mu_floor);
          accepted = true;
        } else {
          mu *= 10.0;
        }
      }
      o.rmax = max_abs(r);
      if (!accepted) {
        o.stalled = true;
        break;
      }
      if (o.rmax <= tol) o.converged = true;
      if (o.converged) {
        ++polish;
        // Stop polishing once progress has flattened out.
        if (cost > 0.99 * last_accepted_cost && polish > 8) break;
      }
      last_accepted_cost = cost;
    }
    return o;
  }

  struct EdgeTerm {
    std::size_t u, v;
    double len;
  };

  static double max_abs(const std::vector<double>& r) {
    double m = 0.0;
    for (double x : r) m = std::max(m, std::abs(x));
    return m;
  }

  // Positions extended to long double inside the iteration: at folded
  // configurations (collapsed rhombi) the residual is quadratic in the
  // displacement, so the round-off of double positions leaves a slack of
  // about sqrt(eps) along the fold. Rounding the result afterwards moves
  // it by only eps.
  using ExtPoint = std::complex<long double>;

  static std::vector<ExtPoint> extend(const std::vector<Point>& pos) {
    return {pos.begin(), pos.end()};
  }

  static void round_to(const std::vector<ExtPoint>& ext, std::vector<Point>& pos) {
    for (std::size_t i = 0; i < ext.size(); ++i)
      pos[i] = Point(static_cast<double>(ext[i].real()), static_cast<double>(ext[i].imag()));
  }

  template <class P>
  double residuals(const std::vector<P>& pos, std::vector<double>& r) const {
    double c = 0.0;
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      const auto& e = edges_[k];
      const long double dx = static_cast<long double>(pos[e.u].real()) - pos[e.v].real();
      const long double dy = static_cast<long double>(pos[e.u].imag()) - pos[e.v].imag();
      const long double len = e.len;
      r[k] = static_cast<double>(dx * dx + dy * dy - len * len);
      c += r[k] * r[k];
    }
    return 0.5 * c;
  }

  double max_residual(const std::vector<Point>& pos) const {
    std::vector<double> r(edges_.size());
    residuals(pos, r);
    return max_abs(r);
  }

  bool gradient_small(const std::vector<Point>& pos) const {
    std::vector<double> r(edges_.size());
    residuals(pos, r);
    Eigen::VectorXd g(static_cast<Eigen::Index>(unknowns_));
    Workspace ws;
    init(ws);
    assemble(pos, r, g, ws);
    return g.cwiseAbs().maxCoeff() <= 1e-6 * scale2_ * std::sqrt(scale2_);
  }

  // Sparsity of J^T J: 2x2 blocks on the diagonal and for every free-free edge.
  void build_pattern() {
    const auto n = static_cast<Eigen::Index>(unknowns_);
    dense_ = unknowns_ <= dense_limit_;
    std::vector<Eigen::Triplet<double>> trips;
    auto block = [&](int a, int b) {
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) trips.emplace_back(2 * a + i, 2 * b + j, 0.0);
    };
    for (std::size_t k = 0; k < free_.size(); ++k) block(static_cast<int>(k), static_cast<int>(k));
    for (const auto& e : edges_) {
      int a = col_[e.u], b = col_[e.v];
      if (a >= 0 && b >= 0) {
        block(a, b);
        block(b, a);
      }
    }
    if (dense_) return;
    sparse_jtj_.resize(n, n);
    sparse_jtj_.setFromTriplets(trips.begin(), trips.end());
    sparse_jtj_.makeCompressed();
    auto slot = [&](int row, int colx) {
      auto start = sparse_jtj_.outerIndexPtr()[colx], end = sparse_jtj_.outerIndexPtr()[colx + 1];
      const int* inner = sparse_jtj_.innerIndexPtr();
      auto it = std::lower_bound(inner + start, inner + end, row);
      return static_cast<int>(it - inner);
    };
    diag_slots_.resize(unknowns_);
    for (std::size_t i = 0; i < unknowns_; ++i) diag_slots_[i] = slot(static_cast<int>(i), static_cast<int>(i));
    for (const auto& e : edges_) {
      std::array<int, 16> s{};
      int a = col_[e.u], b = col_[e.v];
      int idx = 0;
      for (auto [p, q] : {std::pair{a, a}, {b, b}, {a, b}, {b, a}}) {
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) s[idx++] = (p >= 0 && q >= 0) ? slot(2 * p + i, 2 * q + j) : -1;
      }
      edge_slots_.push_back(s);
    }
  }

  void assemble(const std::vector<Point>& pos, const std::vector<double>& r, Eigen::VectorXd& g, Workspace& ws) const {
    g.setZero();
    if (dense_) ws.dense.setZero();
    else std::fill(ws.sparse.valuePtr(), ws.sparse.valuePtr() + ws.sparse.nonZeros(), 0.0);
    for (std::size_t k = 0; k < edges_.size(); ++k) {
      const auto& e = edges_[k];
      Point d = 2.0 * (pos[e.u] - pos[e.v]);
      const double gx[2] = {d.real(), d.imag()};
      int a = col_[e.u], b = col_[e.v];
      if (a >= 0) {
        g[2 * a] += gx[0] * r[k];
        g[2 * a + 1] += gx[1] * r[k];
      }
      if (b >= 0) {
        g[2 * b] -= gx[0] * r[k];
        g[2 * b + 1] -= gx[1] * r[k];
      }
      if (dense_) {
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) {
            double v = gx[i] * gx[j];
            if (a >= 0) ws.dense(2 * a + i, 2 * a + j) += v;
            if (b >= 0) ws.dense(2 * b + i, 2 * b + j) += v;
            if (a >= 0 && b >= 0) {
              ws.dense(2 * a + i, 2 * b + j) -= v;
              ws.dense(2 * b + i, 2 * a + j) -= v;
            }
          }
      } else {
        double* val = ws.sparse.valuePtr();
        const auto& s = edge_slots_[k];
        int idx = 0;
        for (int blk = 0; blk < 4; ++blk) {
          double sign = blk < 2 ? 1.0 : -1.0;
          for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j, ++idx)
              if (s[idx] >= 0) val[s[idx]] += sign * gx[i] * gx[j];
        }
      }
    }
  }

  double max_diag(const Workspace& ws) const {
    double m = 0.0;
    if (dense_) {
      for (Eigen::Index i = 0; i < ws.dense.rows(); ++i) m = std::max(m, ws.dense(i, i));
    } else {
      for (int s : diag_slots_) m = std::max(m, ws.sparse.valuePtr()[s]);
    }
    return m;
  }

  bool factor_solve(Workspace& ws, double mu, const Eigen::VectorXd& g, Eigen::VectorXd& delta) const {
    if (dense_) {
      Eigen::MatrixXd A = ws.dense;
      A.diagonal().array() += mu;
      Eigen::LLT<Eigen::MatrixXd> llt(A);
      if (llt.info() != Eigen::Success) return false;
      delta = -llt.solve(g);
    } else {
      Eigen::SparseMatrix<double> A = ws.sparse;
      for (int s : diag_slots_) A.valuePtr()[s] += mu;
      if (!ws.analyzed) {
        ws.ldlt.analyzePattern(A);
        ws.analyzed = true;
      }
      ws.ldlt.factorize(A);
      if (ws.ldlt.info() != Eigen::Success) return false;
      delta = -ws.ldlt.solve(g);
    }
    return delta.allFinite();
  }

  Linkage linkage_;
  std::vector<bool> fixed_;
  std::vector<Point> base_;
  std::vector<int> col_;
  std::vector<std::size_t> free_;
  std::vector<EdgeTerm> edges_;
  std::size_t unknowns_ = 0;
  double scale2_ = 1.0;
  bool inconsistent_ = false;
  Point pin_centroid_{0.0, 0.0};

  bool dense_ = true;
  std::size_t dense_limit_ = 64;
  Eigen::SparseMatrix<double> sparse_jtj_;  // pattern only
  std::vector<int> diag_slots_;
  std::vector<std::array<int, 16>> edge_slots_;
};

inline SolveResult solve(const SolveProblem& p, std::uint64_t seed, const SolveOptions& opt = {}) {
  System sys(p.linkage, p.fixed, opt.dense_limit);
  Rng rng(seed);
  return sys.run(sys.guess(p, rng, opt), opt);
}

// ---------------------------------------------------------------------------
// Sampling

/// Canonical representative modulo Euc(2): first vertex at 0, the next
/// vertex not on it on the positive real axis, the next one off that axis
/// in the upper half-plane.
inline std::vector<Point> normalize_euclidean(std::vector<Point> pos) {
  if (pos.empty()) return pos;
  const double eps = 1e-9;
  Point o = pos[0];
  for (auto& z : pos) z -= o;
  std::size_t k = 1;
  while (k < pos.size() && std::abs(pos[k]) < eps) ++k;
  if (k < pos.size()) {
    Point rot = std::conj(pos[k]) / std::abs(pos[k]);
    for (auto& z : pos) z *= rot;
  }
  for (std::size_t j = k + 1; j < pos.size(); ++j) {
    if (std::abs(pos[j].imag()) < eps) continue;
    if (pos[j].imag() < 0.0)
      for (auto& z : pos) z = std::conj(z);
    break;
  }
  return pos;
}

/// Indices of the first representative of each cluster, in input order;
/// two vectors are duplicates when every coordinate differs by < resolution.
inline std::vector<std::size_t> dedup_indices(const std::vector<std::vector<Point>>& keys, double resolution) {
  std::vector<std::size_t> kept;
  if (keys.empty()) return kept;
  // Sweep along a fixed generic projection; duplicates are close in it.
  std::vector<double> w;
  Rng rng(0x5eed);
  for (std::size_t i = 0; i < 2 * keys[0].size(); ++i) w.push_back(uniform(rng, 0.5, 1.0));
  double wsum = 0.0;
  for (double x : w) wsum += x;
  auto project = [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t j = 0; j < keys[i].size(); ++j) s += w[2 * j] * keys[i][j].real() + w[2 * j + 1] * keys[i][j].imag();
    return s;
  };
  auto close = [&](std::size_t a, std::size_t b) {
    for (std::size_t j = 0; j < keys[a].size(); ++j)
      if (std::abs(keys[a][j].real() - keys[b][j].real()) >= resolution ||
          std::abs(keys[a][j].imag() - keys[b][j].imag()) >= resolution)
        return false;
    return true;
  };
  // Representatives indexed by projection; a duplicate projects within
  // resolution * sum(w) of its representative.
  std::multimap<double, std::size_t> index;
  const double window = resolution * wsum;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const double p = project(i);
    bool duplicate = false;
    for (auto it = index.lower_bound(p - window); it != index.end() && it->first <= p + window; ++it)
      if (close(i, it->second)) {
        duplicate = true;
        break;
      }
    if (!duplicate) {
      index.emplace(p, i);
      kept.push_back(i);
    }
  }
  return kept;
}

struct SampleStats {
  std::size_t attempts = 0;
  std::size_t converged = 0;
  std::size_t distinct = 0;
};

struct SampleOptions {
  SolveOptions solve;
  double dedup_resolution = 1e-4;
  bool dedup = true;
};

/// n random-restart solves; converged realizations, deduplicated (modulo
/// Euc(2) when nothing is pinned), in restart order.
inline std::vector<Realization> sample_configurations(const Linkage& l, std::size_t n, std::uint64_t seed,
                                                      const SampleOptions& opt = {}, SampleStats* stats = nullptr,
                                                      const std::map<VertexId, Point>& fixed = {}) {
  if (n == 0) throw Error("sample_configurations: n must be positive");
  System sys(l, fixed, opt.solve.dense_limit);
  SolveProblem p{l, fixed, GuessPolicy::Random, std::nullopt, 0.0};
  std::vector<std::optional<Realization>> found(n);
  parallel_for(n, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    auto res = sys.run(sys.guess(p, rng, opt.solve), opt.solve);
    if (res.status == Status::Converged) found[i] = std::move(res.realization);
  });
  std::vector<Realization> out;
  for (auto& f : found)
    if (f) out.push_back(std::move(*f));
  SampleStats st{n, out.size(), out.size()};
  if (opt.dedup && !out.empty()) {
    const bool unpinned = l.pins().empty() && fixed.empty();
    std::vector<std::vector<Point>> keys;
    for (const auto& r : out) keys.push_back(unpinned ? normalize_euclidean(r.positions()) : r.positions());
    std::vector<Realization> kept;
    for (std::size_t i : dedup_indices(keys, opt.dedup_resolution)) kept.push_back(std::move(out[i]));
    out = std::move(kept);
    st.distinct = out.size();
  }
  if (stats) *stats = st;
  return out;
}

// ---------------------------------------------------------------------------
// Continuation

/// Curve s in [0, 1] -> plane.
struct Path {
  enum class Kind { Segment, Circle, Arc } kind = Kind::Segment;
  Point a{}, b{};  // Segment endpoints; a is the circle or arc center
  double radius = 0.0;
  double theta0 = 0.0, theta1 = 2.0 * std::numbers::pi;

  static Path segment(Point p, Point q) { return {Kind::Segment, p, q, 0.0, 0.0, 0.0}; }
  static Path circle(Point c, double r) { return {Kind::Circle, c, {}, r, 0.0, 2.0 * std::numbers::pi}; }
  static Path arc(Point c, double r, double t0, double t1) { return {Kind::Arc, c, {}, r, t0, t1}; }

  Point at(double s) const {
    if (kind == Kind::Segment) return a + s * (b - a);
    return a + std::polar(radius, theta0 + s * (theta1 - theta0));
  }
};

struct TraceOptions {
  SolveOptions solve;
  double min_step = 1e-6;
  int start_attempts = 64;  // random restarts when no initial realization is given
};

struct TraceResult {
  std::vector<double> s;
  std::vector<std::vector<Point>> markers;
  std::vector<Realization> realizations;
  bool complete = false;
  std::string stop_reason;
};

/// Drives `drive` along `path` in `steps` equal parameter steps, solving
/// each step from a secant prediction of the previous ones and halving the
/// step on failure. Returns the partial trace if the path leaves the
/// configuration space.
inline TraceResult trace(const Linkage& l, const VertexId& drive, const Path& path, const MarkerSet& markers,
                         int steps, std::uint64_t seed = 0, const std::optional<Realization>& initial = std::nullopt,
                         const TraceOptions& opt = {}) {
  if (steps < 1) throw Error("trace: steps must be positive");
  require_markers(l, markers);
  const std::size_t di = l.require_index(drive);
  if (l.is_pinned(drive)) throw Error("trace: drive vertex is pinned");

  auto solve_at = [&](double s, const std::vector<Point>& guess) {
    System sys(l, {{drive, path.at(s)}}, opt.solve.dense_limit);
    std::vector<Point> pos = guess;
    pos[di] = path.at(s);
    for (const auto& [v, z] : l.pins()) pos[l.require_index(v)] = z;
    return sys.run(std::move(pos), opt.solve);
  };

  TraceResult out;
  std::optional<SolveResult> start;
  if (initial) {
    auto r = solve_at(0.0, initial->positions());
    if (r.status == Status::Converged) start = r;
  }
  if (!start) {
    System sys(l, {{drive, path.at(0.0)}}, opt.solve.dense_limit);
    SolveProblem p{l, {{drive, path.at(0.0)}}, GuessPolicy::Random, std::nullopt, 0.0};
    for (int k = 0; k < opt.start_attempts && !start; ++k) {
      Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
      auto r = sys.run(sys.guess(p, rng, opt.solve), opt.solve);
      if (r.status == Status::Converged) start = r;
    }
  }
  if (!start) throw Error("trace: the start of the path is infeasible for the drive vertex");

  auto record = [&](double s, const Realization& r) {
    out.s.push_back(s);
    out.markers.push_back(r.restrict_to(markers));
    out.realizations.push_back(r);
  };
  record(0.0, start->realization);

  std::vector<Point> prev = start->realization.positions(), prev2;
  double s_prev = 0.0, s_prev2 = 0.0;
  const double h = 1.0 / steps;
  for (int k = 1; k <= steps; ++k) {
    const double target = std::min(1.0, k * h);
    double step = target - s_prev;
    bool reached = false;
    while (!reached) {
      double s_next = std::min(target, s_prev + step);
      std::vector<Point> guess = prev;
      if (!prev2.empty() && s_prev > s_prev2) {
        double ratio = (s_next - s_prev) / (s_prev - s_prev2);
        for (std::size_t i = 0; i < guess.size(); ++i) guess[i] += ratio * (prev[i] - prev2[i]);
      }
      auto r = solve_at(s_next, guess);
      if (r.status != Status::Converged && !prev2.empty()) r = solve_at(s_next, prev);
      if (r.status == Status::Converged) {
        prev2 = std::move(prev);
        prev = r.realization.positions();
        s_prev2 = s_prev;
        s_prev = s_next;
        if (s_next >= target) {
          record(target, r.realization);
          reached = true;
        }
      } else {
        step /= 2.0;
        if (step < opt.min_step) {
          out.stop_reason = "no realization near s = " + std::to_string(s_next);
          return out;
        }
      }
    }
  }
  out.complete = true;
  return out;
}

}  // namespace semiconf::solver
