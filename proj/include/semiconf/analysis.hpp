#pragma once

// Property checks: quasifunctionality verification, semiconfiguration
// sampling, isometry invariance keyed to the number of pins, compactness,
// and cloud utilities (slicing, products, Hausdorff distance).

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "semiconf/compiler.hpp"
#include "semiconf/core.hpp"
#include "semiconf/expr.hpp"
#include "semiconf/gadgets.hpp"
#include "semiconf/random.hpp"
#include "semiconf/solver.hpp"

namespace semiconf::analysis {

using gadgets::Branch;
using gadgets::QFLinkage;

// ---------------------------------------------------------------------------
// Quasifunctionality

struct VerifyOptions {
  double tolerance = 1e-8;          // functional error of forward placement
  double residual_tolerance = 1e-9; // edge and pin residuals of forward placement
  double solver_tolerance = 1e-6;   // functional error of solver-found realizations
  double spot_fraction = 0.05;      // share of samples that also get solver checks
  int spot_restarts = 4;            // random restarts per spot check
  int max_enumerated_bits = 4;      // enumerate all branches up to this many bits
  int random_branches = 2;          // otherwise this many random branches
};

struct VerificationReport {
  std::size_t samples = 0;
  std::size_t placements = 0;
  double max_error = 0.0;
  double max_edge_residual = 0.0;
  double min_margin = 0.0;
  std::size_t branches_covered = 0;
  std::uint64_t branch_count = 0;
  std::size_t solver_checks = 0;
  std::size_t solver_converged = 0;
  double solver_max_error = 0.0;
  std::size_t placement_failures = 0;
  std::string first_failure;
  std::map<std::string, bool> properties;

  bool passed() const {
    return !properties.empty() &&
           std::all_of(properties.begin(), properties.end(), [](const auto& kv) { return kv.second; });
  }
};

/// Expected outputs for given inputs.
using Map = std::function<std::vector<Point>(std::span<const Point>)>;

/// Samples the domain, forward-places every branch (or random branches for
/// composites), compares outputs with f and spot-checks with the generic
/// solver: warm restarts from a perturbed placement and random restarts with
/// the inputs fixed. Any converged realization must also satisfy f.
inline VerificationReport verify_quasifunctional(const QFLinkage& g, const Map& f, std::size_t n, std::uint64_t seed,
                                                 const VerifyOptions& opt = {}) {
  if (g.outputs.empty()) throw Error("verify: gadget has no outputs");
  VerificationReport rep;
  rep.samples = n;
  rep.branch_count = g.branch_count();
  rep.min_margin = std::numeric_limits<double>::infinity();

  struct SampleOutcome {
    std::size_t placements = 0, failures = 0;
    double err = 0.0, resid = 0.0, margin = std::numeric_limits<double>::infinity();
    std::vector<std::uint64_t> branches;
    std::size_t checks = 0, converged = 0;
    double solver_err = 0.0;
    std::string failure;
  };
  std::vector<SampleOutcome> out(n);
  const std::size_t spot_every =
      opt.spot_fraction > 0.0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(1.0 / opt.spot_fraction)))
                              : 0;
  const bool enumerate = g.branch_bits <= opt.max_enumerated_bits;

  parallel_for(n, [&](std::size_t i) {
    SampleOutcome& o = out[i];
    Rng rng(derive_seed(seed, i));
    std::vector<Point> in = g.domain.sample(rng);
    std::vector<Point> expect = f(std::span<const Point>(in));
    if (expect.size() != g.outputs.size()) throw Error("verify: expected-output arity mismatch");
    std::vector<Branch> branches;
    if (enumerate) {
      for (std::uint64_t b = 0; b < g.branch_count(); ++b) branches.push_back({b, uniform_angle(rng)});
    } else {
      for (int k = 0; k < opt.random_branches; ++k) branches.push_back(Branch::random(rng));
    }
    std::optional<Realization> first;
    for (const auto& br : branches) {
      try {
        Realization r = g.place(std::span<const Point>(in), br);
        ++o.placements;
        o.branches.push_back(br.bits);
        auto got = g.outputs_of(r);
        for (std::size_t k = 0; k < got.size(); ++k) o.err = std::max(o.err, std::abs(got[k] - expect[k]));
        o.resid = std::max({o.resid, max_edge_residual(g.linkage, r), max_pin_residual(g.linkage, r)});
        o.margin = std::min(o.margin, g.min_margin(r));
        if (!first) first = std::move(r);
      } catch (const std::exception& e) {
        ++o.failures;
        if (o.failure.empty()) o.failure = e.what();
      }
    }
    if (spot_every == 0 || i % spot_every != 0) return;
    std::map<VertexId, Point> fixed;
    for (std::size_t k = 0; k < g.inputs.size(); ++k) fixed[g.inputs[k]] = in[k];
    solver::System local(g.linkage, fixed);
    solver::SolveOptions so;
    auto check = [&](const solver::SolveResult& res) {
      ++o.checks;
      if (res.status != solver::Status::Converged) return;
      ++o.converged;
      auto got = g.outputs_of(res.realization);
      for (std::size_t k = 0; k < got.size(); ++k) o.solver_err = std::max(o.solver_err, std::abs(got[k] - expect[k]));
    };
    if (first) {
      solver::SolveProblem p{g.linkage, fixed, solver::GuessPolicy::Seeded, first, 1e-3};
      check(local.run(local.guess(p, rng, so), so));
    }
    solver::SolveProblem p{g.linkage, fixed, solver::GuessPolicy::Random, std::nullopt, 0.0};
    for (int k = 0; k < opt.spot_restarts; ++k) check(local.run(local.guess(p, rng, so), so));
  });

  std::vector<bool> seen(enumerate ? g.branch_count() : 0, false);
  std::size_t distinct_random = 0;
  for (const auto& o : out) {
    rep.placements += o.placements;
    rep.placement_failures += o.failures;
    rep.max_error = std::max(rep.max_error, o.err);
    rep.max_edge_residual = std::max(rep.max_edge_residual, o.resid);
    rep.min_margin = std::min(rep.min_margin, o.margin);
    rep.solver_checks += o.checks;
    rep.solver_converged += o.converged;
    rep.solver_max_error = std::max(rep.solver_max_error, o.solver_err);
    if (rep.first_failure.empty() && !o.failure.empty()) rep.first_failure = o.failure;
    for (auto b : o.branches) {
      if (enumerate) seen[b] = true;
      else ++distinct_random;
    }
  }
  rep.branches_covered =
      enumerate ? static_cast<std::size_t>(std::count(seen.begin(), seen.end(), true)) : distinct_random;
  if (n == 0) rep.min_margin = 0.0;

  rep.properties["placement"] = rep.placement_failures == 0;
  rep.properties["functional"] = rep.max_error < opt.tolerance;
  rep.properties["residual"] = rep.max_edge_residual < opt.residual_tolerance;
  rep.properties["margin"] = rep.min_margin >= 0.0;
  rep.properties["solver"] = rep.solver_max_error < opt.solver_tolerance;
  if (enumerate) rep.properties["branches"] = rep.branches_covered == rep.branch_count || n == 0;
  return rep;
}

/// Single-output gadget against an expression in its inputs.
inline VerificationReport verify_quasifunctional(const QFLinkage& g, const Expr& f, std::size_t n, std::uint64_t seed,
                                                 const VerifyOptions& opt = {}) {
  if (variable_count(f) > g.inputs.size()) throw Error("verify: expression uses more variables than the gadget has inputs");
  const std::size_t outputs = g.outputs.size();
  return verify_quasifunctional(
      g, [f, outputs](std::span<const Point> in) { return std::vector<Point>(outputs, evaluate(f, in)); }, n, seed,
      opt);
}

// ---------------------------------------------------------------------------
// Point clouds

struct PointCloud {
  MarkerSet markers;
  std::vector<std::vector<Point>> points;
  std::uint64_t seed = 0;
  std::size_t restarts = 0;
  std::size_t converged = 0;
  std::size_t spot_checks = 0;     // generic-solver re-solves (zero-set sampling)
  std::size_t spot_converged = 0;
  double spot_max_shift = 0.0;     // largest marker move of a converged re-solve

  std::size_t size() const { return points.size(); }
};

inline double tuple_distance(const std::vector<Point>& a, const std::vector<Point>& b) {
  if (a.size() != b.size()) throw Error("tuple_distance: arity mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::norm(a[i] - b[i]);
  return std::sqrt(s);
}

/// Marker restrictions of random-restart realizations.
inline PointCloud sample_semiconfiguration(const Linkage& l, const MarkerSet& w, std::size_t n, std::uint64_t seed,
                                           const solver::SampleOptions& opt = {}) {
  require_markers(l, w);
  solver::SampleStats st;
  auto rs = solver::sample_configurations(l, n, seed, opt, &st);
  PointCloud c{w, {}, seed, st.attempts, st.converged};
  for (const auto& r : rs) c.points.push_back(r.restrict_to(w));
  return c;
}

struct ZeroSetOptions {
  int newton_iterations = 60;
  double residual = 1e-12;        // |P| at an accepted point
  double spot_fraction = 0.05;    // share of points re-solved by the generic solver
};

/// Samples the marker cloud of a zero-set linkage. Each restart draws a
/// random input point and branch, moves the input onto P = 0 by minimum-norm
/// Gauss-Newton steps, and forward-places the compiled gadget there. Every
/// accepted point is the marker restriction of a realization re-validated
/// against the pinned linkage; a share is also re-solved by the generic
/// solver from a perturbed start. The cloud keeps the forward-placed point:
/// the top pantograph of a compiled P is at its collapsed-rhombus
/// singularity on P = 0, where solver accuracy is only sqrt(residual).
inline PointCloud sample_zero_set(const compiler::ZeroSetLinkage& zs, std::size_t restarts, std::uint64_t seed,
                                  const ZeroSetOptions& opt = {}) {
  const auto& qf = zs.compiled.qf;
  const Expr& P = zs.compiled.expr;
  const std::size_t n = qf.inputs.size();
  std::vector<std::optional<std::vector<Point>>> found(restarts);
  struct Spot {
    bool tried = false, converged = false;
    double shift = 0.0;
  };
  std::vector<Spot> spots(restarts);
  const std::size_t spot_every =
      opt.spot_fraction > 0.0 ? std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(1.0 / opt.spot_fraction)))
                              : 0;

  parallel_for(restarts, [&](std::size_t i) {
    Rng rng(derive_seed(seed, i));
    std::vector<Point> z = qf.domain.sample(rng);
    Branch br = Branch::random(rng);
    auto value = [&](const std::vector<Point>& x) { return evaluate(P, std::span<const Point>(x)); };
    Point v = value(z);
    for (int it = 0; it < opt.newton_iterations && std::abs(v) > opt.residual; ++it) {
      Eigen::MatrixXd J(2, static_cast<Eigen::Index>(2 * n));
      for (std::size_t k = 0; k < 2 * n; ++k) {
        const double h = 1e-6 * std::max(1.0, std::abs(z[k / 2]));
        const Point dir = (k % 2 == 0) ? Point(h, 0.0) : Point(0.0, h);
        auto zp = z, zm = z;
        zp[k / 2] += dir;
        zm[k / 2] -= dir;
        Point d = (value(zp) - value(zm)) / (2.0 * h);
        J(0, static_cast<Eigen::Index>(k)) = d.real();
        J(1, static_cast<Eigen::Index>(k)) = d.imag();
      }
      Eigen::Vector2d F(v.real(), v.imag());
      Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(J);
      cod.setThreshold(1e-10);
      Eigen::VectorXd step = cod.solve(F);
      for (std::size_t k = 0; k < n; ++k) z[k] -= Point(step[2 * k], step[2 * k + 1]);
      v = value(z);
    }
    if (!(std::abs(v) <= opt.residual) || !qf.domain.contains(std::span<const Point>(z))) return;
    Realization r;
    try {
      r = qf.place(std::span<const Point>(z), br);
    } catch (const std::exception&) {
      return;
    }
    if (max_edge_residual(zs.linkage, r) >= kSolveTolerance || max_pin_residual(zs.linkage, r) >= kSolveTolerance)
      return;
    if (spot_every != 0 && i % spot_every == 0) {
      solver::SolveProblem p{zs.linkage, {}, solver::GuessPolicy::Seeded, r, 1e-4};
      auto res = solver::solve(p, derive_seed(seed, i + restarts));
      spots[i].tried = true;
      if (res.status == solver::Status::Converged) {
        spots[i].converged = true;
        spots[i].shift = tuple_distance(res.realization.restrict_to(zs.markers), r.restrict_to(zs.markers));
      }
    }
    found[i] = r.restrict_to(zs.markers);
  });

  PointCloud c{zs.markers, {}, seed, restarts, 0};
  for (auto& f : found)
    if (f) c.points.push_back(std::move(*f));
  c.converged = c.points.size();
  for (const auto& s : spots) {
    c.spot_checks += s.tried;
    c.spot_converged += s.converged;
    c.spot_max_shift = std::max(c.spot_max_shift, s.shift);
  }
  return c;
}

/// Applies (z_1, ..., z_k) -> (z_1 - z_k, ..., z_{k-1} - z_k, 0).
inline PointCloud slice_last_zero(const PointCloud& c) {
  PointCloud out = c;
  for (auto& p : out.points) {
    if (p.empty()) throw Error("slice_last_zero: empty marker tuple");
    const Point last = p.back();
    for (auto& z : p) z -= last;
  }
  return out;
}

/// All concatenations (a, b) of tuples of the two clouds.
inline PointCloud product_cloud(const PointCloud& a, const PointCloud& b) {
  PointCloud out;
  out.markers.vertices = a.markers.vertices;
  out.markers.vertices.insert(out.markers.vertices.end(), b.markers.vertices.begin(), b.markers.vertices.end());
  for (const auto& p : a.points)
    for (const auto& q : b.points) {
      auto r = p;
      r.insert(r.end(), q.begin(), q.end());
      out.points.push_back(std::move(r));
    }
  return out;
}

/// max over a in A of the distance to the nearest b in B (Euclidean in C^k).
inline double hausdorff_one_sided(const std::vector<std::vector<Point>>& A, const std::vector<std::vector<Point>>& B) {
  if (A.empty()) return 0.0;
  if (B.empty()) return std::numeric_limits<double>::infinity();
  // Sorting B by the first real coordinate prunes candidates whose
  // coordinate gap alone exceeds the best distance so far.
  std::vector<std::pair<double, std::size_t>> keys;
  for (std::size_t j = 0; j < B.size(); ++j) keys.emplace_back(B[j][0].real(), j);
  std::sort(keys.begin(), keys.end());
  std::vector<double> worst(A.size(), 0.0);
  parallel_for(A.size(), [&](std::size_t i) {
    const double x = A[i][0].real();
    auto mid = std::lower_bound(keys.begin(), keys.end(), std::make_pair(x, std::size_t{0}));
    double best = std::numeric_limits<double>::infinity();
    for (auto it = mid; it != keys.end() && it->first - x < best; ++it)
      best = std::min(best, tuple_distance(A[i], B[it->second]));
    for (auto it = mid; it != keys.begin();) {
      --it;
      if (x - it->first >= best) break;
      best = std::min(best, tuple_distance(A[i], B[it->second]));
    }
    worst[i] = best;
  });
  return *std::max_element(worst.begin(), worst.end());
}

inline double hausdorff(const std::vector<std::vector<Point>>& A, const std::vector<std::vector<Point>>& B) {
  return std::max(hausdorff_one_sided(A, B), hausdorff_one_sided(B, A));
}

// ---------------------------------------------------------------------------
// Isometry invariance

struct MotionCheck {
  double max_edge_residual = 0.0;
  double max_pin_residual = 0.0;
  bool ok(double tol = kExactTolerance) const { return max_edge_residual < tol && max_pin_residual < tol; }
};

/// Residuals of g o r for every realization r.
inline MotionCheck check_motion(const Linkage& l, const std::vector<Realization>& rs, const EuclideanMotion& g) {
  MotionCheck c;
  for (const auto& r : rs) {
    Realization moved = apply(g, r);
    c.max_edge_residual = std::max(c.max_edge_residual, max_edge_residual(l, moved));
    c.max_pin_residual = std::max(c.max_pin_residual, max_pin_residual(l, moved));
  }
  return c;
}

struct InvarianceReport {
  std::size_t pinned = 0;
  std::string group;  // "Euc(2)", "O(2)", "reflection", "trivial"
  std::size_t realizations = 0;
  std::size_t motions = 0;
  double max_edge_residual = 0.0;
  double max_pin_residual = 0.0;
  bool passed = false;
  std::string note;
};

/// Random motions of the symmetry group predicted by the number of distinct
/// pin images m: Euc(2) for m = 0, O(2) about the pin for m = 1, the
/// reflection in the pin line for m = 2. Each moved realization is
/// re-checked against every edge and pin.
inline InvarianceReport check_invariance(const Linkage& l, std::size_t n, std::uint64_t seed,
                                         std::size_t motions_per_realization = 4) {
  InvarianceReport rep;
  std::vector<Point> images;
  for (const auto& [v, z] : l.pins())
    if (std::none_of(images.begin(), images.end(), [&](Point w) { return std::abs(w - z) <= kExactTolerance; }))
      images.push_back(z);
  rep.pinned = images.size();
  auto rs = solver::sample_configurations(l, n, seed);
  rep.realizations = rs.size();
  if (rs.empty()) {
    rep.note = "no realizations sampled";
    return rep;
  }
  Rng rng(derive_seed(seed, 0x1a7e));
  std::vector<EuclideanMotion> motions;
  switch (images.size()) {
    case 0:
      rep.group = "Euc(2)";
      for (std::size_t k = 0; k < motions_per_realization; ++k) {
        EuclideanMotion g{std::polar(1.0, uniform_angle(rng)), uniform(rng, 0.0, 1.0) < 0.5,
                          uniform_in_disk(rng, 0.0, 10.0)};
        motions.push_back(g);
      }
      break;
    case 1:
      rep.group = "O(2)";
      for (std::size_t k = 0; k < motions_per_realization; ++k) {
        auto rot = EuclideanMotion::rotation_about(images[0], uniform_angle(rng));
        if (k % 2 == 1) rot = rot.then(EuclideanMotion::reflection_across(images[0], images[0] + std::polar(1.0, uniform_angle(rng))));
        motions.push_back(rot);
      }
      break;
    case 2:
      rep.group = "reflection";
      motions.push_back(EuclideanMotion::reflection_across(images[0], images[1]));
      break;
    default:
      rep.group = "trivial";
      motions.push_back(EuclideanMotion::identity());
      rep.note = "three or more pin images fix the plane; only the identity applies";
      break;
  }
  rep.motions = motions.size();
  for (const auto& g : motions) {
    auto c = check_motion(l, rs, g);
    rep.max_edge_residual = std::max(rep.max_edge_residual, c.max_edge_residual);
    rep.max_pin_residual = std::max(rep.max_pin_residual, c.max_pin_residual);
  }
  // Sampled realizations carry solver error; isometries must not add to it.
  double base = 0.0;
  for (const auto& r : rs) base = std::max({base, max_edge_residual(l, r), max_pin_residual(l, r)});
  const double tol = std::max(kExactTolerance, 2.0 * base + 1e-12);
  rep.passed = rep.max_edge_residual < tol && rep.max_pin_residual < tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Compactness

struct CompactnessReport {
  bool precondition = false;
  std::string message;
  double bound = 0.0;       // sum of edge lengths
  double max_radius = 0.0;  // largest observed distance from the pin image
  bool passed = false;
};

/// Every vertex of a connected linkage with a pin at z0 lies within the
/// total edge length of z0; checks the cloud's marker positions.
inline CompactnessReport check_compactness(const Linkage& l, const PointCloud& cloud) {
  CompactnessReport rep;
  rep.bound = l.total_length();
  if (l.pins().empty()) {
    rep.message = "precondition violated: linkage has no pinned vertex";
    return rep;
  }
  if (!is_connected(l)) {
    rep.message = "precondition violated: linkage is not connected";
    return rep;
  }
  rep.precondition = true;
  const Point z0 = l.pins().begin()->second;
  for (const auto& p : cloud.points)
    for (Point z : p) rep.max_radius = std::max(rep.max_radius, std::abs(z - z0));
  rep.passed = rep.max_radius <= rep.bound * (1.0 + 1e-12) + kSolveTolerance;
  return rep;
}

}  // namespace semiconf::analysis
