#pragma once

// Command-line front end: compile, verify, solve, trace, render, analyze.
// All randomness flows from --seed (default 0).

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "semiconf/analysis.hpp"
#include "semiconf/compiler.hpp"
#include "semiconf/json_io.hpp"
#include "semiconf/render.hpp"
#include "semiconf/solver.hpp"

namespace semiconf::cli {

/// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kUsage = 1;        // parse or validation failure
inline constexpr int kVerifyFailed = 2;

/// Complex literal such as "2+1i", "-0.5i" or "3".
inline Point parse_point(const std::string& s) {
  Expr e = parse_expression(s);
  if (has_variables(e)) throw Error("expected a complex constant, got '" + s + "'");
  return evaluate(e, std::span<const Point>{});
}

/// "V=z" as used by --fix.
inline std::pair<VertexId, Point> parse_assignment(const std::string& s) {
  auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0) throw Error("expected VERTEX=COMPLEX, got '" + s + "'");
  return {VertexId(s.substr(0, eq)), parse_point(s.substr(eq + 1))};
}

/// "circle C R", "arc C R THETA0 THETA1" (radians) or "segment P Q".
inline solver::Path parse_path(const std::string& s) {
  std::istringstream in(s);
  std::string kind;
  in >> kind;
  std::vector<std::string> args;
  for (std::string a; in >> a;) args.push_back(a);
  auto number = [&](std::size_t k) {
    try {
      std::size_t used = 0;
      double x = std::stod(args[k], &used);
      if (used != args[k].size()) throw std::invalid_argument(args[k]);
      return x;
    } catch (const std::exception&) {
      throw Error("path: '" + args[k] + "' is not a number");
    }
  };
  if (kind == "circle" && args.size() == 2) return solver::Path::circle(parse_point(args[0]), number(1));
  if (kind == "arc" && args.size() == 4) return solver::Path::arc(parse_point(args[0]), number(1), number(2), number(3));
  if (kind == "segment" && args.size() == 2) return solver::Path::segment(parse_point(args[0]), parse_point(args[1]));
  throw Error("path must be 'circle C R', 'arc C R T0 T1' or 'segment P Q', got '" + s + "'");
}

inline MarkerSet parse_markers(const std::vector<std::string>& names) {
  MarkerSet w;
  for (const auto& n : names) w.vertices.emplace_back(n);
  return w;
}

namespace detail {

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

inline void emit(const Streams& s, const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") s.out << text;
  else io::write_file(path, text);
}

/// Up to `attempts` solves from seeds derived from `seed`. A gadget whose
/// inputs are exactly the fixed vertices is first tried from its forward
/// placement, perturbed.
inline solver::SolveResult solve_with_restarts(const io::Document& d, const std::map<VertexId, Point>& fixed,
                                               std::uint64_t seed, int attempts, int* used) {
  solver::System sys(d.linkage, fixed);
  solver::SolveOptions opt;
  solver::SolveResult last;
  int k = 0;
  if (d.qf && !fixed.empty() && fixed.size() == d.qf->inputs.size() &&
      std::all_of(d.qf->inputs.begin(), d.qf->inputs.end(), [&](const VertexId& v) { return fixed.count(v) != 0; })) {
    std::vector<Point> in;
    for (const auto& v : d.qf->inputs) in.push_back(fixed.at(v));
    if (d.qf->domain.contains(std::span<const Point>(in))) {
      Rng rng(derive_seed(seed, 0));
      Realization start = d.qf->place(std::span<const Point>(in), gadgets::Branch::random(rng));
      solver::SolveProblem p{d.linkage, fixed, solver::GuessPolicy::Seeded, start, 0.0};
      last = sys.run(sys.guess(p, rng, opt), opt);
      ++k;
      if (last.status == solver::Status::Converged) {
        *used = k;
        return last;
      }
    }
  }
  solver::SolveProblem p{d.linkage, fixed, solver::GuessPolicy::Random, std::nullopt, 0.0};
  for (; k < attempts; ++k) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
    last = sys.run(sys.guess(p, rng, opt), opt);
    if (last.status == solver::Status::Converged || sys.inconsistent()) {
      ++k;
      break;
    }
  }
  *used = k;
  return last;
}

}  // namespace detail

/// Runs one command; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  detail::Streams io_{out, err};
  CLI::App app{"Planar linkage gadgets: compile polynomial maps to linkages, solve, trace, verify and render."};
  app.require_subcommand(1);
  std::uint64_t seed = 0;

  // compile
  auto* c_compile = app.add_subcommand("compile", "Compile an expression into a quasifunctional linkage");
  std::string c_expr, c_out;
  std::size_t c_vars = 1;
  double c_radius = 1.0;
  c_compile->add_option("expr", c_expr, "Expression, e.g. \"z1^2 + 2*conj(z2) - (0.5+1i)\"")->required();
  c_compile->add_option("--vars", c_vars, "Number of input variables")->check(CLI::PositiveNumber);
  c_compile->add_option("--radius", c_radius, "Polydisk radius of the domain")->check(CLI::PositiveNumber);
  c_compile->add_option("-o", c_out, "Output file (default: standard output)");

  // verify
  auto* c_verify = app.add_subcommand("verify", "Check that a gadget computes an expression");
  std::string v_file, v_expr;
  std::size_t v_samples = 1000;
  double v_tol = kExactTolerance;
  c_verify->add_option("file", v_file, "Linkage file with a gadget annotation")->required()->check(CLI::ExistingFile);
  c_verify->add_option("--expr", v_expr, "Expected function (default: a compiled gadget's own expression)");
  c_verify->add_option("--samples", v_samples, "Domain samples")->check(CLI::PositiveNumber);
  c_verify->add_option("--seed", seed, "Random seed");
  c_verify->add_option("--tol", v_tol, "Tolerance on output error and edge residual")->check(CLI::PositiveNumber);

  // solve
  auto* c_solve = app.add_subcommand("solve", "Find a realization with the generic solver");
  std::string s_file;
  std::vector<std::string> s_fix;
  c_solve->add_option("file", s_file, "Linkage file")->required()->check(CLI::ExistingFile);
  c_solve->add_option("--fix", s_fix, "Hold a vertex at a point, e.g. D=2+1i (repeatable)");
  c_solve->add_option("--seed", seed, "Random seed");

  // trace
  auto* c_trace = app.add_subcommand("trace", "Drive a vertex along a path and record markers (CSV)");
  std::string t_file, t_drive, t_path;
  int t_steps = 256;
  std::vector<std::string> t_markers;
  c_trace->add_option("file", t_file, "Linkage file")->required()->check(CLI::ExistingFile);
  c_trace->add_option("--drive", t_drive, "Driven vertex")->required();
  c_trace->add_option("--path", t_path, "\"circle C R\", \"arc C R T0 T1\" or \"segment P Q\"")->required();
  c_trace->add_option("--steps", t_steps, "Continuation steps")->check(CLI::PositiveNumber);
  c_trace->add_option("--markers", t_markers, "Recorded vertices (comma separated)")->delimiter(',')->required();
  c_trace->add_option("--seed", seed, "Random seed");

  // render
  auto* c_render = app.add_subcommand("render", "Draw a realization as SVG");
  std::string r_file, r_real, r_out;
  c_render->add_option("file", r_file, "Linkage file")->required()->check(CLI::ExistingFile);
  c_render->add_option("--realization", r_real, "Realization JSON (default: placed or solved with seed 0)")
      ->check(CLI::ExistingFile);
  c_render->add_option("-o", r_out, "Output SVG (default: standard output)");

  // analyze
  auto* c_analyze = app.add_subcommand("analyze", "Invariance, compactness and marker-cloud reports");
  std::string a_file;
  std::vector<std::string> a_markers;
  std::size_t a_samples = 500;
  c_analyze->add_option("file", a_file, "Linkage file")->required()->check(CLI::ExistingFile);
  c_analyze->add_option("--markers", a_markers, "Marker vertices (comma separated)")->delimiter(',');
  c_analyze->add_option("--samples", a_samples, "Random restarts")->check(CLI::PositiveNumber);
  c_analyze->add_option("--seed", seed, "Random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    if (*c_compile) {
      if (c_expr.empty()) throw Error("empty expression");
      auto c = compiler::compile(c_expr, c_vars, c_radius);
      detail::emit(io_, c_out, io::compiled_json(c).dump(2) + "\n");
      if (!c_out.empty())
        out << "compiled " << to_string(c.expr) << ": " << c.qf.linkage.vertex_count() << " vertices, "
            << c.qf.linkage.edge_count() << " edges, " << c.log.size() << " gadgets -> " << c_out << "\n";
      return kOk;
    }

    if (*c_verify) {
      auto d = io::read_document(v_file);
      if (!d.qf) throw Error("verify needs a gadget file" + (d.note.empty() ? std::string() : " (" + d.note + ")"));
      std::string text = v_expr;
      if (text.empty()) {
        auto it = d.qf->spec.text.find("expr");
        if (it == d.qf->spec.text.end()) throw Error("--expr is required for '" + d.qf->spec.kind + "' gadgets");
        text = it->second;
      }
      Expr f = parse_expression(text);
      if (variable_count(f) > d.qf->inputs.size()) throw Error("--expr uses more variables than the gadget has inputs");
      analysis::VerifyOptions opt;
      opt.tolerance = v_tol;
      opt.residual_tolerance = v_tol;
      opt.solver_tolerance = std::max(v_tol, kSolveTolerance);
      auto rep = analysis::verify_quasifunctional(*d.qf, f, v_samples, seed, opt);
      out << io::verification_json(rep).dump(2) << "\n";
      if (!rep.passed()) {
        err << "verification failed:";
        for (const auto& [k, ok] : rep.properties)
          if (!ok) err << ' ' << k;
        err << "\n";
        return kVerifyFailed;
      }
      return kOk;
    }

    if (*c_solve) {
      auto d = io::read_document(s_file);
      std::map<VertexId, Point> fixed;
      for (const auto& s : s_fix) {
        auto [v, z] = parse_assignment(s);
        if (!d.linkage.has_vertex(v)) throw Error("--fix: unknown vertex '" + v.name + "'");
        fixed[v] = z;
      }
      int used = 0;
      auto res = detail::solve_with_restarts(d, fixed, seed, 256, &used);
      auto j = io::solve_result_json(res);
      j["attempts"] = used;
      out << j.dump(2) << "\n";
      if (res.status != solver::Status::Converged) err << "no converged realization after " << used << " attempts\n";
      return kOk;
    }

    if (*c_trace) {
      auto d = io::read_document(t_file);
      auto path = parse_path(t_path);
      auto w = parse_markers(t_markers);
      VertexId drive(t_drive);
      if (!d.linkage.has_vertex(drive)) throw Error("--drive: unknown vertex '" + t_drive + "'");
      require_markers(d.linkage, w);
      std::optional<Realization> initial;
      if (d.qf && d.qf->inputs.size() == 1 && d.qf->inputs[0] == drive) {
        std::vector<Point> in{path.at(0.0)};
        if (d.qf->domain.contains(std::span<const Point>(in))) {
          Rng rng(seed);
          initial = d.qf->place(std::span<const Point>(in), gadgets::Branch::random(rng));
        }
      }
      auto tr = solver::trace(d.linkage, drive, path, w, t_steps, seed, initial);
      out << "s";
      for (const auto& v : w.vertices) out << ',' << v.name << "_re," << v.name << "_im";
      out << "\n";
      out.precision(17);
      for (std::size_t i = 0; i < tr.s.size(); ++i) {
        out << tr.s[i];
        for (Point z : tr.markers[i]) out << ',' << z.real() << ',' << z.imag();
        out << "\n";
      }
      if (!tr.complete) err << "trace stopped early: " << tr.stop_reason << "\n";
      return kOk;
    }

    if (*c_render) {
      auto d = io::read_document(r_file);
      Realization r;
      if (!r_real.empty()) {
        r = io::realization_from_json(io::parse_json_text(io::read_file(r_real), r_real), d.linkage);
      } else if (d.qf) {
        Rng rng(0);
        auto in = d.qf->domain.sample(rng);
        r = d.qf->place(std::span<const Point>(in), gadgets::Branch::random(rng));
      } else {
        int used = 0;
        auto res = detail::solve_with_restarts(d, {}, 0, 256, &used);
        if (res.status != solver::Status::Converged) throw Error("render: no realization found; pass --realization");
        r = res.realization;
      }
      detail::emit(io_, r_out, render::svg(d.linkage, r, d.markers));
      return kOk;
    }

    if (*c_analyze) {
      auto d = io::read_document(a_file);
      MarkerSet w = a_markers.empty() ? d.markers : parse_markers(a_markers);
      require_markers(d.linkage, w);
      io::ordered_json j;
      auto cloud = analysis::sample_semiconfiguration(d.linkage, w, a_samples, seed);
      j["invariance"] = io::invariance_json(analysis::check_invariance(d.linkage, std::min<std::size_t>(a_samples, 50), seed));
      j["compactness"] = io::compactness_json(analysis::check_compactness(d.linkage, cloud));
      j["cloud"] = io::cloud_json(cloud);
      out << j.dump(2) << "\n";
      return kOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace semiconf::cli
