#pragma once

// JSON artifacts: the canonical linkage format (vertices sorted by name,
// optional io and gadget annotations), realizations and reports.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <json.hpp>

#include "semiconf/analysis.hpp"
#include "semiconf/compiler.hpp"
#include "semiconf/core.hpp"
#include "semiconf/gadgets.hpp"
#include "semiconf/solver.hpp"

namespace semiconf::io {

using nlohmann::json;
using nlohmann::ordered_json;

inline ordered_json point_json(Point z) { return ordered_json::array({z.real(), z.imag()}); }

inline Point point_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw Error("expected a point [re, im], got " + j.dump());
  return {j[0].get<double>(), j[1].get<double>()};
}

/// A linkage file: the linkage, its markers and, for gadgets, the rebuilt
/// quasifunctional linkage including its placement program.
struct Document {
  Linkage linkage;
  MarkerSet markers;
  std::optional<gadgets::QFLinkage> qf;
  std::optional<gadgets::GadgetSpec> gadget;
  std::string note;  // why a gadget annotation was not attached
};

inline ordered_json gadget_json(const gadgets::GadgetSpec& s) {
  ordered_json params = ordered_json::object();
  for (const auto& [k, v] : s.numbers) params[k] = v;
  ordered_json g{{"kind", s.kind}, {"params", params}};
  if (!s.text.empty()) {
    ordered_json text = ordered_json::object();
    for (const auto& [k, v] : s.text) text[k] = v;
    g["text"] = text;
  }
  return g;
}

inline ordered_json linkage_json(const Linkage& l, const MarkerSet& markers = {},
                                 const gadgets::QFLinkage* qf = nullptr) {
  ordered_json j;
  ordered_json vs = ordered_json::array();
  for (const auto& v : l.vertices()) vs.push_back(v.name);
  j["vertices"] = vs;
  ordered_json es = ordered_json::array();
  for (const auto& e : l.edges()) {
    ordered_json ej{{"u", e.u.name}, {"v", e.v.name}, {"len", e.length}};
    if (e.kind != EdgeKind::Bar) ej["kind"] = to_string(e.kind);
    es.push_back(ej);
  }
  j["edges"] = es;
  ordered_json pins = ordered_json::object();
  for (const auto& [v, z] : l.pins()) pins[v.name] = point_json(z);
  j["pinned"] = pins;
  ordered_json ms = ordered_json::array();
  for (const auto& v : markers.vertices) ms.push_back(v.name);
  j["markers"] = ms;
  if (qf) {
    ordered_json in = ordered_json::array(), out = ordered_json::array();
    for (const auto& v : qf->inputs) in.push_back(v.name);
    for (const auto& v : qf->outputs) out.push_back(v.name);
    j["io"] = {{"inputs", in}, {"outputs", out}};
    j["gadget"] = gadget_json(qf->spec);
  }
  return j;
}

inline ordered_json document_json(const Document& d) {
  auto j = linkage_json(d.linkage, d.markers, d.qf ? &*d.qf : nullptr);
  if (!d.qf && d.gadget) j["gadget"] = gadget_json(*d.gadget);
  return j;
}

inline ordered_json instantiation_log_json(const compiler::CompiledQF& c) {
  ordered_json log = ordered_json::array();
  for (const auto& r : c.log) {
    ordered_json params = ordered_json::object();
    for (const auto& [k, v] : r.params) params[k] = v;
    ordered_json e{{"gadget", r.gadget}};
    if (!r.mode.empty()) e["mode"] = r.mode;
    e["node"] = r.node;
    e["prefix"] = r.prefix;
    e["params"] = params;
    e["required"] = r.required;
    if (std::isfinite(r.certified)) e["certified"] = r.certified;
    log.push_back(e);
  }
  return log;
}

/// Compiled output: the linkage file plus the instantiation log.
inline ordered_json compiled_json(const compiler::CompiledQF& c) {
  auto j = linkage_json(c.qf.linkage, {c.qf.outputs}, &c.qf);
  j["instantiations"] = instantiation_log_json(c);
  return j;
}

inline gadgets::GadgetSpec gadget_from_json(const json& g) {
  gadgets::GadgetSpec s;
  s.kind = g.at("kind").get<std::string>();
  if (g.contains("params"))
    for (const auto& [k, v] : g.at("params").items()) s.numbers[k] = v.get<double>();
  if (g.contains("text"))
    for (const auto& [k, v] : g.at("text").items()) s.text[k] = v.get<std::string>();
  return s;
}

inline std::vector<VertexId> names_from_json(const json& a, const char* what) {
  if (!a.is_array()) throw Error(std::string("'") + what + "' must be an array of vertex names");
  std::vector<VertexId> out;
  for (const auto& x : a) out.emplace_back(x.get<std::string>());
  return out;
}

/// Parses and validates a linkage file. A gadget annotation is rebuilt and
/// attached only if the rebuilt linkage matches the file exactly; a file
/// that was edited after generation stays a plain linkage.
inline Document document_from_json(const json& j) {
  Document d;
  try {
    if (!j.is_object()) throw Error("linkage file must be a JSON object");
    for (const char* key : {"vertices", "edges"})
      if (!j.contains(key)) throw Error(std::string("linkage file lacks '") + key + "'");
    for (const auto& v : names_from_json(j.at("vertices"), "vertices")) d.linkage.add_vertex(v);
    for (const auto& e : j.at("edges")) {
      EdgeKind kind = e.contains("kind") ? edge_kind_from_string(e.at("kind").get<std::string>()) : EdgeKind::Bar;
      d.linkage.add_edge_unchecked(VertexId(e.at("u").get<std::string>()), VertexId(e.at("v").get<std::string>()),
                                   e.at("len").get<double>(), kind);
    }
    if (j.contains("pinned"))
      for (const auto& [k, v] : j.at("pinned").items()) d.linkage.set_pin(VertexId(k), point_from_json(v));
    if (j.contains("markers")) d.markers.vertices = names_from_json(j.at("markers"), "markers");
  } catch (const json::exception& e) {
    throw Error(std::string("malformed linkage file: ") + e.what());
  }
  auto rep = validate(d.linkage);
  for (const auto& v : rep.violations)
    if (v.kind != ViolationKind::PinnedPairInconsistent) throw Error("invalid linkage: " + v.message);
  require_markers(d.linkage, d.markers);

  if (j.contains("gadget")) {
    d.gadget = gadget_from_json(j.at("gadget"));
    try {
      auto qf = compiler::rebuild_gadget(*d.gadget);
      if (qf.linkage == d.linkage) d.qf = std::move(qf);
      else d.note = "linkage differs from the rebuilt '" + d.gadget->kind + "' gadget; treated as a plain linkage";
    } catch (const std::exception& e) {
      d.note = std::string("gadget annotation not rebuilt: ") + e.what();
    }
  }
  if (d.qf && j.contains("io")) {
    auto in = names_from_json(j.at("io").at("inputs"), "io.inputs");
    auto out = names_from_json(j.at("io").at("outputs"), "io.outputs");
    if (in != d.qf->inputs || out != d.qf->outputs) throw Error("io does not match the gadget annotation");
  }
  return d;
}

inline json parse_json_text(const std::string& text, const std::string& where) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(where + ": " + e.what());
  }
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("failed writing '" + path + "'");
}

inline Document read_document(const std::string& path) {
  return document_from_json(parse_json_text(read_file(path), path));
}

// ---------------------------------------------------------------------------
// Realizations

inline ordered_json realization_json(const Realization& r) {
  ordered_json pos = ordered_json::object();
  for (std::size_t i = 0; i < r.size(); ++i) pos[r.vertices()[i].name] = point_json(r.positions()[i]);
  return {{"positions", pos}};
}

inline ordered_json solve_result_json(const solver::SolveResult& res) {
  ordered_json j{{"status", solver::to_string(res.status)},
                 {"residual", res.residual},
                 {"edge_residual", res.edge_residual},
                 {"iterations", res.iterations}};
  j["positions"] = realization_json(res.realization)["positions"];
  return j;
}

/// Positions for every vertex of l, in l's vertex order.
inline Realization realization_from_json(const json& j, const Linkage& l) {
  const json& pos = j.contains("positions") ? j.at("positions") : j;
  if (!pos.is_object()) throw Error("realization must be an object of vertex positions");
  Realization r = Realization::zeros(l);
  for (const auto& v : l.vertices()) {
    if (!pos.contains(v.name)) throw Error("realization lacks vertex '" + v.name + "'");
    r.set(v, point_from_json(pos.at(v.name)));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Reports

inline ordered_json verification_json(const analysis::VerificationReport& r) {
  ordered_json props = ordered_json::object();
  for (const auto& [k, v] : r.properties) props[k] = v;
  ordered_json j{{"passed", r.passed()},
                 {"samples", r.samples},
                 {"placements", r.placements},
                 {"max_error", r.max_error},
                 {"max_edge_residual", r.max_edge_residual},
                 {"min_margin", r.min_margin},
                 {"branch_count", r.branch_count},
                 {"branches_covered", r.branches_covered},
                 {"solver_checks", r.solver_checks},
                 {"solver_converged", r.solver_converged},
                 {"solver_max_error", r.solver_max_error},
                 {"placement_failures", r.placement_failures},
                 {"properties", props}};
  if (!r.first_failure.empty()) j["first_failure"] = r.first_failure;
  return j;
}

inline ordered_json invariance_json(const analysis::InvarianceReport& r) {
  ordered_json j{{"passed", r.passed},
                 {"pinned", r.pinned},
                 {"group", r.group},
                 {"realizations", r.realizations},
                 {"motions", r.motions},
                 {"max_edge_residual", r.max_edge_residual},
                 {"max_pin_residual", r.max_pin_residual}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline ordered_json compactness_json(const analysis::CompactnessReport& r) {
  ordered_json j{{"precondition", r.precondition}, {"passed", r.passed}, {"bound", r.bound},
                 {"max_radius", r.max_radius}};
  if (!r.message.empty()) j["message"] = r.message;
  return j;
}

inline ordered_json cloud_json(const analysis::PointCloud& c) {
  ordered_json ms = ordered_json::array();
  for (const auto& v : c.markers.vertices) ms.push_back(v.name);
  ordered_json pts = ordered_json::array();
  for (const auto& p : c.points) {
    ordered_json t = ordered_json::array();
    for (Point z : p) t.push_back(point_json(z));
    pts.push_back(t);
  }
  return {{"markers", ms}, {"seed", c.seed}, {"restarts", c.restarts}, {"converged", c.converged},
          {"points", pts}};
}

}  // namespace semiconf::io
