#pragma once

// SVG drawing of a realization: bars black, braces and cables gray, pins as
// filled squares, markers as circles. The viewBox is fitted to the points
// with a 5% margin.

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>
#include <string>

#include "semiconf/core.hpp"

namespace semiconf::render {

struct Style {
  double width_px = 640.0;
  std::string bar = "#000000";
  std::string rigidifier = "#999999";  // braces and cables
  std::string pin = "#000000";
  std::string marker = "#d62728";
};

namespace detail {
inline std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}
}  // namespace detail

inline std::string svg(const Linkage& l, const Realization& r, const MarkerSet& markers = {}, const Style& st = {}) {
  using detail::num;
  if (r.size() == 0) throw Error("render: empty realization");
  double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
  for (Point z : r.positions()) {
    x0 = std::min(x0, z.real());
    x1 = std::max(x1, z.real());
    y0 = std::min(y0, z.imag());
    y1 = std::max(y1, z.imag());
  }
  double w = x1 - x0, h = y1 - y0;
  const double span = std::max({w, h, 1e-9});
  w = std::max(w, 1e-3 * span);
  h = std::max(h, 1e-3 * span);
  const double mx = 0.05 * w, my = 0.05 * h;
  const double vw = w + 2 * mx, vh = h + 2 * my;
  const double unit = std::max(vw, vh) / 200.0;  // stroke and glyph scale
  // SVG's y axis points down; flip so the drawing matches the complex plane.
  auto X = [&](Point z) { return num(z.real()); };
  auto Y = [&](Point z) { return num(-z.imag()); };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(st.width_px) << "\" height=\""
    << num(st.width_px * vh / vw) << "\" viewBox=\"" << num(x0 - mx) << ' ' << num(-y1 - my) << ' ' << num(vw) << ' '
    << num(vh) << "\">\n";
  for (const auto& e : l.edges()) {
    const bool gray = e.kind != EdgeKind::Bar;
    Point a = r.at(e.u), b = r.at(e.v);
    o << "  <line class=\"" << to_string(e.kind) << "\" x1=\"" << X(a) << "\" y1=\"" << Y(a) << "\" x2=\"" << X(b)
      << "\" y2=\"" << Y(b) << "\" stroke=\"" << (gray ? st.rigidifier : st.bar) << "\" stroke-width=\""
      << num(gray ? 0.6 * unit : unit) << "\" stroke-linecap=\"round\"/>\n";
  }
  const double side = 3.0 * unit;
  for (const auto& [v, pinned] : l.pins()) {
    Point z = r.at(v);
    o << "  <rect class=\"pin\" x=\"" << num(z.real() - side / 2) << "\" y=\"" << num(-z.imag() - side / 2)
      << "\" width=\"" << num(side) << "\" height=\"" << num(side) << "\" fill=\"" << st.pin << "\"/>\n";
  }
  for (const auto& v : markers.vertices) {
    Point z = r.at(v);
    o << "  <circle class=\"marker\" cx=\"" << X(z) << "\" cy=\"" << Y(z) << "\" r=\"" << num(2.0 * unit)
      << "\" fill=\"none\" stroke=\"" << st.marker << "\" stroke-width=\"" << num(0.6 * unit) << "\"/>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace semiconf::render
