#pragma once

#include <charconv>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpp/labeling.hpp"
#include "fpp/metric.hpp"

namespace fpp {

/// Styling knobs for tree figures. `comment` is emitted verbatim inside an
/// XML comment right after the prologue, so callers can stamp provenance
/// (seed, config hash) into the artifact.
struct RenderOptions {
  double stroke_scale = 6.0;  // stroke width per unit of flow mass
  double min_stroke = 0.06;   // floor so massless edges stay visible
  std::string palette = "ink";  // "ink" or "ember"
  std::string comment;

  friend bool operator==(const RenderOptions&, const RenderOptions&) = default;
};

namespace detail {

/// Fixed-precision, locale-independent decimal formatting.
inline std::string fixed_digits(double v, int precision) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::fixed, precision);
  if (res.ec != std::errc{})
    throw std::runtime_error("fixed_digits: formatting failed");
  return std::string(buf, res.ptr);
}

inline std::string svg_int(std::int64_t v) { return std::to_string(v); }

inline const char* edge_color(const std::string& palette) {
  return palette == "ember" ? "#7a1f1f" : "#1a1a1a";
}

}  // namespace detail

/**
 * Deterministic SVG 1.1 figure of a geodesic tree: one line element per tree
 * edge, drawn in row-major window order. With `flow`, stroke width is
 * proportional to the mass carried by the edge (floored at min_stroke); with
 * `leaf_values` (aligned with flow->leaves), each leaf is annotated with its
 * value to four decimals. Lattice y points up, so it is negated for SVG.
 */
inline std::string render_tree(const GeodesicTree& tree,
                               const TreeFlow* flow = nullptr,
                               const std::vector<double>* leaf_values = nullptr,
                               const RenderOptions& options = {}) {
  if (tree.dist.empty()) throw std::invalid_argument("render_tree: empty tree");
  if (leaf_values && !flow)
    throw std::invalid_argument("render_tree: leaf values need a flow");
  if (leaf_values && leaf_values->size() != flow->leaves.size())
    throw std::invalid_argument(
        "render_tree: one value per flow leaf required");

  const Window& w = tree.window;
  const std::int64_t pad = 2;
  const std::int64_t x0 = std::int64_t{w.min_x()} - pad;
  const std::int64_t y0 = -std::int64_t{w.max_y()} - pad;
  const std::int64_t side = std::int64_t{w.side()} - 1 + 2 * pad;

  std::string svg;
  svg.reserve(1 << 16);
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" viewBox=\"";
  svg += detail::svg_int(x0) + " " + detail::svg_int(y0) + " " +
         detail::svg_int(side) + " " + detail::svg_int(side) + "\">\n";
  if (!options.comment.empty()) svg += "<!-- " + options.comment + " -->\n";

  const char* color = detail::edge_color(options.palette);
  const std::size_t n = w.vertex_count();
  for (std::size_t i = 0; i < n; ++i) {
    const Vertex v = w.vertex_at(i);
    if (v == tree.source) continue;
    const auto parent = tree.parent_of(v);
    if (!parent) continue;
    double width = options.min_stroke;
    if (flow) {
      const double m = flow->mass_on(Edge{*parent, v});
      width = std::max(options.min_stroke, options.stroke_scale * m);
    }
    svg += "<line x1=\"" + detail::svg_int(parent->x) + "\" y1=\"" +
           detail::svg_int(-std::int64_t{parent->y}) + "\" x2=\"" +
           detail::svg_int(v.x) + "\" y2=\"" +
           detail::svg_int(-std::int64_t{v.y}) + "\" stroke=\"" + color +
           "\" stroke-width=\"" + detail::fixed_digits(width, 4) +
           "\" stroke-linecap=\"round\"/>\n";
  }

  svg += "<circle cx=\"" + detail::svg_int(tree.source.x) + "\" cy=\"" +
         detail::svg_int(-std::int64_t{tree.source.y}) +
         "\" r=\"0.45\" fill=\"" + std::string(color) + "\"/>\n";

  if (leaf_values) {
    for (std::size_t i = 0; i < flow->leaves.size(); ++i) {
      const Vertex leaf = flow->leaves[i];
      svg += "<text x=\"" + detail::svg_int(std::int64_t{leaf.x} + 1) +
             "\" y=\"" + detail::svg_int(-std::int64_t{leaf.y}) +
             "\" font-family=\"monospace\" font-size=\"1.4\" fill=\"" + color +
             "\">" + detail::fixed_digits((*leaf_values)[i], 4) + "</text>\n";
    }
  }

  svg += "</svg>\n";
  return svg;
}

}  // namespace fpp
