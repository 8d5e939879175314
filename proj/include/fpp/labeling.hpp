#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "fpp/metric.hpp"

namespace fpp {

/**
 * Unit mass injected at the tree root and routed root-down: at each vertex the
 * mass splits equally among the children whose subtrees reach the window
 * boundary, and it is absorbed at the first boundary vertex it touches (the
 * finite stand-in for flow to infinity). Subtrees that never reach the
 * boundary carry no mass, which is what makes the absorbed masses sum to 1.
 */
struct TreeFlow {
  GeodesicTree tree;
  std::unordered_map<std::uint64_t, double> mass;  // edge_id -> mass through edge
  std::vector<Vertex> leaves;      // absorption points, ccw contour order
  std::vector<double> leaf_mass;   // aligned with `leaves`

  double mass_on(const Edge& e) const {
    const auto it = mass.find(edge_id(e));
    return it == mass.end() ? 0.0 : it->second;
  }
};

inline TreeFlow unit_flow(GeodesicTree tree) {
  if (!tree.complete)
    throw std::invalid_argument("unit_flow: tree must span its window");
  const Window& w = tree.window;
  const std::size_t n = w.vertex_count();
  const std::size_t root_idx = w.index_of(tree.source);

  std::vector<std::vector<std::uint32_t>> children(n);
  std::vector<std::uint32_t> order;
  order.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (tree.dist[i] == kInf && i != root_idx) continue;
    order.push_back(static_cast<std::uint32_t>(i));
    if (tree.parent_dir[i] == kNoParent) continue;
    const Vertex v = w.vertex_at(i);
    const Vertex p = step(v, static_cast<Dir>(tree.parent_dir[i]));
    children[w.index_of(p)].push_back(static_cast<std::uint32_t>(i));
  }
  // Children strictly farther than parents, so distance order is topological.
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    return tree.dist[a] < tree.dist[b];
  });

  // A vertex escapes when it can pass mass onward to the boundary.
  std::vector<char> escapes(n, 0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const std::uint32_t i = *it;
    if (w.on_boundary(w.vertex_at(i))) {
      escapes[i] = 1;
      continue;
    }
    for (const std::uint32_t c : children[i])
      if (escapes[c]) {
        escapes[i] = 1;
        break;
      }
  }

  std::vector<double> carried(n, 0.0);
  carried[root_idx] = 1.0;
  TreeFlow flow;
  std::vector<std::uint32_t> absorbed;
  for (const std::uint32_t i : order) {
    if (carried[i] == 0.0) continue;
    const Vertex v = w.vertex_at(i);
    if (i != root_idx && w.on_boundary(v)) {
      absorbed.push_back(i);
      continue;
    }
    std::uint32_t k = 0;
    for (const std::uint32_t c : children[i])
      if (escapes[c]) ++k;
    if (k == 0) continue;  // isolated from the boundary: mass was never sent here
    const double share = carried[i] / static_cast<double>(k);
    for (const std::uint32_t c : children[i]) {
      if (!escapes[c]) continue;
      carried[c] += share;
      flow.mass.emplace(edge_id(Edge{v, w.vertex_at(c)}), share);
    }
  }

  // ccw contour order of the absorbed terminals around the tree.
  detail::PathUnionTree contour;
  contour.root = tree.source;
  for (const std::uint32_t i : absorbed)
    contour.add_path(tree.path_from_source(w.vertex_at(i)),
                     static_cast<int>(i));
  flow.leaves.clear();
  flow.leaf_mass.clear();
  for (const int id : contour.contour_order()) {
    flow.leaves.push_back(w.vertex_at(static_cast<std::size_t>(id)));
    flow.leaf_mass.push_back(carried[static_cast<std::size_t>(id)]);
  }
  flow.tree = std::move(tree);
  return flow;
}

/// Largest absolute conservation violation over internal vertices, plus the
/// deficit of the absorbed masses against 1, whichever is larger.
inline double max_conservation_violation(const TreeFlow& flow) {
  const Window& w = flow.tree.window;
  // Recover per-vertex flows by walking tree edges (child knows its parent).
  std::unordered_map<std::size_t, double> inflow, outflow;
  const std::size_t n = w.vertex_count();
  for (std::size_t i = 0; i < n; ++i) {
    if (flow.tree.parent_dir[i] == kNoParent) continue;
    const Vertex v = w.vertex_at(i);
    const Vertex p = step(v, static_cast<Dir>(flow.tree.parent_dir[i]));
    const double m = flow.mass_on(Edge{p, v});
    if (m == 0.0) continue;
    inflow[i] += m;
    outflow[w.index_of(p)] += m;
  }
  double worst = 0.0;
  const std::size_t root_idx = w.index_of(flow.tree.source);
  for (const auto& [i, in] : inflow) {
    if (i == root_idx) continue;
    if (w.on_boundary(w.vertex_at(i))) continue;  // absorbed
    const auto it = outflow.find(i);
    const double out = it == outflow.end() ? 0.0 : it->second;
    worst = std::max(worst, std::fabs(in - out));
  }
  const auto rt = outflow.find(root_idx);
  if (rt != outflow.end()) worst = std::max(worst, std::fabs(rt->second - 1.0));
  double total = 0.0;
  for (const double m : flow.leaf_mass) total += m;
  worst = std::max(worst, std::fabs(total - 1.0));
  return worst;
}

/**
 * Cumulative absorbed mass in ccw leaf order rotated so the reference path's
 * terminal sits last. The reference leaf plays both the minimal and maximal
 * role of the cyclic order; it is assigned the value 1, and prefix sums start
 * strictly ccw after it at that leaf's own (normalized) mass.
 */
struct CumulativeFlow {
  Vertex root;
  Vertex reference_leaf;
  std::vector<Vertex> leaves;   // rotated: reference last
  std::vector<double> values;   // normalized prefix sums; back() == 1
};

inline CumulativeFlow cumulative_flow(const TreeFlow& flow,
                                      const LatticePath& reference) {
  if (reference.size() < 1 || reference.front() != flow.tree.source)
    throw std::domain_error("cumulative_flow: reference must start at the root");
  const Vertex term = reference.back();
  const auto pos =
      std::find(flow.leaves.begin(), flow.leaves.end(), term);
  if (pos == flow.leaves.end())
    throw std::domain_error("cumulative_flow: reference terminal is not a flow leaf");
  // The reference must be the tree path to its terminal.
  const LatticePath tree_path = flow.tree.path_from_source(term);
  if (tree_path.vertices != reference.vertices)
    throw std::domain_error("cumulative_flow: reference is not a tree path");

  const std::size_t ref = static_cast<std::size_t>(pos - flow.leaves.begin());
  const std::size_t n = flow.leaves.size();
  double total = 0.0;
  for (const double m : flow.leaf_mass) total += m;

  CumulativeFlow cum;
  cum.root = flow.tree.source;
  cum.reference_leaf = term;
  double acc = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    const std::size_t i = (ref + j) % n;
    acc += flow.leaf_mass[i];
    cum.leaves.push_back(flow.leaves[i]);
    cum.values.push_back(i == ref ? 1.0 : acc / total);
  }
  return cum;
}

/// Signals that the requested noise level produced no sites in the window.
struct RetryNeeded : std::runtime_error {
  std::size_t realized_sites;
  explicit RetryNeeded(std::size_t realized)
      : std::runtime_error("voronoi_partition: no sites at this level; "
                           "retry with a larger window or smaller level"),
        realized_sites(realized) {}
};

/// Signals a class whose member count exceeds the configured cost cap.
struct ClassTooLarge : std::runtime_error {
  std::size_t size;
  explicit ClassTooLarge(std::size_t s)
      : std::runtime_error("averaged_labels: class exceeds the member cap"),
        size(s) {}
};

/**
 * Voronoi partition of the window induced by the low-noise site set
 * S = {z : xi(z) <= 4^-level}: every vertex maps to its l1-nearest site,
 * ties resolved by the smaller site noise (then lexicographic site order).
 */
struct VoronoiPartition {
  int level = 0;
  Window window;
  std::vector<Vertex> sites;        // lexicographic order; index = class id
  std::vector<double> site_xi;
  std::vector<std::uint32_t> assignment;  // window index -> class id

  std::uint32_t class_of(Vertex v) const {
    return assignment[window.index_of(v)];
  }
  std::vector<Vertex> members_of(std::uint32_t class_id) const {
    std::vector<Vertex> out;
    for (std::size_t i = 0; i < assignment.size(); ++i)
      if (assignment[i] == class_id) out.push_back(window.vertex_at(i));
    return out;
  }
  std::vector<std::size_t> class_sizes() const {
    std::vector<std::size_t> out(sites.size(), 0);
    for (const std::uint32_t c : assignment) ++out[c];
    return out;
  }
};

/// Deterministic nearest-site assignment from explicit sites and site noise.
/// Exact by layered breadth-first propagation: a vertex at distance d inherits
/// the best candidate among neighbors at distance d-1, which reproduces the
/// argmin over its full nearest-site set because l1 balls in a rectangle are
/// geodesically convex.
inline VoronoiPartition voronoi_from_sites(const Window& window,
                                           std::vector<Vertex> sites,
                                           std::vector<double> xi,
                                           int level = 0) {
  if (sites.empty()) throw RetryNeeded(0);
  if (sites.size() != xi.size())
    throw std::invalid_argument("voronoi_from_sites: site/noise size mismatch");
  std::vector<std::size_t> perm(sites.size());
  for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  std::sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    return sites[a] < sites[b];
  });
  VoronoiPartition part;
  part.level = level;
  part.window = window;
  for (const std::size_t i : perm) {
    if (!window.contains(sites[i]))
      throw std::invalid_argument("voronoi_from_sites: site outside window");
    if (!part.sites.empty() && part.sites.back() == sites[i])
      throw std::invalid_argument("voronoi_from_sites: duplicate site");
    part.sites.push_back(sites[i]);
    part.site_xi.push_back(xi[i]);
  }

  const std::size_t n = window.vertex_count();
  constexpr std::uint32_t kUnset = 0xffffffffu;
  part.assignment.assign(n, kUnset);
  std::vector<std::int32_t> dist(n, -1);

  auto better = [&](std::uint32_t a, std::uint32_t b) {  // is a better than b
    if (part.site_xi[a] != part.site_xi[b]) return part.site_xi[a] < part.site_xi[b];
    return part.sites[a] < part.sites[b];
  };

  std::vector<std::uint32_t> layer, next;
  for (std::uint32_t c = 0; c < part.sites.size(); ++c) {
    const std::size_t i = window.index_of(part.sites[c]);
    dist[i] = 0;
    if (part.assignment[i] == kUnset || better(c, part.assignment[i]))
      part.assignment[i] = c;
    layer.push_back(static_cast<std::uint32_t>(i));
  }
  std::int32_t d = 0;
  while (!layer.empty()) {
    for (const std::uint32_t i : layer) {
      const Vertex v = window.vertex_at(i);
      for (const Vertex u : neighbors(v)) {
        if (!window.contains(u)) continue;
        const std::size_t j = window.index_of(u);
        if (dist[j] == -1) {
          dist[j] = d + 1;
          part.assignment[j] = part.assignment[i];
          next.push_back(static_cast<std::uint32_t>(j));
        } else if (dist[j] == d + 1 &&
                   better(part.assignment[i], part.assignment[j])) {
          part.assignment[j] = part.assignment[i];
        }
      }
    }
    layer.swap(next);
    next.clear();
    ++d;
  }
  return part;
}

inline VoronoiPartition voronoi_partition(const VertexNoise& noise, int level,
                                          const Window& window) {
  if (level < 1)
    throw std::invalid_argument("voronoi_partition: level must be >= 1");
  double threshold = 1.0;
  for (int k = 0; k < level; ++k) threshold *= 0.25;
  std::vector<Vertex> sites;
  std::vector<double> xi;
  const std::size_t n = window.vertex_count();
  for (std::size_t i = 0; i < n; ++i) {
    const Vertex v = window.vertex_at(i);
    const double x = noise.xi(v);
    if (x <= threshold) {
      sites.push_back(v);
      xi.push_back(x);
    }
  }
  if (sites.empty()) throw RetryNeeded(0);
  VoronoiPartition part = voronoi_from_sites(window, sites, xi, level);
  return part;
}

/// Fraction of in-window nearest-neighbor pairs whose endpoints belong to
/// different classes; the empirical boundary density of the partition.
inline double class_disagreement_fraction(const VoronoiPartition& part) {
  const Window& w = part.window;
  const std::int32_t L = w.half_width;
  std::size_t mismatched = 0, pairs = 0;
  for (std::int32_t y = w.center.y - L; y <= w.center.y + L; ++y)
    for (std::int32_t x = w.center.x - L; x <= w.center.x + L; ++x) {
      const Vertex v{x, y};
      const std::uint32_t cv = part.class_of(v);
      if (x + 1 <= w.center.x + L) {
        ++pairs;
        if (part.class_of({x + 1, y}) != cv) ++mismatched;
      }
      if (y + 1 <= w.center.y + L) {
        ++pairs;
        if (part.class_of({x, y + 1}) != cv) ++mismatched;
      }
    }
  return static_cast<double>(mismatched) / static_cast<double>(pairs);
}

/**
 * Class-averaged cumulative flow and the per-edge/per-leaf labels it induces
 * for every kept member of one Voronoi class. Members are matched through
 * boundary positions taken ccw relative to the shared reference terminal, the
 * finite analogue of comparing leaves across trees; the cumulative value of a
 * member at a foreign position is the value at its ccw-largest leaf at or
 * before that position (empty sup reads as 0).
 */
struct MemberLabeling {
  Vertex root;
  TreeFlow flow;
  CumulativeFlow cumulative;
  LatticePath reference;
  std::vector<double> averaged;  // class-averaged M at this member's leaves
  std::vector<double> labels;    // F at this member's leaves (== averaged)
  std::unordered_map<std::uint64_t, double> phi;  // per-edge encoding
};

struct AveragedLabeling {
  int level = 0;
  std::uint32_t class_id = 0;
  Vertex site;
  Window window;
  Vertex reference_target;
  std::vector<MemberLabeling> members;
  std::size_t dropped_boundary_roots = 0;
  std::size_t dropped_noncoalescing = 0;
};

namespace detail {

/// Truncates the tree path from the root toward `target` at its first
/// boundary contact. Requires an interior root.
inline LatticePath truncated_reference(const GeodesicTree& tree, Vertex target) {
  const LatticePath full = tree.path_from_source(target);
  LatticePath out;
  for (const Vertex v : full.vertices) {
    out.vertices.push_back(v);
    if (tree.window.on_boundary(v)) break;
  }
  return out;
}

}  // namespace detail

template <WeightFieldLike F>
AveragedLabeling averaged_labels(const F& field, const VoronoiPartition& part,
                                 std::uint32_t class_id, const Window& window,
                                 std::size_t member_cap = 64) {
  if (class_id >= part.sites.size())
    throw std::invalid_argument("averaged_labels: unknown class id");
  if (!(window.center == part.window.center) ||
      window.half_width != part.window.half_width)
    throw std::invalid_argument("averaged_labels: window must match the partition");
  const std::vector<Vertex> all = part.members_of(class_id);
  if (all.size() > member_cap) throw ClassTooLarge(all.size());

  AveragedLabeling out;
  out.level = part.level;
  out.class_id = class_id;
  out.site = part.sites[class_id];
  out.window = window;
  out.reference_target = {window.center.x + window.half_width, window.center.y};

  const std::int64_t side = 8 * static_cast<std::int64_t>(window.half_width);
  const std::int64_t ref_pos = window.boundary_position(out.reference_target);
  auto rel = [&](Vertex g) {
    return (window.boundary_position(g) - ref_pos - 1 + side) % side;
  };

  // Per kept member: leaves sorted by relative boundary position with their
  // normalized cumulative values.
  struct MemberCurve {
    std::vector<std::int64_t> rels;
    std::vector<double> vals;
  };
  std::vector<MemberCurve> curves;

  for (const Vertex root : all) {
    if (window.on_boundary(root)) {
      ++out.dropped_boundary_roots;
      continue;
    }
    GeodesicTree tree = shortest_path_tree(field, root, window);
    const LatticePath ref = detail::truncated_reference(tree, out.reference_target);
    if (ref.back() != out.reference_target) {
      ++out.dropped_noncoalescing;
      continue;
    }
    MemberLabeling m;
    m.root = root;
    m.flow = unit_flow(std::move(tree));
    m.reference = ref;
    m.cumulative = cumulative_flow(m.flow, ref);

    MemberCurve curve;
    for (std::size_t j = 0; j < m.cumulative.leaves.size(); ++j) {
      curve.rels.push_back(rel(m.cumulative.leaves[j]));
      curve.vals.push_back(m.cumulative.values[j]);
    }
    curves.push_back(std::move(curve));
    out.members.push_back(std::move(m));
  }
  if (out.members.empty())
    throw std::domain_error("averaged_labels: no members with a coalescing reference");

  // Curves must already be sorted: the ccw contour order of the leaves equals
  // their ccw boundary order relative to the shared reference.
  for (const MemberCurve& c : curves)
    for (std::size_t j = 0; j + 1 < c.rels.size(); ++j)
      if (!(c.rels[j] < c.rels[j + 1]))
        throw std::logic_error("averaged_labels: contour/boundary order mismatch");

  auto value_at = [](const MemberCurve& c, std::int64_t r) {
    const auto it = std::upper_bound(c.rels.begin(), c.rels.end(), r);
    if (it == c.rels.begin()) return 0.0;
    return c.vals[static_cast<std::size_t>(it - c.rels.begin()) - 1];
  };
  const double inv = 1.0 / static_cast<double>(curves.size());
  auto averaged_at = [&](std::int64_t r) {
    double s = 0.0;
    for (const MemberCurve& c : curves) s += value_at(c, r);
    return s * inv;
  };

  for (MemberLabeling& m : out.members) {
    for (const Vertex leaf : m.cumulative.leaves)
      m.averaged.push_back(averaged_at(rel(leaf)));
    m.labels = m.averaged;
    for (std::size_t j = 0; j < m.cumulative.leaves.size(); ++j) {
      const LatticePath path = m.flow.tree.path_from_source(m.cumulative.leaves[j]);
      for (std::size_t s = 0; s + 1 < path.size(); ++s) {
        const std::uint64_t eid = edge_id(Edge{path.vertices[s], path.vertices[s + 1]});
        auto [it, inserted] = m.phi.emplace(eid, m.averaged[j]);
        if (!inserted) it->second = std::max(it->second, m.averaged[j]);
      }
    }
  }
  return out;
}

/// Label of a root-to-leaf tree path: the minimum per-edge encoding along it,
/// which equals the encoding of its terminal edge.
inline double label_of_path(const AveragedLabeling& labeling,
                            const LatticePath& path) {
  if (path.size() < 2)
    throw std::domain_error("label_of_path: path must contain an edge");
  const MemberLabeling* member = nullptr;
  for (const MemberLabeling& m : labeling.members)
    if (m.root == path.front()) {
      member = &m;
      break;
    }
  if (member == nullptr)
    throw std::domain_error("label_of_path: path root is not a kept class member");
  const Window& w = labeling.window;
  double label = 1.0;
  for (std::size_t s = 0; s + 1 < path.size(); ++s) {
    const Vertex child = path.vertices[s + 1];
    if (!w.contains(child) ||
        member->flow.tree.parent_of(child) != path.vertices[s])
      throw std::domain_error("label_of_path: path does not follow the tree");
    const auto it = member->phi.find(edge_id(Edge{path.vertices[s], child}));
    label = std::min(label, it == member->phi.end() ? 0.0 : it->second);
  }
  return label;
}

}  // namespace fpp
