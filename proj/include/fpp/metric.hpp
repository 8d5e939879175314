#pragma once

#include <algorithm>
#include <cstring>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <vector>

#include "fpp/lattice.hpp"
#include "fpp/weights.hpp"

namespace fpp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr std::uint8_t kNoParent = 0xff;

/// Field concept: anything exposing weight(Edge) -> double. A weight of +inf
/// marks an excluded edge.
template <class F>
concept WeightFieldLike = requires(const F& f, const Edge& e) {
  { f.weight(e) } -> std::convertible_to<double>;
};

/// Edge-weight field restricted to a half-plane: any edge with an endpoint
/// outside the half-plane is excluded (infinite weight).
struct RestrictedField {
  const EdgeWeightField& base;
  HalfPlane half_plane;

  double weight(const Edge& e) const {
    if (!half_plane.contains(e.a) || !half_plane.contains(e.b)) return kInf;
    return base.weight(e);
  }
};

/**
 * Single-source shortest-path tree over a window.
 *
 * `dist` and `parent_dir` are row-major over the window; parent_dir stores
 * the direction from a vertex toward its tree parent (kNoParent at the source
 * and at vertices that were not settled). When built with stop targets the
 * settled region is exact but partial and `complete` is false.
 */
struct GeodesicTree {
  Vertex source;
  Window window;
  std::vector<double> dist;
  std::vector<std::uint8_t> parent_dir;
  bool complete = false;

  bool settled(Vertex v) const {
    return window.contains(v) && dist[window.index_of(v)] < kInf;
  }

  double distance_at(Vertex v) const {
    if (!window.contains(v))
      throw std::out_of_range("distance_at: vertex outside window");
    const double d = dist[window.index_of(v)];
    if (d == kInf) throw std::domain_error("distance_at: vertex not settled");
    return d;
  }

  std::optional<Vertex> parent_of(Vertex v) const {
    if (!window.contains(v)) return std::nullopt;
    const std::uint8_t d = parent_dir[window.index_of(v)];
    if (d == kNoParent) return std::nullopt;
    return step(v, static_cast<Dir>(d));
  }

  /// Tree path from the source to `v` (the unique tie-broken geodesic).
  LatticePath path_from_source(Vertex v) const {
    if (!settled(v)) throw std::domain_error("path_from_source: vertex not settled");
    LatticePath p;
    Vertex cur = v;
    p.vertices.push_back(cur);
    while (!(cur == source)) {
      const auto par = parent_of(cur);
      if (!par) throw std::logic_error("path_from_source: broken parent chain");
      cur = *par;
      p.vertices.push_back(cur);
    }
    std::reverse(p.vertices.begin(), p.vertices.end());
    return p;
  }
};

/**
 * Exact Dijkstra over the window's induced subgraph. Ties in tentative
 * distance are broken toward the parent edge with the smaller edge id, which
 * makes the returned tree a deterministic function of the field alone.
 * If `stop_targets` is nonempty the search halts once all targets are
 * settled; settled labels are still exact.
 */
template <WeightFieldLike F>
GeodesicTree shortest_path_tree(const F& field, Vertex source, const Window& window,
                                std::span<const Vertex> stop_targets = {}) {
  if (!window.contains(source))
    throw std::invalid_argument("shortest_path_tree: source outside window");
  if (!vertex_in_range(Vertex{window.min_x(), window.min_y()}) ||
      !vertex_in_range(Vertex{window.max_x(), window.max_y()}))
    throw std::out_of_range("shortest_path_tree: window outside supported range");

  GeodesicTree tree;
  tree.source = source;
  tree.window = window;
  const std::size_t n = static_cast<std::size_t>(window.vertex_count());
  tree.dist.assign(n, kInf);
  tree.parent_dir.assign(n, kNoParent);

  std::vector<std::uint8_t> settled(n, 0);
  std::vector<std::uint8_t> is_target(stop_targets.empty() ? 0 : n, 0);
  std::size_t targets_left = 0;
  for (const Vertex t : stop_targets) {
    if (!window.contains(t))
      throw std::invalid_argument("shortest_path_tree: stop target outside window");
    const auto i = window.index_of(t);
    if (!is_target[i]) {
      is_target[i] = 1;
      ++targets_left;
    }
  }

  // (tentative distance, window index); lazy deletion via the settled mask.
  using Item = std::pair<double, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;

  // Tentative parent edge ids, kept so equal-distance relaxations can settle
  // on the smaller edge id deterministically.
  std::vector<std::uint64_t> parent_eid(n, ~0ull);

  const auto src_idx = window.index_of(source);
  tree.dist[src_idx] = 0.0;
  heap.push({0.0, static_cast<std::uint32_t>(src_idx)});

  const std::int64_t side = window.side();
  while (!heap.empty()) {
    const auto [d, ui] = heap.top();
    heap.pop();
    if (settled[ui]) continue;
    settled[ui] = 1;
    if (targets_left > 0 && is_target[ui] && --targets_left == 0) break;

    const Vertex u = window.vertex_at(ui);
    for (int k = 0; k < 4; ++k) {
      const Vertex v = step(u, static_cast<Dir>(k));
      if (!window.contains(v)) continue;
      const std::size_t vi =
          k == 0 ? ui + 1 : k == 1 ? ui + static_cast<std::size_t>(side)
          : k == 2 ? ui - 1 : ui - static_cast<std::size_t>(side);
      if (settled[vi]) continue;
      const double w = field.weight(Edge{u, v});
      if (!(w < kInf)) continue;
      const double nd = d + w;
      if (nd < tree.dist[vi]) {
        tree.dist[vi] = nd;
        tree.parent_dir[vi] = static_cast<std::uint8_t>(opposite(static_cast<Dir>(k)));
        parent_eid[vi] = edge_id(u, v);
        heap.push({nd, static_cast<std::uint32_t>(vi)});
      } else if (nd == tree.dist[vi]) {
        const std::uint64_t eid = edge_id(u, v);
        if (eid < parent_eid[vi]) {
          tree.parent_dir[vi] = static_cast<std::uint8_t>(opposite(static_cast<Dir>(k)));
          parent_eid[vi] = eid;
        }
      }
    }
  }
  tree.complete = stop_targets.empty();
  if (!tree.complete) {
    // Clear tentative labels of frontier vertices the early exit left behind;
    // only settled labels are exact.
    for (std::size_t i = 0; i < n; ++i)
      if (!settled[i]) {
        tree.dist[i] = kInf;
        tree.parent_dir[i] = kNoParent;
      }
  }
  return tree;
}

/// A geodesic together with its passage time.
struct GeodesicSegment {
  LatticePath path;
  double weight = 0.0;
};

/// Unique tie-broken geodesic between two window vertices.
template <WeightFieldLike F>
GeodesicSegment geodesic(const F& field, Vertex x, Vertex y, const Window& window) {
  const Vertex targets[1] = {y};
  const GeodesicTree tree = shortest_path_tree(field, x, window, targets);
  return {tree.path_from_source(y), tree.distance_at(y)};
}

/// Shortest-path tree of the half-plane metric: edges with an endpoint
/// outside the half-plane never relax, vertices outside it stay unreached.
inline GeodesicTree halfplane_tree(const EdgeWeightField& field, const HalfPlane& h,
                                   Vertex source, const Window& window) {
  if (!h.contains(source))
    throw std::invalid_argument("halfplane_tree: source outside half-plane");
  return shortest_path_tree(RestrictedField{field, h}, source, window);
}

/// Outcome of recomputing a geodesic in a strictly larger window.
struct StabilityReport {
  enum class Verdict { Stable, Changed, Suspect };
  Verdict verdict = Verdict::Stable;
  bool boundary_contact = false;  // small-window geodesic touched the boundary
  GeodesicSegment small;
  GeodesicSegment large;

  bool stable() const { return verdict == Verdict::Stable; }
};

/// Recomputes Geo(x, y) in `larger` and reports whether the smaller window
/// already contained the true geodesic. Any boundary contact in the small
/// window marks the result suspect even if the paths agree.
template <WeightFieldLike F>
StabilityReport window_stability_check(const F& field, Vertex x, Vertex y,
                                       const Window& small, const Window& larger) {
  if (!larger.contains_window(small))
    throw std::invalid_argument("window_stability_check: windows not nested");
  StabilityReport r;
  r.small = geodesic(field, x, y, small);
  r.large = geodesic(field, x, y, larger);
  for (const Vertex v : r.small.path.vertices)
    if (small.on_boundary(v)) {
      r.boundary_contact = true;
      break;
    }
  const bool same = r.small.path == r.large.path &&
                    r.small.weight == r.large.weight;
  r.verdict = !same ? StabilityReport::Verdict::Changed
              : r.boundary_contact ? StabilityReport::Verdict::Suspect
                                   : StabilityReport::Verdict::Stable;
  return r;
}

namespace detail {

inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_i32(std::vector<std::uint8_t>& out, std::int32_t v) {
  const auto u = static_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}
inline std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{p[i]} << (8 * i);
  return v;
}
inline std::int32_t get_i32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t{p[i]} << (8 * i);
  return static_cast<std::int32_t>(v);
}

}  // namespace detail

inline constexpr std::uint64_t kTreeMagic = 0x31'54'50'50'46ull;  // "FPPT1"

/// Compact little-endian tree image: header (magic, source, window, count),
/// then per vertex a float64 distance and a parent-direction byte, row-major.
inline std::vector<std::uint8_t> serialize_tree(const GeodesicTree& t) {
  std::vector<std::uint8_t> out;
  out.reserve(32 + t.dist.size() * 9);
  detail::put_u64(out, kTreeMagic);
  detail::put_i32(out, t.source.x);
  detail::put_i32(out, t.source.y);
  detail::put_i32(out, t.window.center.x);
  detail::put_i32(out, t.window.center.y);
  detail::put_i32(out, t.window.half_width);
  out.push_back(t.complete ? 1 : 0);
  detail::put_u64(out, t.dist.size());
  for (std::size_t i = 0; i < t.dist.size(); ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &t.dist[i], 8);
    detail::put_u64(out, bits);
    out.push_back(t.parent_dir[i]);
  }
  return out;
}

inline GeodesicTree deserialize_tree(std::span<const std::uint8_t> in) {
  if (in.size() < 37 || detail::get_u64(in.data()) != kTreeMagic)
    throw std::invalid_argument("deserialize_tree: bad header");
  GeodesicTree t;
  t.source = {detail::get_i32(in.data() + 8), detail::get_i32(in.data() + 12)};
  t.window = Window{{detail::get_i32(in.data() + 16), detail::get_i32(in.data() + 20)},
                    detail::get_i32(in.data() + 24)};
  t.complete = in[28] != 0;
  const std::uint64_t n = detail::get_u64(in.data() + 29);
  if (n != static_cast<std::uint64_t>(t.window.vertex_count()) ||
      in.size() != 37 + n * 9)
    throw std::invalid_argument("deserialize_tree: size mismatch");
  t.dist.resize(n);
  t.parent_dir.resize(n);
  const std::uint8_t* p = in.data() + 37;
  for (std::uint64_t i = 0; i < n; ++i, p += 9) {
    const std::uint64_t bits = detail::get_u64(p);
    std::memcpy(&t.dist[i], &bits, 8);
    t.parent_dir[i] = p[8];
  }
  return t;
}

}  // namespace fpp
