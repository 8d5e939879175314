#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <utility>
#include <functional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace fpp {

/// A site of the Z^2 nearest-neighbor lattice.
struct Vertex {
  std::int32_t x = 0;
  std::int32_t y = 0;

  friend bool operator==(const Vertex&, const Vertex&) = default;
  friend auto operator<=>(const Vertex&, const Vertex&) = default;
};

/// Supported coordinate range. One-sided so that the zigzag code of a
/// coordinate fits in 31 bits and an edge id in 63 bits plus orientation.
inline constexpr std::int32_t kCoordMin = -(std::int32_t{1} << 30);
inline constexpr std::int32_t kCoordMax = (std::int32_t{1} << 30) - 1;

inline bool coord_in_range(std::int32_t c) {
  return c >= kCoordMin && c <= kCoordMax;
}

inline bool vertex_in_range(Vertex v) {
  return coord_in_range(v.x) && coord_in_range(v.y);
}

/// Axis directions in counterclockwise order.
enum class Dir : std::uint8_t { East = 0, North = 1, West = 2, South = 3 };

inline constexpr std::array<Dir, 4> kAllDirs = {Dir::East, Dir::North,
                                                Dir::West, Dir::South};

inline Vertex step(Vertex v, Dir d) {
  switch (d) {
    case Dir::East: return {v.x + 1, v.y};
    case Dir::North: return {v.x, v.y + 1};
    case Dir::West: return {v.x - 1, v.y};
    case Dir::South: return {v.x, v.y - 1};
  }
  return v;
}

inline Dir opposite(Dir d) {
  return static_cast<Dir>((static_cast<int>(d) + 2) % 4);
}

/// Direction of the unit step from `a` to `b`; throws if not neighbors.
inline Dir dir_between(Vertex a, Vertex b) {
  const std::int64_t dx = std::int64_t{b.x} - a.x;
  const std::int64_t dy = std::int64_t{b.y} - a.y;
  if (dx == 1 && dy == 0) return Dir::East;
  if (dx == 0 && dy == 1) return Dir::North;
  if (dx == -1 && dy == 0) return Dir::West;
  if (dx == 0 && dy == -1) return Dir::South;
  throw std::invalid_argument("dir_between: vertices are not lattice neighbors");
}

/// The four neighbors of `v` in fixed order (E, N, W, S).
inline std::array<Vertex, 4> neighbors(Vertex v) {
  return {step(v, Dir::East), step(v, Dir::North), step(v, Dir::West),
          step(v, Dir::South)};
}

/// An undirected nearest-neighbor edge. Stored endpoints are normalized so
/// that `a` is the lexicographically smaller endpoint.
struct Edge {
  Vertex a;
  Vertex b;

  Edge(Vertex u, Vertex v) {
    if (v < u) std::swap(u, v);
    a = u;
    b = v;
    const std::int64_t dx = std::int64_t{b.x} - a.x;
    const std::int64_t dy = std::int64_t{b.y} - a.y;
    if (!((dx == 1 && dy == 0) || (dx == 0 && dy == 1)))
      throw std::invalid_argument("Edge: endpoints must differ by one unit step");
  }

  bool horizontal() const { return b.x != a.x; }

  friend bool operator==(const Edge&, const Edge&) = default;
};

namespace detail {

// Zigzag code: 0,-1,1,-2,2,... -> 0,1,2,3,4,...  Within the supported
// coordinate range the result fits in 31 bits.
inline std::uint64_t zigzag31(std::int32_t c) {
  const std::int64_t v = c;
  return static_cast<std::uint64_t>((v << 1) ^ (v >> 63)) & 0x7fffffffu;
}

// Spreads the low 31 bits of x so they occupy even bit positions.
inline std::uint64_t interleave_spread(std::uint64_t x) {
  x &= 0x7fffffffull;
  x = (x | (x << 16)) & 0x0000ffff0000ffffull;
  x = (x | (x << 8)) & 0x00ff00ff00ff00ffull;
  x = (x | (x << 4)) & 0x0f0f0f0f0f0f0f0full;
  x = (x | (x << 2)) & 0x3333333333333333ull;
  x = (x | (x << 1)) & 0x5555555555555555ull;
  return x;
}

}  // namespace detail

/// Injective 64-bit key of a vertex (zigzag-interleaved coordinates).
inline std::uint64_t vertex_key(Vertex v) {
  if (!vertex_in_range(v))
    throw std::out_of_range("vertex_key: coordinate outside supported range");
  return detail::interleave_spread(detail::zigzag31(v.x)) |
         (detail::interleave_spread(detail::zigzag31(v.y)) << 1);
}

/// Injective 64-bit id of an undirected edge: the canonical endpoint's
/// zigzag-interleaved coordinates shifted left once, orientation in bit 0.
/// Pure function of the edge; independent of any window.
inline std::uint64_t edge_id(const Edge& e) {
  if (!vertex_in_range(e.a) || !vertex_in_range(e.b))
    throw std::out_of_range("edge_id: endpoint outside supported range");
  const std::uint64_t base = detail::interleave_spread(detail::zigzag31(e.a.x)) |
                             (detail::interleave_spread(detail::zigzag31(e.a.y)) << 1);
  return (base << 1) | (e.horizontal() ? 1u : 0u);
}

inline std::uint64_t edge_id(Vertex u, Vertex v) { return edge_id(Edge{u, v}); }

/// A finite square window: center + [-L, L]^2.
struct Window {
  Vertex center;
  std::int32_t half_width = 0;

  std::int64_t side() const { return 2 * std::int64_t{half_width} + 1; }
  std::int64_t vertex_count() const { return side() * side(); }

  std::int32_t min_x() const { return center.x - half_width; }
  std::int32_t max_x() const { return center.x + half_width; }
  std::int32_t min_y() const { return center.y - half_width; }
  std::int32_t max_y() const { return center.y + half_width; }

  bool contains(Vertex v) const {
    return v.x >= min_x() && v.x <= max_x() && v.y >= min_y() && v.y <= max_y();
  }

  bool on_boundary(Vertex v) const {
    return contains(v) && (v.x == min_x() || v.x == max_x() || v.y == min_y() ||
                           v.y == max_y());
  }

  bool contains_window(const Window& inner) const {
    return inner.min_x() >= min_x() && inner.max_x() <= max_x() &&
           inner.min_y() >= min_y() && inner.max_y() <= max_y();
  }

  /// Row-major index of an in-window vertex.
  std::size_t index_of(Vertex v) const {
    return static_cast<std::size_t>(std::int64_t{v.y} - min_y()) *
               static_cast<std::size_t>(side()) +
           static_cast<std::size_t>(std::int64_t{v.x} - min_x());
  }

  Vertex vertex_at(std::size_t idx) const {
    const auto s = static_cast<std::size_t>(side());
    return {static_cast<std::int32_t>(min_x() + static_cast<std::int64_t>(idx % s)),
            static_cast<std::int32_t>(min_y() + static_cast<std::int64_t>(idx / s))};
  }

  /// Position of a boundary vertex along the counterclockwise boundary walk
  /// that starts at the east midpoint (max_x, center.y). Range [0, 8L).
  std::int64_t boundary_position(Vertex v) const {
    if (!on_boundary(v))
      throw std::invalid_argument("boundary_position: vertex not on boundary");
    const std::int64_t L = half_width;
    if (L == 0) return 0;
    const std::int64_t dx = std::int64_t{v.x} - center.x;
    const std::int64_t dy = std::int64_t{v.y} - center.y;
    if (dx == L && dy >= 0 && dy < L) return dy;                  // east face up
    if (dy == L && dx > -L) return L + (L - dx);                  // north face
    if (dx == -L && dy > -L) return 3 * L + (L - dy);             // west face
    if (dy == -L && dx < L) return 5 * L + (L + dx);              // south face
    return 7 * L + (L + dy);                                      // east face below center
  }

  friend bool operator==(const Window&, const Window&) = default;
};

/// Window sized by the truncation policy: half-width = ceil(1.5 * radius).
inline Window window_for_radius(Vertex center, std::int64_t radius) {
  if (radius < 0) throw std::invalid_argument("window_for_radius: negative radius");
  const std::int64_t hw = (3 * radius + 1) / 2;
  return Window{center, static_cast<std::int32_t>(hw)};
}

/// Closed half-plane with normal (cos(i*pi/4), sin(i*pi/4)) through `anchor`.
/// Membership uses exact integer arithmetic on the scaled normal.
struct HalfPlane {
  int octant = 0;  // 0..7
  Vertex anchor;

  HalfPlane(int i, Vertex a) : octant(i), anchor(a) {
    if (i < 0 || i > 7) throw std::invalid_argument("HalfPlane: octant must be 0..7");
  }

  std::pair<int, int> normal() const {
    static constexpr std::array<std::pair<int, int>, 8> n = {{{1, 0},
                                                              {1, 1},
                                                              {0, 1},
                                                              {-1, 1},
                                                              {-1, 0},
                                                              {-1, -1},
                                                              {0, -1},
                                                              {1, -1}}};
    return n[static_cast<std::size_t>(octant)];
  }

  bool contains(Vertex v) const {
    const auto [nx, ny] = normal();
    const std::int64_t dx = std::int64_t{v.x} - anchor.x;
    const std::int64_t dy = std::int64_t{v.y} - anchor.y;
    return nx * dx + ny * dy >= 0;
  }
};

/// An ordered nearest-neighbor vertex sequence.
struct LatticePath {
  std::vector<Vertex> vertices;

  bool empty() const { return vertices.empty(); }
  std::size_t size() const { return vertices.size(); }
  Vertex front() const { return vertices.front(); }
  Vertex back() const { return vertices.back(); }

  bool is_nearest_neighbor() const {
    for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
      const auto a = vertices[i];
      const auto b = vertices[i + 1];
      if (std::abs(std::int64_t{a.x} - b.x) + std::abs(std::int64_t{a.y} - b.y) != 1)
        return false;
    }
    return true;
  }

  bool is_self_avoiding() const {
    std::unordered_map<std::uint64_t, int> seen;
    seen.reserve(vertices.size() * 2);
    for (const auto& v : vertices)
      if (++seen[vertex_key(v)] > 1) return false;
    return true;
  }

  friend bool operator==(const LatticePath&, const LatticePath&) = default;
};

namespace detail {

// Union tree of a few same-root paths, used by the ccw comparison. Parent
// conflicts (re-merging paths) are rejected: the inputs must come from a tree.
struct PathUnionTree {
  std::unordered_map<std::uint64_t, Vertex> parent;
  std::unordered_map<std::uint64_t, std::array<bool, 4>> children;
  std::unordered_map<std::uint64_t, std::vector<int>> terminal_ids;
  Vertex root;

  void add_path(const LatticePath& p, int id) {
    if (p.empty()) throw std::invalid_argument("ccw_compare: empty path");
    for (std::size_t i = 0; i + 1 < p.size(); ++i) {
      const Vertex u = p.vertices[i];
      const Vertex v = p.vertices[i + 1];
      const auto key = vertex_key(v);
      auto it = parent.find(key);
      if (it == parent.end()) {
        parent.emplace(key, u);
        children[vertex_key(u)][static_cast<int>(dir_between(u, v))] = true;
      } else if (!(it->second == u)) {
        throw std::invalid_argument("ccw_compare: paths re-merge; not a tree");
      }
      if (v == root)
        throw std::invalid_argument("ccw_compare: path revisits the root");
    }
    terminal_ids[vertex_key(p.back())].push_back(id);
  }

  // Iterative contour DFS. Children of the root are swept counterclockwise
  // starting at East inclusive; children of any other vertex are swept
  // counterclockwise starting just after the parent direction. A path id is
  // emitted when its terminal vertex is first reached. The emitted sequence
  // is the cyclic planar order of the paths.
  std::vector<int> contour_order() const {
    std::vector<int> order;
    struct Frame {
      Vertex v;
      int base;  // direction index to start the sweep at
      int next;  // offset 0..3 within the sweep
    };
    std::vector<Frame> stack;
    auto emit = [&](Vertex v) {
      auto it = terminal_ids.find(vertex_key(v));
      if (it != terminal_ids.end())
        for (int id : it->second) order.push_back(id);
    };
    emit(root);
    stack.push_back({root, 0, 0});
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (f.next == 4) {
        stack.pop_back();
        continue;
      }
      const int d = (f.base + f.next) % 4;
      ++f.next;
      auto it = children.find(vertex_key(f.v));
      if (it == children.end() || !it->second[d]) continue;
      const Vertex c = step(f.v, static_cast<Dir>(d));
      emit(c);
      // Child sweep starts just after the direction back to the parent.
      stack.push_back({c, (static_cast<int>(opposite(static_cast<Dir>(d))) + 1) % 4, 0});
    }
    return order;
  }
};

}  // namespace detail

/// Counterclockwise comparison of two same-root paths relative to a reference
/// path. Returns -1 if p precedes q in the counterclockwise order that starts
/// just above the reference, +1 if q precedes p, 0 if the paths are equal.
/// The reference is the maximal element of the order (cyclic convention).
inline int ccw_compare(const LatticePath& p, const LatticePath& q,
                       const LatticePath& reference) {
  if (p.empty() || q.empty() || reference.empty())
    throw std::invalid_argument("ccw_compare: empty path");
  if (!(p.front() == q.front()) || !(p.front() == reference.front()))
    throw std::invalid_argument("ccw_compare: paths must share a root");
  if (p == q) return 0;
  if (reference.size() < 2)
    throw std::invalid_argument("ccw_compare: reference must leave the root");
  if (p == reference) return +1;
  if (q == reference) return -1;
  if (p.size() == 1) return -1;  // bare root precedes everything but itself
  if (q.size() == 1) return +1;

  detail::PathUnionTree tree;
  tree.root = p.front();
  tree.add_path(p, 0);
  tree.add_path(q, 1);
  tree.add_path(reference, 2);
  const std::vector<int> cyc = tree.contour_order();
  // Rotate so the reference comes last, then compare positions.
  const std::size_t n = cyc.size();
  std::size_t ref_pos = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (cyc[i] == 2) ref_pos = i;
  auto linear_pos = [&](int id) {
    for (std::size_t i = 0; i < n; ++i)
      if (cyc[i] == id) return (i + n - ref_pos - 1) % n;
    throw std::logic_error("ccw_compare: path not emitted");
  };
  return linear_pos(0) < linear_pos(1) ? -1 : +1;
}

}  // namespace fpp

template <>
struct std::hash<fpp::Vertex> {
  std::size_t operator()(const fpp::Vertex& v) const noexcept {
    return std::hash<std::uint64_t>{}(fpp::vertex_key(v));
  }
};
