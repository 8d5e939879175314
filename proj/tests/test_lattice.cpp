#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <unordered_map>
#include <unordered_set>

#include "fpp/lattice.hpp"
#include "oracles.hpp"

using namespace fpp;

TEST_CASE("neighbors enumerate E, N, W, S in that order") {
  const auto n = neighbors({2, -3});
  REQUIRE(n[0] == Vertex{3, -3});
  REQUIRE(n[1] == Vertex{2, -2});
  REQUIRE(n[2] == Vertex{1, -3});
  REQUIRE(n[3] == Vertex{2, -4});
}

TEST_CASE("edge canonical form ignores endpoint order") {
  REQUIRE(Edge({0, 0}, {1, 0}) == Edge({1, 0}, {0, 0}));
  REQUIRE(edge_id(Edge({0, 0}, {1, 0})) == edge_id(Edge({1, 0}, {0, 0})));
  REQUIRE(Edge({0, 0}, {1, 0}).horizontal());
  REQUIRE_FALSE(Edge({0, 0}, {0, 1}).horizontal());
  REQUIRE_THROWS_AS(Edge({0, 0}, {1, 1}), std::invalid_argument);
  REQUIRE_THROWS_AS(Edge({0, 0}, {0, 0}), std::invalid_argument);
}

TEST_CASE("edge ids separate orientation and stay injective on a patch") {
  REQUIRE(edge_id(Edge({0, 0}, {1, 0})) != edge_id(Edge({0, 0}, {0, 1})));

  // Intent: no collisions across every edge of a 512 x 512 patch straddling
  // the axes, where zigzag coding is most at risk of aliasing.
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(1u << 20);
  for (std::int32_t x = -256; x < 256; ++x)
    for (std::int32_t y = -256; y < 256; ++y) {
      REQUIRE(seen.insert(edge_id(Edge({x, y}, {x + 1, y}))).second);
      REQUIRE(seen.insert(edge_id(Edge({x, y}, {x, y + 1}))).second);
    }
}

TEST_CASE("edge ids reject coordinates outside the supported range") {
  const std::int32_t big = (std::int32_t{1} << 30);  // one past kCoordMax
  REQUIRE_THROWS_AS(edge_id(Edge({big, 0}, {big, 1})), std::out_of_range);
  REQUIRE_NOTHROW(edge_id(Edge({kCoordMax - 1, 5}, {kCoordMax, 5})));
  REQUIRE_NOTHROW(edge_id(Edge({kCoordMin, 5}, {kCoordMin + 1, 5})));
}

TEST_CASE("window indexing round-trips and boundary walk is a cycle") {
  const Window w{{3, -2}, 5};
  REQUIRE(w.vertex_count() == 121);
  for (std::size_t i = 0; i < 121; ++i) REQUIRE(w.index_of(w.vertex_at(i)) == i);

  // Boundary positions: a bijection onto [0, 8L) starting east-midpoint.
  std::unordered_set<std::int64_t> pos;
  for (std::size_t i = 0; i < 121; ++i) {
    const Vertex v = w.vertex_at(i);
    if (!w.on_boundary(v)) continue;
    const auto p = w.boundary_position(v);
    REQUIRE(p >= 0);
    REQUIRE(p < 40);
    REQUIRE(pos.insert(p).second);
  }
  REQUIRE(pos.size() == 40);
  REQUIRE(w.boundary_position({8, -2}) == 0);
  // One counterclockwise step from the east midpoint goes up the east face.
  REQUIRE(w.boundary_position({8, -1}) == 1);
}

TEST_CASE("half-plane membership uses exact integer normals") {
  for (int i = 0; i < 8; ++i) {
    const HalfPlane h{i, {0, 0}};
    REQUIRE(h.contains({0, 0}));  // anchor always inside (closed)
    const auto [nx, ny] = h.normal();
    REQUIRE(h.contains({nx * 7, ny * 7}));
    REQUIRE_FALSE(h.contains({-nx * 7, -ny * 7}));
  }
  // Diagonal boundary vertices are inside (closed half-plane).
  const HalfPlane diag{1, {0, 0}};  // normal (1,1)
  REQUIRE(diag.contains({1, -1}));
  REQUIRE(diag.contains({-3, 3}));
  REQUIRE_FALSE(diag.contains({-2, 1}));
}

TEST_CASE("path predicates") {
  LatticePath p{{{0, 0}, {1, 0}, {1, 1}, {0, 1}}};
  REQUIRE(p.is_nearest_neighbor());
  REQUIRE(p.is_self_avoiding());
  p.vertices.push_back({0, 0});
  REQUIRE(p.is_nearest_neighbor());
  REQUIRE_FALSE(p.is_self_avoiding());
  LatticePath jump{{{0, 0}, {2, 0}}};
  REQUIRE_FALSE(jump.is_nearest_neighbor());
}

namespace {

LatticePath mk(std::initializer_list<Vertex> vs) {
  return LatticePath{std::vector<Vertex>(vs)};
}

}  // namespace

TEST_CASE("ccw order at a degree-3 root with the reference exiting east") {
  const auto ref = mk({{0, 0}, {1, 0}});
  const auto north = mk({{0, 0}, {0, 1}});
  const auto west = mk({{0, 0}, {-1, 0}});
  REQUIRE(ccw_compare(north, west, ref) == -1);
  REQUIRE(ccw_compare(west, north, ref) == +1);
  REQUIRE(ccw_compare(north, north, ref) == 0);
  // The reference is the maximal element of the order.
  REQUIRE(ccw_compare(north, ref, ref) == -1);
  REQUIRE(ccw_compare(ref, west, ref) == +1);
}

TEST_CASE("ccw order distinguishes branches above and below the reference") {
  const auto ref = mk({{0, 0}, {1, 0}, {2, 0}});
  // Hugging the reference from above (late upward branch) sorts before an
  // early upward branch; below-reference branches sort after all of them.
  const auto up_late = mk({{0, 0}, {1, 0}, {1, 1}});
  const auto up_early = mk({{0, 0}, {0, 1}});
  const auto down_early = mk({{0, 0}, {0, -1}});
  const auto down_late = mk({{0, 0}, {1, 0}, {1, -1}});
  REQUIRE(ccw_compare(up_late, up_early, ref) == -1);
  REQUIRE(ccw_compare(up_early, down_early, ref) == -1);
  REQUIRE(ccw_compare(down_early, down_late, ref) == -1);
  REQUIRE(ccw_compare(down_late, ref, ref) == -1);
}

TEST_CASE("ccw comparison rejects foreign roots and re-merging paths") {
  const auto ref = mk({{0, 0}, {1, 0}});
  const auto other_root = mk({{5, 5}, {5, 6}});
  const auto a = mk({{0, 0}, {0, 1}});
  REQUIRE_THROWS_AS(ccw_compare(a, other_root, ref), std::invalid_argument);
  // Two paths that separate and rejoin cannot come from one tree.
  const auto left = mk({{0, 0}, {0, 1}, {1, 1}, {1, 2}});
  const auto right = mk({{0, 0}, {1, 0}, {1, 1}, {2, 1}});
  REQUIRE_THROWS_AS(ccw_compare(left, right, ref), std::invalid_argument);
}

TEST_CASE("prefix paths are visited on arrival") {
  const auto ref = mk({{0, 0}, {0, 1}});
  const auto whole = mk({{0, 0}, {1, 0}, {2, 0}, {2, 1}});
  const auto prefix = mk({{0, 0}, {1, 0}});
  REQUIRE(ccw_compare(prefix, whole, ref) == -1);
  REQUIRE(ccw_compare(whole, prefix, ref) == +1);
}

namespace {

// Random lattice tree grown inside a window; returns parent map plus the
// root-to-leaf path of every childless vertex.
struct RandomTree {
  std::vector<LatticePath> leaf_paths;
};

RandomTree grow_random_tree(std::uint64_t seed, const Window& w, Vertex root,
                            std::size_t target_size) {
  std::mt19937_64 gen(seed);
  std::unordered_map<Vertex, Vertex> parent;
  std::unordered_map<Vertex, int> child_count;
  std::vector<Vertex> in_tree{root};
  std::unordered_set<std::uint64_t> used{vertex_key(root)};
  int stalled = 0;
  while (in_tree.size() < target_size && stalled < 10000) {
    const Vertex v = in_tree[gen() % in_tree.size()];
    std::array<Vertex, 4> cand = neighbors(v);
    std::shuffle(cand.begin(), cand.end(), gen);
    bool grew = false;
    for (const Vertex c : cand) {
      if (!w.contains(c) || used.count(vertex_key(c))) continue;
      parent[c] = v;
      ++child_count[v];
      used.insert(vertex_key(c));
      in_tree.push_back(c);
      grew = true;
      break;
    }
    stalled = grew ? 0 : stalled + 1;
  }
  RandomTree t;
  for (const Vertex v : in_tree) {
    if (child_count.count(v) || v == root) continue;
    LatticePath p;
    Vertex cur = v;
    p.vertices.push_back(cur);
    while (!(cur == root)) {
      cur = parent.at(cur);
      p.vertices.push_back(cur);
    }
    std::reverse(p.vertices.begin(), p.vertices.end());
    t.leaf_paths.push_back(std::move(p));
  }
  return t;
}

}  // namespace

TEST_CASE("ccw comparison totally orders random tree leaves, matching the "
          "recursive orientation oracle") {
  for (std::uint64_t seed : {11u, 22u, 33u, 44u, 55u}) {
    const Window w{{0, 0}, 9};
    auto tree = grow_random_tree(seed, w, {0, 0}, 150);
    REQUIRE(tree.leaf_paths.size() >= 10);
    const LatticePath ref = tree.leaf_paths[tree.leaf_paths.size() / 2];

    auto cmp = [&](const LatticePath& a, const LatticePath& b) {
      return ccw_compare(a, b, ref) < 0;
    };
    std::sort(tree.leaf_paths.begin(), tree.leaf_paths.end(), cmp);

    // Strict total order: every adjacent pair strictly increasing, the
    // reference lands last, and the independent oracle agrees on all pairs.
    REQUIRE(tree.leaf_paths.back() == ref);
    for (std::size_t i = 0; i + 1 < tree.leaf_paths.size(); ++i)
      REQUIRE(ccw_compare(tree.leaf_paths[i], tree.leaf_paths[i + 1], ref) == -1);
    for (std::size_t i = 0; i < tree.leaf_paths.size(); ++i)
      for (std::size_t j = 0; j < tree.leaf_paths.size(); ++j) {
        const int got = ccw_compare(tree.leaf_paths[i], tree.leaf_paths[j], ref);
        const int want = oracle::ccw_compare_recursive(tree.leaf_paths[i],
                                                       tree.leaf_paths[j], ref);
        REQUIRE(got == want);
        REQUIRE(got == -ccw_compare(tree.leaf_paths[j], tree.leaf_paths[i], ref));
      }
  }
}
