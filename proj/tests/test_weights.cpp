#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_set>
#include <vector>

#include "fpp/weights.hpp"

using namespace fpp;

namespace {

// Edges of a deterministic patch, used as sampling keys.
std::vector<Edge> patch_edges(int n) {
  std::vector<Edge> es;
  es.reserve(static_cast<std::size_t>(n) * n * 2);
  for (std::int32_t x = 0; x < n; ++x)
    for (std::int32_t y = 0; y < n; ++y) {
      es.push_back(Edge({x, y}, {x + 1, y}));
      es.push_back(Edge({x, y}, {x, y + 1}));
    }
  return es;
}

double ks_statistic(std::vector<double> xs, const WeightDistribution& d) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = d.cdf(xs[i]);
    ks = std::max(ks, std::max(f - i / n, (i + 1) / n - f));
  }
  return ks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, sa = 0, sb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    sa += (a[i] - ma) * (a[i] - ma);
    sb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(sa * sb);
}

}  // namespace

TEST_CASE("weights are pure functions of (seed, edge): order independent") {
  const EdgeWeightField f(123, WeightDistribution::exponential(1.0));
  auto edges = patch_edges(40);
  std::vector<double> forward(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) forward[i] = f.weight(edges[i]);

  std::mt19937_64 gen(5);
  std::vector<std::size_t> order(edges.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), gen);
  for (const std::size_t i : order) {
    const EdgeWeightField again(123, WeightDistribution::exponential(1.0));
    REQUIRE(again.weight(edges[i]) == forward[i]);
  }
}

TEST_CASE("frozen draws pin the mixer and stream constants") {
  // Reference values; any change to the mixer, the stream constants or the
  // transform order breaks reproducibility of published runs.
  REQUIRE(derive_trial_seed(0, 0) == 0x7b5ed2665aa489acull);
  REQUIRE(derive_trial_seed(42, 7) == 0x429bff7632291b93ull);
  const EdgeWeightField e1(1, WeightDistribution::exponential(1.0));
  REQUIRE(e1.weight({{0, 0}, {1, 0}}) == 0.610506939633773);
  REQUIRE(e1.weight({{0, 0}, {0, 1}}) == 1.8400096930115839);
  const EdgeWeightField u(1, WeightDistribution::uniform(0.0, 1.0));
  REQUIRE(u.weight({{0, 0}, {1, 0}}) == 0.45692450721060518);
  const EdgeWeightField g(1, WeightDistribution::gamma(2.0, 0.5));
  REQUIRE(g.weight({{0, 0}, {1, 0}}) == 0.3355603954296284);
  const VertexNoise noise(1);
  REQUIRE(noise.xi({0, 0}) == 0.60776438149075673);
  REQUIRE(noise.xi({3, -4}) == 0.95279431204824894);
}

TEST_CASE("marginals match their analytic CDF (KS at the 1% level, 1e5 draws)") {
  const auto edges = patch_edges(224);  // > 1e5 edges
  const double crit = 1.62762 / std::sqrt(100000.0);
  for (const auto dist :
       {WeightDistribution::exponential(1.0), WeightDistribution::exponential(2.5),
        WeightDistribution::uniform(0.0, 1.0), WeightDistribution::uniform(0.5, 2.0),
        WeightDistribution::gamma(2.0, 0.5), WeightDistribution::gamma(0.7, 1.3)}) {
    const EdgeWeightField f(999, dist);
    std::vector<double> xs;
    xs.reserve(100000);
    for (std::size_t i = 0; i < 100000; ++i) xs.push_back(f.weight(edges[i]));
    for (const double x : xs) REQUIRE(x > 0.0);
    const double ks = ks_statistic(std::move(xs), dist);
    INFO(dist.name() << " KS=" << ks << " crit=" << crit);
    REQUIRE(ks < crit);
  }
}

TEST_CASE("gamma CDF agrees with closed forms at integer shapes") {
  const auto erlang2 = WeightDistribution::gamma(2.0, 0.5);
  for (double w : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    const double x = w / 0.5;
    REQUIRE_THAT(erlang2.cdf(w),
                 Catch::Matchers::WithinAbs(1.0 - std::exp(-x) * (1.0 + x), 1e-12));
  }
  const auto expo = WeightDistribution::gamma(1.0, 2.0);
  for (double w : {0.1, 1.0, 4.0})
    REQUIRE_THAT(expo.cdf(w),
                 Catch::Matchers::WithinAbs(1.0 - std::exp(-w / 2.0), 1e-12));
}

TEST_CASE("uniform sample mean sits in the expected band") {
  const auto edges = patch_edges(224);
  const EdgeWeightField f(31337, WeightDistribution::uniform(0.0, 1.0));
  double sum = 0;
  for (std::size_t i = 0; i < 100000; ++i) sum += f.weight(edges[i]);
  const double mean = sum / 100000.0;
  REQUIRE(mean > 0.497);
  REQUIRE(mean < 0.503);
}

TEST_CASE("edge and vertex streams under one seed are uncorrelated") {
  std::vector<double> ws, xis;
  const EdgeWeightField f(777, WeightDistribution::uniform(0.0, 1.0));
  const VertexNoise noise(777);
  for (std::int32_t x = 0; x < 320; ++x)
    for (std::int32_t y = 0; y < 320; ++y) {
      if (ws.size() == 100000) break;
      ws.push_back(f.weight({{x, y}, {x + 1, y}}));
      xis.push_back(noise.xi({x, y}));
    }
  REQUIRE(ws.size() == 100000);
  REQUIRE(std::fabs(pearson(ws, xis)) < 0.01);
}

TEST_CASE("trial seeds are pairwise distinct over a million indices") {
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(1u << 21);
  for (std::uint64_t i = 0; i < 1000000; ++i)
    REQUIRE(seen.insert(derive_trial_seed(2024, i)).second);
}

TEST_CASE("paired trials produce essentially uncorrelated weights") {
  // Same edge sampled under consecutive trial seeds.
  std::vector<double> a, b;
  const auto dist = WeightDistribution::exponential(1.0);
  const Edge e{{0, 0}, {1, 0}};
  for (std::uint64_t t = 0; t < 10000; ++t) {
    a.push_back(EdgeWeightField(derive_trial_seed(5, 2 * t), dist).weight(e));
    b.push_back(EdgeWeightField(derive_trial_seed(5, 2 * t + 1), dist).weight(e));
  }
  REQUIRE(std::fabs(pearson(a, b)) < 0.05);
}

TEST_CASE("constant-one weights stay exactly one") {
  const EdgeWeightField f(9, WeightDistribution::constant_one());
  REQUIRE_FALSE(f.dist.continuous());
  for (const auto& e : patch_edges(12)) REQUIRE(f.weight(e) == 1.0);
}

TEST_CASE("distribution parameter validation") {
  REQUIRE_THROWS_AS(WeightDistribution::exponential(0.0), std::invalid_argument);
  REQUIRE_THROWS_AS(WeightDistribution::uniform(1.0, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(WeightDistribution::uniform(-0.5, 1.0), std::invalid_argument);
  REQUIRE_THROWS_AS(WeightDistribution::gamma(-1.0, 1.0), std::invalid_argument);
}
