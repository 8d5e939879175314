#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "fpp/lattice.hpp"

namespace fpp {

/**
 * Stateless randomness.
 *
 * Every draw is a pure function of (seed, stream, key, counter). The mixer is
 * the splitmix64 finalizer applied three times over the xor-combined inputs;
 * the stream constants below separate the edge-weight, vertex-noise and
 * trial-seed domains. Re-deriving a value never depends on evaluation order,
 * so fields can be queried lazily, in parallel, or in any traversal order and
 * still agree bit for bit.
 */
namespace rng {

inline constexpr std::uint64_t kStreamEdge = 0xa076'1d64'78bd'642full;
inline constexpr std::uint64_t kStreamVertex = 0xe703'7ed1'a0b4'28dbull;
inline constexpr std::uint64_t kStreamTrial = 0x8ebc'6af0'9c88'c6e3ull;

/// splitmix64 output function.
inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xbf58'476d'1ce4'e5b9ull;
  x ^= x >> 27;
  x *= 0x94d0'49bb'1331'11ebull;
  x ^= x >> 31;
  return x;
}

inline std::uint64_t draw_bits(std::uint64_t seed, std::uint64_t stream,
                               std::uint64_t key, std::uint64_t counter) {
  return mix64(mix64(mix64(seed ^ stream) ^ key) ^ counter);
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

inline double draw_unit(std::uint64_t seed, std::uint64_t stream,
                        std::uint64_t key, std::uint64_t counter) {
  return to_unit(draw_bits(seed, stream, key, counter));
}

}  // namespace rng

/// Seed of trial `index` under a master seed. Injective in the index.
inline std::uint64_t derive_trial_seed(std::uint64_t master, std::uint64_t index) {
  return rng::mix64(rng::mix64(master ^ rng::kStreamTrial) ^ index);
}

namespace detail {

// Regularized lower incomplete gamma P(a, x), series + continued fraction.
inline double gamma_p(double a, double x) {
  if (x < 0 || a <= 0) throw std::invalid_argument("gamma_p: bad arguments");
  if (x == 0) return 0.0;
  const double lg = std::lgamma(a);
  if (x < a + 1.0) {
    // Series representation.
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 500; ++i) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - lg);
  }
  // Continued fraction for Q(a, x), Lentz's method.
  const double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return 1.0 - std::exp(-x + a * std::log(x) - lg) * h;
}

}  // namespace detail

/// Marginal law of the edge weights. ConstantOne is a test-only degenerate
/// variant; the remaining laws are continuous with positive support.
struct WeightDistribution {
  enum class Kind { Exponential, Uniform, Gamma, ConstantOne };

  Kind kind = Kind::Exponential;
  double p0 = 1.0;  // rate / lower bound / shape
  double p1 = 0.0;  // unused / upper bound / scale

  static WeightDistribution exponential(double rate) {
    if (!(rate > 0)) throw std::invalid_argument("exponential: rate must be > 0");
    return {Kind::Exponential, rate, 0.0};
  }
  static WeightDistribution uniform(double a, double b) {
    if (!(a >= 0) || !(b > a))
      throw std::invalid_argument("uniform: need 0 <= a < b");
    return {Kind::Uniform, a, b};
  }
  static WeightDistribution gamma(double shape, double scale) {
    if (!(shape > 0) || !(scale > 0))
      throw std::invalid_argument("gamma: shape and scale must be > 0");
    return {Kind::Gamma, shape, scale};
  }
  static WeightDistribution constant_one() { return {Kind::ConstantOne, 0, 0}; }

  bool continuous() const { return kind != Kind::ConstantOne; }

  double mean() const {
    switch (kind) {
      case Kind::Exponential: return 1.0 / p0;
      case Kind::Uniform: return 0.5 * (p0 + p1);
      case Kind::Gamma: return p0 * p1;
      case Kind::ConstantOne: return 1.0;
    }
    return 0;
  }

  double cdf(double w) const {
    if (w <= 0) return 0.0;
    switch (kind) {
      case Kind::Exponential: return -std::expm1(-p0 * w);
      case Kind::Uniform:
        if (w <= p0) return 0.0;
        if (w >= p1) return 1.0;
        return (w - p0) / (p1 - p0);
      case Kind::Gamma: return detail::gamma_p(p0, w / p1);
      case Kind::ConstantOne: return w >= 1.0 ? 1.0 : 0.0;
    }
    return 0;
  }

  std::string name() const {
    switch (kind) {
      case Kind::Exponential: return "exponential";
      case Kind::Uniform: return "uniform";
      case Kind::Gamma: return "gamma";
      case Kind::ConstantOne: return "constant_one";
    }
    return "?";
  }

  friend bool operator==(const WeightDistribution&, const WeightDistribution&) = default;
};

namespace detail {

// Deterministic per-key uniform stream: consecutive counters under one key.
struct UniformSource {
  std::uint64_t seed;
  std::uint64_t key;
  std::uint64_t counter = 0;

  double next() { return rng::draw_unit(seed, rng::kStreamEdge, key, counter++); }

  // Standard normal via Box-Muller; rejects the u = 0 corner.
  double next_normal() {
    double u1 = next();
    while (u1 == 0.0) u1 = next();
    const double u2 = next();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }
};

// Marsaglia-Tsang gamma sampler driven by a deterministic uniform source.
inline double sample_gamma(UniformSource& src, double shape, double scale) {
  double boost = 1.0;
  double k = shape;
  if (k < 1.0) {
    double u = src.next();
    while (u == 0.0) u = src.next();
    boost = std::pow(u, 1.0 / k);
    k += 1.0;
  }
  const double d = k - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double z = src.next_normal();
    const double t = 1.0 + c * z;
    if (t <= 0.0) continue;
    const double v = t * t * t;
    double u = src.next();
    while (u == 0.0) u = src.next();
    if (std::log(u) < 0.5 * z * z + d - d * v + d * std::log(v))
      return boost * d * v * scale;
  }
}

inline double sample_weight(const WeightDistribution& dist, UniformSource& src) {
  switch (dist.kind) {
    case WeightDistribution::Kind::Exponential:
      return -std::log1p(-src.next()) / dist.p0;
    case WeightDistribution::Kind::Uniform:
      return dist.p0 + src.next() * (dist.p1 - dist.p0);
    case WeightDistribution::Kind::Gamma:
      return sample_gamma(src, dist.p0, dist.p1);
    case WeightDistribution::Kind::ConstantOne:
      return 1.0;
  }
  return 1.0;
}

}  // namespace detail

/// Lazy i.i.d. edge-weight field: weight(e) is a pure function of
/// (seed, edge_id(e)). Zero draws are rejected and redrawn with an advanced
/// counter, so every returned weight is strictly positive.
struct EdgeWeightField {
  std::uint64_t seed = 0;
  WeightDistribution dist;

  EdgeWeightField(std::uint64_t s, WeightDistribution d) : seed(s), dist(d) {}

  double weight(const Edge& e) const {
    detail::UniformSource src{seed, edge_id(e)};
    for (;;) {
      const double w = detail::sample_weight(dist, src);
      if (w > 0.0) return w;
    }
  }

  double weight(Vertex u, Vertex v) const { return weight(Edge{u, v}); }
};

/// Independent uniform mark xi(v) in [0, 1) per vertex, separate stream from
/// the edge weights under the same seed.
struct VertexNoise {
  std::uint64_t seed = 0;

  explicit VertexNoise(std::uint64_t s) : seed(s) {}

  double xi(Vertex v) const {
    return rng::draw_unit(seed, rng::kStreamVertex, vertex_key(v), 0);
  }
};

}  // namespace fpp
