#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "fpp/metric.hpp"

namespace fpp {

inline constexpr std::int64_t kDefaultRayBase = 16;
inline constexpr int kDefaultRayDoublings = 4;

/// Finite stand-in for a geodesic ray: anchor vertices at doubling radii
/// along direction theta, all served by one policy-sized window around the
/// root. When `on_geodesic` is set the anchors were taken from one computed
/// geodesic toward the far target and `root_dist` holds their tree distances.
struct RayApproximation {
  Vertex root;
  double theta = 0.0;
  std::vector<std::int64_t> radii;
  std::vector<Vertex> anchors;
  Window window;
  bool on_geodesic = false;
  std::vector<double> root_dist;
};

inline Vertex nearest_lattice_point(Vertex root, double theta, double radius) {
  const auto dx = std::llround(radius * std::cos(theta));
  const auto dy = std::llround(radius * std::sin(theta));
  const std::int64_t x = root.x + dx;
  const std::int64_t y = root.y + dy;
  if (x < kCoordMin || x > kCoordMax || y < kCoordMin || y > kCoordMax)
    throw std::out_of_range("nearest_lattice_point: outside supported range");
  return {static_cast<std::int32_t>(x), static_cast<std::int32_t>(y)};
}

/// Straight-line anchors at radii r0 * 2^k, k = 0..doublings-1.
inline RayApproximation ray_approximation(Vertex root, double theta,
                                          std::int64_t r0 = kDefaultRayBase,
                                          int doublings = kDefaultRayDoublings) {
  if (r0 < 1 || doublings < 1)
    throw std::invalid_argument("ray_approximation: need r0 >= 1, doublings >= 1");
  RayApproximation ray;
  ray.root = root;
  ray.theta = theta;
  for (int k = 0; k < doublings; ++k) {
    const std::int64_t r = r0 << k;
    ray.radii.push_back(r);
    ray.anchors.push_back(nearest_lattice_point(root, theta, static_cast<double>(r)));
  }
  ray.window = window_for_radius(root, ray.radii.back());
  return ray;
}

/// Anchors re-seated on the computed geodesic from the root toward the far
/// straight-line target: anchor k is the first path vertex at Euclidean
/// radius >= r_k (falling back to the path end). Enables the monotonicity
/// witnesses of the Busemann estimate.
template <WeightFieldLike F>
RayApproximation geodesic_ray_anchors(const F& field, Vertex root, double theta,
                                      std::int64_t r0 = kDefaultRayBase,
                                      int doublings = kDefaultRayDoublings) {
  RayApproximation ray = ray_approximation(root, theta, r0, doublings);
  const Vertex far = ray.anchors.back();
  const Vertex targets[1] = {far};
  const GeodesicTree tree = shortest_path_tree(field, root, ray.window, targets);
  const LatticePath path = tree.path_from_source(far);
  auto radius2 = [&](Vertex v) {
    const double dx = static_cast<double>(v.x) - root.x;
    const double dy = static_cast<double>(v.y) - root.y;
    return dx * dx + dy * dy;
  };
  ray.anchors.clear();
  ray.root_dist.clear();
  for (const std::int64_t r : ray.radii) {
    const double r2 = static_cast<double>(r) * static_cast<double>(r);
    Vertex pick = path.back();
    for (const Vertex v : path.vertices)
      if (radius2(v) >= r2) {
        pick = v;
        break;
      }
    ray.anchors.push_back(pick);
    ray.root_dist.push_back(tree.distance_at(pick));
  }
  ray.on_geodesic = true;
  return ray;
}

/**
 * Finite-horizon Busemann differences along a ray approximation:
 * values[k] = T(x, v_k) - T(y, v_k), both passage times read off trees rooted
 * at x and y over the ray's window, so the additivity identity across probe
 * pairs holds by construction. `t_xy` is T(x, y) in the same window. When the
 * ray carries geodesic anchors, witness[k] = T(., v_k) - T(root, v_k) is the
 * sequence expected to be nonincreasing in k.
 */
struct BusemannEstimate {
  Vertex x, y;
  std::vector<std::int64_t> radii;
  std::vector<Vertex> anchors;
  std::vector<double> values;
  std::vector<double> t_x, t_y;
  double t_xy = 0.0;
  bool has_witnesses = false;
  std::vector<double> witness_x, witness_y;
};

template <WeightFieldLike F>
BusemannEstimate busemann_sequence(const F& field, Vertex x, Vertex y,
                                   const RayApproximation& ray) {
  if (!ray.window.contains(x) || !ray.window.contains(y))
    throw std::invalid_argument("busemann_sequence: probe outside ray window");
  for (const Vertex a : ray.anchors)
    if (!ray.window.contains(a))
      throw std::invalid_argument("busemann_sequence: anchor outside ray window");

  std::vector<Vertex> stops_x = ray.anchors;
  stops_x.push_back(y);
  const GeodesicTree tree_x = shortest_path_tree(field, x, ray.window, stops_x);
  const GeodesicTree tree_y = shortest_path_tree(field, y, ray.window, ray.anchors);

  BusemannEstimate est;
  est.x = x;
  est.y = y;
  est.radii = ray.radii;
  est.anchors = ray.anchors;
  est.t_xy = tree_x.distance_at(y);
  for (std::size_t k = 0; k < ray.anchors.size(); ++k) {
    const Vertex v = ray.anchors[k];
    est.t_x.push_back(tree_x.distance_at(v));
    est.t_y.push_back(tree_y.distance_at(v));
    est.values.push_back(est.t_x.back() - est.t_y.back());
  }
  if (ray.on_geodesic) {
    est.has_witnesses = true;
    for (std::size_t k = 0; k < ray.anchors.size(); ++k) {
      est.witness_x.push_back(est.t_x[k] - ray.root_dist[k]);
      est.witness_y.push_back(est.t_y[k] - ray.root_dist[k]);
    }
  }
  return est;
}

/// Least-squares linear functional through the origin fitted to Busemann
/// samples: minimizes sum over estimates of (a*zx + b*zy - B)^2 with
/// z = y - x and B the last (largest-radius) value.
struct LinearFunctionalFit {
  double ax = 0.0;
  double ay = 0.0;
  double rms_residual = 0.0;

  double operator()(double zx, double zy) const { return ax * zx + ay * zy; }
  double at_angle(double theta) const {
    return ax * std::cos(theta) + ay * std::sin(theta);
  }
};

inline LinearFunctionalFit fit_linear_functional(std::span<const BusemannEstimate> ests) {
  if (ests.size() < 3)
    throw std::domain_error("fit_linear_functional: need at least 3 samples");
  double sxx = 0, sxy = 0, syy = 0, sxb = 0, syb = 0, scale = 0;
  for (const auto& e : ests) {
    const double zx = static_cast<double>(e.y.x) - e.x.x;
    const double zy = static_cast<double>(e.y.y) - e.x.y;
    const double b = e.values.back();
    sxx += zx * zx;
    sxy += zx * zy;
    syy += zy * zy;
    sxb += zx * b;
    syb += zy * b;
    scale = std::max(scale, zx * zx + zy * zy);
  }
  const double det = sxx * syy - sxy * sxy;
  if (!(det > 1e-9 * scale * scale))
    throw std::domain_error("fit_linear_functional: degenerate sample geometry");
  LinearFunctionalFit fit;
  fit.ax = (syy * sxb - sxy * syb) / det;
  fit.ay = (sxx * syb - sxy * sxb) / det;
  double ss = 0;
  for (const auto& e : ests) {
    const double zx = static_cast<double>(e.y.x) - e.x.x;
    const double zy = static_cast<double>(e.y.y) - e.x.y;
    const double r = fit(zx, zy) - e.values.back();
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / static_cast<double>(ests.size()));
  return fit;
}

/// Default probe offsets for functional fitting: three rings, four axis
/// angles each; never collinear, so the fit is well posed.
inline std::vector<Vertex> default_probe_offsets() {
  std::vector<Vertex> probes;
  for (const std::int32_t r : {2, 4, 8}) {
    probes.push_back({r, 0});
    probes.push_back({0, r});
    probes.push_back({-r, 0});
    probes.push_back({0, -r});
  }
  return probes;
}

/// Angle interval spanned by the tail of a root-to-target path.
struct DirectionEstimate {
  double theta_min = 0.0;
  double theta_max = 0.0;
};

inline DirectionEstimate direction_estimate(const LatticePath& path,
                                            double tail_fraction) {
  if (path.size() < 2)
    throw std::invalid_argument("direction_estimate: path too short");
  if (!(tail_fraction > 0.0) || tail_fraction > 1.0)
    throw std::invalid_argument("direction_estimate: fraction must be in (0, 1]");
  const Vertex root = path.front();
  const std::size_t n = path.size();
  std::size_t take = static_cast<std::size_t>(
      std::ceil(tail_fraction * static_cast<double>(n - 1)));
  if (take == 0) take = 1;
  DirectionEstimate d;
  bool first = true;
  for (std::size_t i = n - take; i < n; ++i) {
    const Vertex v = path.vertices[i];
    if (v == root) continue;
    const double a = std::atan2(static_cast<double>(v.y) - root.y,
                                static_cast<double>(v.x) - root.x);
    if (first) {
      d.theta_min = d.theta_max = a;
      first = false;
    } else {
      d.theta_min = std::min(d.theta_min, a);
      d.theta_max = std::max(d.theta_max, a);
    }
  }
  if (first) throw std::invalid_argument("direction_estimate: tail only holds the root");
  return d;
}

/// Diagnostic comparison of a fitted linear functional against a directional
/// passage-time profile: where does the functional touch the profile, and
/// does a direction interval fall inside that contact arc.
struct ArcReport {
  std::vector<double> thetas;
  std::vector<double> gaps;        // mu_hat(theta) - fit(theta)
  std::vector<bool> in_arc;        // |gap| <= 2 * se(theta)
  double max_fit_excess = 0.0;     // max over grid of fit - mu_hat
  bool direction_in_arc = false;
};

inline ArcReport arc_check(const LinearFunctionalFit& fit,
                           std::span<const double> thetas,
                           std::span<const double> mu_hat,
                           std::span<const double> mu_se,
                           const DirectionEstimate& dir) {
  if (thetas.size() != mu_hat.size() || thetas.size() != mu_se.size())
    throw std::invalid_argument("arc_check: mismatched grids");
  ArcReport rep;
  for (std::size_t i = 0; i < thetas.size(); ++i) {
    const double g = mu_hat[i] - fit.at_angle(thetas[i]);
    rep.thetas.push_back(thetas[i]);
    rep.gaps.push_back(g);
    rep.in_arc.push_back(std::fabs(g) <= 2.0 * mu_se[i]);
    rep.max_fit_excess = std::max(rep.max_fit_excess, -g);
  }
  // The direction interval counts as inside the arc when every grid angle
  // inside it, plus the grid angle nearest each endpoint, is an arc angle.
  auto wrap_dist = [](double a, double b) {
    double d = std::fabs(a - b);
    while (d > 6.283185307179586) d -= 6.283185307179586;
    return std::min(d, 6.283185307179586 - d);
  };
  auto nearest = [&](double t) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < thetas.size(); ++i)
      if (wrap_dist(thetas[i], t) < wrap_dist(thetas[best], t)) best = i;
    return best;
  };
  rep.direction_in_arc = rep.in_arc[nearest(dir.theta_min)] &&
                         rep.in_arc[nearest(dir.theta_max)];
  for (std::size_t i = 0; i < thetas.size(); ++i)
    if (thetas[i] > dir.theta_min && thetas[i] < dir.theta_max && !rep.in_arc[i])
      rep.direction_in_arc = false;
  return rep;
}

}  // namespace fpp
