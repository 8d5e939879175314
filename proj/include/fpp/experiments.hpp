#pragma once

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <type_traits>
#include <unordered_set>
#include <vector>

#include "fpp/busemann.hpp"
#include "fpp/labeling.hpp"
#include "fpp/metric.hpp"
#include "fpp/stats.hpp"

namespace fpp {

/// Raised when a trial task throws; carries the trial's index and seed so a
/// single failing trial can be replayed in isolation.
struct TrialFailure : std::runtime_error {
  std::uint64_t trial_index;
  std::uint64_t trial_seed;
  TrialFailure(std::uint64_t index, std::uint64_t seed, const std::string& why)
      : std::runtime_error("trial " + std::to_string(index) + " (seed " +
                           std::to_string(seed) + ") failed: " + why),
        trial_index(index),
        trial_seed(seed) {}
};

/**
 * Runs `trials` independent tasks, task(i, derive_trial_seed(master, i)),
 * across a worker pool and returns the results in trial-index order. Results
 * land in per-index slots, so every aggregate folded over the returned vector
 * is bit-identical for any thread count.
 */
template <typename Task>
auto run_trials(std::uint64_t master_seed, std::uint64_t trials,
                unsigned threads, Task&& task)
    -> std::vector<std::invoke_result_t<Task&, std::uint64_t, std::uint64_t>> {
  using R = std::invoke_result_t<Task&, std::uint64_t, std::uint64_t>;
  std::vector<std::optional<R>> slots(trials);

  struct Failure {
    std::uint64_t index;
    std::uint64_t seed;
    std::string why;
  };
  std::vector<Failure> failures;
  std::mutex failure_mutex;

  auto attempt = [&](std::uint64_t i) {
    const std::uint64_t seed = derive_trial_seed(master_seed, i);
    try {
      slots[i].emplace(task(i, seed));
    } catch (const std::exception& e) {
      const std::lock_guard<std::mutex> lock(failure_mutex);
      failures.push_back({i, seed, e.what()});
    } catch (...) {
      const std::lock_guard<std::mutex> lock(failure_mutex);
      failures.push_back({i, seed, "unknown error"});
    }
  };

  if (threads <= 1) {
    for (std::uint64_t i = 0; i < trials; ++i) attempt(i);
  } else {
    std::atomic<std::uint64_t> cursor{0};
    std::vector<std::thread> pool;
    const unsigned workers =
        static_cast<unsigned>(std::min<std::uint64_t>(threads, trials));
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (;;) {
          const std::uint64_t i = cursor.fetch_add(1);
          if (i >= trials) return;
          attempt(i);
        }
      });
    for (std::thread& t : pool) t.join();
  }

  if (!failures.empty()) {
    const Failure* first = &failures.front();
    for (const Failure& f : failures)
      if (f.index < first->index) first = &f;
    throw TrialFailure(first->index, first->seed, first->why);
  }
  std::vector<R> out;
  out.reserve(trials);
  for (auto& slot : slots) out.push_back(std::move(*slot));
  return out;
}

namespace detail {

/// Lattice targets for an m-direction grid at one radius. When m is a
/// multiple of 8, targets outside the first half-octant are integer images of
/// the rounded base targets, so the set is exactly dihedral-symmetric.
inline std::vector<Vertex> direction_targets(Vertex center, std::size_t m,
                                             std::int64_t radius) {
  if (m == 0) throw std::invalid_argument("direction_targets: empty grid");
  std::vector<Vertex> t(m);
  const double two_pi = 6.283185307179586;
  if (m % 8 == 0) {
    const std::size_t q = m / 8;
    std::vector<std::pair<std::int32_t, std::int32_t>> off(m);
    for (std::size_t j = 0; j <= q; ++j) {
      const double a = two_pi * static_cast<double>(j) / static_cast<double>(m);
      const Vertex v = nearest_lattice_point({0, 0}, a, static_cast<double>(radius));
      off[j] = {v.x, v.y};
    }
    for (std::size_t j = q + 1; j <= 2 * q; ++j)
      off[j] = {off[2 * q - j].second, off[2 * q - j].first};  // mirror at pi/4
    for (std::size_t j = 2 * q + 1; j < m; ++j)
      off[j] = {static_cast<std::int32_t>(-off[j - 2 * q].second),
                off[j - 2 * q].first};  // rotate by pi/2
    for (std::size_t j = 0; j < m; ++j)
      t[j] = {center.x + off[j].first, center.y + off[j].second};
  } else {
    for (std::size_t j = 0; j < m; ++j) {
      const double a = two_pi * static_cast<double>(j) / static_cast<double>(m);
      t[j] = nearest_lattice_point(center, a, static_cast<double>(radius));
    }
  }
  return t;
}

}  // namespace detail

/**
 * Directional passage-time profile: per direction and radius, the mean and
 * standard error of T(0, z) over trials, and the per-unit-length estimate
 * mu_hat at the largest radius. Lattice symmetry and mean-subadditivity
 * checks are evaluated on the paired per-trial samples.
 */
struct ShapeEstimate {
  std::string distribution;
  std::size_t directions = 0;
  std::vector<double> thetas;
  std::vector<std::int64_t> radii;       // ascending
  std::vector<Vertex> targets;           // [j * radii.size() + k]
  std::vector<double> target_norm;       // Euclidean norms of targets
  std::vector<double> mean_time;         // [j * radii.size() + k]
  std::vector<double> se_time;
  std::vector<double> mu_hat;            // [j], at the largest radius
  std::vector<double> mu_se;
  std::uint64_t trials = 0;

  struct SubadditivityCheck {
    std::size_t dir;
    std::int64_t r_small, r_large;
    double mean_diff;  // mean of T(large)/|large| - T(small)/|small|
    double se_diff;
    bool ok;           // mean_diff <= 2 * se_diff
  };
  std::vector<SubadditivityCheck> subadditivity;
  bool subadditive_ok = true;

  struct SymmetryCheck {
    std::size_t dir_a, dir_b;
    double gap;        // |mu_hat[a] - mu_hat[b]|
    double allowance;  // 2 * (mu_se[a] + mu_se[b])
    bool ok;
  };
  std::vector<SymmetryCheck> symmetry;
  bool symmetry_ok = true;
};

inline ShapeEstimate estimate_shape(const WeightDistribution& dist,
                                    std::uint64_t master_seed,
                                    std::vector<std::int64_t> radii,
                                    std::size_t directions, std::uint64_t trials,
                                    unsigned threads = 1) {
  if (radii.empty()) throw std::invalid_argument("estimate_shape: no radii");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] < 1) throw std::invalid_argument("estimate_shape: radius < 1");
    if (i > 0 && radii[i] <= radii[i - 1])
      throw std::invalid_argument("estimate_shape: radii must increase");
  }
  if (directions == 0 || trials == 0)
    throw std::invalid_argument("estimate_shape: empty grid or trials");

  ShapeEstimate est;
  est.distribution = dist.name();
  est.directions = directions;
  est.radii = radii;
  est.trials = trials;
  const std::size_t kR = radii.size();
  for (std::size_t j = 0; j < directions; ++j)
    est.thetas.push_back(6.283185307179586 * static_cast<double>(j) /
                         static_cast<double>(directions));
  est.targets.resize(directions * kR);
  for (std::size_t k = 0; k < kR; ++k) {
    const auto ring = detail::direction_targets({0, 0}, directions, radii[k]);
    for (std::size_t j = 0; j < directions; ++j) est.targets[j * kR + k] = ring[j];
  }
  for (const Vertex z : est.targets)
    est.target_norm.push_back(std::hypot(static_cast<double>(z.x),
                                         static_cast<double>(z.y)));

  const Window window = window_for_radius({0, 0}, radii.back());
  std::vector<Vertex> stops;
  {
    std::set<Vertex> uniq(est.targets.begin(), est.targets.end());
    stops.assign(uniq.begin(), uniq.end());
  }

  const auto results = run_trials(
      master_seed, trials, threads,
      [&](std::uint64_t, std::uint64_t seed) {
        const EdgeWeightField field(seed, dist);
        const GeodesicTree tree = shortest_path_tree(field, {0, 0}, window, stops);
        std::vector<double> t(est.targets.size());
        for (std::size_t i = 0; i < est.targets.size(); ++i)
          t[i] = tree.distance_at(est.targets[i]);
        return t;
      });

  // Two-pass statistics in trial order.
  std::vector<double> sample(trials);
  for (std::size_t i = 0; i < est.targets.size(); ++i) {
    for (std::uint64_t t = 0; t < trials; ++t) sample[t] = results[t][i];
    est.mean_time.push_back(mean(sample));
    est.se_time.push_back(trials > 1 ? standard_error(sample) : 0.0);
  }
  for (std::size_t j = 0; j < directions; ++j) {
    const std::size_t i = j * kR + (kR - 1);
    est.mu_hat.push_back(est.mean_time[i] / est.target_norm[i]);
    est.mu_se.push_back(est.se_time[i] / est.target_norm[i]);
  }

  // Mean subadditivity along doubled radii, on paired per-trial differences.
  for (std::size_t j = 0; j < directions; ++j)
    for (std::size_t k = 0; k < kR; ++k)
      for (std::size_t k2 = k + 1; k2 < kR; ++k2) {
        if (radii[k2] != 2 * radii[k]) continue;
        const std::size_t a = j * kR + k, b = j * kR + k2;
        std::vector<double> diff(trials);
        for (std::uint64_t t = 0; t < trials; ++t)
          diff[t] = results[t][b] / est.target_norm[b] -
                    results[t][a] / est.target_norm[a];
        const double md = mean(diff);
        const double sd = trials > 1 ? standard_error(diff) : 0.0;
        const bool ok = md <= 2.0 * sd;
        est.subadditivity.push_back({j, radii[k], radii[k2], md, sd, ok});
        est.subadditive_ok = est.subadditive_ok && ok;
      }

  // Dihedral symmetry of mu_hat: quarter-turn and x-axis reflection partners.
  if (directions % 4 == 0) {
    auto check = [&](std::size_t a, std::size_t b) {
      if (a == b) return;
      const double gap = std::fabs(est.mu_hat[a] - est.mu_hat[b]);
      const double allow = 2.0 * (est.mu_se[a] + est.mu_se[b]);
      const bool ok = gap <= allow;
      est.symmetry.push_back({a, b, gap, allow, ok});
      est.symmetry_ok = est.symmetry_ok && ok;
    };
    for (std::size_t j = 0; j < directions; ++j) {
      check(j, (j + directions / 4) % directions);
      check(j, (directions - j) % directions);
    }
  }
  return est;
}

/**
 * Empirical check of the extended shape bound: the fraction of probe pairs
 * (z, y) with |T(z, z+y) - mu(y)| > eps * max(|z|, |y|), reported per probe
 * offset magnitude |z|. `mu` maps (direction index, lattice offset y) to the
 * reference passage time for y.
 */
struct ExtendedShapeReport {
  double epsilon = 0.0;
  std::size_t directions = 0;
  std::vector<std::int64_t> inner_radii;   // |y| scales
  std::vector<std::int64_t> offsets;       // |z| scales
  std::vector<double> violation_fraction;  // per offset
  std::uint64_t trials = 0;
  std::uint64_t pairs_per_offset = 0;
};

template <typename MuFn>
ExtendedShapeReport extended_shape_check(const WeightDistribution& dist,
                                         std::uint64_t master_seed, double eps,
                                         std::vector<std::int64_t> inner_radii,
                                         std::vector<std::int64_t> offsets,
                                         std::size_t directions,
                                         std::uint64_t trials, unsigned threads,
                                         MuFn&& mu) {
  if (!(eps >= 0.0))
    throw std::invalid_argument("extended_shape_check: eps must be >= 0");
  if (inner_radii.empty() || offsets.empty() || directions == 0 || trials == 0)
    throw std::invalid_argument("extended_shape_check: empty probe sets");

  ExtendedShapeReport rep;
  rep.epsilon = eps;
  rep.directions = directions;
  rep.inner_radii = inner_radii;
  rep.offsets = offsets;
  rep.trials = trials;

  std::int64_t r_max = 0;
  for (const std::int64_t r : inner_radii) {
    if (r < 1) throw std::invalid_argument("extended_shape_check: radius < 1");
    r_max = std::max(r_max, r);
  }

  // Probe geometry is trial-independent: build it once.
  struct Probe {
    Vertex z;
    std::vector<Vertex> ends;       // z + y
    std::vector<double> reference;  // mu(y)
    std::vector<double> allowance;  // eps * max(|z|, |y|)
  };
  std::vector<std::vector<Probe>> probes_by_offset;
  for (const std::int64_t R : offsets) {
    if (R < 1) throw std::invalid_argument("extended_shape_check: offset < 1");
    std::vector<Probe> probes;
    const auto zs = detail::direction_targets({0, 0}, directions, R);
    for (std::size_t b = 0; b < directions; ++b) {
      Probe p;
      p.z = zs[b];
      const double nz = std::hypot(static_cast<double>(p.z.x),
                                   static_cast<double>(p.z.y));
      for (const std::int64_t r : inner_radii) {
        const auto ys = detail::direction_targets({0, 0}, directions, r);
        for (std::size_t a = 0; a < directions; ++a) {
          const Vertex y = ys[a];
          p.ends.push_back({p.z.x + y.x, p.z.y + y.y});
          p.reference.push_back(mu(a, y));
          const double ny = std::hypot(static_cast<double>(y.x),
                                       static_cast<double>(y.y));
          p.allowance.push_back(eps * std::max(nz, ny));
        }
      }
      probes.push_back(std::move(p));
    }
    probes_by_offset.push_back(std::move(probes));
  }
  rep.pairs_per_offset =
      trials * directions * directions * inner_radii.size();

  const auto results = run_trials(
      master_seed, trials, threads,
      [&](std::uint64_t, std::uint64_t seed) {
        const EdgeWeightField field(seed, dist);
        std::vector<std::uint64_t> violations(offsets.size(), 0);
        for (std::size_t o = 0; o < offsets.size(); ++o)
          for (const Probe& p : probes_by_offset[o]) {
            const Window w = window_for_radius(p.z, r_max);
            const GeodesicTree tree = shortest_path_tree(field, p.z, w, p.ends);
            for (std::size_t i = 0; i < p.ends.size(); ++i) {
              const double t = tree.distance_at(p.ends[i]);
              if (std::fabs(t - p.reference[i]) > p.allowance[i])
                ++violations[o];
            }
          }
        return violations;
      });

  for (std::size_t o = 0; o < offsets.size(); ++o) {
    std::uint64_t total = 0;
    for (const auto& v : results) total += v[o];
    rep.violation_fraction.push_back(static_cast<double>(total) /
                                     static_cast<double>(rep.pairs_per_offset));
  }
  return rep;
}

/**
 * Midpoint-membership curve: per radius k, the fraction of trials in which
 * the origin lies on the tie-broken geodesic between (-k, 0) and (k, 0),
 * with Wilson intervals and a log-log slope over the positive estimates.
 */
struct MidpointCurve {
  std::string distribution;
  bool degenerate = false;  // non-continuous weights: a fixture, not a probability
  std::vector<std::int64_t> radii;
  std::uint64_t trials = 0;
  std::vector<std::uint64_t> hits;
  std::vector<ProportionEstimate> p;  // per radius
  bool slope_defined = false;
  double slope = 0.0;
  double slope_se = 0.0;
};

inline MidpointCurve midpoint_probability(const WeightDistribution& dist,
                                          std::uint64_t master_seed,
                                          std::vector<std::int64_t> radii,
                                          std::uint64_t trials,
                                          unsigned threads = 1) {
  if (radii.empty() || trials == 0)
    throw std::invalid_argument("midpoint_probability: empty radii or trials");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (radii[i] < 2)
      throw std::invalid_argument("midpoint_probability: radii must be >= 2");
    if (i > 0 && radii[i] <= radii[i - 1])
      throw std::invalid_argument("midpoint_probability: radii must increase");
  }
  if (radii.size() > 64)
    throw std::invalid_argument("midpoint_probability: too many radii");

  MidpointCurve curve;
  curve.distribution = dist.name();
  curve.degenerate = !dist.continuous();
  curve.radii = radii;
  curve.trials = trials;

  const auto results = run_trials(
      master_seed, trials, threads,
      [&](std::uint64_t, std::uint64_t seed) {
        const EdgeWeightField field(seed, dist);
        std::uint64_t mask = 0;
        for (std::size_t i = 0; i < radii.size(); ++i) {
          const std::int32_t k = static_cast<std::int32_t>(radii[i]);
          const Window w = window_for_radius({0, 0}, radii[i]);
          const Vertex from{-k, 0}, to{k, 0};
          const Vertex stops[1] = {to};
          const GeodesicTree tree = shortest_path_tree(field, from, w, stops);
          for (Vertex v = to;;) {
            if (v == Vertex{0, 0}) {
              mask |= (1ull << i);
              break;
            }
            const auto par = tree.parent_of(v);
            if (!par) break;
            v = *par;
          }
        }
        return mask;
      });

  for (std::size_t i = 0; i < radii.size(); ++i) {
    std::uint64_t hits = 0;
    for (const std::uint64_t mask : results)
      if (mask & (1ull << i)) ++hits;
    curve.hits.push_back(hits);
    curve.p.push_back(wilson_interval(hits, trials));
  }

  std::vector<double> ks, ps;
  for (std::size_t i = 0; i < radii.size(); ++i)
    if (curve.p[i].p_hat > 0.0) {
      ks.push_back(static_cast<double>(radii[i]));
      ps.push_back(curve.p[i].p_hat);
    }
  if (ks.size() >= 3) {
    try {
      const LogLogFit fit = ols_loglog(ks, ps);
      curve.slope = fit.slope;
      curve.slope_se = fit.slope_se;
      curve.slope_defined = true;
    } catch (const std::domain_error&) {
      curve.slope_defined = false;
    }
  }
  return curve;
}

/**
 * Coalescence of geodesics from two nearby sources toward a common far
 * target, measured on the target-rooted tree so the merged suffix is shared
 * exactly. The merge radius is the Euclidean distance from the source
 * midpoint to the first common vertex, capped at the target radius.
 */
struct CoalescenceStats {
  std::string distribution;
  std::int64_t target_radius = 0;
  std::uint64_t trials = 0;
  std::vector<std::int64_t> separations;
  std::vector<std::vector<double>> merge_radii;  // [separation][trial]
  std::vector<double> q25, median_radius, q75;   // per separation
};

inline CoalescenceStats coalescence_study(const WeightDistribution& dist,
                                          std::uint64_t master_seed,
                                          std::vector<std::int64_t> separations,
                                          std::int64_t target_radius,
                                          std::uint64_t trials,
                                          unsigned threads = 1) {
  if (separations.empty() || trials == 0)
    throw std::invalid_argument("coalescence_study: empty separations or trials");
  if (target_radius < 8)
    throw std::invalid_argument("coalescence_study: target radius too small");
  for (const std::int64_t s : separations)
    if (s < 0 || s * 8 > target_radius)
      throw std::invalid_argument(
          "coalescence_study: separations must satisfy 0 <= s <= R/8");

  CoalescenceStats stats;
  stats.distribution = dist.name();
  stats.target_radius = target_radius;
  stats.trials = trials;
  stats.separations = separations;

  const Window window = window_for_radius({0, 0}, target_radius);
  const Vertex target{static_cast<std::int32_t>(target_radius), 0};
  struct SourcePair {
    Vertex a, b;
    double cx, cy;
  };
  std::vector<SourcePair> pairs;
  std::vector<Vertex> stops;
  for (const std::int64_t s : separations) {
    const std::int32_t hi = static_cast<std::int32_t>(s - s / 2);
    const std::int32_t lo = static_cast<std::int32_t>(-(s / 2));
    SourcePair p{{0, hi}, {0, lo}, 0.0, (static_cast<double>(hi) + lo) / 2.0};
    pairs.push_back(p);
    stops.push_back(p.a);
    stops.push_back(p.b);
  }

  const auto results = run_trials(
      master_seed, trials, threads,
      [&](std::uint64_t, std::uint64_t seed) {
        const EdgeWeightField field(seed, dist);
        const GeodesicTree tree =
            shortest_path_tree(field, target, window, stops);
        std::vector<double> radii;
        for (const SourcePair& p : pairs) {
          std::unordered_set<std::uint64_t> on_a;
          for (Vertex v = p.a;;) {
            on_a.insert(vertex_key(v));
            const auto par = tree.parent_of(v);
            if (!par) break;
            v = *par;
          }
          Vertex m = target;
          for (Vertex v = p.b;;) {
            if (on_a.count(vertex_key(v))) {
              m = v;
              break;
            }
            const auto par = tree.parent_of(v);
            if (!par) break;
            v = *par;
          }
          const double r = std::hypot(static_cast<double>(m.x) - p.cx,
                                      static_cast<double>(m.y) - p.cy);
          radii.push_back(std::min(r, static_cast<double>(target_radius)));
        }
        return radii;
      });

  for (std::size_t i = 0; i < separations.size(); ++i) {
    std::vector<double> xs(trials);
    for (std::uint64_t t = 0; t < trials; ++t) xs[t] = results[t][i];
    stats.merge_radii.push_back(xs);
    stats.q25.push_back(quantile(xs, 0.25));
    stats.median_radius.push_back(median(xs));
    stats.q75.push_back(quantile(xs, 0.75));
  }
  return stats;
}

/// Observables for the scaling-exponent fits.
enum class ExponentObservable { Chi, Xi, Midpoint };

inline const char* observable_name(ExponentObservable o) {
  switch (o) {
    case ExponentObservable::Chi: return "chi";
    case ExponentObservable::Xi: return "xi";
    default: return "midpoint";
  }
}

/**
 * Log-log scaling fit of one observable against size n:
 *  - chi: Var T(0, (n,0));
 *  - xi: mean of max |y| along the geodesic 0 -> (n,0);
 *  - midpoint: fraction of trials with 0 on the geodesic (-n,0) -> (n,0).
 * Zero or non-positive statistics (unit weights, empty membership) flag the
 * fit degenerate instead of producing a slope.
 */
struct ExponentFit {
  ExponentObservable observable = ExponentObservable::Chi;
  std::string distribution;
  std::vector<std::int64_t> sizes;
  std::uint64_t trials = 0;
  std::vector<double> statistic;     // per size
  std::vector<double> statistic_se;  // per size
  bool degenerate = false;
  std::string note;
  double slope = 0.0;
  double slope_se = 0.0;
  double intercept = 0.0;
  std::vector<double> residuals;
};

inline ExponentFit exponent_fit(const WeightDistribution& dist,
                                std::uint64_t master_seed,
                                ExponentObservable observable,
                                std::vector<std::int64_t> sizes,
                                std::uint64_t trials, unsigned threads = 1) {
  if (sizes.size() < 3)
    throw std::invalid_argument("exponent_fit: need at least 3 sizes");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] < 2) throw std::invalid_argument("exponent_fit: sizes must be >= 2");
    if (i > 0 && sizes[i] <= sizes[i - 1])
      throw std::invalid_argument("exponent_fit: sizes must increase");
  }
  if (trials < 2) throw std::invalid_argument("exponent_fit: need >= 2 trials");

  ExponentFit fit;
  fit.observable = observable;
  fit.distribution = dist.name();
  fit.sizes = sizes;
  fit.trials = trials;

  if (observable == ExponentObservable::Midpoint) {
    const MidpointCurve curve =
        midpoint_probability(dist, master_seed, sizes, trials, threads);
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      fit.statistic.push_back(curve.p[i].p_hat);
      fit.statistic_se.push_back(std::sqrt(
          curve.p[i].p_hat * (1.0 - curve.p[i].p_hat) / static_cast<double>(trials)));
    }
    if (curve.degenerate) {
      fit.degenerate = true;
      fit.note = "non-continuous weights: membership is a deterministic fixture";
    }
  } else {
    const auto results = run_trials(
        master_seed, trials, threads,
        [&](std::uint64_t, std::uint64_t seed) {
          const EdgeWeightField field(seed, dist);
          std::vector<double> per_size;
          for (const std::int64_t n : sizes) {
            const Window w = window_for_radius({0, 0}, n);
            const Vertex to{static_cast<std::int32_t>(n), 0};
            const Vertex stops[1] = {to};
            const GeodesicTree tree =
                shortest_path_tree(field, {0, 0}, w, stops);
            if (observable == ExponentObservable::Chi) {
              per_size.push_back(tree.distance_at(to));
            } else {
              const LatticePath path = tree.path_from_source(to);
              std::int32_t dev = 0;
              for (const Vertex v : path.vertices)
                dev = std::max(dev, std::abs(v.y));
              per_size.push_back(static_cast<double>(dev));
            }
          }
          return per_size;
        });
    std::vector<double> sample(trials);
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      for (std::uint64_t t = 0; t < trials; ++t) sample[t] = results[t][i];
      if (observable == ExponentObservable::Chi) {
        const double v = sample_variance(sample);
        fit.statistic.push_back(v);
        fit.statistic_se.push_back(
            v * std::sqrt(2.0 / static_cast<double>(trials - 1)));
      } else {
        fit.statistic.push_back(mean(sample));
        fit.statistic_se.push_back(standard_error(sample));
      }
    }
  }

  std::vector<double> ns;
  for (const std::int64_t n : sizes) ns.push_back(static_cast<double>(n));
  try {
    const LogLogFit f = ols_loglog(ns, fit.statistic);
    fit.slope = f.slope;
    fit.slope_se = f.slope_se;
    fit.intercept = f.intercept;
    fit.residuals = f.residuals;
  } catch (const std::domain_error&) {
    fit.degenerate = true;
    if (fit.note.empty())
      fit.note = "non-positive statistic: log-log fit undefined";
  }
  return fit;
}

}  // namespace fpp
