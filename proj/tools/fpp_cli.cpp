// Command-line laboratory for first-passage percolation on the Z^2 lattice:
// runs the configured experiment and emits CSV/JSON/SVG artifacts into
// <outdir>/<command>-<confighash>/. Exit codes: 0 success, 1 runtime
// failure (the failing trial seed is printed), 2 configuration error.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <unordered_map>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fpp/busemann.hpp"
#include "fpp/config.hpp"
#include "fpp/experiments.hpp"
#include "fpp/io.hpp"
#include "fpp/labeling.hpp"
#include "fpp/lattice.hpp"
#include "fpp/metric.hpp"
#include "fpp/render.hpp"
#include "fpp/weights.hpp"

namespace {

using nlohmann::json;

std::vector<std::int64_t> parse_int_list(const std::string& text,
                                         const char* what) {
  std::vector<std::int64_t> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    if (comma == std::string::npos) comma = text.size();
    const std::string tok = text.substr(pos, comma - pos);
    try {
      std::size_t used = 0;
      out.push_back(std::stoll(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw fpp::ConfigError(std::string(what) + ": bad list entry '" + tok +
                             "'");
    }
    pos = comma + 1;
  }
  return out;
}

std::filesystem::path artifact_dir(const fpp::RunConfig& c) {
  return std::filesystem::path(c.outdir) /
         (c.command + "-" + fpp::config_hash(c));
}

// ---------------------------------------------------------------------------
// Command implementations. Each returns the summary JSON after writing its
// CSV/SVG artifacts into `dir`.
// ---------------------------------------------------------------------------

json run_shape(const fpp::RunConfig& c, const std::filesystem::path& dir) {
  const fpp::WeightDistribution dist = fpp::parse_distribution(c.distribution);
  const fpp::ShapeEstimate est =
      fpp::estimate_shape(dist, c.seed, c.radii, c.directions, c.trials,
                          static_cast<unsigned>(c.threads));

  fpp::CsvBuilder csv(fpp::provenance_line(c),
                      {"seed", "direction", "theta", "radius", "target",
                       "norm", "mean_T", "se_T"});
  const std::size_t kr = est.radii.size();
  for (std::size_t j = 0; j < est.directions; ++j)
    for (std::size_t k = 0; k < kr; ++k) {
      const std::size_t i = j * kr + k;
      csv.row({fpp::decimal(c.seed), fpp::decimal(std::uint64_t{j}),
               fpp::decimal(est.thetas[j]), fpp::decimal(est.radii[k]),
               fpp::vertex_cell(est.targets[i]),
               fpp::decimal(est.target_norm[i]),
               fpp::decimal(est.mean_time[i]), fpp::decimal(est.se_time[i])});
    }
  fpp::write_file_atomic(dir / "shape.csv", csv.str());

  // Band diagnostic against the fitted profile: fraction of probe pairs
  // whose passage time leaves the epsilon band around mu_hat.
  auto mu = [&est](std::size_t a, fpp::Vertex y) {
    return est.mu_hat[a] * std::hypot(static_cast<double>(y.x),
                                      static_cast<double>(y.y));
  };
  const fpp::ExtendedShapeReport rep = fpp::extended_shape_check(
      dist, c.seed, c.epsilon, c.radii, c.radii, c.directions, c.trials,
      static_cast<unsigned>(c.threads), mu);
  fpp::CsvBuilder ext(fpp::provenance_line(c),
                      {"seed", "offset", "epsilon", "pairs",
                       "violation_fraction"});
  for (std::size_t o = 0; o < rep.offsets.size(); ++o)
    ext.row({fpp::decimal(c.seed), fpp::decimal(rep.offsets[o]),
             fpp::decimal(rep.epsilon), fpp::decimal(rep.pairs_per_offset),
             fpp::decimal(rep.violation_fraction[o])});
  fpp::write_file_atomic(dir / "extended.csv", ext.str());

  json s = fpp::summary_base(c);
  s["mu_hat"] = est.mu_hat;
  s["mu_se"] = est.mu_se;
  s["symmetry_ok"] = est.symmetry_ok;
  s["subadditive_ok"] = est.subadditive_ok;
  s["symmetry_checks"] = est.symmetry.size();
  s["subadditivity_checks"] = est.subadditivity.size();
  s["extended_epsilon"] = rep.epsilon;
  s["extended_violation_fraction"] = rep.violation_fraction;
  return s;
}

json run_midpoint(const fpp::RunConfig& c, const std::filesystem::path& dir) {
  const fpp::WeightDistribution dist = fpp::parse_distribution(c.distribution);
  const fpp::MidpointCurve curve =
      fpp::midpoint_probability(dist, c.seed, c.radii, c.trials,
                                static_cast<unsigned>(c.threads));

  fpp::CsvBuilder csv(fpp::provenance_line(c),
                      {"seed", "radius", "trials", "hits", "p_hat", "ci_lo",
                       "ci_hi"});
  for (std::size_t i = 0; i < curve.radii.size(); ++i)
    csv.row({fpp::decimal(c.seed), fpp::decimal(curve.radii[i]),
             fpp::decimal(curve.trials), fpp::decimal(curve.hits[i]),
             fpp::decimal(curve.p[i].p_hat), fpp::decimal(curve.p[i].lo),
             fpp::decimal(curve.p[i].hi)});
  fpp::write_file_atomic(dir / "midpoint.csv", csv.str());

  json s = fpp::summary_base(c);
  s["degenerate"] = curve.degenerate;
  s["slope_defined"] = curve.slope_defined;
  if (curve.slope_defined) {
    s["slope"] = curve.slope;
    s["slope_se"] = curve.slope_se;
  }
  return s;
}

json run_busemann(const fpp::RunConfig& c, const std::filesystem::path& dir) {
  const fpp::WeightDistribution dist = fpp::parse_distribution(c.distribution);
  const std::int64_t base = c.radii.front();
  const int doublings = static_cast<int>(c.radii.size());
  const std::vector<fpp::Vertex> probes = fpp::default_probe_offsets();

  struct TrialOut {
    std::vector<fpp::BusemannEstimate> estimates;
    double ax, ay, rms;
  };
  const auto trials = fpp::run_trials(
      c.seed, c.trials, static_cast<unsigned>(c.threads),
      [&](std::uint64_t, std::uint64_t seed) {
        const fpp::EdgeWeightField field(seed, dist);
        const fpp::RayApproximation ray =
            fpp::geodesic_ray_anchors(field, {0, 0}, 0.0, base, doublings);
        TrialOut out;
        for (const fpp::Vertex p : probes)
          out.estimates.push_back(
              fpp::busemann_sequence(field, p, {0, 0}, ray));
        const fpp::LinearFunctionalFit fit =
            fpp::fit_linear_functional(out.estimates);
        out.ax = fit.ax;
        out.ay = fit.ay;
        out.rms = fit.rms_residual;
        return out;
      });

  fpp::CsvBuilder csv(fpp::provenance_line(c),
                      {"seed", "x", "y", "k", "r_k", "b_k", "gap", "bound_T"});
  double mean_last_gap = 0.0;
  for (std::uint64_t t = 0; t < c.trials; ++t) {
    const std::uint64_t seed = fpp::derive_trial_seed(c.seed, t);
    double trial_gap = 0.0;
    for (const fpp::BusemannEstimate& e : trials[t].estimates) {
      for (std::size_t k = 0; k < e.values.size(); ++k) {
        const double gap = k == 0 ? 0.0 : e.values[k] - e.values[k - 1];
        csv.row({fpp::decimal(seed), fpp::vertex_cell(e.x),
                 fpp::vertex_cell(e.y), fpp::decimal(std::uint64_t{k}),
                 fpp::decimal(e.radii[k]), fpp::decimal(e.values[k]),
                 fpp::decimal(gap), fpp::decimal(e.t_xy)});
      }
      const std::size_t last = e.values.size() - 1;
      trial_gap += last == 0 ? 0.0
                             : std::fabs(e.values[last] - e.values[last - 1]);
    }
    mean_last_gap +=
        trial_gap / static_cast<double>(trials[t].estimates.size());
  }
  mean_last_gap /= static_cast<double>(c.trials);
  fpp::write_file_atomic(dir / "busemann.csv", csv.str());

  double mean_ax = 0.0, mean_ay = 0.0, mean_rms = 0.0;
  for (const TrialOut& t : trials) {
    mean_ax += t.ax;
    mean_ay += t.ay;
    mean_rms += t.rms;
  }
  json s = fpp::summary_base(c);
  s["probes"] = probes.size();
  s["anchor_base"] = base;
  s["anchor_doublings"] = doublings;
  s["mean_ax"] = mean_ax / static_cast<double>(c.trials);
  s["mean_ay"] = mean_ay / static_cast<double>(c.trials);
  s["mean_rms_residual"] = mean_rms / static_cast<double>(c.trials);
  s["mean_last_gap"] = mean_last_gap;
  return s;
}

json run_labels(const fpp::RunConfig& c, const std::filesystem::path& dir) {
  const fpp::WeightDistribution dist = fpp::parse_distribution(c.distribution);
  const fpp::Window window{{0, 0},
                           static_cast<std::int32_t>(c.radii.back())};
  constexpr int kAttempts = 32;

  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    const std::uint64_t seed = fpp::derive_trial_seed(c.seed, attempt);
    const fpp::VertexNoise noise{seed};
    fpp::VoronoiPartition part;
    try {
      part = fpp::voronoi_partition(noise, static_cast<int>(c.level), window);
    } catch (const fpp::RetryNeeded&) {
      continue;
    }
    const std::vector<std::size_t> sizes = part.class_sizes();
    for (std::uint32_t cls = 0; cls < part.sites.size(); ++cls) {
      fpp::AveragedLabeling labeling;
      try {
        const fpp::EdgeWeightField field(seed, dist);
        labeling = fpp::averaged_labels(field, part, cls, window);
      } catch (const fpp::ClassTooLarge&) {
        continue;
      } catch (const std::domain_error&) {
        continue;
      }

      fpp::CsvBuilder csv(fpp::provenance_line(c),
                          {"seed", "level", "class", "root", "leaf", "mass",
                           "M", "phi_terminal", "F"});
      for (const fpp::MemberLabeling& m : labeling.members) {
        std::unordered_map<std::uint64_t, double> mass;
        for (std::size_t i = 0; i < m.flow.leaves.size(); ++i)
          mass[fpp::vertex_key(m.flow.leaves[i])] = m.flow.leaf_mass[i];
        for (std::size_t i = 0; i < m.cumulative.leaves.size(); ++i) {
          const fpp::Vertex leaf = m.cumulative.leaves[i];
          const fpp::LatticePath path = m.flow.tree.path_from_source(leaf);
          const fpp::Edge terminal{path.vertices[path.size() - 2], leaf};
          csv.row({fpp::decimal(seed), fpp::decimal(c.level),
                   fpp::decimal(std::uint64_t{cls}), fpp::vertex_cell(m.root),
                   fpp::vertex_cell(leaf),
                   fpp::decimal(mass.at(fpp::vertex_key(leaf))),
                   fpp::decimal(m.averaged[i]),
                   fpp::decimal(m.phi.at(fpp::edge_id(terminal))),
                   fpp::decimal(fpp::label_of_path(labeling, path))});
        }
      }
      fpp::write_file_atomic(dir / "labels.csv", csv.str());

      const fpp::MemberLabeling& first = labeling.members.front();
      std::unordered_map<std::uint64_t, double> value_of;
      for (std::size_t i = 0; i < first.cumulative.leaves.size(); ++i)
        value_of[fpp::vertex_key(first.cumulative.leaves[i])] =
            first.labels[i];
      std::vector<double> leaf_values;
      for (const fpp::Vertex leaf : first.flow.leaves)
        leaf_values.push_back(value_of.at(fpp::vertex_key(leaf)));
      fpp::RenderOptions opt;
      opt.stroke_scale = c.stroke_scale;
      opt.palette = c.palette;
      opt.comment = fpp::provenance_line(c);
      fpp::write_file_atomic(
          dir / "labels.svg",
          fpp::render_tree(first.flow.tree, &first.flow, &leaf_values, opt));

      json s = fpp::summary_base(c);
      s["noise_seed"] = seed;
      s["attempt"] = attempt;
      s["level"] = c.level;
      s["class_id"] = cls;
      s["site"] = fpp::vertex_cell(labeling.site);
      s["class_size"] = sizes[cls];
      s["members_kept"] = labeling.members.size();
      s["dropped_boundary_roots"] = labeling.dropped_boundary_roots;
      s["dropped_noncoalescing"] = labeling.dropped_noncoalescing;
      return s;
    }
  }
  throw std::runtime_error("labels: no usable class in " +
                           std::to_string(kAttempts) +
                           " attempts (master seed " + std::to_string(c.seed) +
                           "); raise the window or lower the level");
}

json run_coalesce(const fpp::RunConfig& c, const std::filesystem::path& dir) {
  const fpp::WeightDistribution dist = fpp::parse_distribution(c.distribution);
  const fpp::CoalescenceStats stats = fpp::coalescence_study(
      dist, c.seed, c.separations, c.target_radius, c.trials,
      static_cast<unsigned>(c.threads));

  fpp::CsvBuilder csv(fpp::provenance_line(c),
                      {"seed", "separation", "trials", "q25", "median", "q75"});
  for (std::size_t i = 0; i < stats.separations.size(); ++i)
    csv.row({fpp::decimal(c.seed), fpp::decimal(stats.separations[i]),
             fpp::decimal(stats.trials), fpp::decimal(stats.q25[i]),
             fpp::decimal(stats.median_radius[i]),
             fpp::decimal(stats.q75[i])});
  fpp::write_file_atomic(dir / "coalesce.csv", csv.str());

  json s = fpp::summary_base(c);
  s["target_radius"] = stats.target_radius;
  s["median_merge_radius"] = stats.median_radius;
  return s;
}

json run_exponents(const fpp::RunConfig& c, const std::filesystem::path& dir) {
  const fpp::WeightDistribution dist = fpp::parse_distribution(c.distribution);
  const fpp::ExponentObservable obs =
      c.observable == "chi" ? fpp::ExponentObservable::Chi
      : c.observable == "xi" ? fpp::ExponentObservable::Xi
                             : fpp::ExponentObservable::Midpoint;
  const fpp::ExponentFit fit =
      fpp::exponent_fit(dist, c.seed, obs, c.sizes, c.trials,
                        static_cast<unsigned>(c.threads));

  fpp::CsvBuilder csv(fpp::provenance_line(c),
                      {"seed", "observable", "n", "statistic", "se"});
  for (std::size_t i = 0; i < fit.sizes.size(); ++i)
    csv.row({fpp::decimal(c.seed), fpp::observable_name(fit.observable),
             fpp::decimal(fit.sizes[i]), fpp::decimal(fit.statistic[i]),
             fpp::decimal(fit.statistic_se[i])});
  fpp::write_file_atomic(dir / "exponents.csv", csv.str());

  json s = fpp::summary_base(c);
  s["observable"] = fpp::observable_name(fit.observable);
  s["degenerate"] = fit.degenerate;
  if (!fit.note.empty()) s["note"] = fit.note;
  if (!fit.degenerate) {
    s["slope"] = fit.slope;
    s["slope_se"] = fit.slope_se;
    s["intercept"] = fit.intercept;
  }
  return s;
}

json run_geodesic(const fpp::RunConfig& c, const std::filesystem::path& dir) {
  const fpp::WeightDistribution dist = fpp::parse_distribution(c.distribution);
  const std::uint64_t seed = fpp::derive_trial_seed(c.seed, 0);
  const fpp::EdgeWeightField field(seed, dist);
  const std::int64_t r = c.radii.back();
  const fpp::Window window = fpp::window_for_radius({0, 0}, r);
  const fpp::GeodesicTree tree =
      fpp::shortest_path_tree(field, {0, 0}, window);

  fpp::write_file_atomic(dir / "tree.bin", fpp::serialize_tree(tree));

  fpp::CsvBuilder csv(fpp::provenance_line(c), {"seed", "x", "T"});
  for (std::int64_t k = 1; k <= r; ++k)
    csv.row({fpp::decimal(seed), fpp::decimal(k),
             fpp::decimal(tree.distance_at(
                 {static_cast<std::int32_t>(k), 0}))});
  fpp::write_file_atomic(dir / "geodesic.csv", csv.str());

  fpp::RenderOptions opt;
  opt.stroke_scale = c.stroke_scale;
  opt.palette = c.palette;
  opt.comment = fpp::provenance_line(c);
  fpp::write_file_atomic(dir / "geodesic.svg",
                         fpp::render_tree(tree, nullptr, nullptr, opt));

  json s = fpp::summary_base(c);
  s["field_seed"] = seed;
  s["radius"] = r;
  s["window_half_width"] = window.half_width;
  s["complete"] = tree.complete;
  s["T_east"] = tree.distance_at({static_cast<std::int32_t>(r), 0});
  return s;
}

json run_render(const fpp::RunConfig& c, const std::filesystem::path& dir) {
  const fpp::WeightDistribution dist = fpp::parse_distribution(c.distribution);
  const std::uint64_t seed = fpp::derive_trial_seed(c.seed, 0);
  const fpp::EdgeWeightField field(seed, dist);
  const fpp::Window window = fpp::window_for_radius({0, 0}, c.radii.back());
  const fpp::TreeFlow flow =
      fpp::unit_flow(fpp::shortest_path_tree(field, {0, 0}, window));

  // Annotate leaves with the cumulative flow taken from the leaf nearest the
  // east boundary midpoint in the counterclockwise order.
  std::size_t ref = 0;
  for (std::size_t i = 1; i < flow.leaves.size(); ++i)
    if (window.boundary_position(flow.leaves[i]) <
        window.boundary_position(flow.leaves[ref]))
      ref = i;
  const fpp::CumulativeFlow cumulative = fpp::cumulative_flow(
      flow, flow.tree.path_from_source(flow.leaves[ref]));
  std::unordered_map<std::uint64_t, double> value_of;
  for (std::size_t i = 0; i < cumulative.leaves.size(); ++i)
    value_of[fpp::vertex_key(cumulative.leaves[i])] = cumulative.values[i];
  std::vector<double> leaf_values;
  for (const fpp::Vertex leaf : flow.leaves)
    leaf_values.push_back(value_of.at(fpp::vertex_key(leaf)));

  fpp::RenderOptions opt;
  opt.stroke_scale = c.stroke_scale;
  opt.palette = c.palette;
  opt.comment = fpp::provenance_line(c);
  fpp::write_file_atomic(dir / "render.svg",
                         fpp::render_tree(flow.tree, &flow, &leaf_values, opt));

  json s = fpp::summary_base(c);
  s["field_seed"] = seed;
  s["leaves"] = flow.leaves.size();
  s["reference_leaf"] = fpp::vertex_cell(cumulative.reference_leaf);
  return s;
}

int dispatch(const fpp::RunConfig& c) {
  const std::filesystem::path dir = artifact_dir(c);
  std::filesystem::create_directories(dir);

  json summary;
  if (c.command == "shape") summary = run_shape(c, dir);
  else if (c.command == "midpoint") summary = run_midpoint(c, dir);
  else if (c.command == "busemann") summary = run_busemann(c, dir);
  else if (c.command == "labels") summary = run_labels(c, dir);
  else if (c.command == "coalesce") summary = run_coalesce(c, dir);
  else if (c.command == "exponents") summary = run_exponents(c, dir);
  else if (c.command == "geodesic") summary = run_geodesic(c, dir);
  else if (c.command == "render") summary = run_render(c, dir);
  else throw fpp::ConfigError("command: unknown command '" + c.command + "'");

  fpp::write_file_atomic(dir / "summary.json", fpp::json_bytes(summary));
  std::cout << dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "First-passage percolation laboratory: shapes, geodesics, Busemann "
      "sequences, flow labelings, and scaling diagnostics on Z^2"};
  app.set_help_flag("-h,--help", "print this help and exit");

  std::string config_path, command, distribution, radii_text, sizes_text;
  std::string outdir, observable, palette;
  std::uint64_t seed = 0, trials = 0, threads = 0, directions = 0;
  std::int64_t level = 0;
  double epsilon = 0.0, stroke_scale = 0.0;

  auto* o_config = app.add_option("--config", config_path,
                                  "JSON config file (flags override it)");
  auto* o_command = app.add_option("--command", command,
                                   "shape|midpoint|busemann|labels|coalesce|"
                                   "exponents|geodesic|render");
  auto* o_seed = app.add_option("--seed", seed, "master seed");
  auto* o_trials = app.add_option("--trials", trials, "independent trials");
  auto* o_radii =
      app.add_option("--radii", radii_text, "comma-separated radii, e.g. 8,16");
  auto* o_sizes =
      app.add_option("--sizes", sizes_text, "comma-separated sizes, e.g. 8,16,32");
  auto* o_dist = app.add_option("--distribution", distribution,
                                "constant_one | exponential(r) | uniform(a,b) "
                                "| gamma(k,theta)");
  auto* o_threads = app.add_option("--threads", threads, "worker threads");
  auto* o_outdir = app.add_option("--outdir", outdir, "artifact directory");
  auto* o_level = app.add_option("--level", level, "noise level (labels)");
  auto* o_eps = app.add_option("--epsilon", epsilon,
                               "band half-width (extended shape checks)");
  auto* o_obs = app.add_option("--observable", observable,
                               "chi|xi|midpoint (exponents)");
  auto* o_scale =
      app.add_option("--stroke-scale", stroke_scale, "SVG width per unit mass");
  auto* o_palette = app.add_option("--palette", palette, "ink|ember");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    json merged = json::object();
    if (o_config->count()) {
      std::ifstream f(config_path);
      if (!f)
        throw fpp::ConfigError("config: cannot open file '" + config_path +
                               "'");
      try {
        merged = json::parse(f);
      } catch (const json::parse_error& e) {
        throw fpp::ConfigError("config: malformed JSON: " +
                               std::string(e.what()));
      }
    }
    if (o_command->count()) merged["command"] = command;
    if (o_seed->count()) merged["seed"] = seed;
    if (o_trials->count()) merged["trials"] = trials;
    if (o_radii->count()) merged["radii"] = parse_int_list(radii_text, "radii");
    if (o_sizes->count()) merged["sizes"] = parse_int_list(sizes_text, "sizes");
    if (o_dist->count()) merged["distribution"] = distribution;
    if (o_threads->count()) merged["threads"] = threads;
    if (o_outdir->count()) merged["outdir"] = outdir;
    if (o_level->count()) merged["level"] = level;
    if (o_eps->count()) merged["epsilon"] = epsilon;
    if (o_obs->count()) merged["observable"] = observable;
    if (o_scale->count()) merged["stroke_scale"] = stroke_scale;
    if (o_palette->count()) merged["palette"] = palette;

    const fpp::RunConfig cfg = fpp::config_from_json(merged);
    fpp::validate(cfg);
    return dispatch(cfg);
  } catch (const fpp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const fpp::TrialFailure& e) {
    std::cerr << "runtime failure: " << e.what()
              << " (replay with this trial seed)\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << "\n";
    return 1;
  }
}
