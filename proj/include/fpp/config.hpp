#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpp/lattice.hpp"
#include "fpp/weights.hpp"

namespace fpp {

/// A rejected configuration; the message names the violated constraint.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> cmds = {
      "shape",    "midpoint",  "busemann", "labels",
      "coalesce", "exponents", "geodesic", "render"};
  return cmds;
}

/**
 * One experiment invocation. Every field has a usable default, so
 * {command, seed} alone is a valid configuration. `threads` and `outdir`
 * steer execution only and never influence results, the config hash, or any
 * emitted byte.
 */
struct RunConfig {
  std::string command = "shape";
  std::string distribution = "exponential(1)";
  std::uint64_t seed = 1;
  std::uint64_t trials = 10;
  std::vector<std::int64_t> radii = {8, 16, 32};
  std::vector<std::int64_t> sizes = {8, 16, 32, 64};
  std::vector<std::int64_t> separations = {0, 2, 4, 8};
  std::int64_t target_radius = 64;
  std::uint64_t directions = 16;
  std::int64_t level = 2;
  double epsilon = 0.05;
  std::string observable = "xi";  // exponents: chi | xi | midpoint
  std::uint64_t threads = 1;
  std::string outdir = "out";
  double stroke_scale = 6.0;
  std::string palette = "ink";

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Parses "name" or "name(p1[,p2])" into a weight distribution.
/// Accepted: constant_one, exponential(rate), uniform(a,b), gamma(k,theta).
inline WeightDistribution parse_distribution(const std::string& spec) {
  std::string name = spec;
  std::vector<double> params;
  const auto open = spec.find('(');
  if (open != std::string::npos) {
    if (spec.back() != ')')
      throw ConfigError("distribution: missing closing parenthesis in '" +
                        spec + "'");
    name = spec.substr(0, open);
    std::string body = spec.substr(open + 1, spec.size() - open - 2);
    std::size_t pos = 0;
    while (pos < body.size()) {
      std::size_t comma = body.find(',', pos);
      if (comma == std::string::npos) comma = body.size();
      const std::string tok = body.substr(pos, comma - pos);
      try {
        std::size_t used = 0;
        const double v = std::stod(tok, &used);
        if (used != tok.size()) throw std::invalid_argument(tok);
        params.push_back(v);
      } catch (const std::exception&) {
        throw ConfigError("distribution: bad parameter '" + tok + "' in '" +
                          spec + "'");
      }
      pos = comma + 1;
    }
  }
  try {
    if (name == "constant_one") {
      if (!params.empty())
        throw std::invalid_argument("constant_one takes no parameters");
      return WeightDistribution::constant_one();
    }
    if (name == "exponential") {
      if (params.size() != 1)
        throw std::invalid_argument("exponential takes one rate parameter");
      return WeightDistribution::exponential(params[0]);
    }
    if (name == "uniform") {
      if (params.size() != 2)
        throw std::invalid_argument("uniform takes two bound parameters");
      return WeightDistribution::uniform(params[0], params[1]);
    }
    if (name == "gamma") {
      if (params.size() != 2)
        throw std::invalid_argument("gamma takes shape and scale parameters");
      return WeightDistribution::gamma(params[0], params[1]);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError("distribution: " + std::string(e.what()));
  }
  throw ConfigError("distribution: unknown family '" + name + "'");
}

namespace detail {

inline void ascending_positive(const std::vector<std::int64_t>& xs,
                               std::int64_t floor, const char* what) {
  if (xs.empty()) throw ConfigError(std::string(what) + ": list is empty");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (xs[i] < floor)
      throw ConfigError(std::string(what) + ": entries must be >= " +
                        std::to_string(floor));
    if (i > 0 && xs[i] <= xs[i - 1])
      throw ConfigError(std::string(what) +
                        ": entries must be strictly increasing");
  }
}

/// Window policy: experiment windows have half-width ceil(1.5 * radius)
/// around a center within one radius of the origin, and every corner must
/// stay inside the supported coordinate range.
inline void check_window_policy(std::int64_t radius, const char* what) {
  const std::int64_t hw = (3 * radius + 1) / 2;
  if (radius + hw > std::int64_t{kCoordMax})
    throw ConfigError(std::string(what) +
                      ": radius violates the window policy (window exceeds "
                      "the supported coordinate range)");
}

}  // namespace detail

/// Validates cross-field constraints; throws ConfigError naming the offender.
inline void validate(const RunConfig& c) {
  bool known = false;
  for (const std::string& cmd : known_commands()) known |= (cmd == c.command);
  if (!known) throw ConfigError("command: unknown command '" + c.command + "'");

  parse_distribution(c.distribution);
  if (c.trials < 1) throw ConfigError("trials: must be >= 1");
  if (c.threads < 1 || c.threads > 256)
    throw ConfigError("threads: must lie in [1, 256]");
  if (!(c.epsilon >= 0.0)) throw ConfigError("epsilon: must be >= 0");
  if (!(c.stroke_scale > 0.0)) throw ConfigError("stroke_scale: must be > 0");
  if (c.palette != "ink" && c.palette != "ember")
    throw ConfigError("palette: must be 'ink' or 'ember'");
  if (c.observable != "chi" && c.observable != "xi" &&
      c.observable != "midpoint")
    throw ConfigError("observable: must be chi, xi, or midpoint");

  detail::ascending_positive(c.radii, c.command == "midpoint" ? 2 : 1, "radii");
  detail::check_window_policy(c.radii.back(), "radii");

  if (c.command == "shape") {
    if (c.directions == 0 || c.directions % 4 != 0)
      throw ConfigError("directions: must be a positive multiple of 4");
  }
  if (c.command == "exponents") {
    detail::ascending_positive(c.sizes, 2, "sizes");
    if (c.sizes.size() < 3)
      throw ConfigError("sizes: exponent fits need at least 3 sizes");
    detail::check_window_policy(c.sizes.back(), "sizes");
  }
  if (c.command == "labels") {
    if (c.level < 1) throw ConfigError("level: must be >= 1");
    if (c.level > 16) throw ConfigError("level: must be <= 16");
    if (c.radii.back() < 8)
      throw ConfigError("radii: labeling windows need half-width >= 8");
  }
  if (c.command == "coalesce") {
    if (c.target_radius < 8)
      throw ConfigError("target_radius: must be >= 8");
    detail::check_window_policy(c.target_radius, "target_radius");
    if (c.separations.empty())
      throw ConfigError("separations: list is empty");
    for (std::size_t i = 0; i < c.separations.size(); ++i) {
      if (c.separations[i] < 0)
        throw ConfigError("separations: entries must be >= 0");
      if (c.separations[i] * 8 > c.target_radius)
        throw ConfigError("separations: entries must satisfy s <= R/8");
      if (i > 0 && c.separations[i] <= c.separations[i - 1])
        throw ConfigError("separations: entries must be strictly increasing");
    }
  }
}

/// Full JSON image of a config; parse(serialize(c)) == c.
inline nlohmann::json serialize(const RunConfig& c) {
  nlohmann::json j;
  j["command"] = c.command;
  j["distribution"] = c.distribution;
  j["seed"] = c.seed;
  j["trials"] = c.trials;
  j["radii"] = c.radii;
  j["sizes"] = c.sizes;
  j["separations"] = c.separations;
  j["target_radius"] = c.target_radius;
  j["directions"] = c.directions;
  j["level"] = c.level;
  j["epsilon"] = c.epsilon;
  j["observable"] = c.observable;
  j["threads"] = c.threads;
  j["outdir"] = c.outdir;
  j["stroke_scale"] = c.stroke_scale;
  j["palette"] = c.palette;
  return j;
}

/// Builds a config from JSON, starting from defaults. Unknown keys are
/// rejected by name; present keys are type-checked.
inline RunConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  RunConfig c;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "command") value.get_to(c.command);
      else if (key == "distribution") value.get_to(c.distribution);
      else if (key == "seed") value.get_to(c.seed);
      else if (key == "trials") value.get_to(c.trials);
      else if (key == "radii") value.get_to(c.radii);
      else if (key == "sizes") value.get_to(c.sizes);
      else if (key == "separations") value.get_to(c.separations);
      else if (key == "target_radius") value.get_to(c.target_radius);
      else if (key == "directions") value.get_to(c.directions);
      else if (key == "level") value.get_to(c.level);
      else if (key == "epsilon") value.get_to(c.epsilon);
      else if (key == "observable") value.get_to(c.observable);
      else if (key == "threads") value.get_to(c.threads);
      else if (key == "outdir") value.get_to(c.outdir);
      else if (key == "stroke_scale") value.get_to(c.stroke_scale);
      else if (key == "palette") value.get_to(c.palette);
      else throw ConfigError("config: unknown key '" + key + "'");
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: bad field type: " + std::string(e.what()));
  }
  return c;
}

/// The portion of the config that determines results: everything except the
/// execution-only fields (threads, outdir).
inline nlohmann::json semantic_json(const RunConfig& c) {
  nlohmann::json j = serialize(c);
  j.erase("threads");
  j.erase("outdir");
  return j;
}

/// 16-hex-digit FNV-1a hash of the canonical (sorted-key) semantic JSON.
/// Identical semantics give identical hashes regardless of thread count.
inline std::string config_hash(const RunConfig& c) {
  const std::string canon = semantic_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const unsigned char ch : canon) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = hex[h & 0xf];
    h >>= 4;
  }
  return out;
}

}  // namespace fpp
