#include <catch2/catch_amalgamated.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "fpp/config.hpp"
#include "fpp/io.hpp"
#include "fpp/metric.hpp"
#include "fpp/render.hpp"
#include "fpp/weights.hpp"

using namespace fpp;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "fpp_cli_tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run_cli(const std::string& args) {
  const std::string cmd =
      std::string(FPP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int rc = std::system(cmd.c_str());
  REQUIRE(rc != -1);
  REQUIRE(WIFEXITED(rc));
  return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  REQUIRE(f.good());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// The single <command>-<hash> directory produced under `outdir`.
fs::path only_artifact_dir(const fs::path& outdir) {
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(outdir))
    if (e.is_directory()) dirs.push_back(e.path());
  REQUIRE(dirs.size() == 1);
  return dirs.front();
}

std::size_t count_occurrences(const std::string& hay, const std::string& needle) {
  std::size_t n = 0;
  for (std::size_t pos = hay.find(needle); pos != std::string::npos;
       pos = hay.find(needle, pos + needle.size()))
    ++n;
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

TEST_CASE("configs round-trip through JSON serialization", "[cli][config]") {
  std::mt19937_64 gen(20260815);
  const std::vector<std::string> dists = {
      "constant_one", "exponential(1)", "exponential(0.25)",
      "uniform(0.5,1.5)", "gamma(2,0.5)"};
  auto pick = [&](const std::vector<std::string>& v) {
    return v[gen() % v.size()];
  };

  for (int i = 0; i < 100; ++i) {
    RunConfig c;
    c.command = known_commands()[gen() % known_commands().size()];
    c.distribution = pick(dists);
    c.seed = gen();
    c.trials = 1 + gen() % 1000;
    const std::int64_t r0 = 8 + static_cast<std::int64_t>(gen() % 8);
    c.radii = {r0, 2 * r0, 4 * r0};
    const std::int64_t n0 = 2 + static_cast<std::int64_t>(gen() % 6);
    c.sizes = {n0, 2 * n0, 4 * n0, 8 * n0};
    c.target_radius = 64 + static_cast<std::int64_t>(gen() % 64);
    c.separations = {0, 1 + static_cast<std::int64_t>(gen() % 3),
                     c.target_radius / 8};
    c.directions = 4 * (1 + gen() % 8);
    c.level = 1 + static_cast<std::int64_t>(gen() % 6);
    c.epsilon = 0.01 * static_cast<double>(gen() % 100);
    c.observable = pick({"chi", "xi", "midpoint"});
    c.threads = 1 + gen() % 8;
    c.outdir = "out_" + std::to_string(i);
    c.stroke_scale = 0.5 + 0.25 * static_cast<double>(gen() % 20);
    c.palette = pick({"ink", "ember"});

    REQUIRE_NOTHROW(validate(c));
    const RunConfig back = config_from_json(serialize(c));
    REQUIRE(back == c);
    REQUIRE(config_hash(back) == config_hash(c));
  }
}

TEST_CASE("config hash covers semantics and ignores execution fields",
          "[cli][config]") {
  RunConfig a;
  RunConfig b = a;
  b.threads = 8;
  b.outdir = "elsewhere";
  REQUIRE(config_hash(a) == config_hash(b));
  RunConfig c = a;
  c.seed = a.seed + 1;
  REQUIRE(config_hash(a) != config_hash(c));
  RunConfig d = a;
  d.radii.push_back(d.radii.back() * 2);
  REQUIRE(config_hash(a) != config_hash(d));
  REQUIRE(config_hash(a).size() == 16);
}

TEST_CASE("config validation names the offending constraint",
          "[cli][config]") {
  auto message_of = [](const RunConfig& c) {
    try {
      validate(c);
      return std::string("(no error)");
    } catch (const ConfigError& e) {
      return std::string(e.what());
    }
  };

  RunConfig c;
  c.command = "frobnicate";
  REQUIRE(message_of(c).find("command") != std::string::npos);

  c = RunConfig{};
  c.radii = {500'000'000};
  REQUIRE(message_of(c).find("window policy") != std::string::npos);

  c = RunConfig{};
  c.command = "midpoint";
  c.radii = {1, 4};
  REQUIRE(message_of(c).find("radii") != std::string::npos);

  c = RunConfig{};
  c.palette = "neon";
  REQUIRE(message_of(c).find("palette") != std::string::npos);

  c = RunConfig{};
  c.command = "coalesce";
  c.separations = {0, 100};
  REQUIRE(message_of(c).find("separations") != std::string::npos);

  c = RunConfig{};
  c.command = "exponents";
  c.sizes = {8, 16};
  REQUIRE(message_of(c).find("sizes") != std::string::npos);

  c = RunConfig{};
  c.command = "shape";
  c.directions = 6;
  REQUIRE(message_of(c).find("directions") != std::string::npos);

  nlohmann::json j = serialize(RunConfig{});
  j["frobnicate"] = 1;
  REQUIRE_THROWS_AS(config_from_json(j), ConfigError);
}

TEST_CASE("distribution specs parse and reject malformed input",
          "[cli][config]") {
  REQUIRE(parse_distribution("constant_one").name() ==
          WeightDistribution::constant_one().name());
  REQUIRE(parse_distribution("exponential(2)").mean() ==
          WeightDistribution::exponential(2).mean());
  REQUIRE(parse_distribution("uniform(0.5,1.5)").mean() ==
          WeightDistribution::uniform(0.5, 1.5).mean());
  REQUIRE(parse_distribution("gamma(2,0.5)").mean() ==
          WeightDistribution::gamma(2, 0.5).mean());

  REQUIRE_THROWS_AS(parse_distribution("exponential"), ConfigError);
  REQUIRE_THROWS_AS(parse_distribution("exponential(0)"), ConfigError);
  REQUIRE_THROWS_AS(parse_distribution("exponential(1,2)"), ConfigError);
  REQUIRE_THROWS_AS(parse_distribution("uniform(1)"), ConfigError);
  REQUIRE_THROWS_AS(parse_distribution("gamma(2,oops)"), ConfigError);
  REQUIRE_THROWS_AS(parse_distribution("lognormal(1)"), ConfigError);
  REQUIRE_THROWS_AS(parse_distribution("exponential(1"), ConfigError);
}

// ---------------------------------------------------------------------------
// IO helpers
// ---------------------------------------------------------------------------

TEST_CASE("csv builder emits comment, header, and LF rows", "[cli][io]") {
  CsvBuilder csv("seed=1 config=abc", {"a", "b"});
  csv.row({"1", "2.5"});
  csv.row({"3", "x:y"});
  REQUIRE(csv.str() == "# seed=1 config=abc\na,b\n1,2.5\n3,x:y\n");
  REQUIRE(csv.str().find('\r') == std::string::npos);
  REQUIRE_THROWS_AS(csv.row({"only-one"}), std::invalid_argument);

  REQUIRE(decimal(0.5) == "0.5");
  REQUIRE(decimal(std::int64_t{-7}) == "-7");
  REQUIRE(decimal(std::uint64_t{7}) == "7");
  REQUIRE(vertex_cell({3, -7}) == "3:-7");
}

TEST_CASE("atomic writes land complete and leave no temp file", "[cli][io]") {
  const fs::path dir = fresh_dir("atomic");
  const fs::path target = dir / "artifact.csv";
  write_file_atomic(target, std::string_view("alpha\nbeta\n"));
  REQUIRE(slurp(target) == "alpha\nbeta\n");
  std::size_t entries = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    ++entries;
    REQUIRE(e.path().extension() != ".tmp");
  }
  REQUIRE(entries == 1);
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

namespace {

GeodesicTree blank_tree(const Window& w, Vertex source) {
  GeodesicTree t;
  t.source = source;
  t.window = w;
  t.dist.assign(static_cast<std::size_t>(w.vertex_count()), kInf);
  t.parent_dir.assign(static_cast<std::size_t>(w.vertex_count()), kNoParent);
  t.dist[w.index_of(source)] = 0.0;
  t.complete = true;
  return t;
}

void attach(GeodesicTree& t, Vertex child, Vertex parent, double dist) {
  t.dist[t.window.index_of(child)] = dist;
  t.parent_dir[t.window.index_of(child)] =
      static_cast<std::uint8_t>(dir_between(child, parent));
}

}  // namespace

TEST_CASE("render emits one line element per tree edge", "[cli][render]") {
  const Window w{{0, 0}, 1};
  GeodesicTree t = blank_tree(w, {0, 0});
  t.complete = false;
  attach(t, {1, 0}, {0, 0}, 1.0);

  const std::string svg = render_tree(t);
  REQUIRE(count_occurrences(svg, "<line ") == 1);
  REQUIRE(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\"") !=
          std::string::npos);
  REQUIRE(svg.find("viewBox=") != std::string::npos);
  REQUIRE(svg.rfind("</svg>\n") == svg.size() - 7);
  REQUIRE(render_tree(t) == svg);
}

TEST_CASE("render strokes equal-split terminals equally", "[cli][render]") {
  // Root at the center of a 3x3 window with three boundary children; the
  // remaining boundary vertices hang off absorbed vertices and carry nothing.
  const Window w{{0, 0}, 1};
  GeodesicTree t = blank_tree(w, {0, 0});
  attach(t, {1, 0}, {0, 0}, 1.0);
  attach(t, {0, 1}, {0, 0}, 1.0);
  attach(t, {0, -1}, {0, 0}, 1.0);
  attach(t, {1, 1}, {0, 1}, 2.0);
  attach(t, {-1, 1}, {0, 1}, 2.0);
  attach(t, {-1, -1}, {0, -1}, 2.0);
  attach(t, {1, -1}, {0, -1}, 2.0);
  attach(t, {-1, 0}, {-1, 1}, 3.0);

  const TreeFlow flow = unit_flow(t);
  REQUIRE(flow.leaves.size() == 3);

  RenderOptions opt;
  opt.stroke_scale = 6.0;
  const std::string svg = render_tree(t, &flow, nullptr, opt);
  REQUIRE(count_occurrences(svg, "<line ") == 8);
  // Three leaf edges at mass 1/3 each -> width 2.0000; the rest at the floor.
  REQUIRE(count_occurrences(svg, "stroke-width=\"2.0000\"") == 3);
  REQUIRE(count_occurrences(svg, "stroke-width=\"0.0600\"") == 5);

  std::vector<double> values = {0.25, 0.5, 1.0};
  const std::string labeled = render_tree(t, &flow, &values, opt);
  REQUIRE(count_occurrences(labeled, "<text ") == 3);
  REQUIRE(labeled.find(">0.2500<") != std::string::npos);
  REQUIRE(labeled.find(">1.0000<") != std::string::npos);

  std::vector<double> wrong = {0.25, 0.5};
  REQUIRE_THROWS_AS(render_tree(t, &flow, &wrong, opt), std::invalid_argument);
  REQUIRE_THROWS_AS(render_tree(t, nullptr, &values, opt),
                    std::invalid_argument);

  RenderOptions ember = opt;
  ember.palette = "ember";
  ember.comment = "seed=1 config=feed";
  const std::string tinted = render_tree(t, &flow, nullptr, ember);
  REQUIRE(tinted.find("#7a1f1f") != std::string::npos);
  REQUIRE(tinted.find("<!-- seed=1 config=feed -->") != std::string::npos);
}

// ---------------------------------------------------------------------------
// CLI binary
// ---------------------------------------------------------------------------

TEST_CASE("shape command writes artifacts and exits zero", "[cli]") {
  const fs::path out = fresh_dir("shape_smoke");
  const int rc = run_cli("--command shape --seed 3 --trials 5 --radii 4,8 "
                         "--outdir " + out.string());
  REQUIRE(rc == 0);

  const fs::path dir = only_artifact_dir(out);
  REQUIRE(dir.filename().string().rfind("shape-", 0) == 0);
  REQUIRE(fs::exists(dir / "shape.csv"));
  REQUIRE(fs::exists(dir / "extended.csv"));
  REQUIRE(fs::exists(dir / "summary.json"));

  const std::string csv = slurp(dir / "shape.csv");
  REQUIRE(csv.rfind("# seed=3 config=", 0) == 0);
  REQUIRE(csv.find("seed,direction,theta,radius,target,norm,mean_T,se_T\n") !=
          std::string::npos);
  // comment + header + 16 directions x 2 radii rows
  REQUIRE(count_occurrences(csv, "\n") == 2 + 16 * 2);
  REQUIRE(csv.find('\r') == std::string::npos);

  const nlohmann::json summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  REQUIRE(summary.at("command") == "shape");
  REQUIRE(dir.filename().string() ==
          "shape-" + summary.at("config_hash").get<std::string>());
  REQUIRE(summary.at("seed") == 3);
  REQUIRE(summary.contains("mu_hat"));
  REQUIRE_FALSE(summary.contains("threads"));
  REQUIRE_FALSE(summary.at("config").contains("threads"));
  REQUIRE_FALSE(summary.at("config").contains("outdir"));
}

TEST_CASE("cli artifacts are byte-identical across thread counts", "[cli]") {
  const fs::path out1 = fresh_dir("threads_one");
  const fs::path out4 = fresh_dir("threads_four");
  const std::string common =
      "--command midpoint --seed 5 --trials 50 --radii 2,4 --distribution "
      "'exponential(1)' --outdir ";
  REQUIRE(run_cli(common + out1.string() + " --threads 1") == 0);
  REQUIRE(run_cli(common + out4.string() + " --threads 4") == 0);

  const fs::path d1 = only_artifact_dir(out1);
  const fs::path d4 = only_artifact_dir(out4);
  REQUIRE(d1.filename() == d4.filename());
  REQUIRE(slurp(d1 / "midpoint.csv") == slurp(d4 / "midpoint.csv"));
  REQUIRE(slurp(d1 / "summary.json") == slurp(d4 / "summary.json"));
}

TEST_CASE("identical invocations produce identical artifacts", "[cli]") {
  const fs::path out = fresh_dir("rerun");
  const std::string args = "--command geodesic --seed 11 --radii 6 --outdir " +
                           out.string();
  REQUIRE(run_cli(args) == 0);
  const fs::path dir = only_artifact_dir(out);
  const std::string svg = slurp(dir / "geodesic.svg");
  const std::string csv = slurp(dir / "geodesic.csv");
  const std::string summary = slurp(dir / "summary.json");
  const std::string tree = slurp(dir / "tree.bin");

  REQUIRE(run_cli(args) == 0);
  REQUIRE(slurp(dir / "geodesic.svg") == svg);
  REQUIRE(slurp(dir / "geodesic.csv") == csv);
  REQUIRE(slurp(dir / "summary.json") == summary);
  REQUIRE(slurp(dir / "tree.bin") == tree);

  // The serialized tree deserializes back to the rendered tree.
  const std::vector<std::uint8_t> bytes(tree.begin(), tree.end());
  const GeodesicTree t = deserialize_tree(bytes);
  REQUIRE(t.source == Vertex{0, 0});
  REQUIRE(t.complete);
  REQUIRE(t.window == window_for_radius({0, 0}, 6));
}

TEST_CASE("config file merges with flag overrides", "[cli]") {
  const fs::path out = fresh_dir("merge");
  const fs::path cfg = out / "run.json";
  write_file_atomic(cfg, std::string_view(
      "{\"command\": \"geodesic\", \"seed\": 9, \"radii\": [4]}"));
  REQUIRE(run_cli("--config " + cfg.string() + " --seed 12 --outdir " +
                  out.string()) == 0);
  // Note: only_artifact_dir would also see cfg's parent; look for geodesic-*.
  fs::path dir;
  for (const auto& e : fs::directory_iterator(out))
    if (e.is_directory()) dir = e.path();
  REQUIRE(dir.filename().string().rfind("geodesic-", 0) == 0);
  const nlohmann::json summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  REQUIRE(summary.at("seed") == 12);          // flag wins
  REQUIRE(summary.at("radius") == 4);         // file survives
}

TEST_CASE("bad configurations exit with code 2", "[cli]") {
  const fs::path out = fresh_dir("bad_config");
  REQUIRE(run_cli("--command frobnicate") == 2);
  REQUIRE(run_cli("--command shape --radii 0,4") == 2);
  REQUIRE(run_cli("--command midpoint --radii 1,2") == 2);
  REQUIRE(run_cli("--command shape --bogus-flag 1") == 2);
  REQUIRE(run_cli("--command shape --radii 500000000") == 2);
  REQUIRE(run_cli("--command shape --distribution 'exponential(0)'") == 2);

  const fs::path broken = out / "broken.json";
  write_file_atomic(broken, std::string_view("{oops"));
  REQUIRE(run_cli("--config " + broken.string()) == 2);

  const fs::path unknown = out / "unknown.json";
  write_file_atomic(unknown, std::string_view("{\"commandz\": 1}"));
  REQUIRE(run_cli("--config " + unknown.string()) == 2);

  // Config errors must not leave artifact directories behind.
  REQUIRE(run_cli("--command shape --radii 0,4 --outdir " +
                  (out / "never").string()) == 2);
  REQUIRE_FALSE(fs::exists(out / "never"));
}

TEST_CASE("runtime failures exit with code 1", "[cli]") {
  const fs::path out = fresh_dir("runtime_fail");
  // Level 16 noise sites are ~4^-16 rare: every retry fails in a tiny window.
  REQUIRE(run_cli("--command labels --level 16 --radii 8 --seed 1 --outdir " +
                  out.string()) == 1);
  const fs::path dir = only_artifact_dir(out);
  REQUIRE_FALSE(fs::exists(dir / "labels.csv"));
  REQUIRE_FALSE(fs::exists(dir / "summary.json"));
}
