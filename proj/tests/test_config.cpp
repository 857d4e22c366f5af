#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>
#include <string>

#include "mbo/config.hpp"
#include "mbo/experiments.hpp"
#include "mbo/field_io.hpp"
#include "mbo/initial_conditions.hpp"
#include "mbo/probes.hpp"

using namespace mbo;

namespace {

const char* kMinimal = R"(
[material]
N = 2
sigma = 1
mu = 1

[grid]
sizes = 64

[scheme]
h = 1e-3
steps = 5

[initial]
preset = disk
r = 0.3
)";

template <class E>
std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const E& e) {
    return e.what();
  }
  return "<no error>";
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
  const auto pos = text.find(from);
  if (pos != std::string::npos) text.replace(pos, from.size(), to);
  return text;
}

}  // namespace

TEST(Config, MinimalResolvesScales) {
  const auto cfg = parse_config(kMinimal);
  EXPECT_EQ(cfg.material.num_phases, 2);
  EXPECT_TRUE(cfg.auto_scales);
  EXPECT_DOUBLE_EQ(cfg.scales.gamma, 2.0);
  EXPECT_DOUBLE_EQ(cfg.scales.beta, 0.5);
  EXPECT_EQ(cfg.grid.dim, 2);
  EXPECT_EQ(cfg.grid.sizes[0], 64);
  EXPECT_EQ(cfg.grid.sizes[1], 64);
  EXPECT_EQ(cfg.scheme.steps, 5);
  EXPECT_EQ(cfg.initial.preset, "disk");
  EXPECT_DOUBLE_EQ(cfg.initial.params.at("r"), 0.3);
  EXPECT_NO_THROW(cfg.coefficients());
}

TEST(Config, EchoRoundTrip) {
  auto text = std::string(kMinimal) + "\n[output]\ndir = \"out dir\"\nprobes = [\"radius:1\", \"length:0:1\"]\n";
  const auto a = parse_config(text);
  const auto b = parse_config(a.echo());
  EXPECT_EQ(parse_config(b.echo()).echo(), b.echo());
  EXPECT_EQ(b.material.sigma, a.material.sigma);
  EXPECT_EQ(b.material.mu, a.material.mu);
  EXPECT_EQ(b.initial.params, a.initial.params);
  EXPECT_FALSE(b.auto_scales);
  EXPECT_EQ(b.scales.gamma, a.scales.gamma);
  EXPECT_EQ(b.output_dir, "out dir");
  EXPECT_EQ(b.probes.size(), 2u);
  EXPECT_EQ(b.scheme.h, a.scheme.h);
}

TEST(Config, ExplicitMatricesAndScales) {
  const std::string text = R"(
[material]
N = 3
sigma = [[0, 1, 1], [1, 0, 1.2], [1, 1.2, 0]]
mu = [[0, 1, 1], [1, 0, 1], [1, 1, 0]]
[scales]
gamma = 4
beta = 0.25
[grid]
dim = 3
sizes = [16, 16, 8]
[scheme]
h = 1e-3
tie_break = highest-index
[initial]
preset = mercedes
angle = 30
)";
  const auto cfg = parse_config(text);
  EXPECT_FALSE(cfg.auto_scales);
  EXPECT_DOUBLE_EQ(cfg.material.sigma(1, 2), 1.2);
  EXPECT_EQ(cfg.grid.sizes[2], 8);
  EXPECT_DOUBLE_EQ(cfg.initial.params.at("angle"), 30.0);
  EXPECT_EQ(cfg.scheme.tie_break, TieBreak::HighestIndex);
}

TEST(ConfigErrors, NonSymmetricSigma) {
  const auto text = replace(replace(kMinimal, "N = 2", "N = 3"), "sigma = 1",
                            "sigma = [[0, 1, 1], [1, 0, 1], [2, 1, 0]]");
  EXPECT_NE(error_of<ConfigError>(text).find("sigma"), std::string::npos) << error_of<ConfigError>(text);
}

TEST(ConfigErrors, UnknownPresetListsAvailable) {
  const auto msg = error_of<ConfigError>(replace(replace(kMinimal, "preset = disk", "preset = blob"), "r = 0.3", ""));
  EXPECT_NE(msg.find("blob"), std::string::npos) << msg;
  for (const auto& p : available_presets()) EXPECT_NE(msg.find(p), std::string::npos) << msg;
}

TEST(ConfigErrors, ParseErrorCarriesLine) {
  const auto msg = error_of<ParseError>("[material]\nN = 2\nsigma\n");
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(error_of<ParseError>("N = 2\n").find("line 1"), std::string::npos);
  EXPECT_NE(error_of<ParseError>("[material\n").find("line 1"), std::string::npos);
  EXPECT_NE(error_of<ParseError>("[a]\nx = 1\nx = 2\n").find("duplicate"), std::string::npos);
}

TEST(ConfigErrors, UnknownKeysAndSections) {
  EXPECT_NE(error_of<ConfigError>(replace(kMinimal, "steps = 5", "steps = 5\nspeed = 2")).find("scheme.speed"),
            std::string::npos);
  EXPECT_NE(error_of<ConfigError>(std::string(kMinimal) + "[extra]\nx = 1\n").find("extra"), std::string::npos);
  const auto msg = error_of<ConfigError>(replace(kMinimal, "r = 0.3", "lo = 0.3"));
  EXPECT_NE(msg.find("initial.lo"), std::string::npos) << msg;
}

TEST(ConfigErrors, SemanticChecks) {
  EXPECT_NE(error_of<ConfigError>(replace(kMinimal, "h = 1e-3", "h = -1")).find("scheme.h"), std::string::npos);
  EXPECT_NE(error_of<ConfigError>(replace(kMinimal, "N = 2", "N = 1")).find("material.N"), std::string::npos);
  EXPECT_NE(error_of<ConfigError>(replace(kMinimal, "sizes = 64", "sizes = 4")).find("grid.sizes"),
            std::string::npos);
  EXPECT_NE(error_of<ConfigError>(replace(kMinimal, "[grid]", "[scales]\ngamma = 2\n[grid]")).find("scales"),
            std::string::npos);
  EXPECT_NE(error_of<ConfigError>(replace(kMinimal, "[grid]", "[scales]\ngamma = 1\nbeta = 2\n[grid]"))
                .find("scales.gamma"),
            std::string::npos);
  EXPECT_NE(error_of<ConfigError>(replace(kMinimal, "steps = 5", "steps = 5\ntie_break = coin")).find("tie"),
            std::string::npos);
}

TEST(ConfigErrors, Probes) {
  auto with = [](const std::string& probes) {
    return error_of<ConfigError>(std::string(kMinimal) + "[output]\nprobes = " + probes + "\n");
  };
  EXPECT_NE(with("[\"radius:5\"]").find("output.probes"), std::string::npos);
  EXPECT_NE(with("[\"area:1\"]").find("output.probes"), std::string::npos);
  EXPECT_NE(with("[\"length:0\"]").find("output.probes"), std::string::npos);
  EXPECT_NE(with("\"radius:1\"").find("output.probes"), std::string::npos);
  EXPECT_EQ(with("[\"radius:1\", \"junctions\"]"), "<no error>");
}

TEST(ConfigErrors, MissingFile) { EXPECT_THROW(load_config("/nonexistent/run.ini"), IoError); }

TEST(InitialConditions, VoronoiCoversPhasesAndIsDeterministic) {
  const GridSpec g = GridSpec::square(64);
  const auto a = voronoi_labels(g, 5, 20, 7);
  const auto b = voronoi_labels(g, 5, 20, 7);
  const auto c = voronoi_labels(g, 5, 20, 8);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, c);
  for (auto v : a.volumes()) EXPECT_GT(v, 0);
}

TEST(InitialConditions, PresetsThroughMakeInitial) {
  const GridSpec g = GridSpec::square(32);
  InitialCondition ic;
  ic.preset = "stripe";
  ic.params = {{"lo", 0.25}, {"hi", 0.5}};
  const auto s = make_initial(ic, g, 2);
  EXPECT_EQ(s.volumes()[1], 32 * 8);
  ic.params = {{"inside", 3}};
  EXPECT_THROW(make_initial(ic, g, 2), ConfigError);
  ic = {};
  ic.preset = "mercedes";
  EXPECT_THROW(make_initial(ic, g, 2), ConfigError);
  ic.preset = "nope";
  EXPECT_THROW(make_initial(ic, g, 2), ConfigError);
  EXPECT_THROW(preset_parameters("nope"), ConfigError);
}

TEST(InitialConditions, RawRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "mbo_test_raw";
  std::filesystem::create_directories(dir);
  const GridSpec g = GridSpec::square(16);
  const auto field = voronoi_labels(g, 3, 6, 3);
  write_labels(dir / "snap", field, 7, 0.5);
  InitialCondition ic;
  ic.preset = "raw";
  ic.path = (dir / "snap.hdr").string();
  EXPECT_EQ(make_initial(ic, g, 3), field);
  EXPECT_THROW(make_initial(ic, g, 4), ConfigError);
  EXPECT_THROW(make_initial(ic, GridSpec::square(32), 3), ConfigError);
  ic.path.clear();
  EXPECT_THROW(make_initial(ic, g, 3), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST(Probes, ParseAndFormat) {
  const auto r = parse_probe("radius:1", 3);
  EXPECT_EQ(r.kind, Probe::Kind::Radius);
  EXPECT_EQ(r.i, 1);
  EXPECT_EQ(r.to_string(), "radius:1");
  const auto l = parse_probe("length:2:0", 3);
  EXPECT_EQ(l.kind, Probe::Kind::Length);
  EXPECT_EQ(l.to_string(), "length:2:0");
  EXPECT_EQ(parse_probe("junctions", 3).kind, Probe::Kind::Junctions);
  for (const char* bad : {"radius:3", "radius:-1", "radius:x", "length:1:1", "length:0:9", "junction", ""}) {
    EXPECT_THROW(parse_probe(bad, 3), ConfigError) << bad;
  }
}

TEST(Probes, Evaluate) {
  const GridSpec g = GridSpec::square(128);
  const auto material = MaterialSpec::uniform(3, 1.0, 1.0);
  const auto disk = disk_labels(g, 3, {0.5, 0.5, 0.5}, 0.25);

  const auto rad = evaluate_probe(parse_probe("radius:1", 3), disk, 4, material);
  ASSERT_EQ(rad.size(), 1u);
  EXPECT_EQ(rad[0].kind, "radius:1");
  EXPECT_EQ(rad[0].step, 4);
  EXPECT_NEAR(rad[0].value, 0.25, 0.01);
  EXPECT_TRUE(std::isnan(rad[0].target));
  EXPECT_EQ(evaluate_probe(parse_probe("radius:2", 3), disk, 0, material)[0].value, 0.0);

  const auto len = evaluate_probe(parse_probe("length:0:1", 3), disk, 0, material);
  ASSERT_EQ(len.size(), 1u);
  EXPECT_NEAR(len[0].value, 2 * std::acos(-1.0) * 0.25, 0.05);

  const auto jr = evaluate_probe(parse_probe("junctions", 3), mercedes_labels(g, 3, {0.5, 0.5}), 0, material);
  ASSERT_FALSE(jr.empty());
  std::set<std::string> kinds;
  for (const auto& row : jr) {
    kinds.insert(row.kind);
    EXPECT_EQ(row.kind.rfind("junction[", 0), 0u) << row.kind;
    EXPECT_DOUBLE_EQ(row.target, 120.0);
    EXPECT_NEAR(row.error, row.value - row.target, 1e-12);
  }
  EXPECT_EQ(kinds.size(), jr.size());
  EXPECT_TRUE(evaluate_probe(parse_probe("junctions", 3), disk, 0, material).empty());
}

TEST(Probes, CsvFormat) {
  EXPECT_EQ(probe_csv_header(), "kind,step,value,target,error");
  ProbeRow row{"radius:1", 3, 0.25, std::nan(""), std::nan("")};
  EXPECT_EQ(probe_csv_row(row), "radius:1,3,0.25,,");
}

TEST(Experiments, CatalogueAndUnknownName) {
  const auto names = available_experiments();
  for (const char* n : {"shrinking-disk", "mobility-ratio", "herring-angles", "consistency-sweep", "grain-growth"}) {
    EXPECT_NE(std::find(names.begin(), names.end(), n), names.end()) << n;
  }
  EXPECT_THROW(run_experiment("nope"), ConfigError);
}

TEST(Experiments, ResultVerdictIgnoresSupplementary) {
  ExperimentResult r;
  r.name = "x";
  r.lines = {{"a", true, "ok", false}, {"b", false, "info", true}};
  EXPECT_TRUE(r.pass());
  const auto text = r.to_text();
  EXPECT_NE(text.find("PASS a: ok"), std::string::npos) << text;
  EXPECT_NE(text.find("INFO b: info [outside tolerance]"), std::string::npos) << text;
  r.lines.push_back({"c", false, "bad", false});
  EXPECT_FALSE(r.pass());
}

TEST(Experiments, ConsistencySweepRuns) {
  const auto r = run_experiment("consistency-sweep");
  EXPECT_TRUE(r.pass()) << r.to_text();
}
