#include <geodex/presets_data.hpp>
#include <geodex/runner.hpp>

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace geodex;
namespace fs = std::filesystem;

namespace {

const char* small_flat = R"(
# two quick runs
seed = 9
samples = 400000
level = 3

[run disk]
model.n = 2
model.kappa = 0
immersion.kind = geodesic_circle
immersion.params.radius = 1.5
theorems = thm1, sq_int(samples=800000)

[run bumpy]
model.n = 3
model.kappa = -1
immersion.kind = perturbed_sphere
immersion.params.epsilon = 0.1
immersion.params.harmonic = 2
immersion.resolution = 24
theorems = thm1b(K_bound=-0.5, samples=5000), stokes
)";

const char* small_json = R"({
  "seed": 9,
  "defaults": {"samples": 400000, "level": 3},
  "runs": [
    {"name": "disk", "model": {"n": 2, "kappa": 0},
     "immersion": {"kind": "geodesic_circle", "params": {"radius": 1.5}},
     "theorems": ["thm1", {"id": "sq_int", "samples": 800000}]},
    {"name": "bumpy", "model": {"n": 3, "kappa": -1},
     "immersion": {"kind": "perturbed_sphere", "params": {"epsilon": 0.1, "harmonic": 2}, "resolution": 24},
     "theorems": [{"id": "thm1b", "K_bound": -0.5, "samples": 5000}, "stokes"]}
  ]
})";

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("geodex_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_cli(const std::string& args) {
    const int status = std::system((std::string(GEODEX_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

fs::path write(const fs::path& dir, const std::string& name, const std::string& text) {
    std::ofstream(dir / name, std::ios::binary) << text;
    return dir / name;
}

RunConfig with_run(const std::string& run_body) {
    return load_config("[run r]\nmodel.n = 3\nmodel.kappa = -1\nimmersion.kind = geodesic_sphere\n" + run_body);
}

}  // namespace

TEST(FlatConfig, ParsesToSameTreeAsJson) {
    EXPECT_EQ(config::parse_flat(small_flat), json::parse(small_json));
}

TEST(FlatConfig, TheoremItemsWithOptions) {
    const json t = config::theorem_item("thm1b(K_bound=-0.5, samples=1e6)");
    EXPECT_EQ(t["id"], "thm1b");
    EXPECT_DOUBLE_EQ(t["K_bound"].get<double>(), -0.5);
    EXPECT_DOUBLE_EQ(t["samples"].get<double>(), 1e6);
    EXPECT_EQ(config::theorem_item("yau"), json("yau"));
}

TEST(FlatConfig, ScalarsAndLists) {
    EXPECT_EQ(config::scalar("42"), json(42));
    EXPECT_EQ(config::scalar("-0.25"), json(-0.25));
    EXPECT_EQ(config::scalar("geodesic_sphere"), json("geodesic_sphere"));
    EXPECT_EQ(config::list_value("axes", "1, 1, 1.4"), json::parse("[1, 1, 1.4]"));
}

TEST(FlatConfig, RejectsMalformedLines) {
    EXPECT_THROW(config::parse_flat("[run]\n"), ConfigError);
    EXPECT_THROW(config::parse_flat("[section x]\n"), ConfigError);
    EXPECT_THROW(config::parse_flat("just words\n"), ConfigError);
    EXPECT_THROW(config::parse_flat("[run a]\nmodel.n = 2\nmodel.n = 3\n"), ConfigError);
    EXPECT_THROW(config::parse_flat("[run a]\ntheorems = thm1(K_bound=-1\n"), ConfigError);
}

TEST(Validation, AcceptsSmallConfig) {
    const RunConfig cfg = load_config(small_flat);
    ASSERT_EQ(cfg.runs.size(), 2u);
    EXPECT_EQ(cfg.seed, 9u);
    const auto& disk = cfg.runs[0].theorems;
    EXPECT_EQ(disk[0].options.samples, 400000u);
    EXPECT_EQ(disk[1].options.samples, 800000u);
    EXPECT_EQ(disk[0].options.level, 3);
    EXPECT_EQ(cfg.runs[1].theorems[0].options.K_bound, -0.5);
    EXPECT_EQ(cfg.runs[1].theorems[0].options.mesh_resolution, 24);
    EXPECT_NE(disk[0].options.salt, disk[1].options.salt);
}

TEST(Validation, BoundDefaultsToModelCurvature) {
    EXPECT_EQ(with_run("theorems = thm1b\n").runs[0].theorems[0].options.K_bound, -1.0);
}

TEST(Validation, RejectsBadConfigs) {
    const char* bad[] = {
        "model.n = 3\n",                                                                       // keys outside runs
        "[run r]\nmodel.n = 3\nmodel.kappa = 0.5\nimmersion.kind = geodesic_sphere\ntheorems = thm1\n",
        "[run r]\nmodel.n = 5\nimmersion.kind = geodesic_sphere\ntheorems = thm1\n",
        "[run r]\nmodel.n = 3\nimmersion.kind = torus\ntheorems = thm1\n",
        "[run r]\nmodel.n = 3\nimmersion.kind = geodesic_sphere\ntheorems = thm7\n",
        "[run r]\nmodel.n = 3\nimmersion.kind = geodesic_sphere\n",
        "[run r]\nmodel.n = 3\nimmersion.kind = geodesic_sphere\ncolour = red\ntheorems = thm1\n",
        "[run r]\nmodel.n = 3\nimmersion.kind = geodesic_sphere\ntheorems = yau\n",       // flat: K must be < 0
        "[run r]\nmodel.n = 3\nimmersion.kind = geodesic_sphere\ntheorems = howard\n",
        "[run r]\nmodel.n = 3\nimmersion.kind = space_curve\ntheorems = thm1\n",
        "[run r]\nmodel.n = 3\nimmersion.kind = geodesic_sphere\nsamples = 10\ntheorems = thm1\n",
        "[run r]\nmodel.n = 3\nimmersion.kind = geodesic_sphere\nimmersion.resolution = 13\ntheorems = thm1\n",
        "[run r]\nmodel.n = 3\nimmersion.kind = perturbed_sphere\nimmersion.params.epsilon = 0.9\ntheorems = thm1\n",
        "[run r]\nmodel.n = 3\nimmersion.kind = geodesic_sphere\ntheorems = thm1(K_bound=-1)\n",
        "[run a]\nmodel.n = 2\nimmersion.kind = geodesic_circle\ntheorems = thm1\n"
        "[run a]\nmodel.n = 2\nimmersion.kind = geodesic_circle\ntheorems = thm1\n",
        "{\"runs\": [}",
    };
    for (const char* text : bad) EXPECT_THROW(load_config(text), ConfigError) << text;
    EXPECT_THROW(with_run("theorems = thm1b(K_bound=-2)\n"), ConfigError);
    EXPECT_THROW(with_run("theorems = thm1b(K_bound=0.1)\n"), ConfigError);
}

TEST(Presets, AllValidate) {
    ASSERT_EQ(presets().size(), 4u);
    for (const auto& [name, text] : presets()) EXPECT_NO_THROW(load_config(std::string(text))) << name;
}

TEST(Presets, BallSuiteHasNineChecks) {
    for (const auto& [name, text] : presets()) {
        if (name != "ball-equality-suite") continue;
        std::size_t count = 0;
        for (const auto& r : load_config(std::string(text)).runs) count += r.theorems.size();
        EXPECT_EQ(count, 9u);
    }
}

TEST(Cli, ListPresets) { EXPECT_EQ(run_cli("list-presets"), 0); }

TEST(Cli, ConfigErrorExitsTwoAndWritesNothing) {
    const fs::path dir = scratch("bad");
    const fs::path cfg = write(dir, "bad.conf", "[run r]\nmodel.n = 3\nmodel.kappa = 1\nimmersion.kind = geodesic_sphere\ntheorems = thm1\n");
    EXPECT_EQ(run_cli("verify --quiet --config " + cfg.string() + " --out " + (dir / "out").string()), 2);
    EXPECT_FALSE(fs::exists(dir / "out"));
    EXPECT_EQ(run_cli("verify --quiet --preset no-such-preset --out " + (dir / "out").string()), 2);
    EXPECT_EQ(run_cli("verify --quiet --out " + (dir / "out").string()), 2);
    EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, WritesReportsAndIsDeterministic) {
    const fs::path dir = scratch("det");
    const fs::path flat = write(dir, "small.conf", small_flat), js = write(dir, "small.json", small_json);
    ASSERT_EQ(run_cli("verify --quiet --config " + flat.string() + " --workers 1 --out " + (dir / "w1").string()), 0);
    ASSERT_EQ(run_cli("verify --quiet --config " + flat.string() + " --workers 4 --out " + (dir / "w4").string()), 0);
    ASSERT_EQ(run_cli("verify --quiet --config " + js.string() + " --out " + (dir / "js").string()), 0);
    ASSERT_EQ(run_cli("verify --quiet --config " + flat.string() + " --seed 10 --out " + (dir / "s10").string()), 0);
    const std::string report = slurp(dir / "w1" / "report.json");
    EXPECT_EQ(report, slurp(dir / "w4" / "report.json"));
    EXPECT_EQ(report, slurp(dir / "js" / "report.json"));
    EXPECT_NE(report, slurp(dir / "s10" / "report.json"));
    EXPECT_EQ(slurp(dir / "w1" / "summary.csv"), slurp(dir / "w4" / "summary.csv"));

    const json r = json::parse(report);
    ASSERT_EQ(r["runs"].size(), 2u);
    EXPECT_EQ(r["runs"][0]["reports"].size(), 2u);
    EXPECT_EQ(r["runs"][1]["reports"][0]["theorem"], "thm1b");
    EXPECT_FALSE(r.contains("workers"));
    const json timing = json::parse(slurp(dir / "w4" / "timing.json"));
    EXPECT_EQ(timing["workers"], 4);

    std::istringstream csv(slurp(dir / "w1" / "summary.csv"));
    std::string line;
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    EXPECT_EQ(rows, 1 + 4);
}

TEST(Cli, UnconvergedQuadratureExitsThree) {
    // a coarse level on a wavy sphere cannot meet the quadrature tolerance
    const fs::path dir = scratch("inconclusive");
    const fs::path cfg = write(dir, "c.conf",
                               "samples = 500\nlevel = 1\n[run r]\nmodel.n = 3\nimmersion.kind = perturbed_sphere\n"
                               "immersion.params.epsilon = 0.3\nimmersion.params.harmonic = 6\n"
                               "immersion.resolution = 16\ntheorems = thm2\n");
    EXPECT_EQ(run_cli("verify --quiet --config " + cfg.string() + " --out " + (dir / "out").string()), 3);
    const json r = json::parse(slurp(dir / "out" / "report.json"));
    EXPECT_EQ(r["runs"][0]["reports"][0]["verdict"], "inconclusive");
}
